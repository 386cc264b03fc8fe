#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <variant>
#include <vector>

#include "activestereo/inference.hpp"

namespace activestereo {

struct ColumnGain {
    int column = 0;
    double state_entropy = 0.0;  // H(S_i)
    double occluded_mass = 0.0;  // P_occ
    double occluded_entropy = 0.0;  // entropy of the renormalized R states
    double gain = 0.0;  // H(S_i) - P_occ * H_occ
};

/// -sum p log p over the column's M and R states, 0 log 0 = 0.
double state_entropy(const PosteriorMarginals& marginals, int column);

struct OccludedOutcome {
    double mass = 0.0;     // P_occ
    double entropy = 0.0;  // H_occ, 0 when P_occ = 0
};

OccludedOutcome expected_posterior_entropy(const PosteriorMarginals& marginals, int column);

/// Expected drop in path entropy from aiming the laser at `column`.
///
/// A match answer pins the column's state and an occluded answer leaves the
/// renormalized R distribution, so the gain equals the entropy of the answer
/// itself: -sum_j pM_j log pM_j - P_occ log P_occ. That form is what gets
/// evaluated; it is algebraically H(S_i) - P_occ * H_occ and cannot go
/// negative through cancellation.
double information_gain(const PosteriorMarginals& marginals, int column);

ColumnGain column_gain(const PosteriorMarginals& marginals, int column);

std::vector<double> row_gains(const PosteriorMarginals& marginals);

/// Elementwise sum over rows, rows added in the given order.
std::vector<double> aggregate_column_gains(std::span<const std::vector<double>> per_row_gains);

struct InfoGainAims {};
struct RandomAims {
    std::uint64_t seed = 0;
};
struct EvenlySpacedAims {
    int planned = 9;  // K
};

using Strategy = std::variant<InfoGainAims, RandomAims, EvenlySpacedAims>;

/// Mutable part of aim selection: the seeded generator and how many aims
/// have been issued so far.
class AimState {
public:
    explicit AimState(const Strategy& strategy);

    std::mt19937_64& rng() { return rng_; }
    int issued() const { return issued_; }
    void advance() { ++issued_; }

private:
    std::mt19937_64 rng_;
    int issued_ = 0;
};

/// InfoGain: argmax over free columns, ties to the lowest index.
/// Random: uniform over free columns. EvenlySpaced: the k-th aim targets
/// round((k + 1) n / (K + 1)), moved to the nearest free column.
/// Advances `state` on success.
int select_aim(std::span<const double> gains, const std::set<int>& excluded,
               const Strategy& strategy, AimState& state);

}  // namespace activestereo
