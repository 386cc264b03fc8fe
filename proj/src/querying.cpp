#include "activestereo/querying.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace activestereo {

namespace {

double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

double state_entropy(const PosteriorMarginals& marginals, int column) {
    double h = 0.0;
    for (double p : marginals.column(column)) h -= plogp(p);
    return std::max(0.0, h);
}

OccludedOutcome expected_posterior_entropy(const PosteriorMarginals& marginals, int column) {
    OccludedOutcome out;
    const int d = marginals.levels();
    for (int j = 0; j < d; ++j) out.mass += marginals.right_occ(column, j);
    if (out.mass <= 0.0) return {0.0, 0.0};
    double h = 0.0;
    for (int j = 0; j < d; ++j) h -= plogp(marginals.right_occ(column, j) / out.mass);
    out.entropy = std::max(0.0, h);
    return out;
}

double information_gain(const PosteriorMarginals& marginals, int column) {
    const int d = marginals.levels();
    double g = 0.0;
    double occ = 0.0;
    for (int j = 0; j < d; ++j) {
        g -= plogp(marginals.match(column, j));
        occ += marginals.right_occ(column, j);
    }
    g -= plogp(occ);
    return std::max(0.0, g);
}

ColumnGain column_gain(const PosteriorMarginals& marginals, int column) {
    ColumnGain c;
    c.column = column;
    c.state_entropy = state_entropy(marginals, column);
    const OccludedOutcome occ = expected_posterior_entropy(marginals, column);
    c.occluded_mass = occ.mass;
    c.occluded_entropy = occ.entropy;
    c.gain = information_gain(marginals, column);
    return c;
}

std::vector<double> row_gains(const PosteriorMarginals& marginals) {
    std::vector<double> g(static_cast<std::size_t>(marginals.columns()));
    for (int i = 0; i < marginals.columns(); ++i) g[i] = information_gain(marginals, i);
    return g;
}

std::vector<double> aggregate_column_gains(std::span<const std::vector<double>> per_row_gains) {
    if (per_row_gains.empty()) return {};
    const std::size_t n = per_row_gains.front().size();
    std::vector<double> total(n, 0.0);
    for (std::size_t r = 0; r < per_row_gains.size(); ++r) {
        const auto& row = per_row_gains[r];
        if (row.size() != n)
            throw DimensionError("gain row " + std::to_string(r) + " has " +
                                 std::to_string(row.size()) + " columns, expected " +
                                 std::to_string(n));
        for (std::size_t i = 0; i < n; ++i) total[i] += row[i];
    }
    return total;
}

AimState::AimState(const Strategy& strategy) {
    if (const auto* r = std::get_if<RandomAims>(&strategy)) rng_.seed(r->seed);
}

int select_aim(std::span<const double> gains, const std::set<int>& excluded,
               const Strategy& strategy, AimState& state) {
    const int n = static_cast<int>(gains.size());
    std::vector<int> free;
    free.reserve(gains.size());
    for (int i = 0; i < n; ++i)
        if (!excluded.contains(i)) free.push_back(i);
    if (free.empty()) throw ExhaustedError("every column has already been queried");

    const int chosen = std::visit(
        overloaded{
            [&](const InfoGainAims&) {
                int best = free.front();
                for (int i : free)
                    if (gains[i] > gains[best]) best = i;
                return best;
            },
            [&](const RandomAims&) {
                // Plain modulo keeps the sequence identical across standard
                // libraries; the bias is below 2^-50 for any image width.
                const std::uint64_t draw = state.rng()();
                return free[draw % free.size()];
            },
            [&](const EvenlySpacedAims& e) {
                const int k = state.issued();
                const double planned = std::max(1, e.planned);
                int target = static_cast<int>(std::lround((k + 1) * static_cast<double>(n) /
                                                          (planned + 1.0)));
                target = std::clamp(target, 0, n - 1);
                int best = free.front();
                for (int i : free)
                    if (std::abs(i - target) < std::abs(best - target)) best = i;
                return best;
            },
        },
        strategy);
    state.advance();
    return chosen;
}

}  // namespace activestereo
