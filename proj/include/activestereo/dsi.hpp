#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "activestereo/errors.hpp"

namespace activestereo {

/// State of a lattice cell: right pixel i matched to left pixel i+j, a
/// skipped left pixel, or an unmatched right pixel.
enum class NodeKind : std::uint8_t { Match = 0, LeftOcc = 1, RightOcc = 2 };

inline constexpr std::array<NodeKind, 3> kAllKinds{NodeKind::Match, NodeKind::LeftOcc,
                                                   NodeKind::RightOcc};

struct NodeId {
    int column = 0;     // i, right-image pixel
    int disparity = 0;  // j
    NodeKind kind = NodeKind::Match;

    friend bool operator==(const NodeId&, const NodeId&) = default;
};

/// Strict weak order used for deterministic tie-breaking: lower disparity
/// first, then M < L < R. Columns compare last.
bool node_before(const NodeId& a, const NodeId& b);

enum class ScoreKind : std::uint8_t { AbsoluteDifference, SquaredDifference };

struct CostModel {
    double left_penalty = 25.0;   // D_l
    double right_penalty = 25.0;  // D_r
    double beta = 0.1;            // multiplies every cost before exponentiation
    ScoreKind score_kind = ScoreKind::AbsoluteDifference;
    double block_cost = 1e9;
    double soft_cost = 375.0;

    // Throws std::invalid_argument when the invariants do not hold.
    void validate() const;

    bool is_blocked(double cost) const { return cost >= block_cost; }
};

/// 3 * 5 * max(D_l, D_r): surmountable only when nothing cheaper exists.
double default_soft_cost(double left_penalty, double right_penalty);

struct ScanlinePair {
    std::vector<double> right;  // n samples
    std::vector<double> left;   // at least n + d - 1 samples
};

/// Disparity space image for one scanline: the base score table of the
/// Match nodes plus per-node cost overrides written by laser updates.
class Dsi {
public:
    /// `scores` is row-major by column: scores[i * d + j].
    Dsi(int columns, int levels, std::vector<double> scores);

    int columns() const { return columns_; }
    int levels() const { return levels_; }
    std::size_t node_count() const { return 3 * cells(); }
    std::size_t cells() const { return static_cast<std::size_t>(columns_) * levels_; }

    bool contains(const NodeId& node) const {
        return node.column >= 0 && node.column < columns_ && node.disparity >= 0 &&
               node.disparity < levels_;
    }

    double score(int column, int disparity) const;
    std::span<const double> scores() const { return scores_; }
    // Dense, indexed by index(); NaN where no override is set.
    std::span<const double> overrides() const { return overrides_; }

    bool has_override(const NodeId& node) const;
    // Returns NaN when the node carries no override.
    double override_cost(const NodeId& node) const;

    /// Later overrides on the same node replace earlier ones.
    void apply_cost_override(const NodeId& node, double cost);
    void clear_override(const NodeId& node);
    bool has_any_override() const { return override_count_ > 0; }

    /// Override if present, else score for M, D_l for L, D_r for R.
    double node_cost(const NodeId& node, const CostModel& model) const;

    /// exp(-beta * node_cost).
    double node_potential(const NodeId& node, const CostModel& model) const;
    double node_log_potential(const NodeId& node, const CostModel& model) const {
        return -model.beta * node_cost(node, model);
    }

    std::size_t index(const NodeId& node) const {
        return static_cast<std::size_t>(node.kind) * cells() +
               static_cast<std::size_t>(node.column) * levels_ + node.disparity;
    }

private:
    void check(const NodeId& node) const;

    int columns_;
    int levels_;
    std::vector<double> scores_;
    std::vector<double> overrides_;  // NaN = none; indexed by index()
    std::size_t override_count_ = 0;
};

/// score(i, j) = f(|left[i + j] - right[i]|), f per the model's score kind.
/// The lattice has n = right.size() columns and `levels` disparities.
Dsi build_dsi(const ScanlinePair& pair, int levels, const CostModel& model);

/// At most three nodes, out-of-range entries dropped.
std::vector<NodeId> predecessors(const NodeId& node, int columns, int levels);
std::vector<NodeId> successors(const NodeId& node, int columns, int levels);

/// Every (0, j, M) and (0, j, R).
std::vector<NodeId> entry_nodes(const Dsi& dsi);
/// Every node of column n - 1.
std::vector<NodeId> exit_nodes(const Dsi& dsi);

bool is_entry(const NodeId& node);
bool is_exit(const NodeId& node, int columns);

/// True when at least one entry-to-exit path avoids every blocked node.
bool has_feasible_path(const Dsi& dsi, const CostModel& model);

}  // namespace activestereo
