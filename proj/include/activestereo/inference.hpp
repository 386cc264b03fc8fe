#pragma once

#include <span>
#include <vector>

#include "activestereo/dsi.hpp"

namespace activestereo {

struct ViterbiResult {
    std::vector<NodeId> path;  // entry first, exit last
    double cost = 0.0;         // sum of node costs along path
};

/// Sum-product tables over one lattice, kept in the log domain.
///
/// Each node carries the pair (log W, E) where W is the total weight of the
/// partial paths it summarizes and E = sum(w log w) / W is their mean log
/// weight. This is the expectation-semiring pair (W, sum w log w) with the
/// second component divided by the first: combining predecessors becomes a
/// log-sum-exp plus a convex combination, so neither component can
/// overflow or lose sign for long scanlines.
class ForwardTables {
public:
    ForwardTables() = default;
    ForwardTables(int columns, int levels);

    int columns() const { return columns_; }
    int levels() const { return levels_; }

    /// log of the total weight of entry-to-node prefixes, node potential included.
    double log_mass(const NodeId& node) const { return log_mass_[index(node)]; }
    /// Mean log weight of those prefixes; 0 for unreachable nodes.
    double mean_log_weight(const NodeId& node) const { return mean_log_[index(node)]; }

    /// Unscaled prefix mass. May overflow or underflow on large lattices.
    double mass(const NodeId& node) const;
    /// Unscaled sum over prefixes of w log w.
    double entropy_accumulator(const NodeId& node) const;

    std::size_t index(const NodeId& node) const {
        return static_cast<std::size_t>(node.kind) * cells_ +
               static_cast<std::size_t>(node.column) * levels_ + node.disparity;
    }

private:
    friend ForwardTables forward(const Dsi&, const CostModel&);

    int columns_ = 0;
    int levels_ = 0;
    std::size_t cells_ = 0;
    std::vector<double> log_mass_;
    std::vector<double> mean_log_;
};

/// Mirror of ForwardTables against arc direction. Stores the suffix weight
/// strictly after each node (the "outflow") so that combining with the
/// forward tables never has to divide a potential back out.
class BackwardTables {
public:
    BackwardTables() = default;
    BackwardTables(int columns, int levels);

    int columns() const { return columns_; }
    int levels() const { return levels_; }

    /// log of the total weight of node-to-exit suffixes, node potential included.
    double log_mass(const NodeId& node) const {
        return log_potential_[index(node)] + log_outflow_[index(node)];
    }
    double mean_log_weight(const NodeId& node) const {
        return log_potential_[index(node)] + mean_outflow_[index(node)];
    }
    double log_outflow(const NodeId& node) const { return log_outflow_[index(node)]; }
    double mean_outflow_log(const NodeId& node) const { return mean_outflow_[index(node)]; }
    double log_potential(const NodeId& node) const { return log_potential_[index(node)]; }

    double mass(const NodeId& node) const;
    double entropy_accumulator(const NodeId& node) const;

    /// log Z summed over entry nodes.
    double log_total() const;

    std::size_t index(const NodeId& node) const {
        return static_cast<std::size_t>(node.kind) * cells_ +
               static_cast<std::size_t>(node.column) * levels_ + node.disparity;
    }

private:
    friend BackwardTables backward(const Dsi&, const CostModel&);

    int columns_ = 0;
    int levels_ = 0;
    std::size_t cells_ = 0;
    std::vector<double> log_potential_;
    std::vector<double> log_outflow_;
    std::vector<double> mean_outflow_;
};

/// Per column, the posterior over its 2d Match and RightOcc states. Left
/// occlusion masses are kept as a diagnostic, scaled by the same column
/// normalizer.
class PosteriorMarginals {
public:
    PosteriorMarginals() = default;
    PosteriorMarginals(int columns, int levels);

    int columns() const { return columns_; }
    int levels() const { return levels_; }

    double match(int column, int disparity) const {
        return states_[offset(column) + disparity];
    }
    double right_occ(int column, int disparity) const {
        return states_[offset(column) + levels_ + disparity];
    }
    double left_occ(int column, int disparity) const {
        return left_[static_cast<std::size_t>(column) * levels_ + disparity];
    }

    /// [M_0 .. M_{d-1}, R_0 .. R_{d-1}] for one column.
    std::span<const double> column(int column) const {
        return {states_.data() + offset(column), 2 * static_cast<std::size_t>(levels_)};
    }
    std::span<double> column(int column) {
        return {states_.data() + offset(column), 2 * static_cast<std::size_t>(levels_)};
    }
    std::span<double> left_column(int column) {
        return {left_.data() + static_cast<std::size_t>(column) * levels_,
                static_cast<std::size_t>(levels_)};
    }

    /// argmax over the column's states, diagnostic alternative to Viterbi.
    NodeId argmax(int column) const;

private:
    std::size_t offset(int column) const { return static_cast<std::size_t>(column) * 2 * levels_; }

    int columns_ = 0;
    int levels_ = 0;
    std::vector<double> states_;
    std::vector<double> left_;
};

struct PathStats {
    double log_z = 0.0;
    double entropy = 0.0;  // H(paths), nats
};

/// Minimum-cost entry-to-exit path. Blocked nodes are never used; ties go
/// to the lower disparity, then kind order M < L < R.
ViterbiResult viterbi(const Dsi& dsi, const CostModel& model);

ForwardTables forward(const Dsi& dsi, const CostModel& model);
BackwardTables backward(const Dsi& dsi, const CostModel& model);

/// Single-counted node mass alpha(c) * outflow(c), normalized over the M
/// and R nodes of each column.
PosteriorMarginals column_marginals(const ForwardTables& fwd, const BackwardTables& bwd);

PathStats total_path_entropy(const ForwardTables& fwd);

/// log of the total weight of complete paths through `node`.
double node_log_mass(const ForwardTables& fwd, const BackwardTables& bwd, const NodeId& node);

/// Unnormalized sum over complete paths through `node` of w log w.
double node_entropy(const ForwardTables& fwd, const BackwardTables& bwd, const NodeId& node);

/// Everything the active loop needs for one scanline.
struct RowInference {
    PosteriorMarginals marginals;
    PathStats stats;
    ViterbiResult best;
};

RowInference infer_row(const Dsi& dsi, const CostModel& model);

}  // namespace activestereo
