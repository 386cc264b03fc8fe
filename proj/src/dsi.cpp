#include "activestereo/dsi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace activestereo {

namespace {

constexpr double kNoOverride = std::numeric_limits<double>::quiet_NaN();

}  // namespace

bool node_before(const NodeId& a, const NodeId& b) {
    if (a.disparity != b.disparity) return a.disparity < b.disparity;
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.column < b.column;
}

void CostModel::validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be positive");
    if (!(left_penalty >= 0.0) || !(right_penalty >= 0.0))
        throw std::invalid_argument("occlusion penalties must be nonnegative");
    if (!(soft_cost > 0.0)) throw std::invalid_argument("soft cost must be positive");
    if (!(block_cost > soft_cost)) throw std::invalid_argument("block cost must exceed soft cost");
}

double default_soft_cost(double left_penalty, double right_penalty) {
    return 3.0 * std::max(left_penalty, right_penalty) * 5.0;
}

Dsi::Dsi(int columns, int levels, std::vector<double> scores)
    : columns_(columns), levels_(levels), scores_(std::move(scores)) {
    if (columns_ < 1 || levels_ < 1)
        throw DimensionError("lattice needs at least one column and one disparity level, got n=" +
                             std::to_string(columns_) + " d=" + std::to_string(levels_));
    if (scores_.size() != cells())
        throw DimensionError("score table has " + std::to_string(scores_.size()) +
                             " entries, expected " + std::to_string(cells()));
    for (double s : scores_)
        if (!(s >= 0.0)) throw std::invalid_argument("scores must be nonnegative");
    overrides_.assign(node_count(), kNoOverride);
}

void Dsi::check(const NodeId& node) const {
    if (!contains(node))
        throw std::out_of_range("node (" + std::to_string(node.column) + "," +
                                std::to_string(node.disparity) + ") outside " +
                                std::to_string(columns_) + "x" + std::to_string(levels_));
}

double Dsi::score(int column, int disparity) const {
    check({column, disparity, NodeKind::Match});
    return scores_[static_cast<std::size_t>(column) * levels_ + disparity];
}

bool Dsi::has_override(const NodeId& node) const {
    check(node);
    return !std::isnan(overrides_[index(node)]);
}

double Dsi::override_cost(const NodeId& node) const {
    check(node);
    return overrides_[index(node)];
}

void Dsi::apply_cost_override(const NodeId& node, double cost) {
    check(node);
    if (!(cost >= 0.0)) throw std::invalid_argument("override cost must be nonnegative");
    double& slot = overrides_[index(node)];
    if (std::isnan(slot)) ++override_count_;
    slot = cost;
}

void Dsi::clear_override(const NodeId& node) {
    check(node);
    double& slot = overrides_[index(node)];
    if (!std::isnan(slot)) --override_count_;
    slot = kNoOverride;
}

double Dsi::node_cost(const NodeId& node, const CostModel& model) const {
    check(node);
    const double o = overrides_[index(node)];
    if (!std::isnan(o)) return o;
    switch (node.kind) {
        case NodeKind::Match:
            return scores_[static_cast<std::size_t>(node.column) * levels_ + node.disparity];
        case NodeKind::LeftOcc:
            return model.left_penalty;
        case NodeKind::RightOcc:
            return model.right_penalty;
    }
    return 0.0;
}

double Dsi::node_potential(const NodeId& node, const CostModel& model) const {
    return std::exp(node_log_potential(node, model));
}

Dsi build_dsi(const ScanlinePair& pair, int levels, const CostModel& model) {
    const int n = static_cast<int>(pair.right.size());
    if (levels < 1) throw DimensionError("disparity levels must be >= 1");
    const std::size_t needed = pair.right.size() + static_cast<std::size_t>(levels) - 1;
    if (pair.left.size() < needed)
        throw DimensionError("left row has " + std::to_string(pair.left.size()) +
                             " samples but n + d - 1 = " + std::to_string(needed) +
                             " are required (n=" + std::to_string(n) +
                             ", d=" + std::to_string(levels) + ")");
    std::vector<double> scores(static_cast<std::size_t>(n) * levels);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < levels; ++j) {
            const double diff = std::abs(pair.left[i + j] - pair.right[i]);
            scores[static_cast<std::size_t>(i) * levels + j] =
                model.score_kind == ScoreKind::SquaredDifference ? diff * diff : diff;
        }
    }
    return Dsi(n, levels, std::move(scores));
}

std::vector<NodeId> predecessors(const NodeId& node, int columns, int levels) {
    std::vector<NodeId> out;
    out.reserve(3);
    const auto keep = [&](int i, int j, NodeKind k) {
        if (i >= 0 && i < columns && j >= 0 && j < levels) out.push_back({i, j, k});
    };
    const int i = node.column;
    const int j = node.disparity;
    switch (node.kind) {
        case NodeKind::Match:
            keep(i - 1, j, NodeKind::Match);
            keep(i - 1, j, NodeKind::LeftOcc);
            keep(i - 1, j, NodeKind::RightOcc);
            break;
        case NodeKind::RightOcc:
            keep(i - 1, j - 1, NodeKind::Match);
            keep(i - 1, j - 1, NodeKind::RightOcc);
            break;
        case NodeKind::LeftOcc:
            keep(i, j + 1, NodeKind::Match);
            keep(i, j + 1, NodeKind::LeftOcc);
            break;
    }
    return out;
}

std::vector<NodeId> successors(const NodeId& node, int columns, int levels) {
    std::vector<NodeId> out;
    out.reserve(3);
    const auto keep = [&](int i, int j, NodeKind k) {
        if (i >= 0 && i < columns && j >= 0 && j < levels) out.push_back({i, j, k});
    };
    const int i = node.column;
    const int j = node.disparity;
    switch (node.kind) {
        case NodeKind::Match:
            keep(i + 1, j, NodeKind::Match);
            keep(i, j - 1, NodeKind::LeftOcc);
            keep(i + 1, j + 1, NodeKind::RightOcc);
            break;
        case NodeKind::RightOcc:
            keep(i + 1, j, NodeKind::Match);
            keep(i + 1, j + 1, NodeKind::RightOcc);
            break;
        case NodeKind::LeftOcc:
            keep(i + 1, j, NodeKind::Match);
            keep(i, j - 1, NodeKind::LeftOcc);
            break;
    }
    return out;
}

bool is_entry(const NodeId& node) {
    return node.column == 0 && node.kind != NodeKind::LeftOcc;
}

bool is_exit(const NodeId& node, int columns) { return node.column == columns - 1; }

std::vector<NodeId> entry_nodes(const Dsi& dsi) {
    std::vector<NodeId> out;
    for (int j = 0; j < dsi.levels(); ++j) out.push_back({0, j, NodeKind::Match});
    for (int j = 0; j < dsi.levels(); ++j) out.push_back({0, j, NodeKind::RightOcc});
    return out;
}

std::vector<NodeId> exit_nodes(const Dsi& dsi) {
    std::vector<NodeId> out;
    const int last = dsi.columns() - 1;
    for (NodeKind k : kAllKinds)
        for (int j = 0; j < dsi.levels(); ++j) out.push_back({last, j, k});
    return out;
}

bool has_feasible_path(const Dsi& dsi, const CostModel& model) {
    const int n = dsi.columns();
    const int d = dsi.levels();
    // reach[k][j] for the current column
    std::vector<char> prev(3 * static_cast<std::size_t>(d), 0);
    std::vector<char> cur(prev.size(), 0);
    const auto open = [&](int i, int j, NodeKind k) {
        return !model.is_blocked(dsi.node_cost({i, j, k}, model));
    };
    const auto at = [d](std::vector<char>& v, NodeKind k, int j) -> char& {
        return v[static_cast<std::size_t>(k) * d + j];
    };
    for (int i = 0; i < n; ++i) {
        std::fill(cur.begin(), cur.end(), 0);
        for (int j = 0; j < d; ++j) {
            if (i == 0) {
                at(cur, NodeKind::Match, j) = open(i, j, NodeKind::Match);
                at(cur, NodeKind::RightOcc, j) = open(i, j, NodeKind::RightOcc);
            } else {
                const bool from_same = at(prev, NodeKind::Match, j) ||
                                       at(prev, NodeKind::LeftOcc, j) ||
                                       at(prev, NodeKind::RightOcc, j);
                at(cur, NodeKind::Match, j) = from_same && open(i, j, NodeKind::Match);
                const bool from_below = j > 0 && (at(prev, NodeKind::Match, j - 1) ||
                                                  at(prev, NodeKind::RightOcc, j - 1));
                at(cur, NodeKind::RightOcc, j) = from_below && open(i, j, NodeKind::RightOcc);
            }
        }
        for (int j = d - 2; j >= 0; --j) {
            const bool from_above =
                at(cur, NodeKind::Match, j + 1) || at(cur, NodeKind::LeftOcc, j + 1);
            at(cur, NodeKind::LeftOcc, j) = from_above && open(i, j, NodeKind::LeftOcc);
        }
        std::swap(prev, cur);
    }
    return std::any_of(prev.begin(), prev.end(), [](char c) { return c != 0; });
}

}  // namespace activestereo
