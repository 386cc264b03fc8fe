#include "activestereo/laser_sim.hpp"

#include <cmath>
#include <random>
#include <string>
#include <utility>

namespace activestereo {

namespace {

std::string describe(const ConfirmedMatch& m) {
    return "(q=" + std::to_string(m.column) + ", g=" + std::to_string(m.disparity) + ")";
}

// Collects overrides so that a rejected update can be rolled back.
class OverrideTransaction {
public:
    explicit OverrideTransaction(Dsi& dsi) : dsi_(dsi) {}

    void set(const NodeId& node, double cost) {
        undo_.emplace_back(node, dsi_.override_cost(node));
        dsi_.apply_cost_override(node, cost);
    }

    void rollback() {
        for (auto it = undo_.rbegin(); it != undo_.rend(); ++it) {
            if (std::isnan(it->second))
                dsi_.clear_override(it->first);
            else
                dsi_.apply_cost_override(it->first, it->second);
        }
        undo_.clear();
    }

private:
    Dsi& dsi_;
    std::vector<std::pair<NodeId, double>> undo_;
};

// Earlier hard blocks and confirmed matches outrank later updates.
bool locked(const Dsi& dsi, const NodeId& node, const CostModel& model) {
    const double old = dsi.override_cost(node);
    if (std::isnan(old)) return false;
    if (model.is_blocked(old)) return true;
    return node.kind == NodeKind::Match && old == 0.0;
}

}  // namespace

GroundTruth::GroundTruth(int width, int height, std::vector<int> disparities)
    : width_(width), height_(height), disparities_(std::move(disparities)) {
    if (width_ < 0 || height_ < 0 ||
        disparities_.size() != static_cast<std::size_t>(width_) * height_)
        throw DimensionError("ground truth holds " + std::to_string(disparities_.size()) +
                             " samples for " + std::to_string(width_) + "x" +
                             std::to_string(height_));
    for (int v : disparities_)
        if (v < 0 && v != kOccluded) throw std::invalid_argument("negative ground-truth disparity");
}

void GroundTruth::check_levels(int levels) const {
    for (std::size_t k = 0; k < disparities_.size(); ++k) {
        if (disparities_[k] >= levels)
            throw DimensionError("ground-truth disparity " + std::to_string(disparities_[k]) +
                                 " at row " + std::to_string(k / width_) + ", column " +
                                 std::to_string(k % width_) + " exceeds d - 1 = " +
                                 std::to_string(levels - 1));
    }
}

std::vector<QueryAnswer> simulate_query(const GroundTruth& gt, int column,
                                        const DetectionNoise& noise) {
    if (column < 0 || column >= gt.width())
        throw std::out_of_range("query column " + std::to_string(column) + " outside [0, " +
                                std::to_string(gt.width()) + ")");
    std::vector<QueryAnswer> out(static_cast<std::size_t>(gt.height()));
    for (int r = 0; r < gt.height(); ++r) {
        if (noise.miss_probability > 0.0) {
            std::seed_seq seq{static_cast<std::uint32_t>(noise.seed),
                              static_cast<std::uint32_t>(noise.seed >> 32),
                              static_cast<std::uint32_t>(column), static_cast<std::uint32_t>(r)};
            std::mt19937_64 rng(seq);
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            if (u < noise.miss_probability) {
                out[r] = {QueryAnswer::Kind::Missed, 0};
                continue;
            }
        }
        if (gt.occluded(r, column))
            out[r] = {QueryAnswer::Kind::Occluded, 0};
        else
            out[r] = {QueryAnswer::Kind::Match, gt.at(r, column)};
    }
    return out;
}

bool in_forbidden_zone(const ConfirmedMatch& anchor, int column, int disparity) {
    const int q = anchor.column;
    const int diag = anchor.column + anchor.disparity;
    return (column > q && column + disparity < diag) || (column < q && column + disparity > diag);
}

std::optional<ConfirmedMatch> conflict(std::span<const ConfirmedMatch> existing,
                                       const ConfirmedMatch& candidate) {
    for (const auto& m : existing) {
        if (m.row != candidate.row) continue;
        if (in_forbidden_zone(m, candidate.column, candidate.disparity)) return m;
        // A column holds at most one confirmed match.
        if (m.column == candidate.column && m.disparity != candidate.disparity) return m;
    }
    return std::nullopt;
}

MatchConflict::MatchConflict(const ConfirmedMatch& existing_match,
                             const ConfirmedMatch& rejected_match)
    : ConflictError("match " + describe(rejected_match) + " in row " +
                    std::to_string(rejected_match.row) + " lies in the forbidden zone of " +
                    describe(existing_match)),
      existing(existing_match),
      rejected(rejected_match) {}

void apply_match_update(Dsi& dsi, const ConfirmedMatch& match,
                        std::span<const ConfirmedMatch> earlier, const CostModel& model) {
    const NodeId anchor{match.column, match.disparity, NodeKind::Match};
    if (!dsi.contains(anchor))
        throw std::out_of_range("confirmed match " + describe(match) + " outside the lattice");
    if (auto hit = conflict(earlier, match)) throw MatchConflict(*hit, match);

    const int q = match.column;
    const int diag = match.column + match.disparity;
    OverrideTransaction tx(dsi);
    for (int i = 0; i < dsi.columns(); ++i) {
        for (int j = 0; j < dsi.levels(); ++j) {
            const bool interior = in_forbidden_zone(match, i, j);
            const bool boundary = i == q || i + j == diag;
            if (!interior && !boundary) continue;
            for (NodeKind k : kAllKinds) {
                const NodeId node{i, j, k};
                double cost;
                if (node == anchor)
                    cost = 0.0;
                else if (interior)
                    cost = model.block_cost;
                else
                    cost = model.soft_cost;
                if (locked(dsi, node, model)) continue;
                tx.set(node, cost);
            }
        }
    }
    if (!has_feasible_path(dsi, model)) {
        tx.rollback();
        throw InfeasibleError("match " + describe(match) + " would leave no unblocked path");
    }
}

void apply_occlusion_update(Dsi& dsi, int column, const CostModel& model) {
    if (column < 0 || column >= dsi.columns())
        throw std::out_of_range("occlusion column " + std::to_string(column) + " out of range");
    OverrideTransaction tx(dsi);
    for (int j = 0; j < dsi.levels(); ++j) {
        const NodeId node{column, j, NodeKind::Match};
        if (locked(dsi, node, model)) continue;
        tx.set(node, model.block_cost);
    }
    if (!has_feasible_path(dsi, model)) {
        tx.rollback();
        throw InfeasibleError("occlusion update at column " + std::to_string(column) +
                              " would leave no unblocked path");
    }
}

}  // namespace activestereo
