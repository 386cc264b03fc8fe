#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "activestereo/dsi.hpp"

namespace activestereo {

/// Reference disparities for the right (reference) view, one per pixel.
class GroundTruth {
public:
    static constexpr int kOccluded = -1;

    GroundTruth() = default;
    GroundTruth(int width, int height, std::vector<int> disparities);

    int width() const { return width_; }
    int height() const { return height_; }
    int at(int row, int column) const {
        return disparities_[static_cast<std::size_t>(row) * width_ + column];
    }
    bool occluded(int row, int column) const { return at(row, column) == kOccluded; }

    /// Throws DimensionError if any disparity is >= levels.
    void check_levels(int levels) const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<int> disparities_;
};

struct QueryAnswer {
    enum class Kind : std::uint8_t { Match, Occluded, Missed };
    Kind kind = Kind::Occluded;
    int disparity = 0;  // meaningful for Match only

    friend bool operator==(const QueryAnswer&, const QueryAnswer&) = default;
};

/// Per-row detection failures. A missed row carries no information.
struct DetectionNoise {
    double miss_probability = 0.0;
    std::uint64_t seed = 0;
};

/// One answer per ground-truth row for a laser line at `column`.
std::vector<QueryAnswer> simulate_query(const GroundTruth& gt, int column,
                                        const DetectionNoise& noise = {});

struct ConfirmedMatch {
    int row = 0;
    int column = 0;     // q
    int disparity = 0;  // g
    int aim = 0;        // aim index that established it

    friend bool operator==(const ConfirmedMatch&, const ConfirmedMatch&) = default;
};

/// True when (column, disparity) lies strictly inside the forbidden zone of
/// `anchor`: one of the two triangles that would violate ordering with it.
bool in_forbidden_zone(const ConfirmedMatch& anchor, int column, int disparity);

/// First earlier match whose forbidden zone contains `candidate`.
std::optional<ConfirmedMatch> conflict(std::span<const ConfirmedMatch> existing,
                                       const ConfirmedMatch& candidate);

/// A confirmed match was refused because an earlier one forbids it.
struct MatchConflict : ConflictError {
    MatchConflict(const ConfirmedMatch& existing, const ConfirmedMatch& rejected);
    ConfirmedMatch existing;
    ConfirmedMatch rejected;
};

/// Writes the X-shaped update for a laser match at (q, g):
///   (q, g, M)                         -> 0
///   strictly inside either triangle   -> block_cost (every kind)
///   column q and diagonal i + j = q+g -> soft_cost (every kind)
/// Nodes already hard-blocked, and earlier zero-cost confirmed M nodes, keep
/// their cost. Throws MatchConflict when `earlier` forbids the match and
/// InfeasibleError when no unblocked path would remain; the Dsi is left
/// untouched in both cases.
void apply_match_update(Dsi& dsi, const ConfirmedMatch& match,
                        std::span<const ConfirmedMatch> earlier, const CostModel& model);

/// Blocks every (q, j, M). Throws InfeasibleError, leaving the Dsi
/// untouched, when that would disconnect the lattice.
void apply_occlusion_update(Dsi& dsi, int column, const CostModel& model);

}  // namespace activestereo
