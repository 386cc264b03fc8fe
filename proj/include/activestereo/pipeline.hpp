#pragma once

#include <optional>
#include <set>
#include <vector>

#include "activestereo/image.hpp"
#include "activestereo/inference.hpp"
#include "activestereo/laser_sim.hpp"
#include "activestereo/querying.hpp"

namespace activestereo {

struct DisparityMap {
    int width = 0;
    int height = 0;
    std::vector<int> disparity;
    std::vector<char> occluded;  // pixel taken by an R node

    DisparityMap() = default;
    DisparityMap(int w, int h)
        : width(w),
          height(h),
          disparity(static_cast<std::size_t>(w) * h, 0),
          occluded(static_cast<std::size_t>(w) * h, 0) {}

    int at(int row, int column) const {
        return disparity[static_cast<std::size_t>(row) * width + column];
    }
    bool occluded_at(int row, int column) const {
        return occluded[static_cast<std::size_t>(row) * width + column] != 0;
    }
};

struct EntropyMap {
    int width = 0;
    int height = 0;
    std::vector<double> nats;

    double at(int row, int column) const {
        return nats[static_cast<std::size_t>(row) * width + column];
    }
};

struct AimRecord {
    int aim = 0;                // 0 is the baseline before any laser aim
    std::optional<int> column;  // empty for the baseline
    double total_entropy = 0.0;  // sum over rows of H(paths), nats
    std::optional<long> pixel_errors;  // present when ground truth is bound
};

using RunMetrics = std::vector<AimRecord>;

struct ConflictEvent {
    int row = 0;
    int aim = 0;
    ConfirmedMatch existing;
    ConfirmedMatch rejected;
};

struct SessionOptions {
    CostModel model;
    int levels = 64;  // d
    bool occlusion_update = true;
    int threads = 1;
    DetectionNoise noise;
};

/// Number of right-image columns processed for a pair: every column whose
/// full disparity range stays inside the left image.
int processed_columns(int left_width, int right_width, int levels);

/// The aim-query-update-reinfer loop over a whole image.
///
/// Rows are independent lattices. Each step sums per-row information gains
/// per column, aims a full vertical laser line at the chosen column, writes
/// the answers into every row's lattice, and re-runs inference on the rows
/// whose cost tables changed. Results never depend on the worker count.
class Session {
public:
    /// Rectified grayscale pair; both images must have the same height.
    Session(const GrayImage& left, const GrayImage& right, const SessionOptions& options,
            std::optional<GroundTruth> gt = std::nullopt);

    /// One lattice per row, all with the same (n, d).
    Session(std::vector<Dsi> rows, const SessionOptions& options,
            std::optional<GroundTruth> gt = std::nullopt);

    int rows() const { return static_cast<int>(rows_.size()); }
    int columns() const { return columns_; }
    int levels() const { return options_.levels; }
    const SessionOptions& options() const { return options_; }

    AimRecord step(const Strategy& strategy);
    /// Aims the laser at a caller-chosen column, bypassing selection. The
    /// column must be in range and not yet queried.
    AimRecord aim_at(int column);
    /// Up to `aims` steps, stopping early when columns run out. Returns the
    /// full series including the baseline.
    const RunMetrics& run(int aims, const Strategy& strategy);

    const RunMetrics& metrics() const { return metrics_; }
    const std::vector<ConflictEvent>& conflicts() const { return conflicts_; }
    const std::set<int>& excluded() const { return excluded_; }
    const std::vector<ConfirmedMatch>& confirmed(int row) const { return rows_[row].confirmed; }
    int rejected_infeasible() const { return rejected_infeasible_; }

    const Dsi& dsi(int row) const { return rows_[row].dsi; }
    const RowInference& inference(int row) const { return rows_[row].result; }
    const std::vector<double>& gains(int row) const { return rows_[row].gains; }
    std::vector<double> column_gains() const;
    double total_entropy() const;

    DisparityMap disparity_map() const;
    /// Per-column marginal argmax instead of the Viterbi path.
    DisparityMap argmax_disparity_map() const;
    EntropyMap entropy_map() const;

private:
    struct Row {
        Dsi dsi;
        RowInference result;
        std::vector<double> gains;
        std::vector<ConfirmedMatch> confirmed;
    };

    void bind_ground_truth();
    void infer(std::span<const std::size_t> which);
    AimRecord record(int aim, std::optional<int> column) const;

    SessionOptions options_;
    int columns_ = 0;
    std::vector<Row> rows_;
    std::optional<GroundTruth> gt_;
    std::set<int> excluded_;
    RunMetrics metrics_;
    std::vector<ConflictEvent> conflicts_;
    std::optional<AimState> aim_state_;
    int rejected_infeasible_ = 0;
};

/// Pixels with non-occluded ground truth whose estimate is off by more than
/// one level. Occluded estimates use the disparity level of their R node.
long pixel_error(const DisparityMap& map, const GroundTruth& gt);

}  // namespace activestereo
