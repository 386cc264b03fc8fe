#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "activestereo/image.hpp"
#include "activestereo/pipeline.hpp"

namespace activestereo {

struct RunConfig {
    std::string left;
    std::string right;
    std::string gt;
    std::optional<double> gt_scale;
    std::optional<int> gt_sentinel;
    int max_disparity = 64;
    double left_penalty = 25.0;
    double right_penalty = 25.0;
    double beta = 0.1;
    double block_cost = 1e9;
    std::optional<double> soft_cost;  // 15 * max(D_l, D_r) when unset
    int aims = 9;
    std::string strategy = "info-gain";
    std::optional<std::uint64_t> seed;
    std::string out;
    bool occlusion_update = true;
    int threads = 1;
    bool snapshots = false;

    SessionOptions session_options() const;
};

/// Entry point shared by the stereo_active binary and the tests.
/// Subcommands: match, active, bench, oracle-check, compare.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct BenchRow {
    int columns = 0;
    int levels = 0;
    double millis = 0.0;  // fastest repetition
};

/// Times forward + backward + marginals + per-column gains for one random
/// 8-bit scanline per (n, d) cell.
std::vector<BenchRow> bench_grid(std::span<const int> columns, std::span<const int> levels,
                                 int reps, std::uint64_t seed);

/// Mean entropy and pixel-error reductions after `aims` aims.
struct StrategyComparison {
    double info_gain_entropy_reduction = 0.0;
    double random_entropy_reduction = 0.0;
    double info_gain_pixel_reduction = 0.0;
    double random_pixel_reduction = 0.0;
    RunMetrics info_gain_metrics;
    std::vector<RunMetrics> random_metrics;
};

/// InfoGain once, Random once per seed in [base_seed, base_seed + runs).
StrategyComparison compare_strategies(const Session& initial, int aims, int random_runs,
                                      std::uint64_t base_seed);

inline constexpr std::string_view kCompareHeader =
    "dataset,ig_entropy_reduction,random_entropy_reduction,ig_pixel_error_reduction,"
    "random_pixel_error_reduction";

}  // namespace activestereo
