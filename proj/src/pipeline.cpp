#include "activestereo/pipeline.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "activestereo/parallel.hpp"

namespace activestereo {

namespace {

std::vector<Dsi> build_rows(const GrayImage& left, const GrayImage& right,
                            const SessionOptions& options) {
    if (left.height != right.height)
        throw DimensionError("image heights differ: left " + std::to_string(left.height) +
                             ", right " + std::to_string(right.height));
    if (left.height < 1) throw DimensionError("images have no rows");
    const int n = processed_columns(left.width, right.width, options.levels);
    std::vector<Dsi> rows;
    rows.reserve(static_cast<std::size_t>(left.height));
    for (int r = 0; r < left.height; ++r) {
        ScanlinePair pair;
        const auto rr = right.row(r);
        const auto lr = left.row(r);
        pair.right.assign(rr.begin(), rr.begin() + n);
        pair.left.assign(lr.begin(), lr.begin() + n + options.levels - 1);
        rows.push_back(build_dsi(pair, options.levels, options.model));
    }
    return rows;
}

}  // namespace

int processed_columns(int left_width, int right_width, int levels) {
    if (levels < 1) throw DimensionError("max disparity must be >= 1");
    const int n = std::min(right_width, left_width - levels + 1);
    if (n < 1)
        throw DimensionError("max disparity " + std::to_string(levels) +
                             " leaves no columns: left width " + std::to_string(left_width) +
                             " must be at least d = " + std::to_string(levels));
    return n;
}

Session::Session(const GrayImage& left, const GrayImage& right, const SessionOptions& options,
                 std::optional<GroundTruth> gt)
    : Session(build_rows(left, right, options), options, std::move(gt)) {}

Session::Session(std::vector<Dsi> rows, const SessionOptions& options,
                 std::optional<GroundTruth> gt)
    : options_(options), gt_(std::move(gt)) {
    options_.model.validate();
    if (rows.empty()) throw DimensionError("session needs at least one row");
    columns_ = rows.front().columns();
    options_.levels = rows.front().levels();
    rows_.reserve(rows.size());
    for (auto& d : rows) {
        if (d.columns() != columns_ || d.levels() != options_.levels)
            throw DimensionError("rows disagree on lattice size");
        rows_.push_back(Row{std::move(d), {}, {}, {}});
    }
    bind_ground_truth();
    std::vector<std::size_t> all(rows_.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    infer(all);
    metrics_.push_back(record(0, std::nullopt));
}

void Session::bind_ground_truth() {
    if (!gt_) return;
    if (gt_->height() != rows())
        throw DimensionError("ground truth has " + std::to_string(gt_->height()) +
                             " rows, images have " + std::to_string(rows()));
    if (gt_->width() < columns_)
        throw DimensionError("ground truth is " + std::to_string(gt_->width()) +
                             " wide, lattice needs " + std::to_string(columns_) + " columns");
    gt_->check_levels(options_.levels);
}

void Session::infer(std::span<const std::size_t> which) {
    parallel_for(which.size(), options_.threads, [&](std::size_t k) {
        Row& row = rows_[which[k]];
        row.result = infer_row(row.dsi, options_.model);
        row.gains = row_gains(row.result.marginals);
    });
}

std::vector<double> Session::column_gains() const {
    std::vector<std::vector<double>> per_row;
    per_row.reserve(rows_.size());
    for (const auto& r : rows_) per_row.push_back(r.gains);
    return aggregate_column_gains(per_row);
}

double Session::total_entropy() const {
    double total = 0.0;
    for (const auto& r : rows_) total += r.result.stats.entropy;
    return total;
}

AimRecord Session::record(int aim, std::optional<int> column) const {
    AimRecord rec;
    rec.aim = aim;
    rec.column = column;
    rec.total_entropy = total_entropy();
    if (gt_) rec.pixel_errors = pixel_error(disparity_map(), *gt_);
    return rec;
}

AimRecord Session::step(const Strategy& strategy) {
    if (!gt_) throw Error("the active loop needs ground truth to answer laser queries");
    if (!aim_state_) aim_state_.emplace(strategy);
    const std::vector<double> gains = column_gains();
    return aim_at(select_aim(gains, excluded_, strategy, *aim_state_));
}

AimRecord Session::aim_at(int q) {
    if (!gt_) throw Error("the active loop needs ground truth to answer laser queries");
    if (q < 0 || q >= columns_)
        throw std::out_of_range("aim column " + std::to_string(q) + " outside [0, " +
                                std::to_string(columns_) + ")");
    if (excluded_.contains(q))
        throw std::invalid_argument("column " + std::to_string(q) + " was already queried");
    const int aim = static_cast<int>(metrics_.size());
    const std::vector<QueryAnswer> answers = simulate_query(*gt_, q, options_.noise);

    struct Outcome {
        bool changed = false;
        bool infeasible = false;
        std::optional<ConflictEvent> conflict;
    };
    std::vector<Outcome> outcomes(rows_.size());
    parallel_for(rows_.size(), options_.threads, [&](std::size_t r) {
        Row& row = rows_[r];
        const QueryAnswer& a = answers[r];
        Outcome& out = outcomes[r];
        try {
            if (a.kind == QueryAnswer::Kind::Match) {
                const ConfirmedMatch m{static_cast<int>(r), q, a.disparity, aim};
                apply_match_update(row.dsi, m, row.confirmed, options_.model);
                row.confirmed.push_back(m);
                out.changed = true;
            } else if (a.kind == QueryAnswer::Kind::Occluded && options_.occlusion_update) {
                apply_occlusion_update(row.dsi, q, options_.model);
                out.changed = true;
            }
        } catch (const MatchConflict& c) {
            out.conflict = ConflictEvent{static_cast<int>(r), aim, c.existing, c.rejected};
        } catch (const InfeasibleError&) {
            out.infeasible = true;
        }
    });

    std::vector<std::size_t> dirty;
    for (std::size_t r = 0; r < outcomes.size(); ++r) {
        if (outcomes[r].changed) dirty.push_back(r);
        if (outcomes[r].conflict) conflicts_.push_back(*outcomes[r].conflict);
        if (outcomes[r].infeasible) ++rejected_infeasible_;
    }
    infer(dirty);
    excluded_.insert(q);
    metrics_.push_back(record(aim, q));
    return metrics_.back();
}

const RunMetrics& Session::run(int aims, const Strategy& strategy) {
    if (aims < 0) throw std::invalid_argument("aim count must be >= 0");
    for (int k = 0; k < aims; ++k) {
        if (static_cast<int>(excluded_.size()) >= columns_) break;
        step(strategy);
    }
    return metrics_;
}

DisparityMap Session::disparity_map() const {
    DisparityMap map(columns_, rows());
    for (int r = 0; r < rows(); ++r) {
        for (const NodeId& node : rows_[r].result.best.path) {
            if (node.kind == NodeKind::LeftOcc) continue;
            const std::size_t at = static_cast<std::size_t>(r) * columns_ + node.column;
            map.disparity[at] = node.disparity;
            map.occluded[at] = node.kind == NodeKind::RightOcc;
        }
    }
    return map;
}

DisparityMap Session::argmax_disparity_map() const {
    DisparityMap map(columns_, rows());
    for (int r = 0; r < rows(); ++r) {
        for (int i = 0; i < columns_; ++i) {
            const NodeId best = rows_[r].result.marginals.argmax(i);
            const std::size_t at = static_cast<std::size_t>(r) * columns_ + i;
            map.disparity[at] = best.disparity;
            map.occluded[at] = best.kind == NodeKind::RightOcc;
        }
    }
    return map;
}

EntropyMap Session::entropy_map() const {
    EntropyMap map{columns_, rows(), std::vector<double>(static_cast<std::size_t>(columns_) * rows())};
    for (int r = 0; r < rows(); ++r)
        for (int i = 0; i < columns_; ++i)
            map.nats[static_cast<std::size_t>(r) * columns_ + i] =
                state_entropy(rows_[r].result.marginals, i);
    return map;
}

long pixel_error(const DisparityMap& map, const GroundTruth& gt) {
    if (gt.height() != map.height || gt.width() < map.width)
        throw DimensionError("disparity map " + std::to_string(map.width) + "x" +
                             std::to_string(map.height) + " does not fit ground truth " +
                             std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
    long errors = 0;
    for (int r = 0; r < map.height; ++r)
        for (int i = 0; i < map.width; ++i)
            if (!gt.occluded(r, i) && std::abs(map.at(r, i) - gt.at(r, i)) > 1) ++errors;
    return errors;
}

}  // namespace activestereo
