#include "activestereo/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace activestereo {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Streaming log-sum-exp that also tracks the weighted mean of a second
// quantity. Terms with log weight -inf are ignored.
struct LogMix {
    double max = kNegInf;
    double sum = 0.0;
    double weighted = 0.0;

    void add(double log_w, double value) {
        if (log_w == kNegInf) return;
        if (log_w > max) {
            const double r = std::exp(max - log_w);
            sum *= r;
            weighted *= r;
            max = log_w;
        }
        const double w = std::exp(log_w - max);
        sum += w;
        weighted += w * value;
    }

    bool empty() const { return max == kNegInf; }
    double log_total() const { return empty() ? kNegInf : max + std::log(sum); }
    double mean() const { return empty() ? 0.0 : weighted / sum; }
};

// Node log-potentials laid out like Dsi::index().
std::vector<double> log_potentials(const Dsi& dsi, const CostModel& model) {
    const std::size_t cells = dsi.cells();
    std::vector<double> out(dsi.node_count());
    const auto scores = dsi.scores();
    const auto overrides = dsi.overrides();
    const double base[3] = {0.0, model.left_penalty, model.right_penalty};
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t c = 0; c < cells; ++c) {
            const std::size_t idx = k * cells + c;
            double cost = overrides[idx];
            if (std::isnan(cost)) cost = k == 0 ? scores[c] : base[k];
            out[idx] = -model.beta * cost;
        }
    }
    return out;
}

std::vector<double> node_costs(const Dsi& dsi, const CostModel& model) {
    const std::size_t cells = dsi.cells();
    std::vector<double> out(dsi.node_count());
    const auto scores = dsi.scores();
    const auto overrides = dsi.overrides();
    const double base[3] = {0.0, model.left_penalty, model.right_penalty};
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t c = 0; c < cells; ++c) {
            const std::size_t idx = k * cells + c;
            double cost = overrides[idx];
            if (std::isnan(cost)) cost = k == 0 ? scores[c] : base[k];
            out[idx] = cost;
        }
    }
    return out;
}

}  // namespace

ForwardTables::ForwardTables(int columns, int levels)
    : columns_(columns),
      levels_(levels),
      cells_(static_cast<std::size_t>(columns) * levels),
      log_mass_(3 * cells_, kNegInf),
      mean_log_(3 * cells_, 0.0) {}

double ForwardTables::mass(const NodeId& node) const { return std::exp(log_mass(node)); }

double ForwardTables::entropy_accumulator(const NodeId& node) const {
    const double m = mass(node);
    return m == 0.0 ? 0.0 : m * mean_log_weight(node);
}

BackwardTables::BackwardTables(int columns, int levels)
    : columns_(columns),
      levels_(levels),
      cells_(static_cast<std::size_t>(columns) * levels),
      log_potential_(3 * cells_, 0.0),
      log_outflow_(3 * cells_, kNegInf),
      mean_outflow_(3 * cells_, 0.0) {}

double BackwardTables::mass(const NodeId& node) const { return std::exp(log_mass(node)); }

double BackwardTables::entropy_accumulator(const NodeId& node) const {
    const double m = mass(node);
    return m == 0.0 ? 0.0 : m * mean_log_weight(node);
}

double BackwardTables::log_total() const {
    LogMix mix;
    for (int j = 0; j < levels_; ++j) {
        mix.add(log_mass({0, j, NodeKind::Match}), 0.0);
        mix.add(log_mass({0, j, NodeKind::RightOcc}), 0.0);
    }
    return mix.log_total();
}

PosteriorMarginals::PosteriorMarginals(int columns, int levels)
    : columns_(columns),
      levels_(levels),
      states_(static_cast<std::size_t>(columns) * 2 * levels, 0.0),
      left_(static_cast<std::size_t>(columns) * levels, 0.0) {}

NodeId PosteriorMarginals::argmax(int column) const {
    NodeId best{column, 0, NodeKind::Match};
    double best_p = -1.0;
    for (int j = 0; j < levels_; ++j) {
        if (match(column, j) > best_p) {
            best_p = match(column, j);
            best = {column, j, NodeKind::Match};
        }
    }
    for (int j = 0; j < levels_; ++j) {
        if (right_occ(column, j) > best_p) {
            best_p = right_occ(column, j);
            best = {column, j, NodeKind::RightOcc};
        }
    }
    return best;
}

ViterbiResult viterbi(const Dsi& dsi, const CostModel& model) {
    const int n = dsi.columns();
    const int d = dsi.levels();
    const std::size_t cells = dsi.cells();
    const std::vector<double> cost = node_costs(dsi, model);
    std::vector<double> best(3 * cells, kInf);
    // Kind of the chosen predecessor; -1 marks an entry.
    std::vector<signed char> back(3 * cells, -1);

    const auto idx = [&](int i, int j, NodeKind k) {
        return static_cast<std::size_t>(k) * cells + static_cast<std::size_t>(i) * d + j;
    };
    const auto relax = [&](std::size_t target, int i, int j, NodeKind from) {
        const double v = best[idx(i, j, from)];
        if (v < best[target]) {
            best[target] = v;
            back[target] = static_cast<signed char>(from);
        }
    };

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            const std::size_t m = idx(i, j, NodeKind::Match);
            const std::size_t r = idx(i, j, NodeKind::RightOcc);
            if (i == 0) {
                best[m] = 0.0;
                best[r] = 0.0;
            } else {
                relax(m, i - 1, j, NodeKind::Match);
                relax(m, i - 1, j, NodeKind::LeftOcc);
                relax(m, i - 1, j, NodeKind::RightOcc);
                if (j > 0) {
                    relax(r, i - 1, j - 1, NodeKind::Match);
                    relax(r, i - 1, j - 1, NodeKind::RightOcc);
                }
            }
            for (std::size_t t : {m, r}) {
                if (model.is_blocked(cost[t]))
                    best[t] = kInf;
                else if (best[t] < kInf)
                    best[t] += cost[t];
            }
        }
        for (int j = d - 2; j >= 0; --j) {
            const std::size_t l = idx(i, j, NodeKind::LeftOcc);
            relax(l, i, j + 1, NodeKind::Match);
            relax(l, i, j + 1, NodeKind::LeftOcc);
            if (model.is_blocked(cost[l]))
                best[l] = kInf;
            else if (best[l] < kInf)
                best[l] += cost[l];
        }
    }

    NodeId end{};
    double end_cost = kInf;
    for (int j = 0; j < d; ++j) {
        for (NodeKind k : kAllKinds) {
            const double v = best[idx(n - 1, j, k)];
            if (v < end_cost) {
                end_cost = v;
                end = {n - 1, j, k};
            }
        }
    }
    if (end_cost == kInf) throw InfeasibleError("every entry-to-exit path is blocked");

    ViterbiResult result;
    result.cost = end_cost;
    NodeId cur = end;
    for (;;) {
        result.path.push_back(cur);
        const signed char from = back[idx(cur.column, cur.disparity, cur.kind)];
        if (from < 0) break;
        const auto k = static_cast<NodeKind>(from);
        switch (cur.kind) {
            case NodeKind::Match:
                cur = {cur.column - 1, cur.disparity, k};
                break;
            case NodeKind::RightOcc:
                cur = {cur.column - 1, cur.disparity - 1, k};
                break;
            case NodeKind::LeftOcc:
                cur = {cur.column, cur.disparity + 1, k};
                break;
        }
    }
    std::reverse(result.path.begin(), result.path.end());
    return result;
}

ForwardTables forward(const Dsi& dsi, const CostModel& model) {
    const int n = dsi.columns();
    const int d = dsi.levels();
    ForwardTables t(n, d);
    const std::size_t cells = dsi.cells();
    const std::vector<double> lp = log_potentials(dsi, model);
    auto& lm = t.log_mass_;
    auto& ml = t.mean_log_;

    const auto idx = [&](int i, int j, NodeKind k) {
        return static_cast<std::size_t>(k) * cells + static_cast<std::size_t>(i) * d + j;
    };
    const auto finish = [&](std::size_t at, const LogMix& mix) {
        if (mix.empty()) return;  // unreachable: stays (-inf, 0)
        lm[at] = lp[at] + mix.log_total();
        ml[at] = lp[at] + mix.mean();
    };

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            const std::size_t m = idx(i, j, NodeKind::Match);
            const std::size_t r = idx(i, j, NodeKind::RightOcc);
            if (i == 0) {
                lm[m] = lp[m];
                ml[m] = lp[m];
                lm[r] = lp[r];
                ml[r] = lp[r];
                continue;
            }
            LogMix mm;
            for (NodeKind k : kAllKinds) {
                const std::size_t p = idx(i - 1, j, k);
                mm.add(lm[p], ml[p]);
            }
            finish(m, mm);
            if (j > 0) {
                LogMix rm;
                const std::size_t pm = idx(i - 1, j - 1, NodeKind::Match);
                const std::size_t pr = idx(i - 1, j - 1, NodeKind::RightOcc);
                rm.add(lm[pm], ml[pm]);
                rm.add(lm[pr], ml[pr]);
                finish(r, rm);
            }
        }
        for (int j = d - 2; j >= 0; --j) {
            LogMix lmix;
            const std::size_t pm = idx(i, j + 1, NodeKind::Match);
            const std::size_t pl = idx(i, j + 1, NodeKind::LeftOcc);
            lmix.add(lm[pm], ml[pm]);
            lmix.add(lm[pl], ml[pl]);
            finish(idx(i, j, NodeKind::LeftOcc), lmix);
        }
    }
    return t;
}

BackwardTables backward(const Dsi& dsi, const CostModel& model) {
    const int n = dsi.columns();
    const int d = dsi.levels();
    BackwardTables t(n, d);
    const std::size_t cells = dsi.cells();
    t.log_potential_ = log_potentials(dsi, model);
    const auto& lp = t.log_potential_;
    auto& out = t.log_outflow_;
    auto& mo = t.mean_outflow_;

    const auto idx = [&](int i, int j, NodeKind k) {
        return static_cast<std::size_t>(k) * cells + static_cast<std::size_t>(i) * d + j;
    };
    // Successor s contributes its own potential plus everything after it.
    const auto take = [&](LogMix& mix, std::size_t s) { mix.add(lp[s] + out[s], lp[s] + mo[s]); };
    const auto finish = [&](std::size_t at, const LogMix& mix) {
        out[at] = mix.log_total();
        mo[at] = mix.mean();
    };

    for (int i = n - 1; i >= 0; --i) {
        const bool last = i == n - 1;
        for (int j = 0; j < d; ++j) {
            LogMix mix;
            if (last) mix.add(0.0, 0.0);
            if (!last) take(mix, idx(i + 1, j, NodeKind::Match));
            if (j > 0) take(mix, idx(i, j - 1, NodeKind::LeftOcc));
            finish(idx(i, j, NodeKind::LeftOcc), mix);
        }
        for (int j = 0; j < d; ++j) {
            LogMix mm;
            LogMix rm;
            if (last) {
                mm.add(0.0, 0.0);
                rm.add(0.0, 0.0);
            } else {
                take(mm, idx(i + 1, j, NodeKind::Match));
                take(rm, idx(i + 1, j, NodeKind::Match));
                if (j + 1 < d) {
                    take(mm, idx(i + 1, j + 1, NodeKind::RightOcc));
                    take(rm, idx(i + 1, j + 1, NodeKind::RightOcc));
                }
            }
            if (j > 0) take(mm, idx(i, j - 1, NodeKind::LeftOcc));
            finish(idx(i, j, NodeKind::Match), mm);
            finish(idx(i, j, NodeKind::RightOcc), rm);
        }
    }
    return t;
}

double node_log_mass(const ForwardTables& fwd, const BackwardTables& bwd, const NodeId& node) {
    const double a = fwd.log_mass(node);
    const double b = bwd.log_outflow(node);
    if (a == kNegInf || b == kNegInf) return kNegInf;
    return a + b;
}

PosteriorMarginals column_marginals(const ForwardTables& fwd, const BackwardTables& bwd) {
    const int n = fwd.columns();
    const int d = fwd.levels();
    PosteriorMarginals out(n, d);
    std::vector<double> logs(2 * static_cast<std::size_t>(d));
    for (int i = 0; i < n; ++i) {
        LogMix norm;
        for (int j = 0; j < d; ++j) {
            logs[j] = node_log_mass(fwd, bwd, {i, j, NodeKind::Match});
            logs[d + j] = node_log_mass(fwd, bwd, {i, j, NodeKind::RightOcc});
        }
        for (double v : logs) norm.add(v, 0.0);
        if (norm.empty())
            throw InfeasibleError("column " + std::to_string(i) + " carries no path mass");
        const double log_norm = norm.log_total();
        auto col = out.column(i);
        for (std::size_t s = 0; s < logs.size(); ++s) col[s] = std::exp(logs[s] - log_norm);
        auto left = out.left_column(i);
        for (int j = 0; j < d; ++j)
            left[j] = std::exp(node_log_mass(fwd, bwd, {i, j, NodeKind::LeftOcc}) - log_norm);
    }
    return out;
}

PathStats total_path_entropy(const ForwardTables& fwd) {
    const int last = fwd.columns() - 1;
    LogMix mix;
    for (NodeKind k : kAllKinds)
        for (int j = 0; j < fwd.levels(); ++j) {
            const NodeId c{last, j, k};
            mix.add(fwd.log_mass(c), fwd.mean_log_weight(c));
        }
    PathStats s;
    s.log_z = mix.log_total();
    // H = log Z - E[log w]; tiny negative values are rounding.
    s.entropy = std::max(0.0, s.log_z - mix.mean());
    return s;
}

double node_entropy(const ForwardTables& fwd, const BackwardTables& bwd, const NodeId& node) {
    const double log_m = node_log_mass(fwd, bwd, node);
    const double m = std::exp(log_m);
    if (m == 0.0) return 0.0;
    return m * (fwd.mean_log_weight(node) + bwd.mean_outflow_log(node));
}

RowInference infer_row(const Dsi& dsi, const CostModel& model) {
    RowInference out;
    const ForwardTables fwd = forward(dsi, model);
    const BackwardTables bwd = backward(dsi, model);
    out.marginals = column_marginals(fwd, bwd);
    out.stats = total_path_entropy(fwd);
    out.best = viterbi(dsi, model);
    return out;
}

}  // namespace activestereo
