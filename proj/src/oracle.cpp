#include "activestereo/oracle.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include "activestereo/querying.hpp"

namespace activestereo {

namespace {

double potential_log(const Dsi& dsi, const NodeId& c, const CostModel& model) {
    return -model.beta * dsi.node_cost(c, model);
}

void extend(const Dsi& dsi, const CostModel& model, EnumeratedPath& cur, PathSet& out) {
    const NodeId& last = cur.nodes.back();
    if (is_exit(last, dsi.columns())) {
        out.paths.push_back(cur);
        out.paths.back().weight = std::exp(cur.log_weight);
    }
    for (const NodeId& next : successors(last, dsi.columns(), dsi.levels())) {
        const double c = dsi.node_cost(next, model);
        const double log_weight = cur.log_weight;
        const double cost = cur.cost;
        const bool blocked = cur.blocked;
        cur.nodes.push_back(next);
        cur.log_weight += -model.beta * c;
        cur.cost += c;
        cur.blocked = blocked || model.is_blocked(c);
        extend(dsi, model, cur, out);
        cur.nodes.pop_back();
        cur.log_weight = log_weight;
        cur.cost = cost;
        cur.blocked = blocked;
    }
}

// Walks every partial path from `start` in one direction, adding the
// running product of potentials to each visited node.
template <class Step>
void accumulate(const Dsi& dsi, const CostModel& model, const NodeId& at, double log_w,
                std::vector<double>& mass, Step step) {
    mass[dsi.index(at)] += std::exp(log_w);
    for (const NodeId& next : step(at))
        accumulate(dsi, model, next, log_w + potential_log(dsi, next, model), mass, step);
}

bool close(double a, double b, double& worst) {
    const double scale = std::max(std::abs(a), std::abs(b));
    const double diff = std::abs(a - b);
    if (scale > 0.0) worst = std::max(worst, diff / scale);
    return diff <= kOracleTolerance * scale + 1e-14;
}

const char* kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::Match: return "M";
        case NodeKind::LeftOcc: return "L";
        case NodeKind::RightOcc: return "R";
    }
    return "?";
}

}  // namespace

double count_paths(int columns, int levels) {
    const int n = columns;
    const int d = levels;
    std::vector<double> m(d), l(d), r(d), pm(d), pl(d), pr(d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            if (i == 0) {
                m[j] = 1;
                r[j] = 1;
            } else {
                m[j] = pm[j] + pl[j] + pr[j];
                r[j] = j > 0 ? pm[j - 1] + pr[j - 1] : 0;
            }
        }
        for (int j = d - 1; j >= 0; --j) l[j] = j + 1 < d ? m[j + 1] + l[j + 1] : 0;
        pm = m;
        pl = l;
        pr = r;
    }
    double total = 0;
    for (int j = 0; j < d; ++j) total += pm[j] + pl[j] + pr[j];
    return total;
}

PathSet enumerate(const Dsi& dsi, const CostModel& model) {
    const double count = count_paths(dsi.columns(), dsi.levels());
    if (count > kMaxEnumeratedPaths)
        throw GuardError("lattice has " + std::to_string(count) + " paths, guard is 1e6");
    PathSet out;
    out.columns = dsi.columns();
    out.levels = dsi.levels();
    out.paths.reserve(static_cast<std::size_t>(count));
    for (const NodeId& e : entry_nodes(dsi)) {
        EnumeratedPath p;
        const double c = dsi.node_cost(e, model);
        p.nodes.push_back(e);
        p.log_weight = -model.beta * c;
        p.cost = c;
        p.blocked = model.is_blocked(c);
        extend(dsi, model, p, out);
    }
    return out;
}

OracleStats oracle_stats(const PathSet& ps) {
    OracleStats s;
    const std::size_t cells = static_cast<std::size_t>(ps.columns) * ps.levels;
    s.node_probability.assign(3 * cells, 0.0);
    s.node_wlogw.assign(3 * cells, 0.0);
    s.min_cost = std::numeric_limits<double>::infinity();
    const auto idx = [&](const NodeId& c) {
        return static_cast<std::size_t>(c.kind) * cells +
               static_cast<std::size_t>(c.column) * ps.levels + c.disparity;
    };
    for (const auto& p : ps.paths) {
        s.z += p.weight;
        if (!p.blocked) s.min_cost = std::min(s.min_cost, p.cost);
    }
    s.log_z = std::log(s.z);
    for (const auto& p : ps.paths) {
        const double prob = p.weight / s.z;
        if (prob > 0.0) s.entropy -= prob * std::log(prob);
        for (const NodeId& c : p.nodes) {
            s.node_probability[idx(c)] += prob;
            if (p.weight > 0.0) s.node_wlogw[idx(c)] += p.weight * p.log_weight;
        }
    }
    return s;
}

double oracle_ig(const PathSet& ps, int column) {
    // outcome key: disparity of the matched state, or -1 for occluded
    std::map<int, std::vector<double>> groups;
    double z = 0.0;
    for (const auto& p : ps.paths) {
        z += p.weight;
        for (const NodeId& c : p.nodes) {
            if (c.column != column || c.kind == NodeKind::LeftOcc) continue;
            groups[c.kind == NodeKind::Match ? c.disparity : -1].push_back(p.weight);
            break;
        }
    }
    const auto entropy_of = [](const std::vector<double>& w) {
        double t = 0.0;
        for (double x : w) t += x;
        double h = 0.0;
        if (t <= 0.0) return 0.0;
        for (double x : w)
            if (x > 0.0) h -= (x / t) * std::log(x / t);
        return h;
    };
    std::vector<double> all;
    for (const auto& p : ps.paths) all.push_back(p.weight);
    const double h_all = entropy_of(all);
    double h_cond = 0.0;
    for (const auto& [key, w] : groups) {
        double t = 0.0;
        for (double x : w) t += x;
        h_cond += (t / z) * entropy_of(w);
    }
    return h_all - h_cond;
}

std::vector<double> oracle_prefix_mass(const Dsi& dsi, const CostModel& model) {
    std::vector<double> mass(dsi.node_count(), 0.0);
    const auto step = [&](const NodeId& c) { return successors(c, dsi.columns(), dsi.levels()); };
    for (const NodeId& e : entry_nodes(dsi))
        accumulate(dsi, model, e, potential_log(dsi, e, model), mass, step);
    return mass;
}

std::vector<double> oracle_suffix_mass(const Dsi& dsi, const CostModel& model) {
    std::vector<double> mass(dsi.node_count(), 0.0);
    const auto step = [&](const NodeId& c) {
        return predecessors(c, dsi.columns(), dsi.levels());
    };
    for (const NodeId& e : exit_nodes(dsi))
        accumulate(dsi, model, e, potential_log(dsi, e, model), mass, step);
    return mass;
}

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

RandomLattice random_lattice(std::mt19937_64& rng) {
    const int n = 1 + static_cast<int>(rng() % 7);
    const int d = 1 + static_cast<int>(rng() % 3);
    std::vector<double> scores(static_cast<std::size_t>(n) * d);
    for (double& s : scores) s = 3.0 * unit_uniform(rng);
    CostModel model;
    model.beta = 1.0;
    model.left_penalty = 0.5 + 2.5 * unit_uniform(rng);
    model.right_penalty = 0.5 + 2.5 * unit_uniform(rng);
    model.soft_cost = default_soft_cost(model.left_penalty, model.right_penalty);
    return {Dsi(n, d, std::move(scores)), model};
}

void dump_lattice(std::ostream& out, const Dsi& dsi, const CostModel& model) {
    out.precision(17);
    out << "lattice n=" << dsi.columns() << " d=" << dsi.levels() << " beta=" << model.beta
        << " D_l=" << model.left_penalty << " D_r=" << model.right_penalty
        << " soft=" << model.soft_cost << " block=" << model.block_cost << "\n";
    for (int i = 0; i < dsi.columns(); ++i) {
        out << "  score[" << i << "] =";
        for (int j = 0; j < dsi.levels(); ++j) out << " " << dsi.score(i, j);
        out << "\n";
    }
    for (NodeKind k : kAllKinds)
        for (int i = 0; i < dsi.columns(); ++i)
            for (int j = 0; j < dsi.levels(); ++j) {
                const NodeId c{i, j, k};
                if (dsi.has_override(c))
                    out << "  override (" << i << "," << j << "," << kind_name(k)
                        << ") = " << dsi.override_cost(c) << "\n";
            }
}

OracleCheckReport oracle_check(std::uint64_t seed, int count, std::ostream& log,
                               const MarginalFault& fault) {
    OracleCheckReport report;
    std::mt19937_64 rng(seed);
    for (int t = 0; t < count && report.ok; ++t) {
        const RandomLattice lat = random_lattice(rng);
        const Dsi& dsi = lat.dsi;
        const CostModel& model = lat.model;
        ++report.lattices;

        const PathSet ps = enumerate(dsi, model);
        const OracleStats truth = oracle_stats(ps);

        const ForwardTables fwd = forward(dsi, model);
        const BackwardTables bwd = backward(dsi, model);
        PosteriorMarginals marg = column_marginals(fwd, bwd);
        if (fault) fault(marg);
        const PathStats stats = total_path_entropy(fwd);
        const ViterbiResult best = viterbi(dsi, model);

        std::string failure;
        const auto expect = [&](bool good, const std::string& what) {
            ++report.comparisons;
            if (!good && failure.empty()) failure = what;
        };
        double& worst = report.worst_relative_error;

        expect(close(std::exp(stats.log_z), truth.z, worst), "Z (forward)");
        expect(close(std::exp(bwd.log_total()), truth.z, worst), "Z (backward)");
        expect(close(stats.entropy, truth.entropy, worst), "H(paths)");
        for (int i = 0; i < dsi.columns(); ++i) {
            for (int j = 0; j < dsi.levels(); ++j) {
                const NodeId m{i, j, NodeKind::Match};
                const NodeId r{i, j, NodeKind::RightOcc};
                expect(close(marg.match(i, j), truth.node_probability[dsi.index(m)], worst),
                       "marginal M(" + std::to_string(i) + "," + std::to_string(j) + ")");
                expect(close(marg.right_occ(i, j), truth.node_probability[dsi.index(r)], worst),
                       "marginal R(" + std::to_string(i) + "," + std::to_string(j) + ")");
            }
            expect(close(information_gain(marg, i), oracle_ig(ps, i), worst),
                   "IG(" + std::to_string(i) + ")");
        }
        for (NodeKind k : kAllKinds)
            for (int i = 0; i < dsi.columns(); ++i)
                for (int j = 0; j < dsi.levels(); ++j) {
                    const NodeId c{i, j, k};
                    expect(close(node_entropy(fwd, bwd, c), truth.node_wlogw[dsi.index(c)], worst),
                           std::string("node entropy (") + std::to_string(i) + "," +
                               std::to_string(j) + "," + kind_name(k) + ")");
                }
        ++report.comparisons;
        if (best.cost != truth.min_cost && failure.empty()) failure = "Viterbi cost";
        double walked = 0.0;
        for (const NodeId& c : best.path) walked += dsi.node_cost(c, model);
        ++report.comparisons;
        if (walked != best.cost && failure.empty()) failure = "Viterbi path cost";

        if (!failure.empty()) {
            report.ok = false;
            report.first_failure = "lattice " + std::to_string(t) + ": " + failure;
            log << "oracle mismatch on " << report.first_failure << "\n";
            dump_lattice(log, dsi, model);
        }
    }
    return report;
}

}  // namespace activestereo
