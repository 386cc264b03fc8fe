// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "activestereo/cli.hpp"
#include "activestereo/image_io.hpp"
#include "activestereo/inference.hpp"
#include "activestereo/oracle.hpp"
#include "activestereo/pipeline.hpp"
#include "activestereo/querying.hpp"
#include "scenes.hpp"

using namespace activestereo;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << "  " << title << "  (" << o.detail
              << ")" << std::endl;
}

std::string fmt(double v, int precision = 6) {
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "activestereo_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int cli(const std::vector<std::string>& args, std::string* out = nullptr) {
    std::ostringstream o, e;
    const int code = run_cli(args, o, e);
    if (out) *out = o.str();
    if (code != 0) std::cerr << e.str();
    return code;
}

// Writes left/right/gt (gt scaled by 4, sentinel 255) plus params.json.
void write_dataset(const fs::path& dir, const scenes::Scene& scene) {
    fs::create_directories(dir);
    write_pgm(scene.left, dir / "left.pgm");
    write_pgm(scene.right, dir / "right.pgm");
    GrayImage gt(scene.gt.width(), scene.gt.height());
    for (int r = 0; r < gt.height; ++r)
        for (int i = 0; i < gt.width; ++i)
            gt.at(r, i) = scene.gt.occluded(r, i)
                              ? 255
                              : static_cast<std::uint16_t>(4 * scene.gt.at(r, i));
    write_pgm(gt, dir / "gt.pgm");
    write_file(dir / "params.json", "{\"max_disparity\": " + std::to_string(scene.levels) +
                                        ", \"gt_scale\": 4, \"gt_sentinel\": 255}");
}

struct CompareRow {
    std::string dataset;
    double ig_entropy_reduction = 0.0;
    double random_entropy_reduction = 0.0;
};

// Rows of the compare table; throws on a malformed line.
std::vector<CompareRow> parse_compare_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::vector<CompareRow> rows;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::istringstream cells(line);
        for (std::string f; std::getline(cells, f, ',');) fields.push_back(f);
        if (fields.size() != 5) throw std::runtime_error("malformed compare row: " + line);
        rows.push_back({fields[0], std::stod(fields[1]), std::stod(fields[2])});
    }
    return rows;
}

constexpr std::uint64_t kOracleSeed = 20240611;

Outcome oracle_agreement() {
    const auto start = Clock::now();
    std::ostringstream log;
    const OracleCheckReport r = oracle_check(kOracleSeed, 100, log);
    const double secs = seconds_since(start);
    if (!r.ok) std::cerr << log.str();
    return {r.ok && r.lattices == 100 && secs < 60.0,
            std::to_string(r.lattices) + " lattices, " + std::to_string(r.comparisons) +
                " comparisons, worst rel err " + fmt(r.worst_relative_error, 3) + ", " +
                fmt(secs, 3) + " s" + (r.ok ? "" : ", first failure: " + r.first_failure)};
}

Outcome viterbi_optimality() {
    std::mt19937_64 rng(kOracleSeed);
    int bad = 0;
    for (int t = 0; t < 100; ++t) {
        const RandomLattice lat = random_lattice(rng);
        const OracleStats truth = oracle_stats(enumerate(lat.dsi, lat.model));
        const ViterbiResult best = viterbi(lat.dsi, lat.model);
        double walked = 0.0;
        bool valid = !best.path.empty() && is_entry(best.path.front()) &&
                     is_exit(best.path.back(), lat.dsi.columns());
        for (std::size_t k = 0; k < best.path.size(); ++k) {
            walked += lat.dsi.node_cost(best.path[k], lat.model);
            if (k > 0) {
                const auto preds = predecessors(best.path[k], lat.dsi.columns(), lat.dsi.levels());
                valid = valid && std::find(preds.begin(), preds.end(), best.path[k - 1]) != preds.end();
            }
        }
        if (!valid || best.cost != truth.min_cost || walked != best.cost) ++bad;
    }
    return {bad == 0, std::to_string(100 - bad) + "/100 lattices at the exact enumerated minimum"};
}

Outcome worked_instance() {
    const Dsi dsi = scenes::two_path_dsi();
    const CostModel model = scenes::two_path_model();
    const RowInference inf = infer_row(dsi, model);
    const double z = std::exp(inf.stats.log_z);
    const double p0 = inf.marginals.match(0, 0);
    const double r0 = inf.marginals.right_occ(0, 0);
    const double ig0 = information_gain(inf.marginals, 0);
    const double ig1 = information_gain(inf.marginals, 1);
    AimState state{InfoGainAims{}};
    const std::vector<double> gains{ig0, ig1};
    const int pick = select_aim(gains, {}, InfoGainAims{}, state);
    const bool ok = std::abs(z - (1.0 + std::exp(-1.0))) <= 1e-12 &&
                    std::abs(inf.stats.entropy - 0.58220) <= 1e-4 &&
                    std::abs(p0 - 0.73106) <= 1e-5 && std::abs(r0 - 0.26894) <= 1e-5 &&
                    std::abs(ig0 - 0.58220) <= 1e-4 && std::abs(ig1) <= 1e-12 && pick == 0;
    return {ok, "Z=" + fmt(z, 12) + " H=" + fmt(inf.stats.entropy) + " P(M)=" + fmt(p0) +
                    " P(R)=" + fmt(r0) + " IG=(" + fmt(ig0) + ", " + fmt(ig1, 3) +
                    ") aim=" + std::to_string(pick)};
}

Outcome gain_nonnegative() {
    std::mt19937_64 rng(99);
    double worst = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 1000; ++t) {
        const RandomLattice lat = random_lattice(rng);
        const PosteriorMarginals marg = infer_row(lat.dsi, lat.model).marginals;
        for (int i = 0; i < lat.dsi.columns(); ++i)
            worst = std::min(worst, information_gain(marg, i));
    }
    return {worst >= -1e-12, "min IG over 1000 lattices = " + fmt(worst, 3)};
}

Outcome query_collapse() {
    const auto scene = scenes::ramp_scene(64, 256, 32, 7);
    SessionOptions options;  // default D_l, D_r, beta and soft/block costs
    options.levels = scene.levels;
    Session session(scene.left, scene.right, options, scene.gt);
    const int q = *session.step(InfoGainAims{}).column;
    double worst_entropy = 0.0;
    int off_path = 0;
    for (int r = 0; r < session.rows(); ++r) {
        worst_entropy = std::max(worst_entropy, state_entropy(session.inference(r).marginals, q));
        const NodeId want{q, scene.gt.at(r, q), NodeKind::Match};
        const auto& path = session.inference(r).best.path;
        if (std::find(path.begin(), path.end(), want) == path.end()) ++off_path;
    }
    return {worst_entropy <= 1e-6 && off_path == 0,
            "aim column " + std::to_string(q) + ", max H(S_q) = " + fmt(worst_entropy, 3) + ", " +
                std::to_string(off_path) + " rows miss the confirmed match on the Viterbi path"};
}

Outcome conflict_handling() {
    // One 12-column row, ground truth chosen so aims at 5 then 6 answer the
    // two matches under test.
    const auto run_pair = [](int second) {
        std::mt19937_64 rng(3);
        std::vector<Dsi> rows{scenes::random_dsi(rng, 12, 5)};
        std::vector<int> truth(12, 0);
        truth[5] = 3;
        truth[6] = second;
        SessionOptions options;
        options.levels = 5;
        options.model.left_penalty = options.model.right_penalty = 2.0;
        options.model.beta = 1.0;
        options.model.soft_cost = default_soft_cost(2.0, 2.0);
        Session s(std::move(rows), options, GroundTruth(12, 1, truth));
        s.aim_at(5);
        s.aim_at(6);
        return s;
    };
    const Session rejected = run_pair(1);
    const std::string log = format_conflict_log(rejected.conflicts());
    const bool logged = rejected.conflicts().size() == 1 &&
                        log == std::string(kConflictHeader) + "\n0,2,5,3,6,1\n" &&
                        rejected.confirmed(0).size() == 1;
    const Session accepted = run_pair(2);
    const bool kept = accepted.conflicts().empty() && accepted.confirmed(0).size() == 2 &&
                      std::isfinite(accepted.inference(0).stats.log_z);
    return {logged && kept, std::string("(5,3)->(6,1) ") + (logged ? "rejected and logged" : "NOT rejected") +
                                ", (5,3)->(6,2) " + (kept ? "accepted, finite log Z" : "NOT accepted")};
}

Outcome linear_scaling() {
    const std::vector<int> fixed_n{2000};
    const std::vector<int> levels{128, 256, 512};
    const std::vector<int> columns{1000, 2000, 4000};
    const std::vector<int> fixed_d{256};
    const auto by_d = bench_grid(fixed_n, levels, 9, 1);
    const auto by_n = bench_grid(columns, fixed_d, 9, 1);
    double worst = 0.0;
    std::string detail;
    const auto ratios = [&](const std::vector<BenchRow>& rows, const char* axis) {
        for (std::size_t k = 1; k < rows.size(); ++k) {
            const double ratio = rows[k].millis / rows[k - 1].millis;
            worst = std::max(worst, ratio);
            detail += std::string(detail.empty() ? "" : ", ") + axis + " x2: " + fmt(ratio, 3);
        }
    };
    ratios(by_d, "d");
    ratios(by_n, "n");
    return {worst <= 2.5, detail};
}

Outcome long_row_stability() {
    const int n = 5000, d = 256;
    const Dsi dsi(n, d, std::vector<double>(static_cast<std::size_t>(n) * d, 0.0));
    const RowInference inf = infer_row(dsi, CostModel{});
    double worst = 0.0;
    bool finite = std::isfinite(inf.stats.log_z) && std::isfinite(inf.stats.entropy);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (double p : inf.marginals.column(i)) {
            finite = finite && std::isfinite(p);
            sum += p;
        }
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return {finite && worst <= 1e-6, "log Z = " + fmt(inf.stats.log_z, 8) + ", H = " +
                                         fmt(inf.stats.entropy, 8) +
                                         ", max |sum - 1| = " + fmt(worst, 3)};
}

Outcome strategy_comparison() {
    const auto start = Clock::now();
    const auto scene = scenes::ramp_scene(64, 256, 32, 7);
    SessionOptions options;
    options.levels = scene.levels;
    options.threads = 4;
    const Session initial(scene.left, scene.right, options, scene.gt);
    const StrategyComparison c = compare_strategies(initial, 9, 10, 1);
    const double secs = seconds_since(start);
    return {c.info_gain_entropy_reduction >= c.random_entropy_reduction && secs < 300.0,
            "entropy reduction IG " + fmt(c.info_gain_entropy_reduction) + " vs Random mean " +
                fmt(c.random_entropy_reduction) + " nats; pixel errors IG " +
                fmt(c.info_gain_pixel_reduction) + " vs Random " +
                fmt(c.random_pixel_reduction) + "; " + fmt(secs, 3) + " s"};
}

Outcome benchmark_datasets() {
    const char* root = std::getenv("ACTIVESTEREO_MIDDLEBURY_DIR");
    if (root != nullptr && *root != '\0') {
        std::vector<std::string> args{"compare"};
        for (const auto& entry : fs::directory_iterator(root))
            if (entry.is_directory())
                args.insert(args.end(), {"--dataset", entry.path().filename().string() + "=" +
                                                          entry.path().string()});
        const std::size_t datasets = (args.size() - 1) / 2;
        if (datasets != 4)
            return {false, std::to_string(datasets) + " datasets under " + std::string(root) +
                               ", expected 4"};
        args.insert(args.end(), {"--out", scratch("compare_real").string()});
        std::string table;
        if (cli(args, &table) != 0) return {false, "compare failed"};
        const auto rows = parse_compare_csv(table);
        int wins = 0;
        for (const auto& row : rows) wins += row.ig_entropy_reduction >= row.random_entropy_reduction;
        return {wins >= 3, std::to_string(wins) + "/4 datasets with IG >= Random"};
    }
    // No datasets supplied: exercise the same command on a synthetic pair and
    // check the table it writes.
    const fs::path dir = scratch("compare_synthetic");
    write_dataset(dir / "ramp", scenes::ramp_scene(16, 96, 16, 11, 32));
    std::string table;
    if (cli({"compare", "--dataset", "ramp=" + (dir / "ramp").string(), "--aims", "3",
             "--random-runs", "3", "--out", (dir / "out").string()},
            &table) != 0)
        return {false, "compare failed on the synthetic dataset"};
    const auto rows = parse_compare_csv(table);
    const bool schema = table.rfind(std::string(kCompareHeader) + "\n", 0) == 0 &&
                        rows.size() == 1 && rows[0].dataset == "ramp" &&
                        read_file(dir / "out" / "compare.csv") == table;
    return {schema, "benchmark datasets not supplied (set ACTIVESTEREO_MIDDLEBURY_DIR); "
                    "synthetic compare table " +
                        std::string(schema ? "well-formed" : "MALFORMED")};
}

Outcome thread_determinism() {
    const fs::path dir = scratch("threads");
    const auto scene = scenes::ramp_scene(48, 128, 16, 5, 48);
    write_dataset(dir, scene);
    const auto run = [&](const std::string& threads, const std::string& strategy) {
        const fs::path out = dir / ("out_" + strategy + "_" + threads);
        std::vector<std::string> args{"active", "--left", (dir / "left.pgm").string(), "--right",
                                      (dir / "right.pgm").string(), "--gt",
                                      (dir / "gt.pgm").string(), "--gt-scale", "4",
                                      "--gt-sentinel", "255", "--max-disparity", "16", "--aims",
                                      "9", "--strategy", strategy, "--seed", "17", "--threads",
                                      threads, "--out", out.string()};
        if (cli(args) != 0) throw std::runtime_error("active run failed");
        return read_file(out / "metrics.csv");
    };
    bool same = true;
    for (const std::string strategy : {"info-gain", "random"})
        same = same && run("1", strategy) == run("4", strategy);
    return {same, same ? "metrics.csv byte-identical for 1 and 4 threads"
                       : "metrics.csv differs between 1 and 4 threads"};
}

}  // namespace

int main() {
    report(1, "marginals, H and IG match enumeration on 100 random lattices", oracle_agreement);
    report(2, "Viterbi cost equals the enumerated minimum", viterbi_optimality);
    report(3, "worked two-path instance", worked_instance);
    report(4, "information gain is never negative", gain_nonnegative);
    report(5, "queried column collapses under default costs", query_collapse);
    report(6, "conflicting matches are refused and logged", conflict_handling);
    report(7, "O(nd) scaling of one inference pass", linear_scaling);
    report(8, "numerical stability on a 5000 x 256 uniform row", long_row_stability);
    report(9, "InfoGain beats mean Random on the ramp scene", strategy_comparison);
    report(10, "benchmark comparison table", benchmark_datasets);
    report(11, "results independent of the worker count", thread_determinism);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
