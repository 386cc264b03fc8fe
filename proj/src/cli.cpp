#include "activestereo/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <random>

#include "CLI11.hpp"
#include "json.hpp"

#include "activestereo/image_io.hpp"
#include "activestereo/inference.hpp"
#include "activestereo/oracle.hpp"
#include "activestereo/querying.hpp"

namespace activestereo {

namespace fs = std::filesystem;

SessionOptions RunConfig::session_options() const {
    SessionOptions o;
    o.levels = max_disparity;
    o.model.left_penalty = left_penalty;
    o.model.right_penalty = right_penalty;
    o.model.beta = beta;
    o.model.block_cost = block_cost;
    o.model.soft_cost = soft_cost.value_or(default_soft_cost(left_penalty, right_penalty));
    o.occlusion_update = occlusion_update;
    o.threads = threads;
    o.model.validate();
    return o;
}

namespace {

void add_model_options(CLI::App& app, RunConfig& cfg) {
    app.add_option("--max-disparity", cfg.max_disparity, "Disparity levels d")
        ->check(CLI::PositiveNumber);
    app.add_option("--dl", cfg.left_penalty, "Left-occlusion penalty");
    app.add_option("--dr", cfg.right_penalty, "Right-occlusion penalty");
    app.add_option("--beta", cfg.beta, "Temperature applied to all costs");
    app.add_option("--block-cost", cfg.block_cost, "Cost of hard-blocked nodes");
    app.add_option("--soft-cost", cfg.soft_cost, "Cost of soft-penalized boundary nodes");
    app.add_option("--threads", cfg.threads, "Row worker count")->check(CLI::PositiveNumber);
}

void add_image_options(CLI::App& app, RunConfig& cfg, bool need_gt) {
    app.add_option("--left", cfg.left, "Left image (PGM)")->required();
    app.add_option("--right", cfg.right, "Right (reference) image (PGM)")->required();
    auto* gt = app.add_option("--gt", cfg.gt, "Ground-truth disparity image (PGM)");
    if (need_gt) gt->required();
    app.add_option("--gt-scale", cfg.gt_scale, "Ground-truth divisor (disparity = sample / scale)");
    app.add_option("--gt-sentinel", cfg.gt_sentinel, "Ground-truth sample meaning occluded");
    app.add_option("--out", cfg.out, "Output directory")->required();
}

std::optional<GroundTruth> load_gt(const RunConfig& cfg) {
    if (cfg.gt.empty()) return std::nullopt;
    if (!cfg.gt_scale || !cfg.gt_sentinel)
        throw Error("--gt needs both --gt-scale and --gt-sentinel");
    return read_gt(cfg.gt, *cfg.gt_scale, *cfg.gt_sentinel);
}

Strategy parse_strategy(const RunConfig& cfg) {
    if (cfg.strategy == "info-gain") return InfoGainAims{};
    if (cfg.strategy == "even") return EvenlySpacedAims{cfg.aims};
    if (!cfg.seed) throw Error("--strategy random requires --seed");
    return RandomAims{*cfg.seed};
}

std::string aim_tag(int aim) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d", aim);
    return buf;
}

int cmd_match(const RunConfig& cfg, std::ostream& out) {
    const GrayImage left = read_pgm(cfg.left);
    const GrayImage right = read_pgm(cfg.right);
    std::optional<GroundTruth> gt = load_gt(cfg);
    Session session(left, right, cfg.session_options(), std::move(gt));

    fs::create_directories(cfg.out);
    const fs::path dir(cfg.out);
    write_map_pgm(session.disparity_map(), session.levels(), dir / "disparity_initial.pgm");
    write_map_pgm(session.entropy_map(), dir / "entropy_initial.pgm");
    write_metrics_csv(session.metrics(), dir / "metrics.csv");
    out << "rows=" << session.rows() << " columns=" << session.columns()
        << " total_entropy_nats=" << session.total_entropy() << "\n";
    return 0;
}

int cmd_active(const RunConfig& cfg, std::ostream& out) {
    const Strategy strategy = parse_strategy(cfg);
    const GrayImage left = read_pgm(cfg.left);
    const GrayImage right = read_pgm(cfg.right);
    Session session(left, right, cfg.session_options(), load_gt(cfg));

    fs::create_directories(cfg.out);
    const fs::path dir(cfg.out);
    write_map_pgm(session.disparity_map(), session.levels(), dir / "disparity_initial.pgm");
    write_map_pgm(session.entropy_map(), dir / "entropy_initial.pgm");
    for (int k = 0; k < cfg.aims; ++k) {
        if (static_cast<int>(session.excluded().size()) >= session.columns()) break;
        const AimRecord rec = session.step(strategy);
        out << "aim " << rec.aim << " column " << *rec.column << " entropy "
            << rec.total_entropy << "\n";
        if (cfg.snapshots) {
            write_map_pgm(session.disparity_map(), session.levels(),
                          dir / ("disparity_aim_" + aim_tag(rec.aim) + ".pgm"));
            write_map_pgm(session.entropy_map(), dir / ("entropy_aim_" + aim_tag(rec.aim) + ".pgm"));
        }
    }
    write_metrics_csv(session.metrics(), dir / "metrics.csv");
    write_conflict_log(session.conflicts(), dir / "conflicts.csv");
    write_map_pgm(session.disparity_map(), session.levels(), dir / "disparity_final.pgm");
    write_map_pgm(session.entropy_map(), dir / "entropy_final.pgm");
    return 0;
}

struct BenchArgs {
    std::vector<int> columns{2000};
    std::vector<int> levels{128, 256, 512};
    int reps = 3;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_bench(const BenchArgs& args, std::ostream& out) {
    const auto rows = bench_grid(args.columns, args.levels, args.reps, args.seed);
    std::string csv = "n,d,millis\n";
    for (const auto& r : rows) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%d,%d,%.3f\n", r.columns, r.levels, r.millis);
        csv += buf;
    }
    out << csv;
    if (!args.out.empty()) write_file(args.out, csv);
    return 0;
}

struct OracleArgs {
    std::uint64_t seed = 1;
    int count = 100;
    bool inject_fault = false;
};

int cmd_oracle_check(const OracleArgs& args, std::ostream& out, std::ostream& err) {
    MarginalFault fault;
    if (args.inject_fault) {
        fault = [](PosteriorMarginals& m) {
            auto col = m.column(0);
            col[0] = col[0] * (1.0 + 1e-6) + 1e-6;
        };
    }
    const OracleCheckReport rep = oracle_check(args.seed, args.count, err, fault);
    out << "lattices=" << rep.lattices << " comparisons=" << rep.comparisons
        << " worst_relative_error=" << rep.worst_relative_error << " "
        << (rep.ok ? "PASS" : "FAIL") << "\n";
    return rep.ok ? 0 : 1;
}

struct CompareArgs {
    std::vector<std::string> datasets;  // NAME=DIR
    int random_runs = 10;
    std::uint64_t seed = 1;
};

int cmd_compare(const RunConfig& cfg, const CompareArgs& args, std::ostream& out) {
    std::string table(kCompareHeader);
    table += '\n';
    for (const std::string& spec : args.datasets) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw Error("--dataset expects NAME=DIR, got " + spec);
        const std::string name = spec.substr(0, eq);
        const fs::path dir = spec.substr(eq + 1);

        RunConfig local = cfg;
        if (fs::exists(dir / "params.json")) {
            const auto j = nlohmann::json::parse(read_file(dir / "params.json"));
            if (j.contains("max_disparity")) local.max_disparity = j["max_disparity"].get<int>();
            if (j.contains("gt_scale")) local.gt_scale = j["gt_scale"].get<double>();
            if (j.contains("gt_sentinel")) local.gt_sentinel = j["gt_sentinel"].get<int>();
        }
        local.gt = (dir / "gt.pgm").string();
        const GrayImage left = read_pgm(dir / "left.pgm");
        const GrayImage right = read_pgm(dir / "right.pgm");
        const Session initial(left, right, local.session_options(), load_gt(local));
        const StrategyComparison c =
            compare_strategies(initial, local.aims, args.random_runs, args.seed);
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.3f,%.3f\n", name.c_str(),
                      c.info_gain_entropy_reduction, c.random_entropy_reduction,
                      c.info_gain_pixel_reduction, c.random_pixel_reduction);
        table += buf;
    }
    out << table;
    if (!cfg.out.empty()) {
        fs::create_directories(cfg.out);
        write_file(fs::path(cfg.out) / "compare.csv", table);
    }
    return 0;
}

}  // namespace

std::vector<BenchRow> bench_grid(std::span<const int> columns, std::span<const int> levels,
                                 int reps, std::uint64_t seed) {
    struct Cell {
        int n = 0;
        int d = 0;
        Dsi dsi;
        double best = std::numeric_limits<double>::infinity();
    };
    std::vector<Cell> cells;
    std::mt19937_64 rng(seed);
    const CostModel model;
    for (int n : columns) {
        for (int d : levels) {
            ScanlinePair pair;
            pair.right.resize(static_cast<std::size_t>(n));
            pair.left.resize(static_cast<std::size_t>(n) + d - 1);
            for (double& v : pair.right) v = static_cast<double>(rng() % 256);
            for (double& v : pair.left) v = static_cast<double>(rng() % 256);
            cells.push_back({n, d, build_dsi(pair, d, model)});
        }
    }
    // Cells are timed round-robin so that a slow stretch of the machine hits
    // every cell alike; rep -1 is an untimed warm-up. The fastest repetition
    // is reported, since interference only ever adds time.
    volatile double sink = 0.0;
    for (int r = -1; r < std::max(1, reps); ++r) {
        for (Cell& cell : cells) {
            const auto t0 = std::chrono::steady_clock::now();
            const ForwardTables fwd = forward(cell.dsi, model);
            const BackwardTables bwd = backward(cell.dsi, model);
            const PosteriorMarginals marg = column_marginals(fwd, bwd);
            const std::vector<double> gains = row_gains(marg);
            sink = sink + gains.front() + total_path_entropy(fwd).entropy;
            const auto t1 = std::chrono::steady_clock::now();
            if (r >= 0)
                cell.best = std::min(
                    cell.best, std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
    }
    std::vector<BenchRow> rows;
    for (const Cell& cell : cells) rows.push_back({cell.n, cell.d, cell.best});
    return rows;
}

StrategyComparison compare_strategies(const Session& initial, int aims, int random_runs,
                                      std::uint64_t base_seed) {
    StrategyComparison c;
    const auto reduction = [](const RunMetrics& m) {
        return m.front().total_entropy - m.back().total_entropy;
    };
    const auto pixel_reduction = [](const RunMetrics& m) {
        return static_cast<double>(m.front().pixel_errors.value_or(0) -
                                   m.back().pixel_errors.value_or(0));
    };
    {
        Session s = initial;
        c.info_gain_metrics = s.run(aims, InfoGainAims{});
        c.info_gain_entropy_reduction = reduction(c.info_gain_metrics);
        c.info_gain_pixel_reduction = pixel_reduction(c.info_gain_metrics);
    }
    for (int k = 0; k < random_runs; ++k) {
        Session s = initial;
        c.random_metrics.push_back(s.run(aims, RandomAims{base_seed + static_cast<std::uint64_t>(k)}));
        c.random_entropy_reduction += reduction(c.random_metrics.back());
        c.random_pixel_reduction += pixel_reduction(c.random_metrics.back());
    }
    if (random_runs > 0) {
        c.random_entropy_reduction /= random_runs;
        c.random_pixel_reduction /= random_runs;
    }
    return c;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Active stereo matching with laser query selection", "stereo_active"};
    app.require_subcommand(1);

    RunConfig match_cfg;
    auto* match = app.add_subcommand("match", "Viterbi disparity and entropy maps, no laser");
    add_image_options(*match, match_cfg, false);
    add_model_options(*match, match_cfg);

    RunConfig active_cfg;
    std::string occlusion = "on";
    auto* active = app.add_subcommand("active", "Run the aim-query-update loop against ground truth");
    add_image_options(*active, active_cfg, true);
    add_model_options(*active, active_cfg);
    active->add_option("--aims", active_cfg.aims, "Number of laser aims K")
        ->check(CLI::NonNegativeNumber);
    active->add_option("--strategy", active_cfg.strategy, "info-gain | random | even")
        ->check(CLI::IsMember({"info-gain", "random", "even"}));
    active->add_option("--seed", active_cfg.seed, "Seed for the random strategy");
    active->add_option("--occlusion-update", occlusion, "Block M nodes on occluded answers")
        ->check(CLI::IsMember({"on", "off"}));
    active->add_flag("--snapshots", active_cfg.snapshots, "Write maps after every aim");

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "Time single-scanline inference and gains");
    bench->add_option("--n", bench_args.columns, "Column counts")->delimiter(',');
    bench->add_option("--d", bench_args.levels, "Disparity counts")->delimiter(',');
    bench->add_option("--reps", bench_args.reps, "Repetitions per cell (fastest reported)");
    bench->add_option("--seed", bench_args.seed, "Seed for the random rows");
    bench->add_option("--out", bench_args.out, "Also write the CSV here");

    OracleArgs oracle_args;
    auto* oracle = app.add_subcommand("oracle-check", "Compare every DP output against enumeration");
    oracle->add_option("--seed", oracle_args.seed, "Lattice generator seed");
    oracle->add_option("--count", oracle_args.count, "Number of random lattices")
        ->check(CLI::NonNegativeNumber);
    oracle->add_flag("--inject-fault", oracle_args.inject_fault,
                     "Perturb one marginal to prove the harness fails");

    RunConfig compare_cfg;
    CompareArgs compare_args;
    auto* compare = app.add_subcommand("compare", "InfoGain vs Random reduction table per dataset");
    compare->add_option("--dataset", compare_args.datasets,
                        "NAME=DIR holding left.pgm, right.pgm, gt.pgm [, params.json]")
        ->required();
    add_model_options(*compare, compare_cfg);
    compare->add_option("--gt-scale", compare_cfg.gt_scale, "Ground-truth divisor");
    compare->add_option("--gt-sentinel", compare_cfg.gt_sentinel, "Ground-truth occlusion sample");
    compare->add_option("--aims", compare_cfg.aims, "Laser aims per run");
    compare->add_option("--random-runs", compare_args.random_runs, "Random runs averaged");
    compare->add_option("--seed", compare_args.seed, "First random seed");
    compare->add_option("--out", compare_cfg.out, "Output directory");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*match) return cmd_match(match_cfg, out);
        if (*active) {
            active_cfg.occlusion_update = occlusion == "on";
            return cmd_active(active_cfg, out);
        }
        if (*bench) return cmd_bench(bench_args, out);
        if (*oracle) return cmd_oracle_check(oracle_args, out, err);
        if (*compare) return cmd_compare(compare_cfg, compare_args, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace activestereo
