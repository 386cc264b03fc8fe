#include <filesystem>
#include <sstream>

#include "activestereo/cli.hpp"
#include "activestereo/image_io.hpp"
#include "doctest.h"
#include "scenes.hpp"

using namespace activestereo;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

// Writes a small ramp scene as left.pgm / right.pgm / gt.pgm (gt scaled by 4,
// sentinel 255) and returns the directory.
fs::path write_scene(const std::string& name, int rows = 6, int columns = 30, int levels = 8) {
    const fs::path dir = fs::temp_directory_path() / "activestereo_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto scene = scenes::ramp_scene(rows, columns, levels, 3, 10);
    write_pgm(scene.left, dir / "left.pgm");
    write_pgm(scene.right, dir / "right.pgm");
    GrayImage gt(columns, rows);
    for (int r = 0; r < rows; ++r)
        for (int i = 0; i < columns; ++i) gt.at(r, i) = static_cast<std::uint16_t>(4 * scene.gt.at(r, i));
    write_pgm(gt, dir / "gt.pgm");
    return dir;
}

std::vector<std::string> active_args(const fs::path& dir, const fs::path& out) {
    return {"active", "--left", (dir / "left.pgm").string(), "--right",
            (dir / "right.pgm").string(), "--gt", (dir / "gt.pgm").string(), "--gt-scale", "4",
            "--gt-sentinel", "255", "--max-disparity", "8", "--dl", "6", "--dr", "6", "--beta",
            "0.5", "--out", out.string()};
}

std::size_t line_count(const std::string& s) {
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("match: writes maps and the baseline metrics") {
    const fs::path dir = write_scene("match");
    const fs::path out = dir / "out";
    const Run r = cli({"match", "--left", (dir / "left.pgm").string(), "--right",
                       (dir / "right.pgm").string(), "--max-disparity", "8", "--out", out.string()});
    CHECK(r.code == 0);
    CHECK(fs::exists(out / "disparity_initial.pgm"));
    CHECK(fs::exists(out / "entropy_initial.pgm"));
    const std::string csv = read_file(out / "metrics.csv");
    CHECK(line_count(csv) == 2);
    CHECK(read_pgm(out / "disparity_initial.pgm").width == 30);
}

TEST_CASE("match: missing input fails without writing anything") {
    const fs::path dir = write_scene("missing");
    const fs::path out = dir / "out";
    const Run r = cli({"match", "--left", (dir / "nope.pgm").string(), "--right",
                       (dir / "right.pgm").string(), "--max-disparity", "8", "--out", out.string()});
    CHECK(r.code != 0);
    CHECK(r.err.find("nope.pgm") != std::string::npos);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("match: too many disparity levels names both numbers") {
    const fs::path dir = write_scene("toowide");
    const Run r = cli({"match", "--left", (dir / "left.pgm").string(), "--right",
                       (dir / "right.pgm").string(), "--max-disparity", "60", "--out",
                       (dir / "out").string()});
    CHECK(r.code != 0);
    CHECK(r.err.find("60") != std::string::npos);
    CHECK(r.err.find("37") != std::string::npos);  // left width 30 + 8 - 1
}

TEST_CASE("active: nine aims, reproducible output, snapshots") {
    const fs::path dir = write_scene("active");
    auto args = active_args(dir, dir / "a");
    args.insert(args.end(), {"--aims", "9", "--snapshots"});
    REQUIRE(cli(args).code == 0);
    const std::string csv = read_file(dir / "a" / "metrics.csv");
    CHECK(line_count(csv) == 11);
    CHECK(fs::exists(dir / "a" / "disparity_final.pgm"));
    CHECK(fs::exists(dir / "a" / "entropy_final.pgm"));
    CHECK(fs::exists(dir / "a" / "disparity_aim_09.pgm"));
    CHECK(fs::exists(dir / "a" / "entropy_aim_01.pgm"));
    CHECK(read_file(dir / "a" / "conflicts.csv").rfind(std::string(kConflictHeader), 0) == 0);

    auto again = active_args(dir, dir / "b");
    again.insert(again.end(), {"--aims", "9", "--threads", "3"});
    REQUIRE(cli(again).code == 0);
    CHECK(read_file(dir / "b" / "metrics.csv") == csv);
}

TEST_CASE("active: strategies and their errors") {
    const fs::path dir = write_scene("strategies");
    auto random = active_args(dir, dir / "r");
    random.insert(random.end(), {"--strategy", "random", "--aims", "3"});
    const Run no_seed = cli(random);
    CHECK(no_seed.code != 0);
    CHECK(no_seed.err.find("--seed") != std::string::npos);
    random.insert(random.end(), {"--seed", "5"});
    CHECK(cli(random).code == 0);

    auto even = active_args(dir, dir / "e");
    even.insert(even.end(), {"--strategy", "even", "--aims", "4", "--occlusion-update", "off"});
    CHECK(cli(even).code == 0);
    CHECK(line_count(read_file(dir / "e" / "metrics.csv")) == 6);

    auto bad = active_args(dir, dir / "x");
    bad.insert(bad.end(), {"--strategy", "greedy"});
    CHECK(cli(bad).code == 2);

    auto no_gt = std::vector<std::string>{"active", "--left", (dir / "left.pgm").string(),
                                          "--right", (dir / "right.pgm").string(), "--out",
                                          (dir / "y").string()};
    CHECK(cli(no_gt).code != 0);
}

TEST_CASE("bench: one row per grid cell") {
    const Run r = cli({"bench", "--n", "200", "--d", "8,16,32", "--reps", "1"});
    CHECK(r.code == 0);
    CHECK(line_count(r.out) == 4);
    CHECK(r.out.rfind("n,d,millis\n200,8,", 0) == 0);
}

TEST_CASE("oracle-check exit codes") {
    CHECK(cli({"oracle-check", "--count", "0"}).code == 0);
    CHECK(cli({"oracle-check", "--count", "50", "--seed", "9"}).code == 0);
    const Run broken = cli({"oracle-check", "--count", "5", "--inject-fault"});
    CHECK(broken.code != 0);
    CHECK(broken.err.find("lattice n=") != std::string::npos);
}

TEST_CASE("compare: emits the reduction table") {
    const fs::path dir = write_scene("compare", 5, 24, 8);
    write_file(dir / "params.json", R"({"max_disparity": 8, "gt_scale": 4, "gt_sentinel": 255})");
    const Run r = cli({"compare", "--dataset", "synthetic=" + dir.string(), "--aims", "3",
                       "--random-runs", "2", "--dl", "6", "--dr", "6", "--beta", "0.5", "--out",
                       (dir / "cmp").string()});
    CHECK(r.code == 0);
    CHECK(r.out.rfind(std::string(kCompareHeader) + "\nsynthetic,", 0) == 0);
    CHECK(read_file(dir / "cmp" / "compare.csv") == r.out);
    CHECK(cli({"compare", "--dataset", "broken"}).code != 0);
}

TEST_CASE("usage errors") {
    CHECK(cli({}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({"match", "--left", "a.pgm"}).code == 2);
    CHECK(cli({"--help"}).code == 0);
}
