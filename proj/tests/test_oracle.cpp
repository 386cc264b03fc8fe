#include <cmath>
#include <sstream>

#include "activestereo/oracle.hpp"
#include "activestereo/querying.hpp"
#include "doctest.h"
#include "scenes.hpp"

using namespace activestereo;

TEST_CASE("enumerate: worked instance has two paths") {
    const PathSet ps = enumerate(scenes::two_path_dsi(), scenes::two_path_model());
    REQUIRE(ps.paths.size() == 2);
    std::vector<double> w{ps.paths[0].weight, ps.paths[1].weight};
    std::sort(w.begin(), w.end());
    CHECK(w[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(w[1] == 1.0);
    const OracleStats s = oracle_stats(ps);
    CHECK(s.z == doctest::Approx(1.0 + std::exp(-1.0)).epsilon(1e-15));
    CHECK(s.entropy == doctest::Approx(0.582203).epsilon(1e-6));
    CHECK(oracle_ig(ps, 0) == doctest::Approx(0.582203).epsilon(1e-6));
    CHECK(std::abs(oracle_ig(ps, 1)) <= 1e-15);
    CHECK(s.min_cost == 0.0);
}

TEST_CASE("enumerate: single corridor") {
    CostModel model = scenes::two_path_model();
    Dsi dsi(3, 1, {1, 2, 3});
    dsi.apply_cost_override({0, 0, NodeKind::RightOcc}, model.block_cost);
    const PathSet ps = enumerate(dsi, model);
    const auto open = std::count_if(ps.paths.begin(), ps.paths.end(),
                                    [](const EnumeratedPath& p) { return !p.blocked; });
    CHECK(open == 1);
    const OracleStats s = oracle_stats(ps);
    CHECK(s.entropy <= 1e-12);
    CHECK(s.min_cost == 6.0);
    for (int i = 0; i < 3; ++i)
        CHECK(s.node_probability[dsi.index({i, 0, NodeKind::Match})] == doctest::Approx(1.0));
}

TEST_CASE("enumerate: one column, two levels, within-column chain") {
    CostModel model;
    model.beta = 1.0;
    model.left_penalty = std::log(2.0);
    model.right_penalty = std::log(2.0);
    model.soft_cost = default_soft_cost(model.left_penalty, model.right_penalty);
    const Dsi dsi(1, 2, {0.0, 0.0});
    const PathSet ps = enumerate(dsi, model);
    CHECK(ps.paths.size() == 5);
    CHECK(count_paths(1, 2) == 5);
    CHECK(oracle_stats(ps).z == doctest::Approx(3.5).epsilon(1e-15));
}

TEST_CASE("oracle_stats: uniform weights give log of the path count") {
    CostModel model;
    model.beta = 1.0;
    model.left_penalty = 0.0;
    model.right_penalty = 0.0;
    for (int n = 1; n <= 4; ++n)
        for (int d = 1; d <= 3; ++d) {
            const Dsi dsi(n, d, std::vector<double>(static_cast<std::size_t>(n) * d, 0.0));
            const PathSet ps = enumerate(dsi, model);
            CHECK(static_cast<double>(ps.paths.size()) == count_paths(n, d));
            CHECK(oracle_stats(ps).entropy ==
                  doctest::Approx(std::log(static_cast<double>(ps.paths.size()))).epsilon(1e-12));
        }
}

TEST_CASE("oracle_ig: deterministic column gains nothing") {
    CostModel model = scenes::two_path_model();
    std::mt19937_64 rng(1);
    Dsi dsi = scenes::random_dsi(rng, 4, 2);
    for (int j = 0; j < 2; ++j) {
        dsi.apply_cost_override({1, j, NodeKind::RightOcc}, model.block_cost);
        if (j == 1) dsi.apply_cost_override({1, j, NodeKind::Match}, model.block_cost);
    }
    CHECK(std::abs(oracle_ig(enumerate(dsi, model), 1)) <= 1e-12);
}

TEST_CASE("path-count guard") {
    CHECK(count_paths(7, 3) < kMaxEnumeratedPaths);
    CHECK(count_paths(20, 10) > kMaxEnumeratedPaths);
    const Dsi big(20, 10, std::vector<double>(200, 0.0));
    CHECK_THROWS_AS(enumerate(big, CostModel{}), GuardError);
}

TEST_CASE("oracle_check") {
    std::ostringstream log;
    const OracleCheckReport none = oracle_check(5, 0, log);
    CHECK(none.ok);
    CHECK(none.lattices == 0);
    const OracleCheckReport report = oracle_check(5, 200, log);
    CHECK(report.ok);
    CHECK(report.lattices == 200);
    CHECK(report.worst_relative_error <= kOracleTolerance);
    CHECK(log.str().empty());

    const OracleCheckReport broken =
        oracle_check(5, 10, log, [](PosteriorMarginals& m) { m.column(0)[0] += 1e-6; });
    CHECK_FALSE(broken.ok);
    CHECK(broken.first_failure.find("marginal") != std::string::npos);
    CHECK(log.str().find("lattice n=") != std::string::npos);
    CHECK(log.str().find("score[0]") != std::string::npos);
}

TEST_CASE("random lattices stay inside the documented ranges") {
    std::mt19937_64 rng(10);
    for (int t = 0; t < 500; ++t) {
        const RandomLattice lat = random_lattice(rng);
        CHECK(lat.dsi.columns() >= 1);
        CHECK(lat.dsi.columns() <= 7);
        CHECK(lat.dsi.levels() >= 1);
        CHECK(lat.dsi.levels() <= 3);
        for (double s : lat.dsi.scores()) {
            CHECK(s >= 0.0);
            CHECK(s < 3.0);
        }
        CHECK(lat.model.left_penalty >= 0.5);
        CHECK(lat.model.left_penalty < 3.0);
        CHECK(lat.model.beta == 1.0);
    }
}
