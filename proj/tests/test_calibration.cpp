#include "wedesign/calibration.hpp"
#include "wedesign/presets.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace wedesign;
using doctest::Approx;

TEST_CASE("geometric_mean")
{
    CHECK(geometric_mean(std::vector<double>{2.0, 8.0}) == Approx(4.0));
    CHECK(geometric_mean(std::vector<double>{0.5, 0.5, 0.5}) == Approx(0.5));
    CHECK(geometric_mean(std::vector<double>{0.3, 0.0}) == 0.0);
    CHECK_THROWS_AS(geometric_mean(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(geometric_mean(std::vector<double>{-1.0}), std::invalid_argument);
}

TEST_CASE("prior grid search structure")
{
    auto config = presets::phase1_config();
    config.seed = 3;
    const auto scenarios = presets::prior_calibration_scenarios();
    const std::vector<Scenario> subset{scenarios[0], scenarios[3]};
    const PriorGrid grid{.beta_values = {0.5, 2.0}, .step_values = {0.1, 0.3, 0.8}};
    const auto result = prior_grid_search(grid, subset, config, 150);

    CHECK(result.rows == 2);
    CHECK(result.cols == 3);
    REQUIRE(result.cells.size() == 6);
    CHECK(result.cells[4].beta == 2.0);
    CHECK(result.cells[4].step == 0.3);
    // 0.25 + 0.8 leaves the unit interval
    CHECK_FALSE(result.cells[2].valid);
    CHECK_FALSE(result.cells[5].valid);

    for (const auto& c : result.cells) {
        if (!c.valid) continue;
        REQUIRE(c.pcs.size() == 2);
        std::vector<double> means{c.pcs[0].mean, c.pcs[1].mean};
        CHECK(c.geometric_mean == Approx(geometric_mean(means)));
        double rel = 0.0;
        for (const auto& e : c.pcs) rel += (e.se / e.mean) * (e.se / e.mean);
        CHECK(c.geometric_mean_se == Approx(c.geometric_mean * std::sqrt(rel) / 2.0));
    }

    REQUIRE(result.argmax.has_value());
    for (const auto& c : result.cells) {
        if (c.valid) CHECK(c.geometric_mean <= result.cells[*result.argmax].geometric_mean);
    }
    REQUIRE(result.selected.has_value());
    CHECK(std::find(result.plateau.begin(), result.plateau.end(), *result.selected) != result.plateau.end());
    CHECK(std::find(result.plateau.begin(), result.plateau.end(), *result.argmax) != result.plateau.end());
    for (std::size_t i : result.plateau) CHECK(result.cells[*result.selected].beta <= result.cells[i].beta);

    std::ostringstream csv;
    write_prior_heatmap_csv(csv, result);
    CHECK(csv.str().rfind("beta,step_0.1,step_0.3,step_0.8\n0.5,", 0) == 0);

    CHECK_THROWS_AS(prior_grid_search(PriorGrid{}, subset, config, 10), std::invalid_argument);
}

TEST_CASE("safety grid search")
{
    auto config = presets::phase1_config();
    config.seed = 9;
    const auto s = presets::phase1_scenarios();
    const std::vector<double> gammas{0.55, 0.30};
    const std::vector<double> rs{0.010, 0.045};
    const auto grid = safety_grid_search(gammas, rs, s[0], s[5], config, 400);
    REQUIRE(grid.cells.size() == 4);
    CHECK(grid.cells[1].gamma_star == 0.55);
    CHECK(grid.cells[1].r == 0.045);
    // the strictest constraint stops the unsafe trial far more often
    CHECK(grid.cells[3].termination.mean > grid.cells[0].termination.mean + 0.2);
    for (const auto& c : grid.cells) {
        CHECK(c.termination.mean >= 0.0);
        CHECK(c.pcs.mean <= 1.0);
    }

    std::ostringstream csv;
    write_safety_heatmap_csv(csv, grid);
    CHECK(csv.str().rfind("gamma_star,termination_r_0.01,pcs_r_0.01,termination_r_0.045,pcs_r_0.045\n", 0) == 0);

    auto no_safety = config;
    no_safety.safety.reset();
    CHECK_THROWS_AS(safety_grid_search(gammas, rs, s[0], s[5], no_safety, 10), std::invalid_argument);
}
