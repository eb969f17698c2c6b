#include "wedesign/reproduce.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace wedesign;

TEST_CASE("reference file")
{
    const auto ref = load_reference_values(default_reference_file());
    REQUIRE(ref.contains("entries"));
    std::set<std::string> tables;
    for (const auto& e : ref["entries"]) {
        tables.insert(e["table"].get<std::string>());
        if (e["table"] == "table5") {
            CHECK(e.contains("termination"));
            CHECK(e.contains("pcs"));
        } else {
            CHECK(e.contains("metric"));
            CHECK(e.contains("value"));
        }
    }
    // the figure has no tabulated values
    for (const auto& id : table_ids()) CHECK(tables.count(id) == (id == "figure1" ? 0u : 1u));
    CHECK(is_table_id("table3"));
    CHECK_FALSE(is_table_id("table9"));
    CHECK_THROWS_AS(reproduce("table9", {}), std::invalid_argument);
}

TEST_CASE("comparison rows")
{
    ComparisonRow row{.table = "t", .design = "WE", .metric = "ens", .reference = 10.0, .simulated = 11.5,
                      .tolerance = 2.0};
    CHECK(*row.difference() == doctest::Approx(1.5));
    CHECK(*row.within_tolerance());
    row.simulated = 12.5;
    CHECK_FALSE(*row.within_tolerance());
    row.simulated.reset();
    CHECK_FALSE(row.within_tolerance().has_value());

    std::ostringstream csv;
    write_comparison_csv(csv, {row});
    CHECK(csv.str().rfind("table,design,kappa,scenario,setting,metric,reference,simulated,simulated_se,"
                          "abs_diff,tolerance,within_tolerance,external\r\n",
                          0) == 0);
    CHECK(comparison_json({row})[0]["simulated"].is_null());
}

TEST_CASE("small table 2 run lines up with the reference entries")
{
    ReproduceOptions options;
    options.replications = 200;
    options.cutoff_replications = 200;
    options.reference_file = default_reference_file();
    const auto rows = reproduce("table2", options);
    const auto ref = load_reference_values(options.reference_file);
    std::size_t simulated = 0, expected = 0;
    for (const auto& e : ref["entries"]) {
        if (e["table"] == "table2" && !e.value("external", false)) ++expected;
    }
    for (const auto& r : rows) {
        CHECK(r.table == "table2");
        CHECK(r.reference.has_value());
        if (!r.external) {
            ++simulated;
            CHECK(r.simulated.has_value());
            CHECK(r.tolerance.has_value());
        }
    }
    CHECK(simulated == expected);

    // a fixed seed reproduces the run exactly
    options.seed = 5;
    const auto a = reproduce("table2", options);
    const auto b = reproduce("table2", options);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].simulated == b[i].simulated);
}
