#include "overdet/catalog.hpp"
#include "overdet/errors.hpp"

#include <doctest.h>

#include <json.hpp>

using namespace overdet;

TEST_SUITE("catalog")
{
    TEST_CASE("nine entries in presentation order")
    {
        const std::vector<std::string> want = {"linear_s1",      "counterexample_s2", "navier_stokes_I",
                                               "full_hydro_I",   "viscous_2d",        "navier_stokes_II",
                                               "full_hydro_II",  "compressible_2d",   "navier_stokes_III"};
        CHECK(catalog_names() == want);
        const auto j = nlohmann::json::parse(catalog_list_json());
        REQUIRE(j.size() == 9);
        CHECK(j[3]["name"] == "full_hydro_I");
        CHECK(j[3]["equations"] == 22);
        CHECK(j[3]["unknowns"] == 21);
        CHECK(catalog_table().find("navier_stokes_III") != std::string::npos);
    }

    TEST_CASE("counts match the expected pairs")
    {
        for (const auto& name : catalog_names()) {
            INFO(name);
            const auto& e = catalog_get(name);
            CHECK(count_balance(e.system) == e.expected);
            CHECK(embedded_catalog_sources().at(name) == e.source);
        }
    }

    TEST_CASE("unknown entries")
    {
        CHECK_THROWS_AS((void)catalog_get("nonsense"), UnknownEntryError);
        CHECK_THROWS_WITH((void)catalog_get("nonsense"), doctest::Contains("nonsense"));
    }

    TEST_CASE("show JSON carries counts and source")
    {
        const auto& e = catalog_get("full_hydro_I");
        const auto j = nlohmann::json::parse(catalog_show_json(e));
        CHECK(j["equations"] == 22);
        CHECK(j["unknowns"] == 21);
        CHECK(j["source"].get<std::string>() == e.source);
        CHECK_FALSE(j["alternates"].empty());
    }

    TEST_CASE("golden derivations")
    {
        for (const auto& name : catalog_names()) {
            const auto& e = catalog_get(name);
            if (e.golden.empty()) continue;
            const GoldenReport g = derive_golden(name);
            CHECK(g.items.size() >= e.golden.size());
            for (const auto& item : g.items) {
                INFO(name << " " << item.label << ": " << item.derived << " vs " << item.golden << " " << item.error);
                CHECK(item.equal);
            }
        }
        CHECK_THROWS_AS((void)derive_golden("nonsense"), UnknownEntryError);
    }

    TEST_CASE("viscous closure golden items")
    {
        const GoldenReport g = derive_golden("viscous_2d");
        for (const char* label : {"A", "B", "C", "D", "ux"}) CHECK(g.at(label).equal);
        const auto j = nlohmann::json::parse(g.to_json());
        CHECK(j["all_equal"] == true);
    }

    TEST_CASE("manufactured solutions satisfy their systems")
    {
        for (const auto& name : catalog_names()) {
            const auto& e = catalog_get(name);
            if (!e.manufactured) continue;
            INFO(name);
            const ResidualReport r = verify_entry(e, 32, ResidualMode::Analytic);
            CHECK(r.max_residual() < 1e-10);
            CHECK_FALSE(r.per_equation.empty());
        }
    }

    TEST_CASE("manufactured grids")
    {
        const auto& e = catalog_get("navier_stokes_III");
        const Grid a = manufactured_grid(e, 16, ResidualMode::Analytic);
        const Grid f = manufactured_grid(e, 16, ResidualMode::FiniteDifference);
        CHECK(a.size() == 16 * 16);
        CHECK(f.size() == 16 * 16 * 25);
    }

    TEST_CASE("finite differences rejected where unsupported")
    {
        CHECK_THROWS_AS((void)verify_entry(catalog_get("viscous_2d"), 16, ResidualMode::FiniteDifference),
                        VerificationError);
    }

    TEST_CASE("feasibility names")
    {
        CHECK(feasibility_name(Feasibility::Full) == "full");
        CHECK(feasibility_name(Feasibility::SymbolicDerivationOnly) == "symbolic-derivation-only");
        CHECK(feasibility_name(Feasibility::CountsAndResidualOnly) == "counts-and-residual-only");
        CHECK(catalog_get("linear_s1").feasibility == Feasibility::Full);
    }
}
