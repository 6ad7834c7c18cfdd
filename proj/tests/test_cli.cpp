#include "commands.hpp"
#include "doctest.h"

using nlohmann::json;
using pgmt::cli::ConfigError;

TEST_CASE("config normalization")
{
    const json c = pgmt::cli::normalize_config({{"command", "verify-uniform"}});
    CHECK(c.at("seed") == 1);
    CHECK(c.at("model").at("kind") == "flat");
    CHECK(c.at("rel_tol") == 0.0);
    const json kp = pgmt::cli::normalize_config({{"command", "verify-uniform"}, {"model", {{"kind", "kp"}, {"n", 4}}}});
    CHECK(kp.at("rel_tol") == 0.02);
    CHECK(pgmt::cli::command_names().size() == 8);

    CHECK_THROWS_AS(pgmt::cli::normalize_config(json::array()), ConfigError);
    CHECK_THROWS_AS(pgmt::cli::normalize_config({{"command", "nope"}}), ConfigError);
    CHECK_THROWS_AS(pgmt::cli::normalize_config({{"command", "beta"}, {"typo", 1}}), ConfigError);
    CHECK_THROWS_AS(pgmt::cli::normalize_config({{"command", "beta"}, {"samples", "many"}}), ConfigError);
    CHECK_THROWS_AS(pgmt::cli::normalize_config({{"command", "beta"}, {"model", {{"kind", "kp"}, {"n", 3}}}}), ConfigError);
    try {
        pgmt::cli::normalize_config({{"command", "moments"}, {"model", {{"kind", "flat"}}}});
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("model.n") != std::string::npos);
    }
    CHECK_THROWS_AS(pgmt::cli::run({{"command", "beta"}, {"r", -1.0}}), ConfigError);
    CHECK_THROWS_AS(pgmt::cli::run({{"command", "quadric-expansion"}, {"D", {{0.0, 0.0}, {0.0, 0.0}}}}), ConfigError);
}

TEST_CASE("quadric-expansion report")
{
    const json r = pgmt::cli::run({{"command", "quadric-expansion"}});
    for (const char* k : {"n", "D", "x", "radii", "areas", "c_hat", "zeta_hat", "e_hat", "c_formula", "e_formula"})
        CHECK(r.at("results").contains(k));
    CHECK(r.at("results").at("n") == 2);
    CHECK(r.at("checks").size() == 3);
    CHECK(r.at("pass") == true);
    CHECK(r.at("config_hash").get<std::string>().size() == 16);
}

TEST_CASE("replays are deterministic and independent of jobs")
{
    const json cfg = {{"command", "moments"}, {"samples", 20000}, {"seed", 5}};
    const json a = pgmt::cli::run(cfg);
    CHECK(pgmt::cli::run(cfg).dump() == a.dump());
    json cfg3 = cfg;
    cfg3["jobs"] = 3;
    const json b = pgmt::cli::run(cfg3);
    CHECK(b.at("results").dump() == a.at("results").dump());
    CHECK(b.at("config_hash") == a.at("config_hash"));
    json other = cfg;
    other["seed"] = 6;
    CHECK(pgmt::cli::run(other).at("config_hash") != a.at("config_hash"));

    const json w1 = pgmt::cli::run({{"command", "bwgl"}, {"samples", 20000}, {"depth", 2}, {"jobs", 1}});
    const json w2 = pgmt::cli::run({{"command", "bwgl"}, {"samples", 20000}, {"depth", 2}, {"jobs", 4}});
    CHECK(w1.at("results").dump() == w2.at("results").dump());
}

TEST_CASE("failing checks and partial reports")
{
    const json r = pgmt::cli::run({{"command", "verify-uniform"},
                                   {"model", {{"kind", "quadric"}, {"D", {{1.0, 0.0}, {0.0, 1.0}}}}},
                                   {"samples", 20000},
                                   {"centers", 3}});
    CHECK(r.at("pass") == false);
    const json p = pgmt::cli::run({{"command", "counterexample"}, {"levels", 4}, {"time_budget", 1e-9}});
    CHECK(p.at("partial") == true);
    CHECK(p.at("pass") == false);
    CHECK(p.at("results").at("trace").empty());
}
