#include <doctest.h>

#include <functional>

#include "noisymatch/config.hpp"
#include "noisymatch/errors.hpp"

using namespace noisymatch;
using nlohmann::json;

namespace {

std::string error_field(const std::function<void()>& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<no error>";
}

} // namespace

TEST_CASE("presets parse into the documented economies") {
    const auto fig1 = parse_run_spec(preset("fig1"));
    CHECK(fig1.economy.n_students == 2000);
    CHECK(fig1.economy.num_colleges() == 100);
    CHECK(total_capacity(fig1.economy) == 1000);
    CHECK(fig1.economy.master_seed == 7);
    CHECK(fig1.plan.replications == 100);
    CHECK(fig1.plan.value_bins.size() == 51);

    const auto fig2 = parse_run_spec(preset("fig2"));
    CHECK(fig2.economy.num_colleges() == 40);
    CHECK(fig2.economy.num_coalitions() == 2);
    CHECK(total_capacity(fig2.economy) == 1500);
    const auto caps = capacities(fig2.economy);
    CHECK(caps.head(20).sum() == 500);
    CHECK(caps.tail(20).sum() == 1000);
    CHECK(std::holds_alternative<TieredByCoalitionPreferences>(fig2.economy.preferences));

    CHECK_THROWS_AS(preset("fig3"), ConfigError);
}

TEST_CASE("canonical form round-trips and ignores key order") {
    const auto spec = parse_run_spec(preset("fig2"));
    const json canon = canonical_json(spec);
    const auto again = parse_run_spec(canon);
    CHECK(canonical_json(again) == canon);
    CHECK(config_hash(again) == config_hash(spec));

    // Same document written with a different key order and whitespace.
    const std::string a = R"({"n_students": 50, "master_seed": 3,
        "coalitions": [{"noise": {"kind": "gaussian", "sd": 0.5}}],
        "colleges": [{"capacity": 5}, {"capacity": 6}]})";
    const std::string b = R"({"colleges":[{"capacity":5},{"capacity":6}],
        "coalitions":[{"noise":{"sd":0.5,"kind":"gaussian"}}],"master_seed":3,"n_students":50})";
    CHECK(config_hash(parse_run_spec(parse_config_text(a))) == config_hash(parse_run_spec(parse_config_text(b))));

    // Defaults spelled out hash the same as defaults left implicit.
    const std::string c = R"({"colleges":[{"capacity":5,"coalition":0},{"capacity":6,"coalition":0}],
        "coalitions":[{"values":{"kind":"uniform","lo":0,"hi":1},"noise":{"sd":0.5,"mean":0,"kind":"gaussian"}}],
        "master_seed":3,"n_students":50,"alpha":2,"preferences":{"kind":"uniform_random"}})";
    CHECK(config_hash(parse_run_spec(parse_config_text(c))) == config_hash(parse_run_spec(parse_config_text(a))));
}

TEST_CASE("config_hash: sensitive to content, not to thread count") {
    auto spec = parse_run_spec(preset("fig1"));
    const auto h = config_hash(spec);
    CHECK(h.size() == 64);
    spec.plan.threads = 8;
    CHECK(config_hash(spec) == h);
    spec.economy.master_seed = 8;
    CHECK(config_hash(spec) != h);
}

TEST_CASE("overrides: later flags win, paths reach nested keys") {
    json doc = preset("fig1");
    apply_override(doc, "n_students=3000");
    apply_override(doc, "n_students=2500");
    apply_override(doc, "coalitions.0.noise={\"kind\":\"pareto\",\"shape\":3,\"scale\":1}");
    apply_override(doc, "experiment.bins.count=10");
    const auto spec = parse_run_spec(doc);
    CHECK(spec.economy.n_students == 2500);
    const auto& p = std::get<ParetoNoise>(spec.economy.coalitions[0].noise);
    CHECK(p.shape == 3.0);
    CHECK(spec.plan.value_bins.size() == 11);

    CHECK_THROWS_AS(apply_override(doc, "coalitions.4.noise=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
    CHECK_THROWS_AS(apply_override(doc, "n_students.x=1"), ConfigError);

    set_college_count(doc, 5);
    set_noise(doc, named_noise("exponential"));
    const auto s2 = parse_run_spec(doc);
    CHECK(s2.economy.num_colleges() == 5);
    CHECK(std::holds_alternative<ExponentialNoise>(s2.economy.coalitions[0].noise));
}

TEST_CASE("errors name the offending field") {
    json doc = preset("fig1");
    doc["bogus"] = 1;
    CHECK(error_field([&] { parse_run_spec(doc); }) == "config.bogus");

    doc = preset("fig1");
    doc["coalitions"][0]["noise"] = {{"kind", "gaussian"}, {"sd", -1.0}};
    CHECK(error_field([&] { parse_run_spec(doc); }) == "config.coalitions[0].noise.sd");

    doc = preset("fig1");
    doc["coalitions"][0]["noise"] = {{"kind", "pareto"}, {"shape", 2.0}};
    CHECK(error_field([&] { parse_run_spec(doc); }) == "config.coalitions[0].noise.scale");

    doc = preset("fig1");
    doc["experiment"]["curves"][0]["kind"] = "mystery";
    CHECK(error_field([&] { parse_run_spec(doc); }).find("kind") != std::string::npos);

    doc = preset("fig1");
    doc["n_students"] = "many";
    CHECK(error_field([&] { parse_run_spec(doc); }) == "config.n_students");

    CHECK_THROWS_AS(named_noise("cauchy"), ConfigError);
}

TEST_CASE("parse_config_text reports line and column") {
    const std::string text = "{\n  \"n_students\": 10,\n  \"alpha\": ,\n}";
    const auto field = error_field([&] { parse_config_text(text, "bad.json"); });
    CHECK(field.rfind("bad.json:3:", 0) == 0);
    // Comments are allowed.
    CHECK(parse_config_text("// note\n{\"a\": 1}")["a"] == 1);
}

TEST_CASE("noise JSON round-trip") {
    for (const auto& n : {NoiseSpec{UniformNoise{-1, 2}}, NoiseSpec{GaussianNoise{0.5, 2}},
                          NoiseSpec{ExponentialNoise{3}}, NoiseSpec{GumbelNoise{1, 0.5}},
                          NoiseSpec{ParetoNoise{2, 0.3}}, NoiseSpec{NoNoise{}}}) {
        const json j = noise_to_json(n);
        CHECK(noise_to_json(noise_from_json(j)) == j);
    }
}
