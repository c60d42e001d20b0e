#include "noisymatch/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "noisymatch/errors.hpp"

namespace noisymatch {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void reject_unknown_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where, "expected an object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items()) {
        if (!keys.contains(key)) throw ConfigError(where + "." + key, "unknown key");
    }
}

const json& require(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(where + "." + key, "missing required key");
    return *it;
}

double get_number(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_number()) throw ConfigError(where + "." + key, "expected a number");
    return v.get<double>();
}

double get_number_or(const json& obj, const char* key, const std::string& where, double fallback) {
    return obj.contains(key) ? get_number(obj, key, where) : fallback;
}

std::int64_t get_int(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key, "expected an integer");
    return v.get<std::int64_t>();
}

std::int64_t get_int_or(const json& obj, const char* key, const std::string& where, std::int64_t fallback) {
    return obj.contains(key) ? get_int(obj, key, where) : fallback;
}

std::string get_kind(const json& obj, const std::string& where) {
    const json& v = require(obj, "kind", where);
    if (!v.is_string()) throw ConfigError(where + ".kind", "expected a string");
    return v.get<std::string>();
}

json values_to_json(const ValueDistribution& dist) {
    return std::visit(overloaded{
                          [](const UniformValues& u) { return json{{"kind", "uniform"}, {"lo", u.lo}, {"hi", u.hi}}; },
                          [](const PiecewiseLinearValues& p) {
                              json knots = json::array();
                              for (const auto& [v, q] : p.knots) knots.push_back({v, q});
                              return json{{"kind", "piecewise_linear"}, {"knots", knots}};
                          },
                      },
                      dist);
}

ValueDistribution values_from_json(const json& j, const std::string& where) {
    const std::string kind = get_kind(j, where);
    if (kind == "uniform") {
        reject_unknown_keys(j, where, {"kind", "lo", "hi"});
        return UniformValues{get_number_or(j, "lo", where, 0.0), get_number_or(j, "hi", where, 1.0)};
    }
    if (kind == "piecewise_linear") {
        reject_unknown_keys(j, where, {"kind", "knots"});
        const json& knots = require(j, "knots", where);
        if (!knots.is_array()) throw ConfigError(where + ".knots", "expected an array of [value, cdf] pairs");
        PiecewiseLinearValues p;
        for (const auto& k : knots) {
            if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number()) {
                throw ConfigError(where + ".knots", "each knot must be [value, cdf]");
            }
            p.knots.emplace_back(k[0].get<double>(), k[1].get<double>());
        }
        return p;
    }
    throw ConfigError(where + ".kind", "unknown value distribution '" + kind + "'");
}

json preferences_to_json(const PreferenceModel& model) {
    json j{{"kind", kind_name(model)}};
    std::visit(overloaded{
                   [](const UniformRandomPreferences&) {},
                   [](const TieredByCoalitionPreferences&) {},
                   [&](const CommonRankingPreferences& p) { j["order"] = p.order; },
                   [&](const ExplicitPreferences& p) {
                       j["rankings"] = p.rankings;
                       j["probabilities"] = p.probabilities;
                   },
               },
               model);
    return j;
}

PreferenceModel preferences_from_json(const json& j, const std::string& where) {
    const std::string kind = get_kind(j, where);
    try {
        if (kind == "uniform_random") {
            reject_unknown_keys(j, where, {"kind"});
            return UniformRandomPreferences{};
        }
        if (kind == "tiered_by_coalition") {
            reject_unknown_keys(j, where, {"kind"});
            return TieredByCoalitionPreferences{};
        }
        if (kind == "common_ranking") {
            reject_unknown_keys(j, where, {"kind", "order"});
            return CommonRankingPreferences{j.value("order", std::vector<int>{})};
        }
        if (kind == "explicit") {
            reject_unknown_keys(j, where, {"kind", "rankings", "probabilities"});
            return ExplicitPreferences{require(j, "rankings", where).get<std::vector<std::vector<int>>>(),
                                       require(j, "probabilities", where).get<std::vector<double>>()};
        }
    } catch (const json::type_error& e) {
        throw ConfigError(where, e.what());
    }
    throw ConfigError(where + ".kind", "unknown preference model '" + kind + "'");
}

json plan_to_json(const ExperimentPlan& plan) {
    json curves = json::array();
    for (const auto& r : plan.curves) {
        curves.push_back(std::visit(overloaded{
                                        [](const MatchCurveRequest& m) {
                                            return json{{"kind", "match"}, {"coalition", m.coalition}};
                                        },
                                        [](const AffordCurveRequest& a) {
                                            return json{{"kind", "afford"},
                                                        {"coalition", a.coalition},
                                                        {"trim_epsilon", a.trim_epsilon}};
                                        },
                                    },
                                    r));
    }
    return json{{"replications", plan.replications},
                {"bins", json{{"edges", plan.value_bins}}},
                {"curves", curves},
                {"record_cutoffs", plan.record_cutoffs}};
}

ExperimentPlan plan_from_json(const json& j, const std::string& where) {
    reject_unknown_keys(j, where, {"replications", "bins", "curves", "record_cutoffs", "threads"});
    ExperimentPlan plan;
    plan.replications = get_int_or(j, "replications", where, plan.replications);
    plan.threads = static_cast<unsigned>(std::max<std::int64_t>(0, get_int_or(j, "threads", where, 0)));
    if (j.contains("record_cutoffs")) {
        if (!j["record_cutoffs"].is_boolean()) throw ConfigError(where + ".record_cutoffs", "expected a boolean");
        plan.record_cutoffs = j["record_cutoffs"].get<bool>();
    }
    if (j.contains("bins")) {
        const json& b = j["bins"];
        const std::string bw = where + ".bins";
        if (b.contains("edges")) {
            reject_unknown_keys(b, bw, {"edges"});
            try {
                plan.value_bins = b["edges"].get<std::vector<double>>();
            } catch (const json::type_error&) {
                throw ConfigError(bw + ".edges", "expected an array of numbers");
            }
        } else {
            reject_unknown_keys(b, bw, {"lo", "hi", "count"});
            plan.value_bins = equal_width_bins(get_number_or(b, "lo", bw, 0.0), get_number_or(b, "hi", bw, 1.0),
                                               static_cast<int>(get_int_or(b, "count", bw, 50)));
        }
    }
    if (j.contains("curves")) {
        const json& curves = j["curves"];
        if (!curves.is_array()) throw ConfigError(where + ".curves", "expected an array");
        plan.curves.clear();
        for (std::size_t i = 0; i < curves.size(); ++i) {
            const std::string cw = where + ".curves[" + std::to_string(i) + "]";
            const json& c = curves[i];
            const std::string kind = get_kind(c, cw);
            if (kind == "match") {
                reject_unknown_keys(c, cw, {"kind", "coalition"});
                plan.curves.push_back(MatchCurveRequest{static_cast<int>(get_int_or(c, "coalition", cw, 0))});
            } else if (kind == "afford") {
                reject_unknown_keys(c, cw, {"kind", "coalition", "trim_epsilon"});
                plan.curves.push_back(AffordCurveRequest{static_cast<int>(get_int_or(c, "coalition", cw, 0)),
                                                         get_number_or(c, "trim_epsilon", cw, 0.0)});
            } else {
                throw ConfigError(cw + ".kind", "unknown curve kind '" + kind + "'");
            }
        }
    }
    return plan;
}

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= path.size()) {
        const auto dot = path.find('.', start);
        const auto end = dot == std::string_view::npos ? path.size() : dot;
        parts.emplace_back(path.substr(start, end - start));
        if (dot == std::string_view::npos) break;
        start = dot + 1;
    }
    return parts;
}

} // namespace

json noise_to_json(const NoiseSpec& spec) {
    json j{{"kind", kind_name(spec)}};
    std::visit(overloaded{
                   [&](const UniformNoise& u) {
                       j["lo"] = u.lo;
                       j["hi"] = u.hi;
                   },
                   [&](const GaussianNoise& g) {
                       j["mean"] = g.mean;
                       j["sd"] = g.sd;
                   },
                   [&](const ExponentialNoise& e) { j["rate"] = e.rate; },
                   [&](const GumbelNoise& g) {
                       j["location"] = g.location;
                       j["scale"] = g.scale;
                   },
                   [&](const ParetoNoise& p) {
                       j["shape"] = p.shape;
                       j["scale"] = p.scale;
                   },
                   [](const NoNoise&) {},
               },
               spec);
    return j;
}

NoiseSpec noise_from_json(const json& j, const std::string& where) {
    const std::string kind = get_kind(j, where);
    NoiseSpec spec;
    if (kind == "uniform") {
        reject_unknown_keys(j, where, {"kind", "lo", "hi"});
        spec = UniformNoise{get_number_or(j, "lo", where, 0.0), get_number_or(j, "hi", where, 1.0)};
    } else if (kind == "gaussian") {
        reject_unknown_keys(j, where, {"kind", "mean", "sd"});
        spec = GaussianNoise{get_number_or(j, "mean", where, 0.0), get_number_or(j, "sd", where, 1.0)};
    } else if (kind == "exponential") {
        reject_unknown_keys(j, where, {"kind", "rate"});
        spec = ExponentialNoise{get_number_or(j, "rate", where, 1.0)};
    } else if (kind == "gumbel") {
        reject_unknown_keys(j, where, {"kind", "location", "scale"});
        spec = GumbelNoise{get_number_or(j, "location", where, 0.0), get_number_or(j, "scale", where, 1.0)};
    } else if (kind == "pareto") {
        reject_unknown_keys(j, where, {"kind", "shape", "scale"});
        spec = ParetoNoise{get_number(j, "shape", where), get_number(j, "scale", where)};
    } else if (kind == "none") {
        reject_unknown_keys(j, where, {"kind"});
        spec = NoNoise{};
    } else {
        throw ConfigError(where + ".kind", "unknown noise kind '" + kind + "'");
    }
    try {
        validate(spec);
    } catch (const ConfigError& e) {
        // Re-anchor "noise.x" onto the caller's path.
        const std::string field = e.field().substr(e.field().find('.') + 1);
        throw ConfigError(where + "." + field, std::string(e.what()).substr(e.field().size() + 2));
    }
    return spec;
}

NoiseSpec named_noise(std::string_view name) {
    if (name == "uniform") return UniformNoise{0.0, 1.0};
    if (name == "exponential") return ExponentialNoise{1.0};
    if (name == "pareto") return ParetoNoise{2.0, 0.3};
    if (name == "gaussian") return GaussianNoise{0.0, 1.0};
    if (name == "gumbel") return GumbelNoise{0.0, 1.0};
    if (name == "none") return NoNoise{};
    throw ConfigError("noise", "unknown noise preset '" + std::string(name) + "'");
}

RunSpec parse_run_spec(const json& doc) {
    const std::string root = "config";
    reject_unknown_keys(doc, root,
                        {"n_students", "master_seed", "alpha", "preferences", "coalitions", "colleges",
                         "college_groups", "experiment"});
    RunSpec spec;
    EconomyConfig& e = spec.economy;
    e.n_students = get_int(doc, "n_students", root);
    if (doc.contains("master_seed")) {
        const json& s = doc["master_seed"];
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
            throw ConfigError("config.master_seed", "expected a non-negative 64-bit integer");
        }
        e.master_seed = s.get<std::uint64_t>();
    }
    e.alpha = get_number_or(doc, "alpha", root, e.alpha);
    if (doc.contains("preferences")) e.preferences = preferences_from_json(doc["preferences"], "config.preferences");

    const json& coalitions = require(doc, "coalitions", root);
    if (!coalitions.is_array() || coalitions.empty()) {
        throw ConfigError("config.coalitions", "expected a non-empty array");
    }
    for (std::size_t k = 0; k < coalitions.size(); ++k) {
        const std::string w = "config.coalitions[" + std::to_string(k) + "]";
        reject_unknown_keys(coalitions[k], w, {"values", "noise"});
        Coalition co;
        co.id = static_cast<int>(k);
        if (coalitions[k].contains("values")) co.values = values_from_json(coalitions[k]["values"], w + ".values");
        co.noise = noise_from_json(require(coalitions[k], "noise", w), w + ".noise");
        e.coalitions.push_back(std::move(co));
    }

    const bool explicit_colleges = doc.contains("colleges");
    const bool grouped = doc.contains("college_groups");
    if (explicit_colleges == grouped) {
        throw ConfigError("config.colleges", "give exactly one of 'colleges' or 'college_groups'");
    }
    if (explicit_colleges) {
        const json& colleges = doc["colleges"];
        if (!colleges.is_array()) throw ConfigError("config.colleges", "expected an array");
        for (std::size_t i = 0; i < colleges.size(); ++i) {
            const std::string w = "config.colleges[" + std::to_string(i) + "]";
            reject_unknown_keys(colleges[i], w, {"capacity", "coalition"});
            e.colleges.push_back({static_cast<int>(i), get_int(colleges[i], "capacity", w),
                                  static_cast<int>(get_int_or(colleges[i], "coalition", w, 0))});
        }
    } else {
        const json& groups = doc["college_groups"];
        if (!groups.is_array()) throw ConfigError("config.college_groups", "expected an array");
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const std::string w = "config.college_groups[" + std::to_string(g) + "]";
            reject_unknown_keys(groups[g], w, {"coalition", "count", "total_capacity", "capacity_fraction"});
            const auto count = get_int(groups[g], "count", w);
            if (count < 1) throw ConfigError(w + ".count", "must be at least 1");
            std::int64_t total = 0;
            if (groups[g].contains("total_capacity") == groups[g].contains("capacity_fraction")) {
                throw ConfigError(w, "give exactly one of 'total_capacity' or 'capacity_fraction'");
            }
            if (groups[g].contains("total_capacity")) {
                total = get_int(groups[g], "total_capacity", w);
            } else {
                const double f = get_number(groups[g], "capacity_fraction", w);
                total = apportion_seats(std::array{f}, e.n_students).front();
            }
            if (total < 0) throw ConfigError(w + ".total_capacity", "must be non-negative");
            const int coalition = static_cast<int>(get_int_or(groups[g], "coalition", w, 0));
            for (const auto seats : split_seats(total, count)) {
                e.colleges.push_back({static_cast<int>(e.colleges.size()), seats, coalition});
            }
        }
    }

    if (doc.contains("experiment")) spec.plan = plan_from_json(doc["experiment"], "config.experiment");
    return spec;
}

json parse_config_text(std::string_view text, std::string_view source) {
    try {
        return json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        const auto offset = std::min<std::size_t>(e.byte, text.size());
        std::size_t line = 1;
        std::size_t column = 1;
        for (std::size_t i = 0; i + 1 < offset; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ConfigError(std::string(source) + ":" + std::to_string(line) + ":" + std::to_string(column),
                          e.what());
    }
}

json canonical_json(const RunSpec& spec) {
    const EconomyConfig& e = spec.economy;
    json coalitions = json::array();
    for (const auto& co : e.coalitions) {
        coalitions.push_back({{"values", values_to_json(co.values)}, {"noise", noise_to_json(co.noise)}});
    }
    json colleges = json::array();
    for (const auto& c : e.colleges) colleges.push_back({{"capacity", c.capacity}, {"coalition", c.coalition}});
    return json{{"n_students", e.n_students},
                {"master_seed", e.master_seed},
                {"alpha", e.alpha},
                {"preferences", preferences_to_json(e.preferences)},
                {"coalitions", coalitions},
                {"colleges", colleges},
                {"experiment", plan_to_json(spec.plan)}};
}

std::string config_hash(const RunSpec& spec) {
    const std::string text = canonical_json(spec).dump();
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) {
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return os.str();
}

void apply_override(json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError(std::string(assignment), "override must look like key=value");
    }
    const std::string path(assignment.substr(0, eq));
    const std::string raw(assignment.substr(eq + 1));
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }

    json* node = &doc;
    const auto parts = split_path(path);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const std::string& part = parts[i];
        const bool last = i + 1 == parts.size();
        if (node->is_array()) {
            std::size_t idx = 0;
            const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), idx);
            if (ec != std::errc{} || ptr != part.data() + part.size() || idx >= node->size()) {
                throw ConfigError(path, "'" + part + "' is not a valid index");
            }
            node = &(*node)[idx];
        } else {
            if (node->is_null()) *node = json::object();
            if (!node->is_object()) throw ConfigError(path, "'" + part + "' descends into a scalar");
            node = &(*node)[part];
        }
        if (last) *node = value;
    }
}

void set_college_count(json& doc, std::int64_t count) {
    if (!doc.contains("college_groups")) {
        throw ConfigError("colleges", "--colleges needs a config that uses college_groups");
    }
    for (auto& g : doc["college_groups"]) g["count"] = count;
}

void set_noise(json& doc, const NoiseSpec& noise) {
    for (auto& co : doc.at("coalitions")) co["noise"] = noise_to_json(noise);
}

json preset_fig1(const NoiseSpec& noise, std::int64_t colleges, std::uint64_t seed) {
    return json{
        {"n_students", 2000},
        {"master_seed", seed},
        {"alpha", 2.0},
        {"preferences", {{"kind", "uniform_random"}}},
        {"coalitions", json::array({{{"values", {{"kind", "uniform"}, {"lo", 0.0}, {"hi", 1.0}}},
                                     {"noise", noise_to_json(noise)}}})},
        {"college_groups", json::array({{{"coalition", 0}, {"count", colleges}, {"total_capacity", 1000}}})},
        {"experiment",
         {{"replications", 100},
          {"bins", {{"lo", 0.0}, {"hi", 1.0}, {"count", 50}}},
          {"curves", json::array({{{"kind", "match"}, {"coalition", 0}},
                                  {{"kind", "afford"}, {"coalition", 0}, {"trim_epsilon", 0.0}}})},
          {"record_cutoffs", true}}},
    };
}

json preset_fig2(const NoiseSpec& noise, std::int64_t colleges_per_coalition, std::uint64_t seed) {
    const json values = {{"kind", "uniform"}, {"lo", 0.0}, {"hi", 1.0}};
    return json{
        {"n_students", 2000},
        {"master_seed", seed},
        {"alpha", 2.0},
        {"preferences", {{"kind", "tiered_by_coalition"}}},
        {"coalitions", json::array({{{"values", values}, {"noise", noise_to_json(noise)}},
                                    {{"values", values}, {"noise", noise_to_json(noise)}}})},
        {"college_groups",
         json::array({{{"coalition", 0}, {"count", colleges_per_coalition}, {"capacity_fraction", 0.25}},
                      {{"coalition", 1}, {"count", colleges_per_coalition}, {"capacity_fraction", 0.5}}})},
        {"experiment",
         {{"replications", 100},
          {"bins", {{"lo", 0.0}, {"hi", 1.0}, {"count", 50}}},
          {"curves", json::array({{{"kind", "match"}, {"coalition", 0}},
                                  {{"kind", "match"}, {"coalition", 1}},
                                  {{"kind", "afford"}, {"coalition", 0}, {"trim_epsilon", 0.0}},
                                  {{"kind", "afford"}, {"coalition", 0}, {"trim_epsilon", 0.05}},
                                  {{"kind", "afford"}, {"coalition", 1}, {"trim_epsilon", 0.0}},
                                  {{"kind", "afford"}, {"coalition", 1}, {"trim_epsilon", 0.05}}})},
          {"record_cutoffs", true}}},
    };
}

json preset(std::string_view name) {
    if (name == "fig1") return preset_fig1(UniformNoise{0.0, 1.0}, 100, 7);
    if (name == "fig2") return preset_fig2(UniformNoise{0.0, 1.0}, 20, 7);
    throw ConfigError("preset", "unknown preset '" + std::string(name) + "'");
}

} // namespace noisymatch
