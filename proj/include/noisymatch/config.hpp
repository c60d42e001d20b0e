#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "noisymatch/estimation.hpp"
#include "noisymatch/market.hpp"
#include "noisymatch/noise.hpp"

namespace noisymatch {

// Config files are JSON documents:
//
//   {
//     "n_students": 2000,
//     "master_seed": 7,
//     "alpha": 2.0,
//     "preferences": {"kind": "uniform_random"},
//     "coalitions": [
//       {"values": {"kind": "uniform", "lo": 0, "hi": 1},
//        "noise":  {"kind": "pareto", "shape": 2, "scale": 0.3}}
//     ],
//     "college_groups": [{"coalition": 0, "count": 100, "total_capacity": 1000}],
//     "experiment": {"replications": 100, "bins": {"lo": 0, "hi": 1, "count": 50},
//                    "curves": [{"kind": "match", "coalition": 0}],
//                    "record_cutoffs": true}
//   }
//
// Colleges come either from "colleges" (explicit [{"capacity", "coalition"}, ...])
// or from "college_groups", which split a coalition's seats evenly over `count`
// colleges. See README.md for every key.

struct RunSpec {
    EconomyConfig economy;
    ExperimentPlan plan;
};

/// Parses a JSON document. Throws ConfigError naming the offending key.
RunSpec parse_run_spec(const nlohmann::json& doc);

/// Parses text; JSON syntax errors become ConfigError("line N, column M", ...).
nlohmann::json parse_config_text(std::string_view text, std::string_view source = "config");

/// Canonical form: explicit colleges, every default spelled out, keys sorted.
/// Parsing the canonical form yields an identical RunSpec.
nlohmann::json canonical_json(const RunSpec& spec);

/// Hex SHA-256 of the compact canonical JSON (threads excluded).
std::string config_hash(const RunSpec& spec);

nlohmann::json noise_to_json(const NoiseSpec& spec);
NoiseSpec noise_from_json(const nlohmann::json& j, const std::string& where = "noise");

/// Named noise used by presets and --noise: uniform, exponential, pareto, gaussian, gumbel, none.
NoiseSpec named_noise(std::string_view name);

/// Applies "a.b.0.c=value" onto the document. The value is parsed as JSON when
/// possible, else taken as a string. Array indices address existing elements.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Sets the college count of every college group.
void set_college_count(nlohmann::json& doc, std::int64_t count);

/// Replaces the noise of every coalition.
void set_noise(nlohmann::json& doc, const NoiseSpec& noise);

/// fig1: 2000 students, 1000 seats split evenly over `colleges`, uniform random
/// preferences, Uniform[0,1] values, 100 replications.
nlohmann::json preset_fig1(const NoiseSpec& noise, std::int64_t colleges, std::uint64_t seed);

/// fig2: two coalitions holding 500 and 1000 of 2000 seats-worth of students,
/// tiered preferences, independent Uniform[0,1] values per coalition.
nlohmann::json preset_fig2(const NoiseSpec& noise, std::int64_t colleges_per_coalition, std::uint64_t seed);

/// Preset by name ("fig1", "fig2") with its default noise, college count and seed.
nlohmann::json preset(std::string_view name);

} // namespace noisymatch
