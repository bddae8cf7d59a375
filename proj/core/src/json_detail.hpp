#pragma once

// nlohmann-based converters shared by json_io.cpp and suite.cpp.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "imcmc/errors.hpp"
#include "imcmc/it_sampler.hpp"

namespace imcmc::detail {

using nlohmann::json;

/// Parses text, converting syntax errors to ValidationError(source, "... line L, column C").
json parse_json(const std::string& text, const std::string& source);

const json& require(const json& j, const std::string& key, const std::string& path);
double get_double(const json& j, const std::string& key, const std::string& path);
std::uint64_t get_u64(const json& j, const std::string& key, const std::string& path);
std::vector<double> get_doubles(const json& j, const std::string& path);

json kernel_json(const FiniteKernel& k);
json measure_json(const FiniteMeasure& m);
json target_json(const FiniteTarget& t);
json config_json(const ITConfig& cfg, bool with_seed = true);

FiniteKernel read_kernel(const json& j, const std::string& path);
FiniteMeasure read_measure(const json& j, const std::string& path);
FiniteTarget read_target(const json& j, const std::string& path);
/// Builds the config; `seed_present` reports whether "seed" was given.
ITConfig read_config(const json& j, const std::string& path, bool* seed_present = nullptr);

}  // namespace imcmc::detail
