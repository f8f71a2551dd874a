#pragma once

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>

#include "hfcov/harness.hpp"
#include "hfcov/simulate.hpp"

namespace hfcov {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// JSON config files. Keys mirror the struct field names; absent keys keep
// their defaults, unknown keys are rejected.

SimConfig parse_sim_config(const std::string& json_text);
ExperimentConfig parse_experiment_config(const std::string& json_text);
ConvergenceSpec parse_convergence_spec(const std::string& json_text);

std::string read_text_file(const std::filesystem::path& path);

std::string dump_sim_config(const SimConfig& config);

}  // namespace hfcov
