#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "obsyn/ekf.hpp"
#include "obsyn/model.hpp"
#include "obsyn/obsgram.hpp"

namespace obsyn {

/// One batch run, parsed and validated from a JSON file. Optional fields fall
/// back to the documented defaults at run time.
struct RunConfig {
  Eigen::MatrixXd A, B, Q, R;

  struct Observation {
    std::string type;   // bearing_ratio | relative_bearing | linear
    Eigen::MatrixXd C;  // linear only
  } observation;

  std::optional<AugmentedGains> gains;  // absent: plain LQR (or optimizer default)

  Eigen::VectorXd x0;
  std::optional<double> tf, dt, epsilon;

  bool weights_auto = true;
  std::optional<CostWeights> weights;

  struct EkfSettings {
    std::optional<Eigen::MatrixXd> process_noise, measurement_noise, initial_covariance;
    std::optional<double> measurement_interval, initial_estimate_scale;
    std::optional<std::string> covariance_model;  // open_loop | closed_loop
    bool feedback_from_estimate = false;
  } ekf;

  std::string output_directory = ".";
  std::uint64_t seed = 42;
};

/// Parses and validates; error messages name the offending field.
/// Throws ConfigError.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& json_text);

/// Instantiates the configured observation map.
ObservationModel make_observation(const RunConfig& config);

}  // namespace obsyn
