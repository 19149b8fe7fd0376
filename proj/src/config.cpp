#include "obsyn/config.hpp"

#include <fstream>

#include <json.hpp>

namespace obsyn {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ConfigError(field + ": " + why);
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    fail(field, "expected a non-empty nested array (row-major matrix)");
  const std::size_t cols = j.front().size();
  Eigen::MatrixXd M(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) fail(field, "ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) fail(field, "non-numeric entry");
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    }
  }
  return M;
}

Eigen::VectorXd parse_vector(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) fail(field, "expected a non-empty array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(field, "non-numeric entry");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

const json& require(const json& j, const std::string& key, const std::string& parent) {
  auto it = j.find(key);
  if (it == j.end()) fail(parent.empty() ? key : parent + "." + key, "missing");
  return *it;
}

}  // namespace

namespace {
RunConfig parse_config_impl(const json& root);
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  try {
    return parse_config_impl(root);
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

namespace {

RunConfig parse_config_impl(const json& root) {
  RunConfig cfg;

  const json& system = require(root, "system", "");
  cfg.A = parse_matrix(require(system, "A", "system"), "system.A");
  cfg.B = parse_matrix(require(system, "B", "system"), "system.B");
  if (cfg.A.rows() != cfg.A.cols()) fail("system.A", "must be square");
  if (cfg.B.rows() != cfg.A.rows()) fail("system.B", "row count must match system.A");

  const json& obs = require(root, "observation", "");
  cfg.observation.type = require(obs, "type", "observation").get<std::string>();
  if (cfg.observation.type == "linear") {
    cfg.observation.C = parse_matrix(require(obs, "C", "observation"), "observation.C");
    if (cfg.observation.C.cols() != cfg.A.rows())
      fail("observation.C", "column count must match the state dimension");
  } else if (cfg.observation.type != "bearing_ratio" &&
             cfg.observation.type != "relative_bearing") {
    fail("observation.type", "must be bearing_ratio, relative_bearing, or linear");
  }
  if (cfg.observation.type == "bearing_ratio" && cfg.A.rows() < 2)
    fail("observation.type", "bearing_ratio needs state dimension >= 2");

  const json& lqr = require(root, "lqr", "");
  cfg.Q = parse_matrix(require(lqr, "Q", "lqr"), "lqr.Q");
  cfg.R = parse_matrix(require(lqr, "R", "lqr"), "lqr.R");
  if (cfg.Q.rows() != cfg.A.rows() || cfg.Q.cols() != cfg.A.rows())
    fail("lqr.Q", "must be n x n");
  if (cfg.R.rows() != cfg.B.cols() || cfg.R.cols() != cfg.B.cols())
    fail("lqr.R", "must be p x p");

  if (auto it = root.find("gains"); it != root.end() && !it->is_null()) {
    AugmentedGains g;
    g.k1 = parse_vector(require(*it, "k1", "gains"), "gains.k1");
    g.k2 = parse_vector(require(*it, "k2", "gains"), "gains.k2");
    g.k3 = parse_vector(require(*it, "k3", "gains"), "gains.k3");
    g.k4 = parse_vector(require(*it, "k4", "gains"), "gains.k4");
    if (g.k1.size() != cfg.B.cols()) fail("gains.k1", "length must equal the input dimension");
    try {
      g.validate();
    } catch (const std::invalid_argument& e) {
      fail("gains", e.what());
    }
    cfg.gains = std::move(g);
  }

  const json& sim = require(root, "sim", "");
  cfg.x0 = parse_vector(require(sim, "x0", "sim"), "sim.x0");
  if (cfg.x0.size() != cfg.A.rows()) fail("sim.x0", "length must equal the state dimension");
  if (auto it = sim.find("tf"); it != sim.end()) {
    if (!it->is_number() || it->get<double>() <= 0.0) fail("sim.tf", "must be a positive number");
    cfg.tf = it->get<double>();
  }
  if (auto it = sim.find("dt"); it != sim.end()) {
    if (!it->is_number() || it->get<double>() <= 0.0) fail("sim.dt", "must be a positive number");
    cfg.dt = it->get<double>();
  }
  if (auto it = sim.find("epsilon"); it != sim.end()) {
    if (!it->is_number() || it->get<double>() <= 0.0)
      fail("sim.epsilon", "must be a positive number");
    cfg.epsilon = it->get<double>();
  }

  if (auto it = root.find("weights"); it != root.end() && !it->is_null()) {
    if (it->is_string()) {
      if (it->get<std::string>() != "auto") fail("weights", "string form must be \"auto\"");
      cfg.weights_auto = true;
    } else {
      CostWeights w;
      w.w = require(*it, "w", "weights").get<double>();
      w.alpha = require(*it, "alpha", "weights").get<double>();
      if (w.w < 0.0) fail("weights.w", "must be nonnegative");
      if (w.alpha < 0.0) fail("weights.alpha", "must be nonnegative");
      cfg.weights = w;
      cfg.weights_auto = false;
    }
  }

  if (auto it = root.find("ekf"); it != root.end() && !it->is_null()) {
    const json& e = *it;
    if (auto f = e.find("processNoise"); f != e.end())
      cfg.ekf.process_noise = parse_matrix(*f, "ekf.processNoise");
    if (auto f = e.find("measurementNoise"); f != e.end())
      cfg.ekf.measurement_noise = parse_matrix(*f, "ekf.measurementNoise");
    if (auto f = e.find("initialCovariance"); f != e.end())
      cfg.ekf.initial_covariance = parse_matrix(*f, "ekf.initialCovariance");
    if (auto f = e.find("measurementInterval"); f != e.end()) {
      if (!f->is_number() || f->get<double>() <= 0.0)
        fail("ekf.measurementInterval", "must be a positive number");
      cfg.ekf.measurement_interval = f->get<double>();
    }
    if (auto f = e.find("initialEstimateScale"); f != e.end())
      cfg.ekf.initial_estimate_scale = f->get<double>();
    if (auto f = e.find("covarianceModel"); f != e.end()) {
      const std::string v = f->get<std::string>();
      if (v != "open_loop" && v != "closed_loop")
        fail("ekf.covarianceModel", "must be open_loop or closed_loop");
      cfg.ekf.covariance_model = v;
    }
    if (auto f = e.find("feedbackFromEstimate"); f != e.end())
      cfg.ekf.feedback_from_estimate = f->get<bool>();
    if (auto f = e.find("seed"); f != e.end()) cfg.seed = f->get<std::uint64_t>();
  }

  if (auto it = root.find("output"); it != root.end() && !it->is_null()) {
    if (auto f = it->find("directory"); f != it->end())
      cfg.output_directory = f->get<std::string>();
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

ObservationModel make_observation(const RunConfig& config) {
  if (config.observation.type == "bearing_ratio") return ObservationModel::bearing_ratio();
  if (config.observation.type == "relative_bearing")
    return ObservationModel::relative_bearing(static_cast<int>(config.A.rows()));
  return ObservationModel::linear(config.observation.C);
}

}  // namespace obsyn
