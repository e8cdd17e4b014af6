#include "sfr/io.hpp"

#include <fstream>

#include <json.hpp>

namespace sfr {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]
                    .get<double>();
    }
  }
  return m;
}

json arch_to_json(const MlpArchitecture& arch) {
  json out;
  out["input_dim"] = arch.input_dim;
  out["hidden_widths"] = arch.hidden_widths;
  out["output_dim"] = arch.output_dim;
  out["activation"] = "tanh";
  out["use_bias"] = arch.use_bias;
  return out;
}

MlpArchitecture arch_from_json(const json& j) {
  MlpArchitecture arch;
  arch.input_dim = j.at("input_dim").get<Eigen::Index>();
  arch.hidden_widths = j.at("hidden_widths").get<std::vector<Eigen::Index>>();
  arch.output_dim = j.at("output_dim").get<Eigen::Index>();
  arch.use_bias = j.value("use_bias", true);
  if (j.value("activation", "tanh") != std::string("tanh")) {
    throw DataError("checkpoint: unsupported activation");
  }
  return arch;
}

json likelihood_to_json(const Likelihood& lik) {
  json out;
  switch (lik.family) {
    case Likelihood::Family::Gaussian:
      out["family"] = "gaussian";
      out["noise_variance"] = lik.noise_variance;
      break;
    case Likelihood::Family::BernoulliLogit:
      out["family"] = "bernoulli_logit";
      break;
    case Likelihood::Family::CategoricalSoftmax:
      out["family"] = "categorical_softmax";
      out["num_classes"] = lik.latent_dim;
      break;
  }
  return out;
}

Likelihood likelihood_from_json(const json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "gaussian") {
    return Likelihood::gaussian(j.at("noise_variance").get<double>());
  }
  if (family == "bernoulli_logit") return Likelihood::bernoulli_logit();
  if (family == "categorical_softmax") {
    return Likelihood::categorical_softmax(j.at("num_classes").get<Eigen::Index>());
  }
  throw DataError("unknown likelihood family: " + family);
}

json read_file(const std::string& path, const std::string& expected_format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (j.value("format", "") != expected_format) {
    throw DataError(path + ": expected format '" + expected_format + "'");
  }
  if (j.value("version", 0) != 1) {
    throw DataError(path + ": unsupported version");
  }
  return j;
}

void write_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << "\n";
}

void check_finite(const Eigen::Ref<const Eigen::MatrixXd>& m,
                  const std::string& what) {
  if (!m.allFinite()) {
    throw NumericalError("serialization: non-finite values in " + what);
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  check_finite(ckpt.weights.w, "weights");
  json j;
  j["format"] = "sfr-mlp-checkpoint";
  j["version"] = 1;
  j["architecture"] = arch_to_json(ckpt.weights.arch);
  j["prior_precision"] = ckpt.prior_precision;
  j["likelihood"] = likelihood_to_json(ckpt.likelihood);
  j["weights"] = vector_to_json(ckpt.weights.w);
  if (ckpt.standardization.has_value()) {
    j["standardization"]["mean"] = vector_to_json(ckpt.standardization->mean);
    j["standardization"]["stddev"] = vector_to_json(ckpt.standardization->stddev);
  }
  write_file(j, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  const json j = read_file(path, "sfr-mlp-checkpoint");
  Checkpoint ckpt;
  ckpt.weights.arch = arch_from_json(j.at("architecture"));
  ckpt.weights.w = vector_from_json(j.at("weights"));
  if (ckpt.weights.w.size() != ckpt.weights.arch.num_params()) {
    throw DataError(path + ": weight count does not match architecture");
  }
  ckpt.prior_precision = j.at("prior_precision").get<double>();
  ckpt.likelihood = likelihood_from_json(j.at("likelihood"));
  if (j.contains("standardization")) {
    Standardization st;
    st.mean = vector_from_json(j["standardization"].at("mean"));
    st.stddev = vector_from_json(j["standardization"].at("stddev"));
    ckpt.standardization = std::move(st);
  }
  return ckpt;
}

void save_sfr_state(const SfrState& state, const Likelihood& lik,
                    const std::optional<Standardization>& standardization,
                    const std::string& path) {
  check_finite(state.alpha_u, "alpha_u");
  check_finite(state.b_u, "B_u");
  json j;
  j["format"] = "sfr-state";
  j["version"] = 1;
  j["architecture"] = arch_to_json(state.kernel.weights_star.arch);
  j["w_star"] = vector_to_json(state.kernel.weights_star.w);
  j["prior_precision"] = state.kernel.prior_precision;
  j["likelihood"] = likelihood_to_json(lik);
  j["inducing_inputs"] = matrix_to_json(state.z);
  j["alpha_u"] = vector_to_json(state.alpha_u);
  j["b_u"] = matrix_to_json(state.b_u);
  j["num_points_absorbed"] = state.num_points_absorbed;
  if (standardization.has_value()) {
    j["standardization"]["mean"] = vector_to_json(standardization->mean);
    j["standardization"]["stddev"] = vector_to_json(standardization->stddev);
  }
  write_file(j, path);
}

LoadedSfrState load_sfr_state(const std::string& path) {
  const json j = read_file(path, "sfr-state");
  LoadedSfrState out;
  out.state.kernel.weights_star.arch = arch_from_json(j.at("architecture"));
  out.state.kernel.weights_star.w = vector_from_json(j.at("w_star"));
  out.state.kernel.prior_precision = j.at("prior_precision").get<double>();
  out.likelihood = likelihood_from_json(j.at("likelihood"));
  out.state.z = matrix_from_json(j.at("inducing_inputs"));
  out.state.alpha_u = vector_from_json(j.at("alpha_u"));
  out.state.b_u = matrix_from_json(j.at("b_u"));
  out.state.num_points_absorbed = j.at("num_points_absorbed").get<long>();
  if (j.contains("standardization")) {
    Standardization st;
    st.mean = vector_from_json(j["standardization"].at("mean"));
    st.stddev = vector_from_json(j["standardization"].at("stddev"));
    out.standardization = std::move(st);
  }
  sfr_rehydrate(out.state);
  return out;
}

}  // namespace sfr
