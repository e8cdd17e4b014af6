#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sfr/io.hpp"

#include "oracles.hpp"

using namespace sfr;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempFile {
  std::string path;
  TempFile() : path(std::string(std::tmpnam(nullptr)) + ".json") {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("checkpoint round-trips bit-exactly") {
  MlpArchitecture arch;
  arch.input_dim = 4;
  arch.hidden_widths = {7, 3};
  arch.output_dim = 2;
  Checkpoint ckpt;
  ckpt.weights = mlp_init(arch, 99);
  ckpt.weights.w[0] = 0.1 + 0.2;  // not exactly representable sums included
  ckpt.prior_precision = 0.07;
  ckpt.likelihood = Likelihood::categorical_softmax(2);
  Standardization st;
  st.mean = Eigen::VectorXd::LinSpaced(4, -1.0, 1.0 / 3.0);
  st.stddev = Eigen::VectorXd::Constant(4, M_PI);
  ckpt.standardization = st;

  TempFile file;
  save_checkpoint(ckpt, file.path);
  const Checkpoint loaded = load_checkpoint(file.path);

  CHECK(loaded.weights.arch == ckpt.weights.arch);
  CHECK((loaded.weights.w.array() == ckpt.weights.w.array()).all());
  CHECK(loaded.prior_precision == ckpt.prior_precision);
  CHECK(loaded.likelihood.family == Likelihood::Family::CategoricalSoftmax);
  REQUIRE(loaded.standardization.has_value());
  CHECK((loaded.standardization->mean.array() == st.mean.array()).all());
  CHECK((loaded.standardization->stddev.array() == st.stddev.array()).all());

  // a second save of the loaded value produces identical bytes
  TempFile file2;
  save_checkpoint(loaded, file2.path);
  CHECK(slurp(file.path) == slurp(file2.path));
}

TEST_CASE("checkpoint weight count is validated") {
  MlpArchitecture arch;
  arch.input_dim = 2;
  arch.hidden_widths = {3};
  arch.output_dim = 1;
  Checkpoint ckpt;
  ckpt.weights = mlp_init(arch, 1);
  ckpt.likelihood = Likelihood::bernoulli_logit();
  TempFile file;
  save_checkpoint(ckpt, file.path);

  // corrupt the architecture header
  std::string text = slurp(file.path);
  const auto pos = text.find("\"input_dim\": 2");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 14, "\"input_dim\": 3");
  std::ofstream(file.path) << text;
  CHECK_THROWS_AS(load_checkpoint(file.path), DataError);
}

TEST_CASE("sfr state round-trips bit-exactly and rehydrates") {
  const Likelihood lik = Likelihood::bernoulli_logit();
  MlpArchitecture arch;
  arch.input_dim = 3;
  arch.hidden_widths = {5};
  arch.output_dim = 1;
  const MlpWeights w = mlp_init(arch, 5);
  Dataset data = oracles::random_dataset(15, 3, 2, 6);
  const InducingPoints inducing = select_inducing(data.x, 4, 7);
  const SfrState state = sfr_fit(w, data, lik, inducing.z, 1.3);

  TempFile file;
  save_sfr_state(state, lik, std::nullopt, file.path);
  const LoadedSfrState loaded = load_sfr_state(file.path);

  CHECK((loaded.state.alpha_u.array() == state.alpha_u.array()).all());
  CHECK((loaded.state.b_u.array() == state.b_u.array()).all());
  CHECK((loaded.state.z.array() == state.z.array()).all());
  CHECK((loaded.state.kernel.weights_star.w.array() ==
         state.kernel.weights_star.w.array())
            .all());
  CHECK(loaded.state.kernel.prior_precision == state.kernel.prior_precision);
  CHECK(loaded.state.num_points_absorbed == state.num_points_absorbed);
  CHECK(loaded.likelihood.family == lik.family);

  // rehydrated factors give identical predictions
  const Eigen::RowVectorXd x = oracles::random_matrix(1, 3, 8).row(0);
  const PushForward mc = PushForward::mc(32, 4);
  const PredictiveDistribution a = sfr_predict(state, x, lik, mc);
  const PredictiveDistribution b = sfr_predict(loaded.state, x, lik, mc);
  CHECK(a.latent_mean[0] == b.latent_mean[0]);
  CHECK(a.latent_cov(0, 0) == b.latent_cov(0, 0));

  TempFile file2;
  save_sfr_state(loaded.state, loaded.likelihood, std::nullopt, file2.path);
  CHECK(slurp(file.path) == slurp(file2.path));
}

TEST_CASE("format and version tags are enforced") {
  TempFile file;
  std::ofstream(file.path) << "{\"format\":\"other\",\"version\":1}";
  CHECK_THROWS_AS(load_checkpoint(file.path), DataError);
  CHECK_THROWS_AS(load_sfr_state(file.path), DataError);
  std::ofstream(file.path) << "{\"format\":\"sfr-state\",\"version\":9}";
  CHECK_THROWS_AS(load_sfr_state(file.path), DataError);
  std::ofstream(file.path) << "not json";
  CHECK_THROWS_AS(load_checkpoint(file.path), DataError);
}
