#include "sfr/mlp.hpp"

#include <cmath>
#include <random>

namespace sfr {

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                   Eigen::Dynamic, Eigen::RowMajor>>;

struct LayerView {
  RowMajorMap weight;            // fan_out x fan_in
  const double* bias = nullptr;  // fan_out entries, or nullptr when bias-free
};

LayerView layer_view(const MlpWeights& weights, Eigen::Index layer,
                     Eigen::Index offset) {
  const auto& arch = weights.arch;
  const Eigen::Index rows = arch.fan_out(layer);
  const Eigen::Index cols = arch.fan_in(layer);
  RowMajorMap w(weights.w.data() + offset, rows, cols);
  const double* b =
      arch.use_bias ? weights.w.data() + offset + rows * cols : nullptr;
  return LayerView{w, b};
}

Eigen::Index layer_size(const MlpArchitecture& arch, Eigen::Index layer) {
  const Eigen::Index n = arch.fan_in(layer) * arch.fan_out(layer);
  return arch.use_bias ? n + arch.fan_out(layer) : n;
}

void check_input(const MlpArchitecture& arch, Eigen::Index cols) {
  if (cols != arch.input_dim) {
    throw DimensionMismatch("mlp: input has dim " + std::to_string(cols) +
                            ", architecture expects " +
                            std::to_string(arch.input_dim));
  }
}

// Forward pass keeping all post-activation values; activations[0] is the
// input batch, activations[L] the linear network output.
std::vector<Eigen::MatrixXd> forward_trace(
    const MlpWeights& weights, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  const auto& arch = weights.arch;
  check_input(arch, x.cols());
  std::vector<Eigen::MatrixXd> activations;
  activations.reserve(static_cast<size_t>(arch.num_layers()) + 1);
  activations.emplace_back(x);
  Eigen::Index offset = 0;
  for (Eigen::Index l = 0; l < arch.num_layers(); ++l) {
    const LayerView lv = layer_view(weights, l, offset);
    Eigen::MatrixXd z = activations.back() * lv.weight.transpose();
    if (lv.bias != nullptr) {
      z.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(lv.bias, z.cols());
    }
    if (l + 1 < arch.num_layers()) {
      z = z.array().tanh();
    }
    activations.push_back(std::move(z));
    offset += layer_size(arch, l);
  }
  return activations;
}

}  // namespace

Eigen::Index MlpArchitecture::fan_in(Eigen::Index layer) const {
  return layer == 0 ? input_dim : hidden_widths[static_cast<size_t>(layer - 1)];
}

Eigen::Index MlpArchitecture::fan_out(Eigen::Index layer) const {
  return layer == num_layers() - 1 ? output_dim
                                   : hidden_widths[static_cast<size_t>(layer)];
}

Eigen::Index MlpArchitecture::num_params() const {
  Eigen::Index p = 0;
  for (Eigen::Index l = 0; l < num_layers(); ++l) {
    p += fan_in(l) * fan_out(l) + (use_bias ? fan_out(l) : 0);
  }
  return p;
}

MlpWeights mlp_init(const MlpArchitecture& arch, std::uint64_t seed) {
  if (arch.input_dim < 1 || arch.output_dim < 1) {
    throw DimensionMismatch("mlp_init: input_dim and output_dim must be >= 1");
  }
  for (Eigen::Index h : arch.hidden_widths) {
    if (h < 1) throw DimensionMismatch("mlp_init: hidden width must be >= 1");
  }
  MlpWeights out{arch, Eigen::VectorXd::Zero(arch.num_params())};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Index offset = 0;
  for (Eigen::Index l = 0; l < arch.num_layers(); ++l) {
    const Eigen::Index n = arch.fan_in(l) * arch.fan_out(l);
    const double scale = 1.0 / std::sqrt(static_cast<double>(arch.fan_in(l)));
    for (Eigen::Index i = 0; i < n; ++i) {
      out.w[offset + i] = scale * normal(rng);
    }
    offset += layer_size(arch, l);  // biases stay zero
  }
  return out;
}

Eigen::MatrixXd mlp_forward(const MlpWeights& weights,
                            const Eigen::Ref<const Eigen::MatrixXd>& x) {
  return forward_trace(weights, x).back();
}

Eigen::MatrixXd mlp_jacobian(const MlpWeights& weights,
                             const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return mlp_jacobian_stacked(weights, x);
}

Eigen::MatrixXd mlp_jacobian_stacked(
    const MlpWeights& weights, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  const auto& arch = weights.arch;
  const Eigen::Index num_points = x.rows();
  const Eigen::Index c = arch.output_dim;
  const Eigen::Index p = arch.num_params();
  const Eigen::Index num_layers = arch.num_layers();

  const std::vector<Eigen::MatrixXd> acts = forward_trace(weights, x);

  std::vector<Eigen::Index> offsets(static_cast<size_t>(num_layers));
  Eigen::Index offset = 0;
  for (Eigen::Index l = 0; l < num_layers; ++l) {
    offsets[static_cast<size_t>(l)] = offset;
    offset += layer_size(arch, l);
  }

  Eigen::MatrixXd jac(num_points * c, p);
  for (Eigen::Index i = 0; i < num_points; ++i) {
    for (Eigen::Index out_c = 0; out_c < c; ++out_c) {
      Eigen::VectorXd delta = Eigen::VectorXd::Unit(c, out_c);
      for (Eigen::Index l = num_layers - 1; l >= 0; --l) {
        const LayerView lv = layer_view(weights, l, offsets[static_cast<size_t>(l)]);
        const auto a_prev = acts[static_cast<size_t>(l)].row(i);
        // dW = delta * a_prev (row-major flattening matches the layout)
        Eigen::Index pos = offsets[static_cast<size_t>(l)];
        for (Eigen::Index r = 0; r < lv.weight.rows(); ++r) {
          jac.row(i * c + out_c).segment(pos, lv.weight.cols()) =
              delta[r] * a_prev;
          pos += lv.weight.cols();
        }
        if (arch.use_bias) {
          jac.row(i * c + out_c).segment(pos, delta.size()) = delta.transpose();
        }
        if (l > 0) {
          // a_prev is tanh(z); tanh' = 1 - a^2
          delta = (lv.weight.transpose() * delta).cwiseProduct(
              (1.0 - a_prev.array().square()).matrix().transpose());
        }
      }
    }
  }
  return jac;
}

Eigen::VectorXd mlp_backward(const MlpWeights& weights,
                             const Eigen::Ref<const Eigen::MatrixXd>& x,
                             const Eigen::Ref<const Eigen::MatrixXd>& dl_df) {
  const auto& arch = weights.arch;
  if (dl_df.rows() != x.rows() || dl_df.cols() != arch.output_dim) {
    throw DimensionMismatch("mlp_backward: dl_df shape mismatch");
  }
  const std::vector<Eigen::MatrixXd> acts = forward_trace(weights, x);
  const Eigen::Index num_layers = arch.num_layers();

  std::vector<Eigen::Index> offsets(static_cast<size_t>(num_layers));
  Eigen::Index offset = 0;
  for (Eigen::Index l = 0; l < num_layers; ++l) {
    offsets[static_cast<size_t>(l)] = offset;
    offset += layer_size(arch, l);
  }

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(arch.num_params());
  Eigen::MatrixXd delta = dl_df;  // N x fan_out(l)
  for (Eigen::Index l = num_layers - 1; l >= 0; --l) {
    const LayerView lv = layer_view(weights, l, offsets[static_cast<size_t>(l)]);
    const auto& a_prev = acts[static_cast<size_t>(l)];
    Eigen::MatrixXd dw = delta.transpose() * a_prev;  // fan_out x fan_in
    Eigen::Index pos = offsets[static_cast<size_t>(l)];
    for (Eigen::Index r = 0; r < dw.rows(); ++r) {
      grad.segment(pos, dw.cols()) = dw.row(r);
      pos += dw.cols();
    }
    if (arch.use_bias) {
      grad.segment(pos, delta.cols()) = delta.colwise().sum();
    }
    if (l > 0) {
      delta = (delta * lv.weight).cwiseProduct(
          (1.0 - a_prev.array().square()).matrix());
    }
  }
  return grad;
}

}  // namespace sfr
