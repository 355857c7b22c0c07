#pragma once

#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tsmc/controllers.hpp"
#include "tsmc/envs/costs.hpp"
#include "tsmc/rollout.hpp"

namespace tsmc {

/// Maps raw environment states to policy inputs (e.g. angle -> sin/cos or
/// tip coordinates), with the Jacobian needed to chain state sensitivities
/// through the encoding.
class StateEncoder {
 public:
  virtual ~StateEncoder() = default;
  virtual int state_dim() const = 0;
  virtual int feature_dim() const = 0;
  virtual Vector encode(const Vector& x) const = 0;
  virtual Matrix encode_jac(const Vector& x) const = 0;  // feature_dim x state_dim
};

class IdentityEncoder final : public StateEncoder {
 public:
  explicit IdentityEncoder(int dim) : dim_(dim) {}
  int state_dim() const override { return dim_; }
  int feature_dim() const override { return dim_; }
  Vector encode(const Vector& x) const override { return x; }
  Matrix encode_jac(const Vector& x) const override {
    return Matrix::Identity(x.size(), x.size());
  }

 private:
  int dim_;
};

/// Stacks the position and velocity blocks of a StateSplit into one feature
/// vector.
class SplitEncoder final : public StateEncoder {
 public:
  explicit SplitEncoder(std::shared_ptr<const envs::StateSplit> split)
      : split_(std::move(split)) {}
  int state_dim() const override { return split_->state_dim(); }
  int feature_dim() const override { return split_->pos_dim() + split_->vel_dim(); }
  Vector encode(const Vector& x) const override {
    Vector out(feature_dim());
    out << split_->position(x), split_->velocity(x);
    return out;
  }
  Matrix encode_jac(const Vector& x) const override {
    Matrix jac(feature_dim(), split_->state_dim());
    jac << split_->position_jac(x), split_->velocity_jac(x);
    return jac;
  }

 private:
  std::shared_ptr<const envs::StateSplit> split_;
};

enum class MlpActivation { tanh, identity };

struct MlpSpec {
  std::vector<int> layer_sizes;  // input, hidden..., output widths
  bool with_bias = true;
  MlpActivation hidden_activation = MlpActivation::tanh;
  Squash output_squash = Squash::tanh_scaled;
  double u_max = 1.0;
};

/// Feedforward policy with flat parameters laid out layer by layer:
/// row-major weight matrix, then the bias vector (when biases are enabled).
/// The layout is what the versioned parameter file format freezes.
class MlpPolicy {
 public:
  explicit MlpPolicy(MlpSpec spec) : spec_(std::move(spec)) {
    if (spec_.layer_sizes.size() < 2)
      throw std::invalid_argument("MlpPolicy: need at least input and output layers");
    for (int w : spec_.layer_sizes)
      if (w < 1) throw std::invalid_argument("MlpPolicy: layer widths must be >= 1");
    param_dim_ = 0;
    for (std::size_t l = 1; l < spec_.layer_sizes.size(); ++l) {
      const int n_in = spec_.layer_sizes[l - 1];
      const int n_out = spec_.layer_sizes[l];
      param_dim_ += n_out * n_in + (spec_.with_bias ? n_out : 0);
    }
  }

  const MlpSpec& spec() const { return spec_; }
  int param_dim() const { return param_dim_; }
  int input_dim() const { return spec_.layer_sizes.front(); }
  int output_dim() const { return spec_.layer_sizes.back(); }

  Vector forward(const Vector& theta, const Vector& x) const {
    Workspace ws;
    run_forward(theta, x, ws);
    return ws.output;
  }

  /// dudx (m x n_in) and dudtheta (m x d) by exact reverse-mode passes
  /// through the layers and the output squashing.
  void jacobians(const Vector& theta, const Vector& x, Matrix& dudx, Matrix& dudtheta) const {
    Workspace ws;
    run_forward(theta, x, ws);

    const int n_layers = static_cast<int>(spec_.layer_sizes.size()) - 1;
    const int m = output_dim();

    // sensitivity = du/dz_l, seeded with the squash derivative at the output.
    Matrix sensitivity = Matrix::Zero(m, m);
    for (int j = 0; j < m; ++j)
      sensitivity(j, j) =
          detail::squash_derivative(spec_.output_squash, spec_.u_max, ws.pre_activations.back()[j]);

    dudtheta = Matrix::Zero(m, param_dim_);
    for (int l = n_layers - 1; l >= 0; --l) {
      const int n_in = spec_.layer_sizes[static_cast<std::size_t>(l)];
      const int n_out = spec_.layer_sizes[static_cast<std::size_t>(l) + 1];
      const int offset = layer_offset(l);
      const Vector& input = ws.inputs[static_cast<std::size_t>(l)];

      for (int j = 0; j < m; ++j)
        for (int r = 0; r < n_out; ++r) {
          const double s = sensitivity(j, r);
          if (s == 0.0) continue;
          for (int c = 0; c < n_in; ++c) dudtheta(j, offset + r * n_in + c) = s * input[c];
          if (spec_.with_bias) dudtheta(j, offset + n_out * n_in + r) = s;
        }

      // Propagate through z_l = W_l input + b_l, then the previous layer's
      // activation.
      const auto weight = weight_view(theta, l);
      Matrix upstream = sensitivity * weight;  // m x n_in
      if (l > 0) {
        const Vector& z_prev = ws.pre_activations[static_cast<std::size_t>(l) - 1];
        if (spec_.hidden_activation == MlpActivation::tanh) {
          for (int c = 0; c < n_in; ++c) {
            const double th = std::tanh(z_prev[c]);
            upstream.col(c) *= (1.0 - th * th);
          }
        }
      }
      sensitivity = std::move(upstream);
    }
    dudx = sensitivity;  // after the loop this is du/d(input features)
  }

 private:
  struct Workspace {
    std::vector<Vector> inputs;           // a_{l-1} per layer
    std::vector<Vector> pre_activations;  // z_l per layer
    Vector output;
  };

  int layer_offset(int layer) const {
    int offset = 0;
    for (int l = 0; l < layer; ++l) {
      const int n_in = spec_.layer_sizes[static_cast<std::size_t>(l)];
      const int n_out = spec_.layer_sizes[static_cast<std::size_t>(l) + 1];
      offset += n_out * n_in + (spec_.with_bias ? n_out : 0);
    }
    return offset;
  }

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  weight_view(const Vector& theta, int layer) const {
    const int n_in = spec_.layer_sizes[static_cast<std::size_t>(layer)];
    const int n_out = spec_.layer_sizes[static_cast<std::size_t>(layer) + 1];
    return {theta.data() + layer_offset(layer), n_out, n_in};
  }

  void run_forward(const Vector& theta, const Vector& x, Workspace& ws) const {
    if (theta.size() != param_dim_) throw std::invalid_argument("MlpPolicy: theta length mismatch");
    if (x.size() != input_dim()) throw std::invalid_argument("MlpPolicy: input length mismatch");

    const int n_layers = static_cast<int>(spec_.layer_sizes.size()) - 1;
    Vector activation = x;
    for (int l = 0; l < n_layers; ++l) {
      const int n_in = spec_.layer_sizes[static_cast<std::size_t>(l)];
      const int n_out = spec_.layer_sizes[static_cast<std::size_t>(l) + 1];
      ws.inputs.push_back(activation);

      Vector z = weight_view(theta, l) * activation;
      if (spec_.with_bias)
        z += theta.segment(layer_offset(l) + n_out * n_in, n_out);
      ws.pre_activations.push_back(z);

      if (l + 1 < n_layers) {
        activation = spec_.hidden_activation == MlpActivation::tanh
                         ? z.array().tanh().matrix().eval()
                         : z;
      } else {
        activation = z;
      }
    }

    ws.output.resize(output_dim());
    for (int j = 0; j < output_dim(); ++j)
      ws.output[j] = detail::squash_value(spec_.output_squash, spec_.u_max, activation[j]);
  }

  MlpSpec spec_;
  int param_dim_ = 0;
};

/// Adapts an MlpPolicy (plus a state encoder) to the Controller interface
/// consumed by rollout and the adjoint recursion.
class MlpController final : public Controller {
 public:
  MlpController(MlpPolicy policy, std::shared_ptr<const StateEncoder> encoder)
      : policy_(std::move(policy)), encoder_(std::move(encoder)) {
    if (encoder_->feature_dim() != policy_.input_dim())
      throw std::invalid_argument("MlpController: encoder/policy width mismatch");
  }

  const MlpPolicy& policy() const { return policy_; }
  int param_dim() const override { return policy_.param_dim(); }
  int control_dim() const override { return policy_.output_dim(); }

  Vector act(const Vector& theta, int, const Vector& x) const override {
    return policy_.forward(theta, encoder_->encode(x));
  }

  Matrix jac_state(const Vector& theta, int, const Vector& x) const override {
    Matrix dudfeat, dudtheta;
    policy_.jacobians(theta, encoder_->encode(x), dudfeat, dudtheta);
    return dudfeat * encoder_->encode_jac(x);
  }

  Matrix jac_params(const Vector& theta, int, const Vector& x) const override {
    Matrix dudfeat, dudtheta;
    policy_.jacobians(theta, encoder_->encode(x), dudfeat, dudtheta);
    return dudtheta;
  }

  void jacobians(const Vector& theta, int, const Vector& x, Matrix& jac_state_out,
                 Matrix& jac_params_out) const override {
    Matrix dudfeat;
    policy_.jacobians(theta, encoder_->encode(x), dudfeat, jac_params_out);
    jac_state_out = dudfeat * encoder_->encode_jac(x);
  }

 private:
  MlpPolicy policy_;
  std::shared_ptr<const StateEncoder> encoder_;
};

}  // namespace tsmc
