#pragma once

#include <Eigen/Core>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hsc/errors.hpp"
#include "hsc/rng.hpp"

namespace hsc {

enum class Activation { Relu, Tanh, Linear };

struct LayerSpec {
  int in_dim;   // full input width, including any injected auxiliary input
  int out_dim;
  Activation act;
};

// Dense multilayer perceptron with an optional auxiliary input concatenated
// into one layer (used for the critic's action injection). Plain data:
// copyable, comparable, serializable.
struct Mlp {
  std::vector<LayerSpec> specs;
  int aux_layer = -1;  // layer index whose input the aux vector joins, -1 = none
  int aux_dim = 0;
  std::vector<Eigen::MatrixXd> weights;  // out_dim x in_dim
  std::vector<Eigen::VectorXd> biases;

  int input_dim() const { return specs.front().in_dim; }
  int output_dim() const { return specs.back().out_dim; }
};

// Hidden layers uniform in +-1/sqrt(fan_in), final layer uniform in +-3e-3.
Mlp make_mlp(const std::vector<LayerSpec>& specs, int aux_layer, int aux_dim,
             Rng& rng);

struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;   // per layer, post-concatenation
  std::vector<Eigen::MatrixXd> preacts;  // per layer
};

// Batched forward pass; columns are samples. aux may be null when the
// network declares no injection. cache may be null when no backward follows.
Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& input,
                            const Eigen::MatrixXd* aux, ForwardCache* cache);

struct MlpGrads {
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::VectorXd> d_biases;
};

MlpGrads zero_grads(const Mlp& net);

// Exact gradients of sum over the batch of output . upstream, accumulated
// into grads. Optionally also returns gradients w.r.t. the primary input and
// the auxiliary input.
void mlp_backward(const Mlp& net, const ForwardCache& cache,
                  const Eigen::MatrixXd& upstream, MlpGrads& grads,
                  Eigen::MatrixXd* input_grad = nullptr,
                  Eigen::MatrixXd* aux_grad = nullptr);

struct AdamState {
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam_state(const Mlp& net);

// One bias-corrected Adam update along -grads.
void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state, double lr);

// target <- target + tau * (online - target), every parameter.
void soft_update(Mlp& target, const Mlp& online, double tau);

// Central finite-difference verification of an analytic gradient. loss is
// re-evaluated with single parameters perturbed by +-h; returns the max
// relative error over every parameter (or a strided sample if stride > 1).
double gradient_check(const Mlp& net, const MlpGrads& analytic,
                      const std::function<double(const Mlp&)>& loss,
                      double h = 1e-5, int stride = 1);

// Text tensor format: header with layer specs, then row-major weights and
// biases per layer, full precision.
void save_mlp(std::ostream& os, const Mlp& net);
Mlp load_mlp(std::istream& is);
void save_adam_state(std::ostream& os, const AdamState& state);
AdamState load_adam_state(std::istream& is, const Mlp& net);

}  // namespace hsc
