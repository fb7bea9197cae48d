#include "hsc/mlp.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace hsc {

namespace {

Eigen::MatrixXd apply_activation(Activation act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::Relu:
      return z.cwiseMax(0.0);
    case Activation::Tanh:
      return z.array().tanh().matrix();
    case Activation::Linear:
      return z;
  }
  throw ContractError("unknown activation");
}

// dL/dz from dL/da and the pre-activation.
Eigen::MatrixXd activation_backward(Activation act, const Eigen::MatrixXd& z,
                                    const Eigen::MatrixXd& upstream) {
  switch (act) {
    case Activation::Relu:
      return (z.array() > 0.0).select(upstream, 0.0);
    case Activation::Tanh: {
      Eigen::ArrayXXd t = z.array().tanh();
      return (upstream.array() * (1.0 - t * t)).matrix();
    }
    case Activation::Linear:
      return upstream;
  }
  throw ContractError("unknown activation");
}

void check_specs(const std::vector<LayerSpec>& specs, int aux_layer, int aux_dim) {
  if (specs.empty()) throw ContractError("mlp: no layers");
  for (const auto& s : specs)
    if (s.in_dim < 1 || s.out_dim < 1)
      throw ContractError("mlp: layer dims must be >= 1");
  if (aux_layer == 0)
    throw ContractError("mlp: aux injection into the input layer is unsupported");
  if (aux_layer >= static_cast<int>(specs.size()))
    throw ContractError("mlp: aux layer out of range");
  if ((aux_layer >= 0) != (aux_dim > 0))
    throw ContractError("mlp: aux layer and aux dim must be set together");
  for (std::size_t i = 1; i < specs.size(); ++i) {
    int expected = specs[i - 1].out_dim;
    if (static_cast<int>(i) == aux_layer) expected += aux_dim;
    if (specs[i].in_dim != expected)
      throw ContractError("mlp: layer " + std::to_string(i) +
                          " input width inconsistent with previous layer");
  }
}

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Linear: return "linear";
  }
  return "?";
}

Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  if (s == "linear") return Activation::Linear;
  throw IoError("unknown activation name: " + s);
}

void write_value(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

Mlp make_mlp(const std::vector<LayerSpec>& specs, int aux_layer, int aux_dim,
             Rng& rng) {
  check_specs(specs, aux_layer, aux_dim);
  Mlp net;
  net.specs = specs;
  net.aux_layer = aux_layer;
  net.aux_dim = aux_dim;
  const std::size_t last = specs.size() - 1;
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const double bound =
        (l == last) ? 3e-3 : 1.0 / std::sqrt(static_cast<double>(specs[l].in_dim));
    Eigen::MatrixXd w(specs[l].out_dim, specs[l].in_dim);
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
    Eigen::VectorXd b(specs[l].out_dim);
    for (int i = 0; i < b.size(); ++i) b(i) = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& input,
                            const Eigen::MatrixXd* aux, ForwardCache* cache) {
  if (input.rows() != net.input_dim())
    throw ContractError("mlp_forward: input dim mismatch");
  if (net.aux_layer >= 0) {
    if (!aux || aux->rows() != net.aux_dim || aux->cols() != input.cols())
      throw ContractError("mlp_forward: aux input shape mismatch");
  } else if (aux) {
    throw ContractError("mlp_forward: network declares no aux input");
  }

  if (cache) {
    cache->inputs.clear();
    cache->preacts.clear();
  }
  Eigen::MatrixXd x = input;
  for (std::size_t l = 0; l < net.specs.size(); ++l) {
    if (static_cast<int>(l) == net.aux_layer) {
      Eigen::MatrixXd joined(x.rows() + aux->rows(), x.cols());
      joined << x, *aux;
      x = std::move(joined);
    }
    Eigen::MatrixXd z = net.weights[l] * x;
    z.colwise() += net.biases[l];
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->preacts.push_back(z);
    }
    x = apply_activation(net.specs[l].act, z);
  }
  return x;
}

MlpGrads zero_grads(const Mlp& net) {
  MlpGrads g;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    g.d_weights.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(),
                                                net.weights[l].cols()));
    g.d_biases.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  return g;
}

void mlp_backward(const Mlp& net, const ForwardCache& cache,
                  const Eigen::MatrixXd& upstream, MlpGrads& grads,
                  Eigen::MatrixXd* input_grad, Eigen::MatrixXd* aux_grad) {
  if (cache.inputs.size() != net.specs.size())
    throw ContractError("mlp_backward: cache does not match network");
  if (upstream.rows() != net.output_dim() ||
      upstream.cols() != cache.inputs.front().cols())
    throw ContractError("mlp_backward: upstream shape mismatch");
  if (grads.d_weights.size() != net.weights.size())
    throw ContractError("mlp_backward: grads shape mismatch");

  Eigen::MatrixXd delta = upstream;
  for (int l = static_cast<int>(net.specs.size()) - 1; l >= 0; --l) {
    delta = activation_backward(net.specs[l].act, cache.preacts[l], delta);
    grads.d_weights[l].noalias() += delta * cache.inputs[l].transpose();
    grads.d_biases[l] += delta.rowwise().sum();
    if (l == 0 && !input_grad && !(net.aux_layer == 0)) break;
    Eigen::MatrixXd down = net.weights[l].transpose() * delta;
    if (l == net.aux_layer) {
      const int main_rows = static_cast<int>(down.rows()) - net.aux_dim;
      if (aux_grad) *aux_grad = down.bottomRows(net.aux_dim);
      down = down.topRows(main_rows).eval();
    }
    if (l == 0) {
      if (input_grad) *input_grad = std::move(down);
      break;
    }
    delta = std::move(down);
  }
}

AdamState make_adam_state(const Mlp& net) {
  AdamState s;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    s.m_w.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    s.v_w.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    s.m_b.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    s.v_b.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  return s;
}

void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state, double lr) {
  if (grads.d_weights.size() != net.weights.size())
    throw ContractError("adam_step: grads shape mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = state.beta1 * m + (1.0 - state.beta1) * grad;
    v = (state.beta2 * v.array() + (1.0 - state.beta2) * grad.array().square()).matrix();
    param.array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.eps);
  };
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    update(net.weights[l], grads.d_weights[l], state.m_w[l], state.v_w[l]);
    update(net.biases[l], grads.d_biases[l], state.m_b[l], state.v_b[l]);
  }
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (target.weights.size() != online.weights.size())
    throw ContractError("soft_update: shape mismatch");
  for (std::size_t l = 0; l < target.weights.size(); ++l) {
    if (target.weights[l].rows() != online.weights[l].rows() ||
        target.weights[l].cols() != online.weights[l].cols())
      throw ContractError("soft_update: shape mismatch");
    target.weights[l] += tau * (online.weights[l] - target.weights[l]);
    target.biases[l] += tau * (online.biases[l] - target.biases[l]);
  }
}

double gradient_check(const Mlp& net, const MlpGrads& analytic,
                      const std::function<double(const Mlp&)>& loss,
                      double h, int stride) {
  Mlp probe = net;
  double worst = 0.0;
  auto check_one = [&](double& slot, double analytic_value) {
    const double saved = slot;
    slot = saved + h;
    const double up = loss(probe);
    slot = saved - h;
    const double down = loss(probe);
    slot = saved;
    const double numeric = (up - down) / (2.0 * h);
    // central differences on an O(1) loss carry ~eps^(2/3) roundoff noise;
    // the floor keeps near-zero gradients (dead relu paths) from reading
    // that noise as a large relative error
    const double denom =
        std::max({std::abs(analytic_value), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic_value - numeric) / denom);
  };
  int counter = 0;
  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    auto& w = probe.weights[l];
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j)
        if (counter++ % stride == 0) check_one(w(i, j), analytic.d_weights[l](i, j));
    auto& b = probe.biases[l];
    for (int i = 0; i < b.size(); ++i)
      if (counter++ % stride == 0) check_one(b(i), analytic.d_biases[l](i));
  }
  return worst;
}

void save_mlp(std::ostream& os, const Mlp& net) {
  os << "mlp 1\n";
  os << "layers " << net.specs.size() << "\n";
  for (const auto& s : net.specs)
    os << "layer " << s.in_dim << " " << s.out_dim << " "
       << activation_name(s.act) << "\n";
  os << "aux " << net.aux_layer << " " << net.aux_dim << "\n";
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto& w = net.weights[l];
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) {
        write_value(os, w(i, j));
        os << "\n";
      }
    for (int i = 0; i < net.biases[l].size(); ++i) {
      write_value(os, net.biases[l](i));
      os << "\n";
    }
  }
}

Mlp load_mlp(std::istream& is) {
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "mlp" || version != 1)
    throw IoError("tensor file: bad header");
  std::size_t n_layers = 0;
  if (!(is >> tag >> n_layers) || tag != "layers" || n_layers == 0)
    throw IoError("tensor file: bad layer count");
  std::vector<LayerSpec> specs;
  for (std::size_t l = 0; l < n_layers; ++l) {
    int in = 0, out = 0;
    std::string act;
    if (!(is >> tag >> in >> out >> act) || tag != "layer")
      throw IoError("tensor file: bad layer spec");
    specs.push_back({in, out, activation_from_name(act)});
  }
  int aux_layer = -1, aux_dim = 0;
  if (!(is >> tag >> aux_layer >> aux_dim) || tag != "aux")
    throw IoError("tensor file: bad aux spec");
  check_specs(specs, aux_layer, aux_dim);

  Mlp net;
  net.specs = specs;
  net.aux_layer = aux_layer;
  net.aux_dim = aux_dim;
  for (const auto& s : specs) {
    Eigen::MatrixXd w(s.out_dim, s.in_dim);
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j)
        if (!(is >> w(i, j))) throw IoError("tensor file: truncated weights");
    Eigen::VectorXd b(s.out_dim);
    for (int i = 0; i < b.size(); ++i)
      if (!(is >> b(i))) throw IoError("tensor file: truncated biases");
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

void save_adam_state(std::ostream& os, const AdamState& s) {
  os << "adam " << s.step << " ";
  write_value(os, s.beta1);
  os << " ";
  write_value(os, s.beta2);
  os << " ";
  write_value(os, s.eps);
  os << "\n";
  auto dump = [&](const auto& seq) {
    for (const auto& t : seq)
      for (int i = 0; i < t.rows(); ++i)
        for (int j = 0; j < t.cols(); ++j) {
          write_value(os, t(i, j));
          os << "\n";
        }
  };
  dump(s.m_w);
  dump(s.v_w);
  dump(s.m_b);
  dump(s.v_b);
}

AdamState load_adam_state(std::istream& is, const Mlp& net) {
  std::string tag;
  AdamState s = make_adam_state(net);
  if (!(is >> tag >> s.step >> s.beta1 >> s.beta2 >> s.eps) || tag != "adam")
    throw IoError("tensor file: bad optimizer header");
  auto fill = [&](auto& seq) {
    for (auto& t : seq)
      for (int i = 0; i < t.rows(); ++i)
        for (int j = 0; j < t.cols(); ++j)
          if (!(is >> t(i, j))) throw IoError("tensor file: truncated optimizer state");
  };
  fill(s.m_w);
  fill(s.v_w);
  fill(s.m_b);
  fill(s.v_b);
  return s;
}

}  // namespace hsc
