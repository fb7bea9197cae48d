#include "hsc/agent.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace hsc {

void ReplayBuffer::push(const Transition& t) {
  if (data_.size() < capacity_) {
    data_.push_back(t);
  } else {
    data_[next_] = t;
    next_ = (next_ + 1) % capacity_;
  }
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (size() < n)
    throw ContractError("replay buffer: fewer samples than requested");
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = rng.index(size());
  return idx;
}

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Stationary variance of the AR process for unit innovation variance, from
// the Yule-Walker equations in the autocovariances g_0..g_p.
double stationary_variance_ratio(const std::vector<double>& coeffs) {
  const int p = static_cast<int>(coeffs.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p + 1, p + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p + 1);
  // g_0 - sum_i phi_i g_i = sigma_z^2
  a(0, 0) = 1.0;
  for (int i = 1; i <= p; ++i) a(0, i) -= coeffs[i - 1];
  rhs(0) = 1.0;
  // g_k - sum_i phi_i g_|k-i| = 0, k = 1..p
  for (int k = 1; k <= p; ++k) {
    a(k, k) += 1.0;
    for (int i = 1; i <= p; ++i) a(k, std::abs(k - i)) -= coeffs[i - 1];
  }
  Eigen::VectorXd g = a.fullPivLu().solve(rhs);
  return g(0);
}

}  // namespace

ArpNoise::ArpNoise(int order, double alpha, double sigma)
    : order_(order), sigma_(sigma) {
  if (order < 1) throw ConfigError("arp noise: order must be >= 1");
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw ConfigError("arp noise: alpha must be in [0, 1)");
  if (!(sigma >= 0.0)) throw ConfigError("arp noise: sigma must be >= 0");
  // (1 - alpha B)^p expanded: phi_i = -binom(p, i) (-alpha)^i.
  coeffs_.resize(order);
  for (int i = 1; i <= order; ++i)
    coeffs_[i - 1] = -binomial(order, i) * std::pow(-alpha, i);
  const double ratio = stationary_variance_ratio(coeffs_);
  if (!(ratio > 0.0) || !std::isfinite(ratio))
    throw ConfigError("arp noise: process is not stationary");
  sigma_z_ = sigma / std::sqrt(ratio);
  reset();
}

void ArpNoise::reset() {
  history_.assign(3, std::vector<double>(order_, 0.0));
}

Vec3 ArpNoise::next(Rng& rng) {
  double out[3];
  for (int d = 0; d < 3; ++d) {
    auto& h = history_[d];
    double x = sigma_z_ * rng.normal();
    for (int i = 0; i < order_; ++i) x += coeffs_[i] * h[i];
    for (int i = order_ - 1; i > 0; --i) h[i] = h[i - 1];
    h[0] = x;
    out[d] = x;
  }
  return {out[0], out[1], out[2]};
}

void DdpgConfig::validate() const {
  if (state_dim < 1 || action_dim < 1 || hidden1 < 1 || hidden2 < 1)
    throw ConfigError("ddpg: network dims must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("ddpg: gamma must be in (0,1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("ddpg: tau must be in (0,1]");
  if (batch_size < 1) throw ConfigError("ddpg: batch size must be >= 1");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0))
    throw ConfigError("ddpg: learning rates must be > 0");
  limits.validate();
}

DdpgAgent::DdpgAgent(const DdpgConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  const std::vector<LayerSpec> actor_specs = {
      {cfg.state_dim, cfg.hidden1, Activation::Relu},
      {cfg.hidden1, cfg.hidden2, Activation::Relu},
      {cfg.hidden2, cfg.action_dim, Activation::Tanh}};
  // Action concatenated into the second hidden layer's input.
  const std::vector<LayerSpec> critic_specs = {
      {cfg.state_dim, cfg.hidden1, Activation::Relu},
      {cfg.hidden1 + cfg.action_dim, cfg.hidden2, Activation::Relu},
      {cfg.hidden2, 1, Activation::Linear}};
  actor_ = make_mlp(actor_specs, -1, 0, rng);
  critic_ = make_mlp(critic_specs, 1, cfg.action_dim, rng);
  target_actor_ = actor_;
  target_critic_ = critic_;
  actor_opt_ = make_adam_state(actor_);
  critic_opt_ = make_adam_state(critic_);
}

Eigen::VectorXd DdpgAgent::actor_forward(const StateVector& s) const {
  Eigen::VectorXd in(cfg_.state_dim);
  for (int i = 0; i < cfg_.state_dim; ++i) in(i) = s[static_cast<std::size_t>(i)];
  return mlp_forward(actor_, in, nullptr, nullptr);
}

double DdpgAgent::critic_value(const StateVector& s, const Vec3& a) const {
  Eigen::VectorXd in(cfg_.state_dim);
  for (int i = 0; i < cfg_.state_dim; ++i) in(i) = s[static_cast<std::size_t>(i)];
  Eigen::MatrixXd act(3, 1);
  act << a.x, a.y, a.z;
  return mlp_forward(critic_, in, &act, nullptr)(0, 0);
}

ActionResult DdpgAgent::select_action(const StateVector& s, ArpNoise* noise,
                                      Rng& rng, bool explore) const {
  Eigen::VectorXd a = actor_forward(s);
  Vec3 n{a(0), a(1), a(2)};
  if (explore) {
    if (!noise) throw ContractError("select_action: exploration needs a noise source");
    n = n + noise->next(rng);
  }
  n = {std::clamp(n.x, -1.0, 1.0), std::clamp(n.y, -1.0, 1.0),
       std::clamp(n.z, -1.0, 1.0)};
  const Vec3 force = clip_force({n.x * cfg_.limits.f_max.x,
                                 n.y * cfg_.limits.f_max.y,
                                 n.z * cfg_.limits.f_max.z},
                                cfg_.limits);
  return {n, force};
}

void DdpgAgent::finalize_episode(ReplayBuffer& buffer,
                                 std::vector<Transition> trajectory,
                                 EpisodeOutcome outcome) {
  if (trajectory.empty())
    throw ContractError("finalize_episode: empty trajectory");
  if (outcome == EpisodeOutcome::Fail) return;  // discarded, buffer untouched
  trajectory.back().reward += terminal_adjustment(outcome);
  trajectory.back().absorbing = true;
  for (const auto& t : trajectory) buffer.push(t);
}

bool DdpgAgent::train_minibatch(const ReplayBuffer& buffer, Rng& rng) {
  const int n = cfg_.batch_size;
  if (buffer.size() < static_cast<std::size_t>(n)) return false;
  const auto idx = buffer.sample_indices(static_cast<std::size_t>(n), rng);

  Eigen::MatrixXd s(cfg_.state_dim, n), s2(cfg_.state_dim, n);
  Eigen::MatrixXd a(cfg_.action_dim, n);
  Eigen::VectorXd r(n), live(n);
  for (int i = 0; i < n; ++i) {
    const Transition& t = buffer.at(idx[static_cast<std::size_t>(i)]);
    for (int j = 0; j < cfg_.state_dim; ++j) {
      s(j, i) = t.state[static_cast<std::size_t>(j)];
      s2(j, i) = t.next_state[static_cast<std::size_t>(j)];
    }
    a(0, i) = t.action.x;
    a(1, i) = t.action.y;
    a(2, i) = t.action.z;
    r(i) = t.reward;
    live(i) = t.absorbing ? 0.0 : 1.0;
  }

  // y_i = r_i + gamma Q'(s', mu'(s')) for live transitions, else r_i.
  const Eigen::MatrixXd a2 = mlp_forward(target_actor_, s2, nullptr, nullptr);
  const Eigen::MatrixXd q2 = mlp_forward(target_critic_, s2, &a2, nullptr);
  const Eigen::VectorXd y =
      r + cfg_.gamma * (live.array() * q2.row(0).transpose().array()).matrix();

  // Critic step on mean squared error.
  ForwardCache critic_cache;
  const Eigen::MatrixXd q = mlp_forward(critic_, s, &a, &critic_cache);
  Eigen::MatrixXd upstream = (2.0 / n) * (q.row(0).transpose() - y).transpose();
  MlpGrads critic_grads = zero_grads(critic_);
  mlp_backward(critic_, critic_cache, upstream, critic_grads);
  adam_step(critic_, critic_grads, critic_opt_, cfg_.critic_lr);

  // Actor step along the sampled deterministic policy gradient.
  ForwardCache actor_cache;
  const Eigen::MatrixXd a_mu = mlp_forward(actor_, s, nullptr, &actor_cache);
  ForwardCache q_cache;
  mlp_forward(critic_, s, &a_mu, &q_cache);
  Eigen::MatrixXd ones = Eigen::MatrixXd::Constant(1, n, 1.0 / n);
  MlpGrads scratch = zero_grads(critic_);
  Eigen::MatrixXd dq_da;
  mlp_backward(critic_, q_cache, ones, scratch, nullptr, &dq_da);
  MlpGrads actor_grads = zero_grads(actor_);
  mlp_backward(actor_, actor_cache, dq_da, actor_grads);
  for (auto& g : actor_grads.d_weights) g = -g;  // ascent on mean Q
  for (auto& g : actor_grads.d_biases) g = -g;
  adam_step(actor_, actor_grads, actor_opt_, cfg_.actor_lr);

  soft_update(target_actor_, actor_, cfg_.tau);
  soft_update(target_critic_, critic_, cfg_.tau);
  return true;
}

void DdpgAgent::save_checkpoint(std::ostream& os) const {
  save_mlp(os, actor_);
  save_mlp(os, critic_);
  save_mlp(os, target_actor_);
  save_mlp(os, target_critic_);
  save_adam_state(os, actor_opt_);
  save_adam_state(os, critic_opt_);
}

void DdpgAgent::load_checkpoint(std::istream& is) {
  Mlp actor = load_mlp(is);
  Mlp critic = load_mlp(is);
  Mlp t_actor = load_mlp(is);
  Mlp t_critic = load_mlp(is);
  if (actor.input_dim() != cfg_.state_dim ||
      actor.output_dim() != cfg_.action_dim || critic.aux_dim != cfg_.action_dim)
    throw IoError("checkpoint does not match the configured architecture");
  actor_opt_ = load_adam_state(is, actor);
  critic_opt_ = load_adam_state(is, critic);
  actor_ = std::move(actor);
  critic_ = std::move(critic);
  target_actor_ = std::move(t_actor);
  target_critic_ = std::move(t_critic);
}

}  // namespace hsc
