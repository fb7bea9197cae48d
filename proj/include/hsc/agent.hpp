#pragma once

#include <iosfwd>
#include <vector>

#include "hsc/mlp.hpp"
#include "hsc/reward.hpp"
#include "hsc/rng.hpp"
#include "hsc/vecmath.hpp"

namespace hsc {

// Replay tuple (s, a, r, s', absorbing). The stored action is the normalized
// pre-scaling action in [-1,1]^3, not the physical force.
struct Transition {
  StateVector state;
  Vec3 action;
  double reward = 0.0;
  StateVector next_state;
  bool absorbing = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 1'000'000) : capacity_(capacity) {}

  void push(const Transition& t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return data_[i]; }

  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;  // ring cursor once full
  std::vector<Transition> data_;
};

// Order-p autoregressive Gaussian exploration noise with all poles at alpha:
// X_t = sum_i phi_i X_{t-i} + Z_t. The innovation variance is solved so the
// stationary marginal std equals the configured sigma.
class ArpNoise {
 public:
  ArpNoise(int order, double alpha, double sigma);

  Vec3 next(Rng& rng);
  void reset();  // clear history at episode boundaries

  const std::vector<double>& coefficients() const { return coeffs_; }
  double innovation_std() const { return sigma_z_; }
  double sigma() const { return sigma_; }

 private:
  int order_;
  double sigma_;
  double sigma_z_;
  std::vector<double> coeffs_;
  std::vector<std::vector<double>> history_;  // per dimension, newest first
};

struct DdpgConfig {
  int state_dim = 7;
  int action_dim = 3;
  int hidden1 = 400;
  int hidden2 = 300;
  double gamma = 0.99;
  double tau = 0.01;
  int batch_size = 64;
  double actor_lr = 2e-4;
  double critic_lr = 1e-3;
  ForceLimits limits;

  void validate() const;
};

struct ActionResult {
  Vec3 normalized;  // in [-1,1]^3, what the replay buffer stores
  Vec3 force;       // physical, clipped [N]
};

// Actor-critic pair with slowly tracking target copies, trained off-policy
// from uniformly sampled minibatches.
class DdpgAgent {
 public:
  DdpgAgent(const DdpgConfig& cfg, Rng& rng);

  // tanh-bounded actor output, optionally perturbed by exploration noise,
  // clamped to [-1,1]^3 and scaled to Newtons.
  ActionResult select_action(const StateVector& s, ArpNoise* noise, Rng& rng,
                             bool explore) const;

  // One critic and one actor Adam step plus target soft updates.
  // Returns false (no-op) while the buffer holds fewer than batch_size samples.
  bool train_minibatch(const ReplayBuffer& buffer, Rng& rng);

  // Success/Unsuccess: adjust the last reward, mark it absorbing and append
  // the trajectory. Fail: discard, buffer untouched.
  static void finalize_episode(ReplayBuffer& buffer,
                               std::vector<Transition> trajectory,
                               EpisodeOutcome outcome);

  const DdpgConfig& config() const { return cfg_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  const Mlp& target_actor() const { return target_actor_; }
  const Mlp& target_critic() const { return target_critic_; }

  Eigen::VectorXd actor_forward(const StateVector& s) const;
  double critic_value(const StateVector& s, const Vec3& a) const;

  void save_checkpoint(std::ostream& os) const;
  void load_checkpoint(std::istream& is);

 private:
  DdpgConfig cfg_;
  Mlp actor_, critic_, target_actor_, target_critic_;
  AdamState actor_opt_, critic_opt_;
};

}  // namespace hsc
