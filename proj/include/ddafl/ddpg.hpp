#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ddafl/model_params.hpp"
#include "ddafl/rng.hpp"

namespace ddafl {

class World;

// Raw observation: per-vehicle rate, compute, x-coordinate and the previous
// action. Each block has one entry per vehicle.
struct SystemState {
  std::vector<double> rates;
  std::vector<double> computes;
  std::vector<double> x_coords;
  std::vector<double> prev_action;

  std::size_t vehicle_count() const { return rates.size(); }
};

// Fixed per-block divisors that bring network inputs to O(1).
struct StateScale {
  double rate = 40'000.0;
  double compute = 3e9;
  double x = 250.0;
};

SystemState build_state(const World& world, std::span<const double> prev_action);
// [rates | computes | x | prev_action], each block divided by its scale.
Eigen::VectorXd observation(const SystemState& state, const StateScale& scale);

// Per-vehicle selection probabilities lambda_n in [0, 1].
using Action = std::vector<double>;

struct AgentNets {
  ModelParams actor;          // 4K -> ... -> K, sigmoid output
  ModelParams critic;         // 5K -> ... -> 1, linear output; input is [state; action]
  ModelParams target_actor;
  ModelParams target_critic;
};

// Online nets get Glorot weights with a shrunken output layer; targets start
// as exact copies.
AgentNets make_agent_nets(std::size_t vehicles, const std::vector<std::size_t>& hidden, std::uint64_t seed);

Action actor_forward(const ModelParams& actor, const Eigen::VectorXd& obs);
Eigen::MatrixXd actor_forward_batch(const ModelParams& actor, const Eigen::MatrixXd& obs);
Eigen::RowVectorXd critic_forward_batch(const ModelParams& critic, const Eigen::MatrixXd& obs,
                                        const Eigen::MatrixXd& actions);

// n' = n - theta * n + sigma * N(0, 1), per component.
std::vector<double> ou_noise_step(std::span<const double> prev, double theta, double sigma, Rng& rng);

// lambda_n >= 0.5 admits vehicle n. If nothing is admitted, the vehicle with
// the largest lambda (lowest id on ties) is admitted alone.
std::vector<bool> binarize_action(std::span<const double> lambdas);
std::vector<int> admitted_ids(const std::vector<bool>& mask);

// -(K / sum lambda) * [w1 * loss + w2 * mean admitted delay].
double reward(std::span<const double> lambdas, const std::vector<bool>& mask, double avg_loss,
              std::span<const double> delays, double w1, double w2);

double target_value(double r, double gamma, double target_q_next);

struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward = 0.0;
  Eigen::VectorXd next_state;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return items_.at(i); }
  // count distinct indices, uniform without replacement.
  std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

// Column-stacked mini-batch.
struct Minibatch {
  Eigen::MatrixXd states;       // 4K x I
  Eigen::MatrixXd actions;      // K x I
  Eigen::RowVectorXd rewards;   // 1 x I
  Eigen::MatrixXd next_states;  // 4K x I

  std::size_t size() const { return static_cast<std::size_t>(rewards.size()); }
};

Minibatch gather(const ReplayBuffer& buffer, std::span<const std::size_t> indices);

// y_i = r_i + gamma * Q'(s'_i, mu'(s'_i)) from the target nets.
Eigen::RowVectorXd td_targets(const AgentNets& nets, const Minibatch& batch, double gamma);

struct CriticLoss {
  double loss = 0.0;
  ModelParams grad;  // d loss / d critic params
};

// Mean squared TD error against fixed targets, and its gradient.
CriticLoss critic_loss(const ModelParams& critic, const Minibatch& batch, const Eigen::RowVectorXd& targets);

// Sampled policy objective: mean over the batch of Q(s_i, mu(s_i)).
double actor_objective(const ModelParams& actor, const ModelParams& critic, const Eigen::MatrixXd& states);
// Gradient of actor_objective with respect to the actor, chained through
// the critic's action input.
ModelParams actor_gradient(const ModelParams& actor, const ModelParams& critic, const Eigen::MatrixXd& states);

// target <- tau * online + (1 - tau) * target
void soft_update(const ModelParams& online, ModelParams& target, double tau);

// First-order optimizer over a ModelParams-shaped parameter set.
class Optimizer {
 public:
  enum class Kind { sgd, adam };

  Optimizer(Kind kind, double learning_rate);
  static Kind parse_kind(const std::string& name);

  // Moves params against descent_grad.
  void descend(ModelParams& params, const ModelParams& descent_grad);
  double learning_rate() const { return lr_; }
  std::size_t steps() const { return t_; }

 private:
  Kind kind_;
  double lr_;
  std::size_t t_ = 0;
  ModelParams m_;
  ModelParams v_;
};

// One descent step on the critic's TD loss; returns the loss before the step.
double critic_update(AgentNets& nets, const Minibatch& batch, double gamma, Optimizer& opt);
// One ascent step on the sampled policy objective; returns it before the step.
double actor_update(AgentNets& nets, const Minibatch& batch, Optimizer& opt);

}  // namespace ddafl
