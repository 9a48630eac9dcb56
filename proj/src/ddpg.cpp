#include "ddafl/ddpg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ddafl/dense_net.hpp"
#include "ddafl/errors.hpp"
#include "ddafl/world.hpp"

namespace ddafl {

namespace {

constexpr double kActorOutputScale = 1e-2;

Eigen::MatrixXd stack_rows(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  if (top.cols() != bottom.cols()) throw ShapeError("state and action batches differ in size");
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

}  // namespace

SystemState build_state(const World& world, std::span<const double> prev_action) {
  const std::size_t k = world.vehicle_count();
  if (prev_action.size() != k) throw ShapeError("previous action has wrong length");
  SystemState s;
  s.prev_action.assign(prev_action.begin(), prev_action.end());
  for (const auto& p : world.profiles()) {
    s.rates.push_back(p.rate);
    s.computes.push_back(p.compute);
    s.x_coords.push_back(p.position.x);
  }
  return s;
}

Eigen::VectorXd observation(const SystemState& state, const StateScale& scale) {
  const std::size_t k = state.vehicle_count();
  if (state.computes.size() != k || state.x_coords.size() != k || state.prev_action.size() != k) {
    throw ShapeError("state blocks differ in length");
  }
  Eigen::VectorXd obs(static_cast<Eigen::Index>(4 * k));
  for (std::size_t i = 0; i < k; ++i) {
    const auto n = static_cast<Eigen::Index>(i);
    const auto kk = static_cast<Eigen::Index>(k);
    obs[n] = state.rates[i] / scale.rate;
    obs[kk + n] = state.computes[i] / scale.compute;
    obs[2 * kk + n] = state.x_coords[i] / scale.x;
    obs[3 * kk + n] = state.prev_action[i];
  }
  return obs;
}

AgentNets make_agent_nets(std::size_t vehicles, const std::vector<std::size_t>& hidden, std::uint64_t seed) {
  std::vector<std::size_t> actor_widths{4 * vehicles};
  std::vector<std::size_t> critic_widths{5 * vehicles};
  for (std::size_t h : hidden) {
    actor_widths.push_back(h);
    critic_widths.push_back(h);
  }
  actor_widths.push_back(vehicles);
  critic_widths.push_back(1);
  AgentNets nets;
  nets.actor = glorot_init(actor_widths, derive_seed({seed, 1}), kActorOutputScale);
  nets.critic = glorot_init(critic_widths, derive_seed({seed, 2}), kActorOutputScale);
  nets.target_actor = nets.actor;
  nets.target_critic = nets.critic;
  return nets;
}

Action actor_forward(const ModelParams& actor, const Eigen::VectorXd& obs) {
  Eigen::VectorXd a = forward_batch(actor, obs, OutputActivation::sigmoid).col(0);
  return Action(a.data(), a.data() + a.size());
}

Eigen::MatrixXd actor_forward_batch(const ModelParams& actor, const Eigen::MatrixXd& obs) {
  return forward_batch(actor, obs, OutputActivation::sigmoid);
}

Eigen::RowVectorXd critic_forward_batch(const ModelParams& critic, const Eigen::MatrixXd& obs,
                                        const Eigen::MatrixXd& actions) {
  return forward_batch(critic, stack_rows(obs, actions), OutputActivation::identity).row(0);
}

std::vector<double> ou_noise_step(std::span<const double> prev, double theta, double sigma, Rng& rng) {
  std::vector<double> next(prev.size());
  for (std::size_t i = 0; i < prev.size(); ++i) next[i] = prev[i] - theta * prev[i] + sigma * rng.normal();
  return next;
}

std::vector<bool> binarize_action(std::span<const double> lambdas) {
  std::vector<bool> mask(lambdas.size(), false);
  bool any = false;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    mask[i] = lambdas[i] >= 0.5;
    any = any || mask[i];
  }
  if (!any && !lambdas.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < lambdas.size(); ++i) {
      if (lambdas[i] > lambdas[best]) best = i;
    }
    mask[best] = true;
  }
  return mask;
}

std::vector<int> admitted_ids(const std::vector<bool>& mask) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) ids.push_back(static_cast<int>(i));
  }
  return ids;
}

double reward(std::span<const double> lambdas, const std::vector<bool>& mask, double avg_loss,
              std::span<const double> delays, double w1, double w2) {
  if (lambdas.size() != mask.size() || delays.size() != mask.size()) {
    throw ShapeError("reward: lambdas, mask and delays differ in length");
  }
  const double lambda_sum = std::accumulate(lambdas.begin(), lambdas.end(), 0.0);
  if (!(lambda_sum > 0.0)) throw std::invalid_argument("reward: selection probabilities sum to zero");
  double delay_sum = 0.0;
  std::size_t admitted = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    delay_sum += delays[i];
    ++admitted;
  }
  if (admitted == 0) throw std::invalid_argument("reward: no vehicle admitted");
  const double k = static_cast<double>(lambdas.size());
  return -(k / lambda_sum) * (w1 * avg_loss + w2 * delay_sum / static_cast<double>(admitted));
}

double target_value(double r, double gamma, double target_q_next) { return r + gamma * target_q_next; }

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, Rng& rng) const {
  if (count > items_.size()) throw std::invalid_argument("cannot sample more transitions than stored");
  // Partial Fisher-Yates over the index range.
  std::vector<std::size_t> pool(items_.size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

Minibatch gather(const ReplayBuffer& buffer, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("empty mini-batch");
  const Transition& first = buffer.at(indices.front());
  const auto n = static_cast<Eigen::Index>(indices.size());
  Minibatch b;
  b.states.resize(first.state.size(), n);
  b.actions.resize(first.action.size(), n);
  b.rewards.resize(n);
  b.next_states.resize(first.next_state.size(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = buffer.at(indices[static_cast<std::size_t>(i)]);
    b.states.col(i) = t.state;
    b.actions.col(i) = t.action;
    b.rewards[i] = t.reward;
    b.next_states.col(i) = t.next_state;
  }
  return b;
}

Eigen::RowVectorXd td_targets(const AgentNets& nets, const Minibatch& batch, double gamma) {
  Eigen::MatrixXd next_actions = actor_forward_batch(nets.target_actor, batch.next_states);
  Eigen::RowVectorXd q_next = critic_forward_batch(nets.target_critic, batch.next_states, next_actions);
  // No terminal flag: every slot bootstraps, including an episode's last.
  return batch.rewards + gamma * q_next;
}

CriticLoss critic_loss(const ModelParams& critic, const Minibatch& batch, const Eigen::RowVectorXd& targets) {
  ForwardTrace trace;
  Eigen::MatrixXd q = forward_batch(critic, stack_rows(batch.states, batch.actions), OutputActivation::identity, &trace);
  const double n = static_cast<double>(batch.size());
  Eigen::RowVectorXd err = q.row(0) - targets;
  CriticLoss out;
  out.loss = err.squaredNorm() / n;
  Eigen::MatrixXd delta = (2.0 / n) * err;
  out.grad = backward(critic, trace, delta).param_grad;
  return out;
}

double actor_objective(const ModelParams& actor, const ModelParams& critic, const Eigen::MatrixXd& states) {
  Eigen::MatrixXd a = actor_forward_batch(actor, states);
  return critic_forward_batch(critic, states, a).mean();
}

ModelParams actor_gradient(const ModelParams& actor, const ModelParams& critic, const Eigen::MatrixXd& states) {
  ForwardTrace actor_trace;
  Eigen::MatrixXd a = forward_batch(actor, states, OutputActivation::sigmoid, &actor_trace);
  ForwardTrace critic_trace;
  Eigen::MatrixXd q = forward_batch(critic, stack_rows(states, a), OutputActivation::identity, &critic_trace);
  const double n = static_cast<double>(states.cols());
  Eigen::MatrixXd dq = Eigen::MatrixXd::Constant(1, q.cols(), 1.0 / n);
  Eigen::MatrixXd input_grad = backward(critic, critic_trace, dq).input_grad;
  Eigen::MatrixXd da = input_grad.bottomRows(a.rows());
  // Through the sigmoid: d a / d z = a (1 - a).
  Eigen::MatrixXd dz = da.cwiseProduct(a.cwiseProduct((1.0 - a.array()).matrix()));
  return backward(actor, actor_trace, dz).param_grad;
}

void soft_update(const ModelParams& online, ModelParams& target, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in (0, 1]");
  require_same_shape(online, target, "soft_update");
  for (std::size_t l = 0; l < online.layer_count(); ++l) {
    target.weights[l] = tau * online.weights[l] + (1.0 - tau) * target.weights[l];
    target.biases[l] = tau * online.biases[l] + (1.0 - tau) * target.biases[l];
  }
}

Optimizer::Optimizer(Kind kind, double learning_rate) : kind_(kind), lr_(learning_rate) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
}

Optimizer::Kind Optimizer::parse_kind(const std::string& name) {
  if (name == "adam") return Kind::adam;
  if (name == "sgd") return Kind::sgd;
  throw std::invalid_argument("unknown optimizer: " + name);
}

void Optimizer::descend(ModelParams& params, const ModelParams& g) {
  require_same_shape(params, g, "Optimizer::descend");
  ++t_;
  if (kind_ == Kind::sgd) {
    add_scaled(params, -lr_, g);
    return;
  }
  constexpr double b1 = 0.9;
  constexpr double b2 = 0.999;
  constexpr double eps = 1e-8;
  if (m_.widths.empty()) {
    m_ = ModelParams::zeros(params.widths);
    v_ = ModelParams::zeros(params.widths);
  }
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double step = lr_ * std::sqrt(c2) / c1;
  auto apply = [&](auto& p, auto& m, auto& v, const auto& grad) {
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseAbs2();
    p.array() -= step * m.array() / (v.array().sqrt() + eps);
  };
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    apply(params.weights[l], m_.weights[l], v_.weights[l], g.weights[l]);
    apply(params.biases[l], m_.biases[l], v_.biases[l], g.biases[l]);
  }
}

double critic_update(AgentNets& nets, const Minibatch& batch, double gamma, Optimizer& opt) {
  Eigen::RowVectorXd targets = td_targets(nets, batch, gamma);
  CriticLoss cl = critic_loss(nets.critic, batch, targets);
  opt.descend(nets.critic, cl.grad);
  return cl.loss;
}

double actor_update(AgentNets& nets, const Minibatch& batch, Optimizer& opt) {
  const double before = actor_objective(nets.actor, nets.critic, batch.states);
  ModelParams ascent = actor_gradient(nets.actor, nets.critic, batch.states);
  opt.descend(nets.actor, scaled(ascent, -1.0));
  return before;
}

}  // namespace ddafl
