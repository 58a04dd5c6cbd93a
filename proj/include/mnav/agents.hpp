#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mnav/common.hpp"
#include "mnav/mdp.hpp"
#include "mnav/nn.hpp"
#include "mnav/robot.hpp"

namespace mnav {

// Replay record. done marks true terminals (arrived/collided); time-limit
// truncation keeps done=false so bootstrapping continues through it.
struct Transition {
  std::vector<double> state;
  std::array<double, 2> action;  // normalized policy output in [-1, 1]^2
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
};

// FIFO ring buffer, uniform sampling with replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100000) : capacity_(capacity) {
    storage_.reserve(std::min<std::size_t>(capacity, 4096));
  }

  void push(Transition t) {
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(t));
    } else {
      storage_[cursor_] = std::move(t);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }

  // i = 0 is the oldest stored transition.
  const Transition& at(std::size_t i) const {
    if (storage_.size() < capacity_) return storage_[i];
    return storage_[(cursor_ + i) % capacity_];
  }

  std::vector<Transition> sample(std::size_t batch, Rng& rng) const {
    if (storage_.size() < batch) throw Error("buffer-underfull");
    std::vector<Transition> out;
    out.reserve(batch);
    for (std::size_t k = 0; k < batch; ++k)
      out.push_back(storage_[rng.uniform_index(storage_.size())]);
    return out;
  }

 private:
  std::vector<Transition> storage_;
  std::size_t capacity_;
  std::size_t cursor_ = 0;
};

struct AgentConfig {
  int state_dim = 14;
  int action_dim = 2;
  std::vector<int> hidden = {256, 256};
  double gamma = 0.99;
  double rho = 0.995;  // polyak retention
  double lr = 1e-4;
  // Fixed input scaling: ranges and goal distance divided by this, bearing
  // by pi; previous-action entries arrive already normalized.
  double range_scale = 3.5;
};

struct SacConfig : AgentConfig {
  double alpha_lr = 1e-4;
  double init_alpha = 0.2;
  bool alpha_autotune = true;
  double target_entropy = -2.0;
  double log_std_min = -20.0;
  double log_std_max = 2.0;
};

struct DdpgConfig : AgentConfig {
  double exploration_sigma = 0.1;
};

namespace detail {

inline constexpr double kSquashEps = 1e-6;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

inline Eigen::VectorXd input_scale_vector(const AgentConfig& cfg) {
  Eigen::VectorXd s = Eigen::VectorXd::Ones(cfg.state_dim);
  const int n = cfg.state_dim - 4;
  for (int i = 0; i < n; ++i) s(i) = 1.0 / cfg.range_scale;
  s(n) = 1.0 / cfg.range_scale;  // goal distance
  s(n + 1) = 1.0 / kPi;          // goal bearing
  return s;
}

inline Eigen::MatrixXd batch_states(const std::vector<Transition>& batch,
                                    const Eigen::VectorXd& scale, bool next) {
  const auto dim = static_cast<Eigen::Index>(scale.size());
  Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& v = next ? batch[b].next_state : batch[b].state;
    if (static_cast<Eigen::Index>(v.size()) != dim) throw Error("shape");
    for (Eigen::Index i = 0; i < dim; ++i) m(i, b) = v[i] * scale(i);
  }
  return m;
}

inline Eigen::MatrixXd stack_state_action(const Eigen::MatrixXd& states,
                                          const Eigen::MatrixXd& actions) {
  Eigen::MatrixXd m(states.rows() + actions.rows(), states.cols());
  m.topRows(states.rows()) = states;
  m.bottomRows(actions.rows()) = actions;
  return m;
}

}  // namespace detail

// Soft actor-critic: tanh-squashed Gaussian policy, twin critics with
// min-target, polyak-averaged target critics, learned temperature.
class SacAgent {
 public:
  struct ActionSample {
    std::array<double, 2> action;
    std::array<double, 2> pre_squash;
    double log_prob = 0.0;
  };

  struct Losses {
    double q1 = 0.0;
    double q2 = 0.0;
    double policy = 0.0;
    double alpha_loss = 0.0;
  };

  struct TargetDiagnostics {
    Eigen::VectorXd y;
    Eigen::MatrixXd next_action;      // 2 x B
    Eigen::MatrixXd next_pre_squash;  // 2 x B
    Eigen::VectorXd next_log_prob;
  };

  SacAgent(const SacConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), scale_(detail::input_scale_vector(cfg)), log_alpha_(std::log(cfg.init_alpha)) {
    Rng rng(mix_seed(seed, 0x5ac));
    std::vector<int> pdims{cfg.state_dim};
    std::vector<int> qdims{cfg.state_dim + cfg.action_dim};
    std::vector<Activation> acts;
    for (int h : cfg.hidden) {
      pdims.push_back(h);
      qdims.push_back(h);
      acts.push_back(Activation::relu);
    }
    pdims.push_back(2 * cfg.action_dim);
    qdims.push_back(1);
    acts.push_back(Activation::linear);

    policy_ = Mlp(pdims, acts, rng);
    policy_.scale_last_layer(1e-2);  // start near zero actions
    q1_ = Mlp(qdims, acts, rng);
    q2_ = Mlp(qdims, acts, rng);
    target_q1_ = q1_;
    target_q2_ = q2_;
    opt_policy_ = AdamState(policy_, cfg.lr);
    opt_q1_ = AdamState(q1_, cfg.lr);
    opt_q2_ = AdamState(q2_, cfg.lr);
    opt_alpha_.lr = cfg.alpha_lr;
  }

  const SacConfig& config() const { return cfg_; }
  double alpha() const { return std::exp(log_alpha_); }
  void set_alpha(double a) { log_alpha_ = std::log(a); }

  Mlp& policy() { return policy_; }
  Mlp& q1() { return q1_; }
  Mlp& q2() { return q2_; }
  Mlp& target_q1() { return target_q1_; }
  Mlp& target_q2() { return target_q2_; }

  Eigen::VectorXd normalize(const std::vector<double>& state) const {
    if (static_cast<int>(state.size()) != cfg_.state_dim) throw Error("shape");
    Eigen::VectorXd x(cfg_.state_dim);
    for (int i = 0; i < cfg_.state_dim; ++i) x(i) = state[i] * scale_(i);
    return x;
  }

  // Clamped policy head (mu, log_std) for one state.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> policy_head(const std::vector<double>& state) const {
    const Eigen::VectorXd out = policy_.forward_one(normalize(state));
    Eigen::VectorXd mu = out.head(cfg_.action_dim);
    Eigen::VectorXd log_std = out.tail(cfg_.action_dim)
                                  .cwiseMax(cfg_.log_std_min)
                                  .cwiseMin(cfg_.log_std_max);
    return {mu, log_std};
  }

  // Gaussian log-density of the pre-squash value minus the tanh
  // change-of-variables correction, summed over action dimensions.
  static double log_prob_from_pre_squash(const Eigen::VectorXd& u, const Eigen::VectorXd& mu,
                                         const Eigen::VectorXd& log_std) {
    double lp = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double sigma = std::exp(log_std(i));
      const double z = (u(i) - mu(i)) / sigma;
      const double a = std::tanh(u(i));
      lp += -0.5 * z * z - log_std(i) - detail::kLogSqrt2Pi
            - std::log(1.0 - a * a + detail::kSquashEps);
    }
    return lp;
  }

  // Density of a squashed action; used by normalization checks.
  static double log_prob_of_action(const Eigen::VectorXd& action, const Eigen::VectorXd& mu,
                                   const Eigen::VectorXd& log_std) {
    Eigen::VectorXd u(action.size());
    for (Eigen::Index i = 0; i < action.size(); ++i)
      u(i) = std::atanh(std::clamp(action(i), -1.0 + 1e-15, 1.0 - 1e-15));
    return log_prob_from_pre_squash(u, mu, log_std);
  }

  // Stochastic: a = tanh(mu + sigma.*xi). Deterministic: a = tanh(mu).
  ActionSample sample_action(const std::vector<double>& state, Rng& rng,
                             bool deterministic) const {
    auto [mu, log_std] = policy_head(state);
    Eigen::VectorXd u(cfg_.action_dim);
    for (int i = 0; i < cfg_.action_dim; ++i) {
      u(i) = deterministic ? mu(i) : mu(i) + std::exp(log_std(i)) * rng.normal();
    }
    ActionSample s;
    for (int i = 0; i < cfg_.action_dim; ++i) {
      s.pre_squash[i] = u(i);
      s.action[i] = std::tanh(u(i));
    }
    s.log_prob = log_prob_from_pre_squash(u, mu, log_std);
    return s;
  }

  std::array<double, 2> act(const std::vector<double>& state, Rng& rng, bool train) const {
    return sample_action(state, rng, !train).action;
  }

  // y = r + gamma*(1-done)*(min(targetQ1, targetQ2)(s', a') - alpha*log pi(a'|s'))
  // with a' sampled fresh. Noise draw order: per sample, then per dimension.
  TargetDiagnostics compute_targets(const std::vector<Transition>& batch, Rng& rng) const {
    const auto B = static_cast<Eigen::Index>(batch.size());
    const Eigen::MatrixXd sn = detail::batch_states(batch, scale_, true);
    const Eigen::MatrixXd out = policy_.forward_nograd(sn);
    const Eigen::MatrixXd mu = out.topRows(cfg_.action_dim);
    const Eigen::MatrixXd log_std = out.bottomRows(cfg_.action_dim)
                                        .cwiseMax(cfg_.log_std_min)
                                        .cwiseMin(cfg_.log_std_max);

    TargetDiagnostics d;
    d.next_pre_squash.resize(cfg_.action_dim, B);
    d.next_action.resize(cfg_.action_dim, B);
    d.next_log_prob.resize(B);
    for (Eigen::Index b = 0; b < B; ++b) {
      for (int i = 0; i < cfg_.action_dim; ++i) {
        d.next_pre_squash(i, b) = mu(i, b) + std::exp(log_std(i, b)) * rng.normal();
        d.next_action(i, b) = std::tanh(d.next_pre_squash(i, b));
      }
      d.next_log_prob(b) =
          log_prob_from_pre_squash(d.next_pre_squash.col(b), mu.col(b), log_std.col(b));
    }

    const Eigen::MatrixXd qin = detail::stack_state_action(sn, d.next_action);
    const Eigen::RowVectorXd tq1 = target_q1_.forward_nograd(qin).row(0);
    const Eigen::RowVectorXd tq2 = target_q2_.forward_nograd(qin).row(0);
    const double a = alpha();
    d.y.resize(B);
    for (Eigen::Index b = 0; b < B; ++b) {
      const double not_done = batch[b].done ? 0.0 : 1.0;
      d.y(b) = batch[b].reward +
               cfg_.gamma * not_done * (std::min(tq1(b), tq2(b)) - a * d.next_log_prob(b));
    }
    return d;
  }

  Losses update(const std::vector<Transition>& batch, Rng& rng) {
    if (batch.empty()) throw Error("empty-batch");
    const auto B = static_cast<Eigen::Index>(batch.size());
    const double inv_b = 1.0 / static_cast<double>(B);
    const TargetDiagnostics diag = compute_targets(batch, rng);

    const Eigen::MatrixXd s = detail::batch_states(batch, scale_, false);
    Eigen::MatrixXd a_taken(cfg_.action_dim, B);
    for (Eigen::Index b = 0; b < B; ++b)
      for (int i = 0; i < cfg_.action_dim; ++i) a_taken(i, b) = batch[b].action[i];
    const Eigen::MatrixXd qin = detail::stack_state_action(s, a_taken);

    Losses losses;

    // Critic regression to y.
    for (int which = 0; which < 2; ++which) {
      Mlp& q = which == 0 ? q1_ : q2_;
      AdamState& opt = which == 0 ? opt_q1_ : opt_q2_;
      q.zero_grad();
      const Eigen::RowVectorXd pred = q.forward(qin).row(0);
      const Eigen::RowVectorXd err = pred - diag.y.transpose();
      (which == 0 ? losses.q1 : losses.q2) = err.squaredNorm() * inv_b;
      q.backward(err * (2.0 * inv_b));
      adam_step(q, opt);
    }

    // Policy: minimize mean(alpha*log pi(a~|s) - min Q(s, a~)) through the
    // reparameterized sample a~ = tanh(mu + sigma.*xi).
    policy_.zero_grad();
    const Eigen::MatrixXd pout = policy_.forward(s);
    const Eigen::MatrixXd mu = pout.topRows(cfg_.action_dim);
    const Eigen::MatrixXd log_std_raw = pout.bottomRows(cfg_.action_dim);
    const Eigen::MatrixXd log_std =
        log_std_raw.cwiseMax(cfg_.log_std_min).cwiseMin(cfg_.log_std_max);
    const Eigen::MatrixXd sigma = log_std.array().exp();

    Eigen::MatrixXd xi(cfg_.action_dim, B);
    for (Eigen::Index b = 0; b < B; ++b)
      for (int i = 0; i < cfg_.action_dim; ++i) xi(i, b) = rng.normal();
    const Eigen::MatrixXd u = mu + sigma.cwiseProduct(xi);
    const Eigen::MatrixXd a_new = u.array().tanh();

    Eigen::VectorXd logp(B);
    for (Eigen::Index b = 0; b < B; ++b)
      logp(b) = log_prob_from_pre_squash(u.col(b), mu.col(b), log_std.col(b));

    const Eigen::MatrixXd qin2 = detail::stack_state_action(s, a_new);
    q1_.zero_grad();
    q2_.zero_grad();
    const Eigen::RowVectorXd qa = q1_.forward(qin2).row(0);
    const Eigen::RowVectorXd qb = q2_.forward(qin2).row(0);
    Eigen::RowVectorXd up_a = Eigen::RowVectorXd::Zero(B);
    Eigen::RowVectorXd up_b = Eigen::RowVectorXd::Zero(B);
    Eigen::VectorXd qmin(B);
    for (Eigen::Index b = 0; b < B; ++b) {
      if (qa(b) <= qb(b)) {
        qmin(b) = qa(b);
        up_a(b) = -inv_b;
      } else {
        qmin(b) = qb(b);
        up_b(b) = -inv_b;
      }
    }
    // Critic input gradients only; their parameter gradients are discarded
    // by the zero_grad at the next critic update.
    const Eigen::MatrixXd din1 = q1_.backward(up_a);
    const Eigen::MatrixXd din2 = q2_.backward(up_b);
    Eigen::MatrixXd d_action =
        din1.bottomRows(cfg_.action_dim) + din2.bottomRows(cfg_.action_dim);

    const double a_cur = alpha();
    const Eigen::ArrayXXd one_minus_a2 = 1.0 - a_new.array().square();
    d_action.array() +=
        (a_cur * inv_b) * 2.0 * a_new.array() / (one_minus_a2 + detail::kSquashEps);
    const Eigen::ArrayXXd du = d_action.array() * one_minus_a2;

    Eigen::MatrixXd up_policy(2 * cfg_.action_dim, B);
    up_policy.topRows(cfg_.action_dim) = du.matrix();
    Eigen::ArrayXXd d_log_std =
        du * (sigma.cwiseProduct(xi)).array() - a_cur * inv_b;
    // Gradient is cut where the raw log-std fell outside the clamp window.
    const Eigen::ArrayXXd in_window =
        ((log_std_raw.array() > cfg_.log_std_min) * (log_std_raw.array() < cfg_.log_std_max))
            .cast<double>();
    up_policy.bottomRows(cfg_.action_dim) = (d_log_std * in_window).matrix();

    policy_.backward(up_policy);
    adam_step(policy_, opt_policy_);
    losses.policy = (a_cur * logp.array() - qmin.array()).mean();

    const double ent_err = logp.mean() + cfg_.target_entropy;
    losses.alpha_loss = -log_alpha_ * ent_err;
    if (cfg_.alpha_autotune) opt_alpha_.update(log_alpha_, -ent_err);

    polyak_update(target_q1_, q1_, cfg_.rho);
    polyak_update(target_q2_, q2_, cfg_.rho);
    return losses;
  }

  void save(const std::string& path, nlohmann::json extra = {}) const {
    nlohmann::json header = std::move(extra);
    header["algorithm"] = "sac";
    header["hyperparameters"] = {
        {"state_dim", cfg_.state_dim},   {"action_dim", cfg_.action_dim},
        {"hidden", cfg_.hidden},         {"gamma", cfg_.gamma},
        {"rho", cfg_.rho},               {"lr", cfg_.lr},
        {"alpha_lr", cfg_.alpha_lr},     {"alpha", alpha()},
        {"target_entropy", cfg_.target_entropy},
        {"alpha_autotune", cfg_.alpha_autotune},
        {"log_std_min", cfg_.log_std_min},
        {"log_std_max", cfg_.log_std_max},
        {"range_scale", cfg_.range_scale}};
    write_checkpoint(path, header,
                     {{"policy", &policy_},
                      {"q1", &q1_},
                      {"q2", &q2_},
                      {"target_q1", &target_q1_},
                      {"target_q2", &target_q2_}});
  }

  static SacConfig config_from_header(const nlohmann::json& header) {
    const auto& h = header.at("hyperparameters");
    SacConfig cfg;
    cfg.state_dim = h.at("state_dim").get<int>();
    cfg.action_dim = h.at("action_dim").get<int>();
    cfg.hidden = h.at("hidden").get<std::vector<int>>();
    cfg.gamma = h.at("gamma").get<double>();
    cfg.rho = h.at("rho").get<double>();
    cfg.lr = h.at("lr").get<double>();
    cfg.alpha_lr = h.at("alpha_lr").get<double>();
    cfg.init_alpha = h.at("alpha").get<double>();
    cfg.target_entropy = h.at("target_entropy").get<double>();
    cfg.alpha_autotune = h.at("alpha_autotune").get<bool>();
    cfg.log_std_min = h.at("log_std_min").get<double>();
    cfg.log_std_max = h.at("log_std_max").get<double>();
    cfg.range_scale = h.at("range_scale").get<double>();
    return cfg;
  }

  static SacAgent load(const LoadedCheckpoint& ck) {
    if (ck.header.value("algorithm", "") != "sac")
      throw Error("checkpoint-incompatible", "not a sac checkpoint");
    SacAgent agent(config_from_header(ck.header), 0);
    ck.load_into("policy", agent.policy_);
    ck.load_into("q1", agent.q1_);
    ck.load_into("q2", agent.q2_);
    ck.load_into("target_q1", agent.target_q1_);
    ck.load_into("target_q2", agent.target_q2_);
    return agent;
  }

 private:
  SacConfig cfg_;
  Eigen::VectorXd scale_;
  Mlp policy_, q1_, q2_, target_q1_, target_q2_;
  AdamState opt_policy_, opt_q1_, opt_q2_;
  AdamScalar opt_alpha_;
  double log_alpha_;
};

// Deterministic-policy baseline with a single critic and target copies.
class DdpgAgent {
 public:
  struct Losses {
    double q = 0.0;
    double policy = 0.0;
  };

  DdpgAgent(const DdpgConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), scale_(detail::input_scale_vector(cfg)) {
    Rng rng(mix_seed(seed, 0xdd9));
    std::vector<int> pdims{cfg.state_dim};
    std::vector<int> qdims{cfg.state_dim + cfg.action_dim};
    std::vector<Activation> pacts, qacts;
    for (int h : cfg.hidden) {
      pdims.push_back(h);
      qdims.push_back(h);
      pacts.push_back(Activation::relu);
      qacts.push_back(Activation::relu);
    }
    pdims.push_back(cfg.action_dim);
    qdims.push_back(1);
    pacts.push_back(Activation::tanh);
    qacts.push_back(Activation::linear);

    policy_ = Mlp(pdims, pacts, rng);
    policy_.scale_last_layer(1e-2);
    q_ = Mlp(qdims, qacts, rng);
    target_policy_ = policy_;
    target_q_ = q_;
    opt_policy_ = AdamState(policy_, cfg.lr);
    opt_q_ = AdamState(q_, cfg.lr);
  }

  const DdpgConfig& config() const { return cfg_; }
  Mlp& policy() { return policy_; }
  Mlp& q() { return q_; }
  Mlp& target_policy() { return target_policy_; }
  Mlp& target_q() { return target_q_; }

  Eigen::VectorXd normalize(const std::vector<double>& state) const {
    if (static_cast<int>(state.size()) != cfg_.state_dim) throw Error("shape");
    Eigen::VectorXd x(cfg_.state_dim);
    for (int i = 0; i < cfg_.state_dim; ++i) x(i) = state[i] * scale_(i);
    return x;
  }

  // Train mode adds clipped Gaussian noise on the normalized action.
  std::array<double, 2> act(const std::vector<double>& state, Rng& rng, bool train) const {
    const Eigen::VectorXd a = policy_.forward_one(normalize(state));
    std::array<double, 2> out{};
    for (int i = 0; i < cfg_.action_dim; ++i) {
      double v = a(i);
      if (train) v += cfg_.exploration_sigma * rng.normal();
      out[i] = std::clamp(v, -1.0, 1.0);
    }
    return out;
  }

  // y = r + gamma*(1-done)*targetQ(s', targetPolicy(s')).
  Eigen::VectorXd compute_targets(const std::vector<Transition>& batch) const {
    const auto B = static_cast<Eigen::Index>(batch.size());
    const Eigen::MatrixXd sn = detail::batch_states(batch, scale_, true);
    const Eigen::MatrixXd an = target_policy_.forward_nograd(sn);
    const Eigen::RowVectorXd tq =
        target_q_.forward_nograd(detail::stack_state_action(sn, an)).row(0);
    Eigen::VectorXd y(B);
    for (Eigen::Index b = 0; b < B; ++b) {
      const double not_done = batch[b].done ? 0.0 : 1.0;
      y(b) = batch[b].reward + cfg_.gamma * not_done * tq(b);
    }
    return y;
  }

  Losses update(const std::vector<Transition>& batch) {
    if (batch.empty()) throw Error("empty-batch");
    const auto B = static_cast<Eigen::Index>(batch.size());
    const double inv_b = 1.0 / static_cast<double>(B);
    const Eigen::VectorXd y = compute_targets(batch);

    const Eigen::MatrixXd s = detail::batch_states(batch, scale_, false);
    Eigen::MatrixXd a_taken(cfg_.action_dim, B);
    for (Eigen::Index b = 0; b < B; ++b)
      for (int i = 0; i < cfg_.action_dim; ++i) a_taken(i, b) = batch[b].action[i];

    Losses losses;
    q_.zero_grad();
    const Eigen::RowVectorXd pred = q_.forward(detail::stack_state_action(s, a_taken)).row(0);
    const Eigen::RowVectorXd err = pred - y.transpose();
    losses.q = err.squaredNorm() * inv_b;
    q_.backward(err * (2.0 * inv_b));
    adam_step(q_, opt_q_);

    // Ascend Q(s, policy(s)).
    policy_.zero_grad();
    const Eigen::MatrixXd a_new = policy_.forward(s);
    q_.zero_grad();
    const Eigen::RowVectorXd qv = q_.forward(detail::stack_state_action(s, a_new)).row(0);
    const Eigen::MatrixXd din = q_.backward(Eigen::RowVectorXd::Constant(B, -inv_b));
    policy_.backward(din.bottomRows(cfg_.action_dim));
    adam_step(policy_, opt_policy_);
    losses.policy = -qv.mean();

    polyak_update(target_q_, q_, cfg_.rho);
    polyak_update(target_policy_, policy_, cfg_.rho);
    return losses;
  }

  void save(const std::string& path, nlohmann::json extra = {}) const {
    nlohmann::json header = std::move(extra);
    header["algorithm"] = "ddpg";
    header["hyperparameters"] = {{"state_dim", cfg_.state_dim},
                                 {"action_dim", cfg_.action_dim},
                                 {"hidden", cfg_.hidden},
                                 {"gamma", cfg_.gamma},
                                 {"rho", cfg_.rho},
                                 {"lr", cfg_.lr},
                                 {"exploration_sigma", cfg_.exploration_sigma},
                                 {"range_scale", cfg_.range_scale}};
    write_checkpoint(path, header,
                     {{"policy", &policy_},
                      {"q", &q_},
                      {"target_policy", &target_policy_},
                      {"target_q", &target_q_}});
  }

  static DdpgConfig config_from_header(const nlohmann::json& header) {
    const auto& h = header.at("hyperparameters");
    DdpgConfig cfg;
    cfg.state_dim = h.at("state_dim").get<int>();
    cfg.action_dim = h.at("action_dim").get<int>();
    cfg.hidden = h.at("hidden").get<std::vector<int>>();
    cfg.gamma = h.at("gamma").get<double>();
    cfg.rho = h.at("rho").get<double>();
    cfg.lr = h.at("lr").get<double>();
    cfg.exploration_sigma = h.at("exploration_sigma").get<double>();
    cfg.range_scale = h.at("range_scale").get<double>();
    return cfg;
  }

  static DdpgAgent load(const LoadedCheckpoint& ck) {
    if (ck.header.value("algorithm", "") != "ddpg")
      throw Error("checkpoint-incompatible", "not a ddpg checkpoint");
    DdpgAgent agent(config_from_header(ck.header), 0);
    ck.load_into("policy", agent.policy_);
    ck.load_into("q", agent.q_);
    ck.load_into("target_policy", agent.target_policy_);
    ck.load_into("target_q", agent.target_q_);
    return agent;
  }

 private:
  DdpgConfig cfg_;
  Eigen::VectorXd scale_;
  Mlp policy_, q_, target_policy_, target_q_;
  AdamState opt_policy_, opt_q_;
};

// Normalized policy output -> bounded velocity command.
template <typename AgentT>
Action act_for_env(const AgentT& agent, const std::vector<double>& state, Rng& rng,
                   bool train, const MotionLimits& limits) {
  const auto a = agent.act(state, rng, train);
  return clamp_action(a[0], a[1], limits);
}

}  // namespace mnav
