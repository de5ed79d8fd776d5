// Copyright 2026 The lobgym Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "lobgym/env.hpp"
#include "lobgym/policy.hpp"
#include "lobgym/rng.hpp"

namespace lobgym {

struct PpoConfig {
    double learning_rate = 3e-4;
    double gamma = 0.9;
    double gae_lambda = 0.85;
    double clip_eps = 0.25;
    double entropy_coef = 1.2e-3;
    int epochs = 64;
    int minibatch = 256;
    int episodes = 10000;
    int workers = 1;
    double critic_coef = 0.5;
    double max_grad_norm = 0.5;
    double init_log_std = -0.5;
    double spread_scale = 0.02;
    int checkpoint_every = 50;
    NetworkShape network;

    void validate() const;
};

/// One episode of experience. Inputs are stored already normalized, exactly
/// as the behavior policy saw them.
struct Trajectory {
    std::size_t input_size = 0;
    std::vector<double> inputs;
    std::vector<ActionVec> actions;
    std::vector<double> log_probs;
    std::vector<double> rewards;
    std::vector<double> values;
    /// V(s_T); zero for a true terminal state.
    double bootstrap_value = 0.0;

    std::size_t size() const { return rewards.size(); }
    std::span<const double> input(std::size_t t) const { return {inputs.data() + t * input_size, input_size}; }
};

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns;
};

/// Backward recursion A_t = delta_t + gamma lambda A_{t+1} with
/// delta_t = R_t + gamma V(s_{t+1}) - V(s_t); returns = A + V. No
/// standardization.
GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values, double bootstrap_value,
                      double gamma, double lambda);

/// In-place (x - mean) / std; std floored at 1e-8.
void standardize(std::vector<double>& x);

/// min(r A, clip(r, 1 - eps, 1 + eps) A)
double clipped_surrogate(double ratio, double advantage, double eps);
/// d/dr of clipped_surrogate, times r (i.e. the derivative w.r.t. log r).
double clipped_surrogate_grad_log_ratio(double ratio, double advantage, double eps);

/// Adaptive-moment optimizer over a flat parameter vector.
class Adam {
public:
    explicit Adam(std::size_t n = 0, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    /// Descend along `grad`.
    void step(std::vector<double>& params, const std::vector<double>& grad, double lr);

    std::vector<double>& m() { return m_; }
    std::vector<double>& v() { return v_; }
    const std::vector<double>& m() const { return m_; }
    const std::vector<double>& v() const { return v_; }
    std::uint64_t t() const { return t_; }
    void set_t(std::uint64_t t) { t_ = t; }

private:
    double beta1_, beta2_, eps_;
    std::vector<double> m_, v_;
    std::uint64_t t_ = 0;
};

/// Learner-side state. Networks plus their optimizers and input statistics.
struct Learner {
    ActorNetwork actor;
    CriticNetwork critic;
    Adam actor_opt;
    Adam critic_opt;
    RunningStats stats;

    explicit Learner(const NetworkShape& shape);
    void initialize(std::uint64_t seed, double init_log_std);
};

struct Dataset {
    std::size_t input_size = 0;
    std::vector<double> inputs;
    std::vector<ActionVec> actions;
    std::vector<double> log_probs;
    std::vector<double> advantages;
    std::vector<double> returns;

    std::size_t size() const { return log_probs.size(); }
    std::span<const double> input(std::size_t i) const { return {inputs.data() + i * input_size, input_size}; }
};

/// Concatenates per-trajectory GAE and standardizes advantages over the batch.
Dataset build_dataset(const std::vector<Trajectory>& trajectories, double gamma, double lambda);

struct UpdateDiagnostics {
    double actor_objective = 0.0;  // last epoch mean
    double critic_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    /// max |r - 1| over the first minibatch before any parameter change.
    double first_ratio_deviation = 0.0;
    int minibatches = 0;
    bool aborted = false;
};

/// Clipped-surrogate actor ascent and squared-error critic descent for K
/// epochs over shuffled minibatches.
UpdateDiagnostics ppo_update(Learner& learner, const Dataset& data, const PpoConfig& config, RngStream& shuffle_rng);

/// Per-minibatch loss pieces and their gradients; exposed for testing.
struct MinibatchGrad {
    double objective = 0.0;  // mean clipped surrogate + entropy bonus
    double critic_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double max_ratio_deviation = 0.0;
    std::vector<double> actor_grad;   // d objective / d theta
    std::vector<double> critic_grad;  // d critic_loss / d phi
};
MinibatchGrad minibatch_gradient(const Learner& learner, const Dataset& data, std::span<const std::size_t> idx,
                                 const PpoConfig& config);

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

/// Stream ids derived from the run seed.
struct StreamIds {
    static std::uint64_t env(std::uint64_t episode) { return 2 * episode; }
    static std::uint64_t policy(std::uint64_t episode) { return 2 * episode + 1; }
    static constexpr std::uint64_t kInit = std::uint64_t{1} << 61;
    static std::uint64_t shuffle(std::uint64_t round) { return (std::uint64_t{1} << 62) + round; }
    static std::uint64_t evaluation(std::uint64_t episode) { return (std::uint64_t{1} << 60) + episode; }
};

struct RolloutResult {
    Trajectory trajectory;
    RunningStats fresh_stats;
    double mean_reward = 0.0;
};

/// One episode with a frozen parameter snapshot. Normalization uses the
/// snapshot statistics merged with everything seen so far in this episode.
RolloutResult collect_episode(const ActorNetwork& actor, const CriticNetwork& critic, const RunningStats& stats,
                              const EnvConfig& env_config, const PpoConfig& config, std::uint64_t seed,
                              std::uint64_t episode);

struct TrainState {
    Learner learner;
    std::uint64_t episodes_done = 0;
    std::uint64_t rounds_done = 0;
    std::vector<double> reward_log;
    std::vector<double> ema_log;
    /// Every raw reward seen so far; the learner trains on rewards
    /// standardized with these moments.
    RunningStats reward_stats{1};

    explicit TrainState(const NetworkShape& shape) : learner(shape) {}
};

/// Update `stats` with every reward, then rewrite the rewards as
/// (r - mean) / std. Episodes have a fixed length, so the shift only adds a
/// time-dependent constant to the returns and leaves the optimal policy
/// unchanged.
void standardize_rewards(std::vector<Trajectory>& trajectories, RunningStats& stats);

/// Exponential moving average with the given half-life (in samples).
std::vector<double> ema(const std::vector<double>& x, double half_life);
/// Ordinary least-squares slope of y against its index.
double ols_slope(const std::vector<double>& y);

inline constexpr double kRewardEmaHalfLife = 20.0;

class Trainer {
public:
    Trainer(EnvConfig env_config, PpoConfig config, std::uint64_t seed);
    /// Resume from an existing state.
    Trainer(EnvConfig env_config, PpoConfig config, std::uint64_t seed, TrainState state);

    /// Train until `episodes` total episodes; `on_round` runs after every
    /// update round.
    void run(std::uint64_t episodes, const std::function<void(const TrainState&)>& on_round = {});

    const TrainState& state() const { return state_; }
    TrainState& state() { return state_; }
    const UpdateDiagnostics& last_update() const { return last_update_; }

private:
    EnvConfig env_config_;
    PpoConfig config_;
    std::uint64_t seed_;
    TrainState state_;
    UpdateDiagnostics last_update_;
};

InputScales input_scales(const EnvConfig& env);
ActionMapping action_mapping(const EnvConfig& env, const PpoConfig& config);

}  // namespace lobgym
