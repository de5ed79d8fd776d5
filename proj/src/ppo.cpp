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

#include "lobgym/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "lobgym/errors.hpp"

namespace lobgym {

void PpoConfig::validate() const
{
    if (!(learning_rate > 0.0)) {
        throw ConfigError("ppo: learning_rate must be positive");
    }
    if (!(gamma > 0.0 && gamma <= 1.0) || !(gae_lambda > 0.0 && gae_lambda <= 1.0)) {
        throw ConfigError("ppo: gamma and gae_lambda must lie in (0, 1]");
    }
    if (!(clip_eps > 0.0 && clip_eps < 1.0)) {
        throw ConfigError("ppo: clip_eps must lie in (0, 1)");
    }
    if (epochs < 1 || minibatch < 1 || episodes < 0 || workers < 1 || checkpoint_every < 0) {
        throw ConfigError("ppo: epochs, minibatch, workers must be >= 1; episodes, checkpoint_every >= 0");
    }
    if (entropy_coef < 0.0 || critic_coef < 0.0 || !(max_grad_norm > 0.0) || !(spread_scale > 0.0)) {
        throw ConfigError("ppo: coefficients must be non-negative, max_grad_norm and spread_scale positive");
    }
    if (network.embed_dim < 1 || network.attention_layers < 0 || network.feature_dim < 1 || network.head_dim < 1
        || network.critic_hidden1 < 1 || network.critic_hidden2 < 1) {
        throw ConfigError("ppo: network widths must be >= 1");
    }
}

GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values, double bootstrap_value,
                      double gamma, double lambda)
{
    const std::size_t n = rewards.size();
    if (values.size() != n) {
        throw std::invalid_argument("gae: rewards and values differ in length");
    }
    GaeResult out{std::vector<double>(n), std::vector<double>(n)};
    double next_adv = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        const double next_value = t + 1 < n ? values[t + 1] : bootstrap_value;
        const double delta = rewards[t] + gamma * next_value - values[t];
        next_adv = delta + gamma * lambda * next_adv;
        out.advantages[t] = next_adv;
        out.returns[t] = next_adv + values[t];
    }
    return out;
}

void standardize(std::vector<double>& x)
{
    if (x.empty()) {
        return;
    }
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) {
        ss += (v - mean) * (v - mean);
    }
    const double sd = std::max(std::sqrt(ss / n), 1e-8);
    for (double& v : x) {
        v = (v - mean) / sd;
    }
}

double clipped_surrogate(double ratio, double advantage, double eps)
{
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    return std::min(ratio * advantage, clipped * advantage);
}

double clipped_surrogate_grad_log_ratio(double ratio, double advantage, double eps)
{
    const double unclipped = ratio * advantage;
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage;
    if (unclipped <= clipped) {
        return unclipped;
    }
    // Clipped branch selected: flat outside the trust region.
    return (ratio > 1.0 - eps && ratio < 1.0 + eps) ? unclipped : 0.0;
}

// ---------------------------------------------------------------------------

Adam::Adam(std::size_t n, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0)
{
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad, double lr)
{
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

Learner::Learner(const NetworkShape& shape)
    : actor(shape), critic(shape), actor_opt(actor.params.size()), critic_opt(critic.params.size())
{
}

void Learner::initialize(std::uint64_t seed, double init_log_std)
{
    RngStream rng(seed, StreamIds::kInit);
    actor.initialize(rng, init_log_std);
    critic.initialize(rng);
    actor_opt = Adam(actor.params.size());
    critic_opt = Adam(critic.params.size());
    stats = RunningStats();
}

Dataset build_dataset(const std::vector<Trajectory>& trajectories, double gamma, double lambda)
{
    Dataset d;
    for (const Trajectory& traj : trajectories) {
        if (d.input_size == 0) {
            d.input_size = traj.input_size;
        }
        const GaeResult gae = compute_gae(traj.rewards, traj.values, traj.bootstrap_value, gamma, lambda);
        d.inputs.insert(d.inputs.end(), traj.inputs.begin(), traj.inputs.end());
        d.actions.insert(d.actions.end(), traj.actions.begin(), traj.actions.end());
        d.log_probs.insert(d.log_probs.end(), traj.log_probs.begin(), traj.log_probs.end());
        d.advantages.insert(d.advantages.end(), gae.advantages.begin(), gae.advantages.end());
        d.returns.insert(d.returns.end(), gae.returns.begin(), gae.returns.end());
    }
    standardize(d.advantages);
    return d;
}

namespace {

void clip_global_norm(std::vector<double>& grad, double max_norm)
{
    double sq = 0.0;
    for (double g : grad) {
        sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double s = max_norm / norm;
        for (double& g : grad) {
            g *= s;
        }
    }
}

}  // namespace

MinibatchGrad minibatch_gradient(const Learner& learner, const Dataset& data, std::span<const std::size_t> idx,
                                 const PpoConfig& config)
{
    MinibatchGrad mg;
    mg.actor_grad.assign(learner.actor.params.size(), 0.0);
    mg.critic_grad.assign(learner.critic.params.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(idx.size());
    ActorCache acache;
    CriticCache ccache;
    ActionVec log_std = ActionVec::Zero();
    int clipped = 0;

    for (std::size_t i : idx) {
        const auto input = data.input(i);
        const ActorOutput out = learner.actor.forward(input, &acache);
        log_std = out.log_std;
        const ActionVec& a = data.actions[i];
        const double lp = gaussian_log_prob(a, out.mean, out.log_std);
        const double ratio = std::exp(lp - data.log_probs[i]);
        const double adv = data.advantages[i];
        mg.max_ratio_deviation = std::max(mg.max_ratio_deviation, std::fabs(ratio - 1.0));
        mg.objective += clipped_surrogate(ratio, adv, config.clip_eps) * inv_n;
        if (std::fabs(ratio - 1.0) > config.clip_eps) {
            ++clipped;
        }

        const double g = clipped_surrogate_grad_log_ratio(ratio, adv, config.clip_eps) * inv_n;
        if (g != 0.0) {
            const ActionVec inv_var = (-2.0 * out.log_std.array()).exp().matrix();
            const ActionVec diff = a - out.mean;
            const ActionVec grad_mean = g * diff.cwiseProduct(inv_var);
            const ActionVec grad_log_std = g * (diff.cwiseProduct(diff).cwiseProduct(inv_var).array() - 1.0).matrix();
            learner.actor.backward(acache, grad_mean, grad_log_std, mg.actor_grad);
        }

        const double v = learner.critic.forward(input, &ccache);
        const double err = data.returns[i] - v;
        mg.critic_loss += err * err * inv_n;
        learner.critic.backward(ccache, -2.0 * config.critic_coef * err * inv_n, mg.critic_grad);
    }

    mg.entropy = gaussian_entropy(log_std);
    mg.objective += config.entropy_coef * mg.entropy;
    const std::size_t ls = mg.actor_grad.size() - kActionDim;
    for (int k = 0; k < kActionDim; ++k) {
        mg.actor_grad[ls + static_cast<std::size_t>(k)] += config.entropy_coef;
    }
    mg.clip_fraction = clipped * inv_n;
    return mg;
}

UpdateDiagnostics ppo_update(Learner& learner, const Dataset& data, const PpoConfig& config, RngStream& shuffle_rng)
{
    UpdateDiagnostics diag;
    if (data.size() == 0) {
        return diag;
    }
    const std::vector<double> actor_backup = learner.actor.params.values;
    const std::vector<double> critic_backup = learner.critic.params.values;
    const Adam actor_opt_backup = learner.actor_opt;
    const Adam critic_opt_backup = learner.critic_opt;

    auto restore = [&] {
        learner.actor.params.values = actor_backup;
        learner.critic.params.values = critic_backup;
        learner.actor_opt = actor_opt_backup;
        learner.critic_opt = critic_opt_backup;
        diag.aborted = true;
    };

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto batch = static_cast<std::size_t>(config.minibatch);
    bool first = true;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        }
        double epoch_obj = 0.0;
        double epoch_critic = 0.0;
        double epoch_clip = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(start + batch, order.size());
            MinibatchGrad mg;
            try {
                mg = minibatch_gradient(learner, data, std::span(order).subspan(start, end - start), config);
            } catch (const RuntimeFault&) {
                restore();
                return diag;
            }
            if (first) {
                diag.first_ratio_deviation = mg.max_ratio_deviation;
                first = false;
            }
            if (!std::isfinite(mg.objective) || !std::isfinite(mg.critic_loss)) {
                restore();
                return diag;
            }
            for (double& g : mg.actor_grad) {
                g = -g;  // ascend the objective
            }
            clip_global_norm(mg.actor_grad, config.max_grad_norm);
            clip_global_norm(mg.critic_grad, config.max_grad_norm);
            learner.actor_opt.step(learner.actor.params.values, mg.actor_grad, config.learning_rate);
            learner.critic_opt.step(learner.critic.params.values, mg.critic_grad, config.learning_rate);
            learner.actor.clamp_log_std();
            if (!learner.actor.params.all_finite() || !learner.critic.params.all_finite()) {
                restore();
                return diag;
            }
            epoch_obj += mg.objective;
            epoch_critic += mg.critic_loss;
            epoch_clip += mg.clip_fraction;
            diag.entropy = mg.entropy;
            ++batches;
            ++diag.minibatches;
        }
        diag.actor_objective = epoch_obj / batches;
        diag.critic_loss = epoch_critic / batches;
        diag.clip_fraction = epoch_clip / batches;
    }
    return diag;
}

// ---------------------------------------------------------------------------

InputScales input_scales(const EnvConfig& env) { return {env.market.tick, env.market.quantity.lambda}; }

ActionMapping action_mapping(const EnvConfig& env, const PpoConfig& config) { return {config.spread_scale, env.q_max}; }

RolloutResult collect_episode(const ActorNetwork& actor, const CriticNetwork& critic, const RunningStats& stats,
                              const EnvConfig& env_config, const PpoConfig& config, std::uint64_t seed,
                              std::uint64_t episode)
{
    RolloutResult out;
    MarketEnv env(env_config);
    RngStream policy_rng(seed, StreamIds::policy(episode));
    RunningStats combined = stats;
    const InputScales scales = input_scales(env_config);
    const ActionMapping mapping = action_mapping(env_config, config);
    const auto input_size = static_cast<std::size_t>(actor.shape().input_size());

    Trajectory& traj = out.trajectory;
    traj.input_size = input_size;
    const auto steps = static_cast<std::size_t>(env_config.steps);
    traj.inputs.resize(steps * input_size);
    traj.actions.reserve(steps);
    traj.log_probs.reserve(steps);
    traj.rewards.reserve(steps);
    traj.values.reserve(steps);

    ActorCache cache;
    Observation obs = env.reset(RngStream(seed, StreamIds::env(episode)));
    for (std::size_t t = 0; t < steps; ++t) {
        const double market[kMarketInputs] = {obs.rsi, obs.oi, obs.microprice, obs.inventory,
                                              obs.ma10, obs.ma15, obs.ma30};
        combined.update(market);
        out.fresh_stats.update(market);
        std::span<double> input(traj.inputs.data() + t * input_size, input_size);
        normalize_observation(obs, combined, scales, input);

        const ActorOutput pi = actor.forward(input, &cache);
        const double value = critic.forward(input);
        const SampledAction s = sample_action(pi.mean, pi.log_std, policy_rng);
        StepResult step = env.step(map_action(s.raw, mapping));

        traj.actions.push_back(s.raw);
        traj.log_probs.push_back(s.log_prob);
        traj.rewards.push_back(step.reward);
        traj.values.push_back(value);
        obs = std::move(step.observation);
        if (step.done) {
            break;
        }
    }
    traj.bootstrap_value = 0.0;
    out.mean_reward = std::accumulate(traj.rewards.begin(), traj.rewards.end(), 0.0)
                      / static_cast<double>(traj.rewards.size());
    return out;
}

void standardize_rewards(std::vector<Trajectory>& trajectories, RunningStats& stats)
{
    for (const Trajectory& traj : trajectories) {
        for (double r : traj.rewards) {
            stats.update(std::span<const double>(&r, 1));
        }
    }
    const double mean = stats.mean()[0];
    const double var = stats.count() > 1.0 ? stats.m2()[0] / (stats.count() - 1.0) : 0.0;
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    for (Trajectory& traj : trajectories) {
        for (double& r : traj.rewards) {
            r = (r - mean) / sd;
        }
    }
}

std::vector<double> ema(const std::vector<double>& x, double half_life)
{
    std::vector<double> out;
    out.reserve(x.size());
    const double alpha = 1.0 - std::pow(0.5, 1.0 / half_life);
    for (double v : x) {
        out.push_back(out.empty() ? v : out.back() + alpha * (v - out.back()));
    }
    return out;
}

double ols_slope(const std::vector<double>& y)
{
    const double n = static_cast<double>(y.size());
    if (y.size() < 2) {
        return 0.0;
    }
    const double mx = (n - 1.0) / 2.0;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double dx = static_cast<double>(i) - mx;
        sxy += dx * (y[i] - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

Trainer::Trainer(EnvConfig env_config, PpoConfig config, std::uint64_t seed)
    : env_config_(std::move(env_config)), config_(config), seed_(seed), state_(config.network)
{
    env_config_.validate();
    config_.validate();
    state_.learner.initialize(seed, config_.init_log_std);
}

Trainer::Trainer(EnvConfig env_config, PpoConfig config, std::uint64_t seed, TrainState state)
    : env_config_(std::move(env_config)), config_(config), seed_(seed), state_(std::move(state))
{
    env_config_.validate();
    config_.validate();
}

void Trainer::run(std::uint64_t episodes, const std::function<void(const TrainState&)>& on_round)
{
    const double alpha = 1.0 - std::pow(0.5, 1.0 / kRewardEmaHalfLife);
    while (state_.episodes_done < episodes) {
        const std::uint64_t n =
            std::min<std::uint64_t>(static_cast<std::uint64_t>(config_.workers), episodes - state_.episodes_done);
        std::vector<RolloutResult> results(n);
        const Learner& snapshot = state_.learner;
        auto work = [&](std::uint64_t w) {
            results[w] = collect_episode(snapshot.actor, snapshot.critic, snapshot.stats, env_config_, config_, seed_,
                                         state_.episodes_done + w);
        };
        if (n == 1) {
            work(0);
        } else {
            std::vector<std::exception_ptr> errors(n);
            std::vector<std::thread> threads;
            threads.reserve(n);
            for (std::uint64_t w = 0; w < n; ++w) {
                threads.emplace_back([&, w] {
                    try {
                        work(w);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
            for (auto& t : threads) {
                t.join();
            }
            for (auto& e : errors) {
                if (e) {
                    std::rethrow_exception(e);
                }
            }
        }

        std::vector<Trajectory> trajectories;
        trajectories.reserve(n);
        for (auto& r : results) {
            state_.learner.stats.merge(r.fresh_stats);
            state_.reward_log.push_back(r.mean_reward);
            const double prev = state_.ema_log.empty() ? r.mean_reward : state_.ema_log.back();
            state_.ema_log.push_back(state_.ema_log.empty() ? r.mean_reward : prev + alpha * (r.mean_reward - prev));
            trajectories.push_back(std::move(r.trajectory));
        }
        standardize_rewards(trajectories, state_.reward_stats);
        const Dataset data = build_dataset(trajectories, config_.gamma, config_.gae_lambda);
        RngStream shuffle(seed_, StreamIds::shuffle(state_.rounds_done));
        last_update_ = ppo_update(state_.learner, data, config_, shuffle);
        state_.episodes_done += n;
        ++state_.rounds_done;
        if (on_round) {
            on_round(state_);
        }
    }
}

}  // namespace lobgym
