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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include "lobgym/policy.hpp"
#include "lobgym/ppo.hpp"
#include "lobgym/rng.hpp"
#include "grad_check.hpp"

using namespace lobgym;

namespace {

NetworkShape small_shape()
{
    NetworkShape s;
    s.depth_levels = 3;
    s.embed_dim = 8;
    s.attention_layers = 2;
    s.feature_dim = 6;
    s.head_dim = 10;
    s.critic_hidden1 = 12;
    s.critic_hidden2 = 7;
    return s;
}

std::vector<double> random_input(const NetworkShape& shape, RngStream& r)
{
    std::vector<double> x(static_cast<std::size_t>(shape.input_size()));
    for (double& v : x) {
        v = r.normal();
    }
    return x;
}

// Fill every parameter with a draw of the given scale; the default
// initialization leaves biases at zero, which would hide their gradients
// behind symmetric activations.
void randomize(ParameterStore& p, RngStream& r, double scale)
{
    for (double& v : p.values) {
        v = scale * r.normal();
    }
}

// Brute-force GAE: direct double sum of discounted TD residuals.
std::vector<double> gae_oracle(const std::vector<double>& rewards, const std::vector<double>& values, double bootstrap,
                               double gamma, double lambda)
{
    const std::size_t n = rewards.size();
    std::vector<double> delta(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double next = t + 1 < n ? values[t + 1] : bootstrap;
        delta[t] = rewards[t] + gamma * next - values[t];
    }
    std::vector<double> adv(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t l = 0; t + l < n; ++l) {
            adv[t] += std::pow(gamma * lambda, static_cast<double>(l)) * delta[t + l];
        }
    }
    return adv;
}

EnvConfig tiny_env()
{
    EnvConfig e;
    e.steps = 30;
    e.warmup = 100;
    e.depth_levels = 3;
    return e;
}

PpoConfig tiny_ppo()
{
    PpoConfig p;
    p.network = small_shape();
    p.epochs = 3;
    p.minibatch = 16;
    return p;
}

}  // namespace

TEST_SUITE("normalization")
{
    TEST_CASE("first observation with fresh stats gives zero z-scores")
    {
        Observation o;
        o.rsi = 63.0;
        o.oi = 0.2;
        o.microprice = 100.3;
        o.inventory = 4.0;
        o.depth_ask = {{0.02, 5}, {0.03, 1}};
        o.depth_bid = {{0.01, 2}, {0.05, 0}};
        RunningStats s;
        const double m[kMarketInputs] = {o.rsi, o.oi, o.microprice, o.inventory, o.ma10, o.ma15, o.ma30};
        s.update(m);
        const std::vector<double> x = normalize_observation(o, s, InputScales{0.01, 5.0});
        for (int i = 0; i < kMarketInputs; ++i) {
            CHECK(x[static_cast<std::size_t>(i)] == 0.0);
        }
        // Token rows: (delta / (100 tick), Q / lambda, side, level / D).
        REQUIRE(x.size() == static_cast<std::size_t>(kMarketInputs + 4 * 4));
        CHECK(x[7] == doctest::Approx(0.02));
        CHECK(x[8] == doctest::Approx(1.0));
        CHECK(x[9] == 0.0);
        CHECK(x[10] == 0.0);
        CHECK(x[7 + 4 + 3] == doctest::Approx(0.5));
        CHECK(x[7 + 8 + 2] == 1.0);
        CHECK(x[7 + 8 + 1] == doctest::Approx(0.4));
    }

    TEST_CASE("three-sample z-score by hand")
    {
        RunningStats s;
        const double rows[3][kMarketInputs] = {
            {10, 0.1, 100, 0, 0, 0, 0}, {20, 0.3, 101, 2, 0, 0, 0}, {60, -0.4, 99, 4, 0, 0, 0}};
        for (const auto& row : rows) {
            s.update(row);
        }
        Observation o;
        o.rsi = 40.0;
        o.oi = 0.0;
        o.microprice = 100.0;
        o.inventory = 1.0;
        const std::vector<double> x = normalize_observation(o, s, InputScales{});
        // Population moments of {10, 20, 60}: mean 30, variance 1400 / 3.
        const double sd_rsi = std::sqrt(1400.0 / 3.0);
        CHECK(x[0] == doctest::Approx((40.0 - 30.0) / sd_rsi).epsilon(1e-12));
        const double mean_inv = 2.0;
        const double sd_inv = std::sqrt(8.0 / 3.0);
        CHECK(x[3] == doctest::Approx((1.0 - mean_inv) / sd_inv).epsilon(1e-12));
        // Zero-variance features divide by one.
        CHECK(x[4] == 0.0);
        CHECK(normalize_observation(o, s, InputScales{}) == x);
    }

    TEST_CASE("pairwise merge equals sequential updates")
    {
        RngStream r(3, 0);
        RunningStats all;
        RunningStats a;
        RunningStats b;
        for (int i = 0; i < 100; ++i) {
            double row[kMarketInputs];
            for (double& v : row) {
                v = 5.0 + 3.0 * r.normal();
            }
            all.update(row);
            (i < 37 ? a : b).update(row);
        }
        a.merge(b);
        CHECK(a.count() == all.count());
        for (std::size_t k = 0; k < all.dim(); ++k) {
            CHECK(a.mean()[k] == doctest::Approx(all.mean()[k]).epsilon(1e-12));
            CHECK(a.m2()[k] == doctest::Approx(all.m2()[k]).epsilon(1e-10));
        }
    }
}

TEST_SUITE("networks")
{
    TEST_CASE("zero weights give zero outputs")
    {
        ActorNetwork actor(small_shape());
        CriticNetwork critic(small_shape());
        std::fill(actor.params.values.begin(), actor.params.values.end(), 0.0);
        std::fill(critic.params.values.begin(), critic.params.values.end(), 0.0);
        RngStream r(1, 0);
        const auto x = random_input(small_shape(), r);
        const ActorOutput out = actor.forward(x);
        CHECK(out.mean.cwiseAbs().maxCoeff() == 0.0);
        CHECK(critic.forward(x) == 0.0);
    }

    TEST_CASE("token permutation only matters through the level index")
    {
        const NetworkShape shape = small_shape();
        ActorNetwork actor(shape);
        RngStream r(2, 0);
        actor.initialize(r, -0.5);
        randomize(actor.params, r, 0.3);
        std::vector<double> x = random_input(shape, r);
        const int n = shape.tokens();
        for (int t = 0; t < n; ++t) {
            x[static_cast<std::size_t>(kMarketInputs + t * kLevelInputs + 3)] = 0.0;
        }
        std::vector<double> y = x;
        // Reverse the token order.
        for (int t = 0; t < n; ++t) {
            for (int c = 0; c < kLevelInputs; ++c) {
                y[static_cast<std::size_t>(kMarketInputs + t * kLevelInputs + c)] =
                    x[static_cast<std::size_t>(kMarketInputs + (n - 1 - t) * kLevelInputs + c)];
            }
        }
        const ActionVec a = actor.forward(x).mean;
        const ActionVec b = actor.forward(y).mean;
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);

        // With the index channel present the order does matter.
        std::vector<double> xi = x;
        for (int t = 0; t < n; ++t) {
            xi[static_cast<std::size_t>(kMarketInputs + t * kLevelInputs + 3)] = static_cast<double>(t) / n;
        }
        std::vector<double> yi = y;
        for (int t = 0; t < n; ++t) {
            yi[static_cast<std::size_t>(kMarketInputs + t * kLevelInputs + 3)] = static_cast<double>(t) / n;
        }
        CHECK((actor.forward(xi).mean - actor.forward(yi).mean).cwiseAbs().maxCoeff() > 1e-9);
    }

    TEST_CASE("actor backprop matches central differences")
    {
        const NetworkShape shape = small_shape();
        ActorNetwork actor(shape);
        RngStream r(3, 0);
        actor.initialize(r, -0.5);
        randomize(actor.params, r, 0.4);
        const auto x = random_input(shape, r);
        ActionVec wm;
        ActionVec ws;
        for (int k = 0; k < kActionDim; ++k) {
            wm[k] = r.normal();
            ws[k] = r.normal();
        }
        auto f = [&] {
            const ActorOutput o = actor.forward(x);
            return o.mean.dot(wm) + o.log_std.dot(ws);
        };
        ActorCache cache;
        actor.forward(x, &cache);
        std::vector<double> grad(actor.params.size(), 0.0);
        actor.backward(cache, wm, ws, grad);
        const gradcheck::Result res = gradcheck::check(actor.params, grad, f, r);
        MESSAGE("actor: " << res.checked << " parameters, worst relative error " << res.worst);
        CHECK(res.worst < 1e-4);
    }

    TEST_CASE("critic backprop matches central differences")
    {
        const NetworkShape shape = small_shape();
        CriticNetwork critic(shape);
        RngStream r(4, 0);
        critic.initialize(r);
        randomize(critic.params, r, 0.3);
        const auto x = random_input(shape, r);
        auto f = [&] { return critic.forward(x); };
        CriticCache cache;
        critic.forward(x, &cache);
        std::vector<double> grad(critic.params.size(), 0.0);
        critic.backward(cache, 1.0, grad);
        const gradcheck::Result res = gradcheck::check(critic.params, grad, f, r);
        MESSAGE("critic: " << res.checked << " parameters, worst relative error " << res.worst);
        CHECK(res.worst < 1e-4);
    }

    TEST_CASE("critic output does not depend on evaluation order")
    {
        CriticNetwork critic(small_shape());
        RngStream r(5, 0);
        critic.initialize(r);
        const auto a = random_input(small_shape(), r);
        const auto b = random_input(small_shape(), r);
        const double va = critic.forward(a);
        const double vb = critic.forward(b);
        CHECK(critic.forward(b) == vb);
        CHECK(critic.forward(a) == va);
    }
}

TEST_SUITE("distribution")
{
    TEST_CASE("log-density of the mean with unit std")
    {
        const ActionVec m(0.3, -1.0, 2.0, 0.0);
        const double lp = gaussian_log_prob(m, m, ActionVec::Zero());
        CHECK(lp == doctest::Approx(-2.0 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
        CHECK(lp == doctest::Approx(-3.67575).epsilon(1e-6));
    }

    TEST_CASE("log-density against the closed form")
    {
        const ActionVec a(0.1, 0.2, -0.3, 1.0);
        const ActionVec m(0.0, 0.5, 0.0, 0.0);
        const ActionVec ls(-1.0, 0.0, 0.5, -0.2);
        double expected = 0.0;
        for (int k = 0; k < 4; ++k) {
            const double sd = std::exp(ls[k]);
            const double z = (a[k] - m[k]) / sd;
            expected += -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
        }
        CHECK(gaussian_log_prob(a, m, ls) == doctest::Approx(expected).epsilon(1e-13));
    }

    TEST_CASE("entropy closed form")
    {
        const ActionVec ls(-1.0, 0.0, 0.5, -0.2);
        const double expected = ls.sum() + 2.0 * std::log(2.0 * std::numbers::pi * std::numbers::e);
        CHECK(std::abs(gaussian_entropy(ls) - expected) < 1e-9);
    }

    TEST_CASE("minimum log-std samples stay at the mean")
    {
        RngStream r(6, 0);
        const ActionVec m(0.5, -0.5, 0.0, 1.0);
        const ActionVec ls = ActionVec::Constant(kLogStdMin);
        int inside = 0;
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            const SampledAction s = sample_action(m, ls, r);
            inside += (s.raw - m).cwiseAbs().maxCoeff() < 0.05 ? 1 : 0;
            REQUIRE(std::isfinite(s.log_prob));
        }
        CHECK(static_cast<double>(inside) / n > 0.999);
    }

    TEST_CASE("action mapping")
    {
        const ActionMapping mp{0.1, 10};
        const Action a = map_action(ActionVec(0.0, 30.0, -1.0, 1.0), mp);
        CHECK(a.delta_ask == doctest::Approx(std::log(2.0) * 0.1));
        CHECK(a.delta_bid == doctest::Approx(3.0));
        CHECK(a.q_ask == 0);
        CHECK(a.q_bid == 10);
        CHECK(map_action(ActionVec(0.0, 0.0, 5.0, -9.0), mp).q_ask == 10);
        CHECK(map_action(ActionVec(0.0, 0.0, 5.0, -9.0), mp).q_bid == 0);
        CHECK(map_action(ActionVec(0.0, 0.0, 0.0, 0.0), mp).q_bid == 5);
    }
}

TEST_SUITE("advantages")
{
    TEST_CASE("trivial cases")
    {
        const GaeResult zero = compute_gae({0, 0, 0}, {0, 0, 0}, 0.0, 0.9, 0.85);
        for (double a : zero.advantages) {
            CHECK(a == 0.0);
        }
        const GaeResult one = compute_gae({2.5}, {0.7}, 0.0, 0.9, 0.85);
        CHECK(one.advantages[0] == doctest::Approx(2.5 - 0.7));
        CHECK(one.returns[0] == doctest::Approx(2.5));
    }

    TEST_CASE("recursion equals the brute-force double sum")
    {
        RngStream r(7, 0);
        double worst = 0.0;
        double worst_returns = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<double> rewards(50);
            std::vector<double> values(50);
            for (std::size_t t = 0; t < 50; ++t) {
                rewards[t] = r.normal();
                values[t] = r.normal();
            }
            const double boot = trial % 2 == 0 ? 0.0 : r.normal();
            const GaeResult g = compute_gae(rewards, values, boot, 0.9, 0.85);
            const std::vector<double> oracle = gae_oracle(rewards, values, boot, 0.9, 0.85);
            for (std::size_t t = 0; t < 50; ++t) {
                worst = std::max(worst, std::abs(g.advantages[t] - oracle[t]));
                worst_returns = std::max(worst_returns, std::abs(g.returns[t] - (oracle[t] + values[t])));
            }
        }
        CHECK(worst < 1e-10);
        CHECK(worst_returns < 1e-10);
    }

    TEST_CASE("standardization")
    {
        std::vector<double> x{1.0, 2.0, 3.0, 10.0};
        standardize(x);
        double m = 0.0;
        for (double v : x) {
            m += v;
        }
        m /= 4.0;
        double var = 0.0;
        for (double v : x) {
            var += (v - m) * (v - m);
        }
        CHECK(std::abs(m) < 1e-15);
        CHECK(std::sqrt(var / 4.0) == doctest::Approx(1.0).epsilon(1e-9));
    }

    TEST_CASE("reward standardization is a per-run affine map")
    {
        std::vector<Trajectory> trajs(2);
        trajs[0].rewards = {-1.0, -1.0001, -0.9999};
        trajs[1].rewards = {-1.0002, -1.0};
        RunningStats stats(1);
        standardize_rewards(trajs, stats);
        CHECK(stats.count() == 5.0);
        const double mean = (-1.0 - 1.0001 - 0.9999 - 1.0002 - 1.0) / 5.0;
        CHECK(stats.mean()[0] == doctest::Approx(mean).epsilon(1e-14));
        // The ordering of rewards survives the map.
        CHECK(trajs[0].rewards[2] > trajs[0].rewards[0]);
        CHECK(trajs[0].rewards[0] > trajs[0].rewards[1]);
        CHECK(trajs[1].rewards[0] < trajs[0].rewards[1]);
    }
}

TEST_SUITE("surrogate")
{
    TEST_CASE("examples")
    {
        CHECK(clipped_surrogate(1.0, 0.7, 0.25) == doctest::Approx(0.7));
        CHECK(clipped_surrogate(1.5, 1.0, 0.25) == doctest::Approx(1.25));
        CHECK(clipped_surrogate(0.5, -1.0, 0.25) == doctest::Approx(-0.75));
        CHECK(clipped_surrogate(0.5, 1.0, 0.25) == doctest::Approx(0.5));
    }

    TEST_CASE("never exceeds the unclipped envelope")
    {
        RngStream r(8, 0);
        for (int i = 0; i < 10000; ++i) {
            const double ratio = 3.0 * r.uniform();
            const double adv = r.normal();
            const double s = clipped_surrogate(ratio, adv, 0.25);
            CHECK(s <= ratio * adv + 1e-15);
            CHECK(s <= std::max((1.0 - 0.25) * adv, (1.0 + 0.25) * adv) + 1e-15);
        }
    }

    TEST_CASE("gradient with respect to log ratio")
    {
        for (double ratio : {0.6, 0.9, 1.0, 1.1, 1.4}) {
            for (double adv : {-1.3, 0.8}) {
                const double h = 1e-7;
                const double num = (clipped_surrogate(ratio * std::exp(h), adv, 0.25)
                                    - clipped_surrogate(ratio * std::exp(-h), adv, 0.25))
                                   / (2.0 * h);
                CHECK(clipped_surrogate_grad_log_ratio(ratio, adv, 0.25) == doctest::Approx(num).epsilon(1e-5));
            }
        }
    }

    TEST_CASE("minibatch gradient matches central differences of the full loss")
    {
        const EnvConfig env = tiny_env();
        PpoConfig cfg = tiny_ppo();
        Learner learner(cfg.network);
        learner.initialize(5, -0.5);
        RngStream r(9, 0);
        randomize(learner.actor.params, r, 0.2);
        RolloutResult roll = collect_episode(learner.actor, learner.critic, learner.stats, env, cfg, 5, 0);
        // Move the policy a little so ratios differ from one.
        for (double& v : learner.actor.params.values) {
            v += 0.01 * r.normal();
        }
        const Dataset data = build_dataset({roll.trajectory}, cfg.gamma, cfg.gae_lambda);
        std::vector<std::size_t> idx(data.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        // A wide clip keeps every sample on the smooth branch.
        cfg.clip_eps = 0.9;
        const MinibatchGrad mg = minibatch_gradient(learner, data, idx, cfg);
        const gradcheck::Result wa = gradcheck::check(
            learner.actor.params, mg.actor_grad, [&] { return minibatch_gradient(learner, data, idx, cfg).objective; },
            r, 12, 1e-5);
        const gradcheck::Result wc = gradcheck::check(
            learner.critic.params, mg.critic_grad,
            [&] { return cfg.critic_coef * minibatch_gradient(learner, data, idx, cfg).critic_loss; }, r, 12, 1e-5);
        MESSAGE("loss gradient: actor " << wa.worst << ", critic " << wc.worst);
        CHECK(wa.worst < 1e-4);
        CHECK(wc.worst < 1e-4);
    }
}

TEST_SUITE("update and training")
{
    TEST_CASE("first ratio is one and parameters stay finite")
    {
        const EnvConfig env = tiny_env();
        const PpoConfig cfg = tiny_ppo();
        Learner learner(cfg.network);
        learner.initialize(11, -0.5);
        RolloutResult roll = collect_episode(learner.actor, learner.critic, learner.stats, env, cfg, 11, 0);
        const Dataset data = build_dataset({roll.trajectory}, cfg.gamma, cfg.gae_lambda);
        RngStream shuffle(11, 99);
        const std::vector<double> before = learner.actor.params.values;
        const UpdateDiagnostics d = ppo_update(learner, data, cfg, shuffle);
        CHECK_FALSE(d.aborted);
        CHECK(d.first_ratio_deviation < 1e-12);
        CHECK(learner.actor.params.all_finite());
        CHECK(learner.critic.params.all_finite());
        CHECK(learner.actor.params.values != before);
        CHECK(d.minibatches == cfg.epochs * 2);
    }

    TEST_CASE("non-finite data aborts and restores the parameters")
    {
        const EnvConfig env = tiny_env();
        const PpoConfig cfg = tiny_ppo();
        Learner learner(cfg.network);
        learner.initialize(12, -0.5);
        RolloutResult roll = collect_episode(learner.actor, learner.critic, learner.stats, env, cfg, 12, 0);
        Dataset data = build_dataset({roll.trajectory}, cfg.gamma, cfg.gae_lambda);
        data.advantages[3] = std::numeric_limits<double>::quiet_NaN();
        const std::vector<double> actor = learner.actor.params.values;
        const std::vector<double> critic = learner.critic.params.values;
        RngStream shuffle(12, 99);
        const UpdateDiagnostics d = ppo_update(learner, data, cfg, shuffle);
        CHECK(d.aborted);
        CHECK(learner.actor.params.values == actor);
        CHECK(learner.critic.params.values == critic);
    }

    TEST_CASE("log-std stays inside its bounds")
    {
        ActorNetwork actor(small_shape());
        RngStream r(13, 0);
        actor.initialize(r, 10.0);
        const auto x = random_input(small_shape(), r);
        CHECK(actor.forward(x).log_std.maxCoeff() <= kLogStdMax);
        actor.initialize(r, -10.0);
        CHECK(actor.forward(x).log_std.minCoeff() >= kLogStdMin);
    }

    TEST_CASE("two episodes with the same seed are bit-identical")
    {
        auto run = [] {
            Trainer t(tiny_env(), tiny_ppo(), 21);
            t.run(2);
            return std::make_pair(t.state().reward_log, t.state().learner.actor.params.values);
        };
        const auto a = run();
        const auto b = run();
        CHECK(a.first == b.first);
        CHECK(a.second == b.second);
        CHECK(a.first.size() == 2);
    }

    TEST_CASE("four workers collect four trajectories per update")
    {
        PpoConfig four = tiny_ppo();
        four.workers = 4;
        Trainer t4(tiny_env(), four, 22);
        t4.run(8);
        CHECK(t4.state().episodes_done == 8);
        CHECK(t4.state().rounds_done == 2);
        CHECK(t4.state().reward_log.size() == 8);
        // 4 x 30 steps in minibatches of 16.
        CHECK(t4.last_update().minibatches == four.epochs * 8);

        Trainer t1(tiny_env(), tiny_ppo(), 22);
        t1.run(8);
        CHECK(t1.state().rounds_done == 8);
        // The first round sees the same snapshot, so episode 0 matches.
        CHECK(t1.state().reward_log[0] == t4.state().reward_log[0]);

        Trainer again(tiny_env(), four, 22);
        again.run(8);
        CHECK(again.state().reward_log == t4.state().reward_log);
    }

    TEST_CASE("reward EMA and slope helpers")
    {
        const std::vector<double> e = ema({1.0, 0.0, 0.0}, 1.0);
        CHECK(e[0] == 1.0);
        CHECK(e[1] == doctest::Approx(0.5));
        CHECK(e[2] == doctest::Approx(0.25));
        CHECK(ols_slope({1.0, 3.0, 5.0, 7.0}) == doctest::Approx(2.0));
        CHECK(ols_slope({4.0}) == 0.0);
    }
}
