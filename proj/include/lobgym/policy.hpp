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

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lobgym/agents.hpp"
#include "lobgym/env.hpp"
#include "lobgym/features.hpp"
#include "lobgym/rng.hpp"

namespace lobgym {

inline constexpr int kActionDim = 4;
inline constexpr int kMarketInputs = static_cast<int>(Observation::kMarketFeatures);
inline constexpr int kLevelInputs = 4;
inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

using ActionVec = Eigen::Matrix<double, 1, kActionDim>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct NetworkShape {
    std::size_t depth_levels = 10;
    int embed_dim = 32;
    int attention_layers = 1;
    int feature_dim = 32;
    int head_dim = 64;
    int critic_hidden1 = 128;
    int critic_hidden2 = 64;

    int tokens() const { return static_cast<int>(2 * depth_levels); }
    /// Flat network input: market features then the token matrix, row-major.
    int input_size() const { return kMarketInputs + tokens() * kLevelInputs; }
};

/// Named dense tensors laid out back to back in one flat array, so that
/// optimizers and checkpoints work on a single buffer.
class ParameterStore {
public:
    struct Tensor {
        std::string name;
        int rows;
        int cols;
        std::size_t offset;
    };

    std::size_t add(std::string name, int rows, int cols);

    Eigen::Map<Eigen::MatrixXd> view(std::size_t id, std::span<double> data) const;
    Eigen::Map<const Eigen::MatrixXd> view(std::size_t id, std::span<const double> data) const;
    Eigen::Map<Eigen::MatrixXd> operator[](std::size_t id) { return view(id, std::span<double>(values)); }
    Eigen::Map<const Eigen::MatrixXd> operator[](std::size_t id) const
    {
        return view(id, std::span<const double>(values));
    }

    const std::vector<Tensor>& tensors() const { return tensors_; }
    std::size_t size() const { return values.size(); }
    bool all_finite() const;

    std::vector<double> values;

private:
    std::vector<Tensor> tensors_;
};

/// Welford accumulator over the market features.
class RunningStats {
public:
    explicit RunningStats(std::size_t dim = Observation::kMarketFeatures);

    void update(std::span<const double> x);
    /// Chan et al. pairwise merge.
    void merge(const RunningStats& other);
    /// (x - mean) / std, with std replaced by 1 where the variance is zero.
    void normalize(std::span<const double> x, std::span<double> out) const;

    double count() const { return count_; }
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& m2() const { return m2_; }
    void set(double count, std::vector<double> mean, std::vector<double> m2);
    std::size_t dim() const { return mean_.size(); }

private:
    double count_ = 0.0;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

/// Scales used to build the level tokens.
struct InputScales {
    double tick = 0.01;
    double quantity_lambda = 5.0;
};

/// Network input for one observation. Market features are z-scored with
/// `stats`; each depth level becomes a token (delta / (100 tick),
/// Q / lambda_q, side flag, level / D) with ask levels first (flag 0) then
/// bid levels (flag 1).
void normalize_observation(const Observation& obs, const RunningStats& stats, const InputScales& scales,
                           std::span<double> out);
std::vector<double> normalize_observation(const Observation& obs, const RunningStats& stats,
                                          const InputScales& scales);

/// Activations kept for the backward pass.
struct ActorCache {
    RowMatrix levels;                        // N x 4
    std::vector<RowMatrix> x;                // L + 1 token states, N x E
    std::vector<RowMatrix> q, k, v, a, c;    // per layer
    Eigen::RowVectorXd market, pooled, feat, z, hidden;
    ActionVec mean;
};

struct ActorOutput {
    ActionVec mean;
    ActionVec log_std;
};

/// Attention actor: level tokens are embedded, passed through residual
/// single-head scaled dot-product self-attention layers and mean-pooled;
/// market features go through a tanh dense layer; the concatenation feeds a
/// tanh head and a linear output of action means. The log-std is a free
/// state-independent parameter.
class ActorNetwork {
public:
    explicit ActorNetwork(NetworkShape shape);

    void initialize(RngStream& rng, double init_log_std);

    ActorOutput forward(std::span<const double> input, ActorCache* cache = nullptr) const;
    /// Accumulate d(objective)/d(params) into `grad` given d/d(mean) and
    /// d/d(log_std).
    void backward(const ActorCache& cache, const ActionVec& grad_mean, const ActionVec& grad_log_std,
                  std::span<double> grad) const;

    void clamp_log_std();

    const NetworkShape& shape() const { return shape_; }
    ParameterStore params;

private:
    NetworkShape shape_;
    std::size_t embed_w_, embed_b_, feat_w_, feat_b_, head_w_, head_b_, out_w_, out_b_, log_std_;
    std::vector<std::array<std::size_t, 4>> attn_;  // wq, wk, wv, wo per layer
};

struct CriticCache {
    Eigen::RowVectorXd input, h1, h2;
};

/// Two tanh hidden layers on the flattened input, scalar output.
class CriticNetwork {
public:
    explicit CriticNetwork(NetworkShape shape);

    void initialize(RngStream& rng);
    double forward(std::span<const double> input, CriticCache* cache = nullptr) const;
    void backward(const CriticCache& cache, double grad_value, std::span<double> grad) const;

    const NetworkShape& shape() const { return shape_; }
    ParameterStore params;

private:
    NetworkShape shape_;
    std::size_t w1_, b1_, w2_, b2_, w3_, b3_;
};

double gaussian_log_prob(const ActionVec& action, const ActionVec& mean, const ActionVec& log_std);
/// sum(log_std) + (k/2) ln(2 pi e)
double gaussian_entropy(const ActionVec& log_std);

struct SampledAction {
    ActionVec raw;
    double log_prob;
};
SampledAction sample_action(const ActionVec& mean, const ActionVec& log_std, RngStream& rng);

struct ActionMapping {
    double spread_scale = 0.02;
    Quantity q_max = 10;
};

/// Raw 4-vector to an env action: softplus on the half-spreads (times
/// spread_scale), round((raw + 1) q_max / 2) clamped to [0, q_max] on the
/// sizes. The env quantizes the half-spreads to ticks.
Action map_action(const ActionVec& raw, const ActionMapping& mapping);

/// Trained actor acting at its mean, with frozen normalization statistics.
class PolicyAgent : public QuotingAgent {
public:
    PolicyAgent(ActorNetwork actor, RunningStats stats, InputScales scales, ActionMapping mapping);

    Action act(const Observation& obs) override;
    void reset() override {}
    std::string name() const override { return "rl"; }

private:
    ActorNetwork actor_;
    RunningStats stats_;
    InputScales scales_;
    ActionMapping mapping_;
    std::vector<double> input_;
};

}  // namespace lobgym
