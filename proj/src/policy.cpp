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

#include "lobgym/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lobgym/errors.hpp"

namespace lobgym {

namespace {

using MapRow = Eigen::Map<const RowMatrix>;

void xavier(Eigen::Map<Eigen::MatrixXd> w, RngStream& rng, double gain)
{
    const double a = gain * std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            w(i, j) = (2.0 * rng.uniform() - 1.0) * a;
        }
    }
}

void softmax_rows(RowMatrix& s)
{
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        const double m = s.row(r).maxCoeff();
        s.row(r) = (s.row(r).array() - m).exp();
        s.row(r) /= s.row(r).sum();
    }
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t ParameterStore::add(std::string name, int rows, int cols)
{
    tensors_.push_back({std::move(name), rows, cols, values.size()});
    values.resize(values.size() + static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
    return tensors_.size() - 1;
}

Eigen::Map<Eigen::MatrixXd> ParameterStore::view(std::size_t id, std::span<double> data) const
{
    const Tensor& t = tensors_[id];
    return {data.data() + t.offset, t.rows, t.cols};
}

Eigen::Map<const Eigen::MatrixXd> ParameterStore::view(std::size_t id, std::span<const double> data) const
{
    const Tensor& t = tensors_[id];
    return {data.data() + t.offset, t.rows, t.cols};
}

bool ParameterStore::all_finite() const
{
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------

RunningStats::RunningStats(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

void RunningStats::update(std::span<const double> x)
{
    count_ += 1.0;
    for (std::size_t i = 0; i < mean_.size(); ++i) {
        const double d = x[i] - mean_[i];
        mean_[i] += d / count_;
        m2_[i] += d * (x[i] - mean_[i]);
    }
}

void RunningStats::merge(const RunningStats& other)
{
    if (other.count_ == 0.0) {
        return;
    }
    const double n = count_ + other.count_;
    for (std::size_t i = 0; i < mean_.size(); ++i) {
        const double d = other.mean_[i] - mean_[i];
        mean_[i] += d * other.count_ / n;
        m2_[i] += other.m2_[i] + d * d * count_ * other.count_ / n;
    }
    count_ = n;
}

void RunningStats::normalize(std::span<const double> x, std::span<double> out) const
{
    for (std::size_t i = 0; i < mean_.size(); ++i) {
        const double var = count_ > 0.0 ? m2_[i] / count_ : 0.0;
        const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
        out[i] = (x[i] - mean_[i]) / sd;
    }
}

void RunningStats::set(double count, std::vector<double> mean, std::vector<double> m2)
{
    if (mean.size() != mean_.size() || m2.size() != m2_.size()) {
        throw std::invalid_argument("running stats: dimension mismatch");
    }
    count_ = count;
    mean_ = std::move(mean);
    m2_ = std::move(m2);
}

void normalize_observation(const Observation& obs, const RunningStats& stats, const InputScales& scales,
                           std::span<double> out)
{
    const double market[kMarketInputs] = {obs.rsi, obs.oi, obs.microprice, obs.inventory,
                                          obs.ma10, obs.ma15, obs.ma30};
    stats.normalize(market, out.first(kMarketInputs));
    const std::size_t d = obs.depth_ask.size();
    const double delta_scale = 100.0 * scales.tick;
    std::size_t pos = kMarketInputs;
    auto emit = [&](const std::vector<DepthLevel>& side, double flag) {
        for (std::size_t i = 0; i < side.size(); ++i) {
            out[pos++] = side[i].half_spread / delta_scale;
            out[pos++] = static_cast<double>(side[i].quantity) / scales.quantity_lambda;
            out[pos++] = flag;
            out[pos++] = static_cast<double>(i) / static_cast<double>(d);
        }
    };
    emit(obs.depth_ask, 0.0);
    emit(obs.depth_bid, 1.0);
}

std::vector<double> normalize_observation(const Observation& obs, const RunningStats& stats,
                                          const InputScales& scales)
{
    std::vector<double> out(kMarketInputs + kLevelInputs * (obs.depth_ask.size() + obs.depth_bid.size()));
    normalize_observation(obs, stats, scales, out);
    return out;
}

// ---------------------------------------------------------------------------

ActorNetwork::ActorNetwork(NetworkShape shape) : shape_(shape)
{
    const int e = shape.embed_dim;
    embed_w_ = params.add("actor.embed.w", kLevelInputs, e);
    embed_b_ = params.add("actor.embed.b", 1, e);
    for (int l = 0; l < shape.attention_layers; ++l) {
        const std::string p = "actor.attn" + std::to_string(l) + ".";
        attn_.push_back({params.add(p + "wq", e, e), params.add(p + "wk", e, e), params.add(p + "wv", e, e),
                         params.add(p + "wo", e, e)});
    }
    feat_w_ = params.add("actor.feat.w", kMarketInputs, shape.feature_dim);
    feat_b_ = params.add("actor.feat.b", 1, shape.feature_dim);
    head_w_ = params.add("actor.head.w", e + shape.feature_dim, shape.head_dim);
    head_b_ = params.add("actor.head.b", 1, shape.head_dim);
    out_w_ = params.add("actor.out.w", shape.head_dim, kActionDim);
    out_b_ = params.add("actor.out.b", 1, kActionDim);
    log_std_ = params.add("actor.log_std", 1, kActionDim);
}

void ActorNetwork::initialize(RngStream& rng, double init_log_std)
{
    std::fill(params.values.begin(), params.values.end(), 0.0);
    xavier(params[embed_w_], rng, 1.0);
    for (const auto& layer : attn_) {
        for (std::size_t id : layer) {
            xavier(params[id], rng, 1.0);
        }
    }
    xavier(params[feat_w_], rng, 1.0);
    xavier(params[head_w_], rng, 1.0);
    xavier(params[out_w_], rng, 0.01);
    params[log_std_].setConstant(std::clamp(init_log_std, kLogStdMin, kLogStdMax));
}

void ActorNetwork::clamp_log_std()
{
    auto ls = params[log_std_];
    ls = ls.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

ActorOutput ActorNetwork::forward(std::span<const double> input, ActorCache* cache) const
{
    const int n = shape_.tokens();
    const double scale = 1.0 / std::sqrt(static_cast<double>(shape_.embed_dim));
    ActorCache local;
    ActorCache& c = cache != nullptr ? *cache : local;
    const auto layers = static_cast<std::size_t>(shape_.attention_layers);
    c.x.resize(layers + 1);
    c.q.resize(layers);
    c.k.resize(layers);
    c.v.resize(layers);
    c.a.resize(layers);
    c.c.resize(layers);

    c.market = Eigen::Map<const Eigen::RowVectorXd>(input.data(), kMarketInputs);
    c.levels = MapRow(input.data() + kMarketInputs, n, kLevelInputs);

    c.x[0].noalias() = c.levels * params[embed_w_];
    c.x[0].rowwise() += params[embed_b_].row(0);

    for (std::size_t l = 0; l < layers; ++l) {
        const auto& [wq, wk, wv, wo] = attn_[l];
        const RowMatrix& x = c.x[l];
        c.q[l].noalias() = x * params[wq];
        c.k[l].noalias() = x * params[wk];
        c.v[l].noalias() = x * params[wv];
        c.a[l].noalias() = c.q[l] * c.k[l].transpose();
        c.a[l] *= scale;
        softmax_rows(c.a[l]);
        c.c[l].noalias() = c.a[l] * c.v[l];
        c.x[l + 1] = x;
        c.x[l + 1].noalias() += c.c[l] * params[wo];
    }

    c.pooled = c.x[layers].colwise().mean();
    c.feat = (c.market * params[feat_w_] + params[feat_b_]).array().tanh();
    c.z.resize(shape_.embed_dim + shape_.feature_dim);
    c.z << c.pooled, c.feat;
    c.hidden = (c.z * params[head_w_] + params[head_b_]).array().tanh();
    c.mean = c.hidden * params[out_w_] + params[out_b_];

    ActorOutput out{c.mean, params[log_std_]};
    if (!out.mean.allFinite()) {
        throw RuntimeFault("actor: non-finite output (check inputs and parameters)");
    }
    return out;
}

void ActorNetwork::backward(const ActorCache& c, const ActionVec& grad_mean, const ActionVec& grad_log_std,
                            std::span<double> grad) const
{
    const int n = shape_.tokens();
    const double scale = 1.0 / std::sqrt(static_cast<double>(shape_.embed_dim));
    auto g = [&](std::size_t id) { return params.view(id, grad); };

    g(out_w_).noalias() += c.hidden.transpose() * grad_mean;
    g(out_b_) += grad_mean;
    const Eigen::RowVectorXd g_hidden_pre =
        ((grad_mean * params[out_w_].transpose()).array() * (1.0 - c.hidden.array().square())).matrix();
    g(head_w_).noalias() += c.z.transpose() * g_hidden_pre;
    g(head_b_) += g_hidden_pre;
    const Eigen::RowVectorXd g_z = g_hidden_pre * params[head_w_].transpose();
    const auto e = shape_.embed_dim;

    const Eigen::RowVectorXd g_feat_pre =
        (g_z.tail(shape_.feature_dim).array() * (1.0 - c.feat.array().square())).matrix();
    g(feat_w_).noalias() += c.market.transpose() * g_feat_pre;
    g(feat_b_) += g_feat_pre;

    RowMatrix g_x = g_z.head(e).replicate(n, 1) / static_cast<double>(n);
    RowMatrix g_c, g_a, g_s, g_q, g_k, g_v;
    for (std::size_t l = attn_.size(); l-- > 0;) {
        const auto& [wq, wk, wv, wo] = attn_[l];
        const RowMatrix& x = c.x[l];
        g(wo).noalias() += c.c[l].transpose() * g_x;
        g_c.noalias() = g_x * params[wo].transpose();
        g_a.noalias() = g_c * c.v[l].transpose();
        g_v.noalias() = c.a[l].transpose() * g_c;
        const Eigen::VectorXd row_dot = (g_a.array() * c.a[l].array()).rowwise().sum();
        g_s = c.a[l].array() * (g_a.colwise() - row_dot).array();
        g_q.noalias() = g_s * c.k[l];
        g_q *= scale;
        g_k.noalias() = g_s.transpose() * c.q[l];
        g_k *= scale;
        g(wq).noalias() += x.transpose() * g_q;
        g(wk).noalias() += x.transpose() * g_k;
        g(wv).noalias() += x.transpose() * g_v;
        g_x.noalias() += g_q * params[wq].transpose();
        g_x.noalias() += g_k * params[wk].transpose();
        g_x.noalias() += g_v * params[wv].transpose();
    }
    g(embed_w_).noalias() += c.levels.transpose() * g_x;
    g(embed_b_) += g_x.colwise().sum();
    g(log_std_) += grad_log_std;
}

// ---------------------------------------------------------------------------

CriticNetwork::CriticNetwork(NetworkShape shape) : shape_(shape)
{
    const int in = shape.input_size();
    w1_ = params.add("critic.l1.w", in, shape.critic_hidden1);
    b1_ = params.add("critic.l1.b", 1, shape.critic_hidden1);
    w2_ = params.add("critic.l2.w", shape.critic_hidden1, shape.critic_hidden2);
    b2_ = params.add("critic.l2.b", 1, shape.critic_hidden2);
    w3_ = params.add("critic.out.w", shape.critic_hidden2, 1);
    b3_ = params.add("critic.out.b", 1, 1);
}

void CriticNetwork::initialize(RngStream& rng)
{
    std::fill(params.values.begin(), params.values.end(), 0.0);
    xavier(params[w1_], rng, 1.0);
    xavier(params[w2_], rng, 1.0);
    xavier(params[w3_], rng, 1.0);
}

double CriticNetwork::forward(std::span<const double> input, CriticCache* cache) const
{
    CriticCache local;
    CriticCache& c = cache != nullptr ? *cache : local;
    c.input = Eigen::Map<const Eigen::RowVectorXd>(input.data(), shape_.input_size());
    c.h1 = (c.input * params[w1_] + params[b1_]).array().tanh();
    c.h2 = (c.h1 * params[w2_] + params[b2_]).array().tanh();
    const double v = (c.h2 * params[w3_])(0, 0) + params[b3_](0, 0);
    if (!std::isfinite(v)) {
        throw RuntimeFault("critic: non-finite output (check inputs and parameters)");
    }
    return v;
}

void CriticNetwork::backward(const CriticCache& c, double grad_value, std::span<double> grad) const
{
    auto g = [&](std::size_t id) { return params.view(id, grad); };
    g(w3_).noalias() += c.h2.transpose() * grad_value;
    g(b3_)(0, 0) += grad_value;
    const Eigen::RowVectorXd g2 =
        ((params[w3_].transpose() * grad_value).array() * (1.0 - c.h2.array().square())).matrix();
    g(w2_).noalias() += c.h1.transpose() * g2;
    g(b2_) += g2;
    const Eigen::RowVectorXd g1 = ((g2 * params[w2_].transpose()).array() * (1.0 - c.h1.array().square())).matrix();
    g(w1_).noalias() += c.input.transpose() * g1;
    g(b1_) += g1;
}

// ---------------------------------------------------------------------------

double gaussian_log_prob(const ActionVec& action, const ActionVec& mean, const ActionVec& log_std)
{
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    double lp = 0.0;
    for (int i = 0; i < kActionDim; ++i) {
        const double z = (action[i] - mean[i]) * std::exp(-log_std[i]);
        lp += -0.5 * z * z - log_std[i] - half_log_2pi;
    }
    return lp;
}

double gaussian_entropy(const ActionVec& log_std)
{
    return log_std.sum() + 0.5 * kActionDim * std::log(2.0 * std::numbers::pi * std::numbers::e);
}

SampledAction sample_action(const ActionVec& mean, const ActionVec& log_std, RngStream& rng)
{
    SampledAction s;
    for (int i = 0; i < kActionDim; ++i) {
        s.raw[i] = mean[i] + std::exp(log_std[i]) * rng.normal();
    }
    s.log_prob = gaussian_log_prob(s.raw, mean, log_std);
    return s;
}

Action map_action(const ActionVec& raw, const ActionMapping& mapping)
{
    auto softplus = [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); };
    auto size = [&](double x) {
        const double q = std::round((x + 1.0) * 0.5 * static_cast<double>(mapping.q_max));
        return static_cast<Quantity>(std::clamp(q, 0.0, static_cast<double>(mapping.q_max)));
    };
    return Action{softplus(raw[0]) * mapping.spread_scale, softplus(raw[1]) * mapping.spread_scale, size(raw[2]),
                  size(raw[3])};
}

PolicyAgent::PolicyAgent(ActorNetwork actor, RunningStats stats, InputScales scales, ActionMapping mapping)
    : actor_(std::move(actor)),
      stats_(std::move(stats)),
      scales_(scales),
      mapping_(mapping),
      input_(static_cast<std::size_t>(actor_.shape().input_size()))
{
}

Action PolicyAgent::act(const Observation& obs)
{
    normalize_observation(obs, stats_, scales_, input_);
    return map_action(actor_.forward(input_).mean, mapping_);
}

}  // namespace lobgym
