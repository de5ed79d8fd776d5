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

#include "lobgym/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "lobgym/checkpoint.hpp"
#include "lobgym/errors.hpp"
#include "lobgym/policy.hpp"

namespace lobgym {

namespace fs = std::filesystem;

namespace {

std::string num(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void say(const Logger& log, const std::string& msg)
{
    if (log) {
        log(msg);
    }
}

fs::path prepare_out_dir(const RunConfig& config)
{
    const fs::path dir(config.io.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw RuntimeFault("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    return dir;
}

class OutFile {
public:
    OutFile(const fs::path& path, const RunConfig& config, std::uint64_t seed) : path_(path), out_(path)
    {
        if (!out_) {
            throw RuntimeFault("cannot open " + path.string() + " for writing");
        }
        out_ << artifact_header(config, seed) << "\n";
    }
    ~OutFile() noexcept(false)
    {
        out_.flush();
        if (!out_ && std::uncaught_exceptions() == 0) {
            throw RuntimeFault("write failed: " + path_.string());
        }
    }
    std::ofstream& operator*() { return out_; }
    template <class T>
    std::ofstream& operator<<(const T& v)
    {
        out_ << v;
        return out_;
    }

private:
    fs::path path_;
    std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Static SVG line charts
// ---------------------------------------------------------------------------

struct Series {
    std::string label;
    std::vector<double> y;
    std::string color;
};

std::string svg_chart(const std::string& title, const std::string& header, const std::vector<Series>& lines,
                      const std::vector<double>* band_lo = nullptr, const std::vector<double>* band_hi = nullptr)
{
    constexpr double W = 720, H = 420, L = 90, R = 20, T = 40, B = 50;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::size_t n = 0;
    auto scan = [&](const std::vector<double>& v) {
        for (double x : v) {
            if (std::isfinite(x)) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
        }
        n = std::max(n, v.size());
    };
    for (const auto& s : lines) {
        scan(s.y);
    }
    if (band_lo && band_hi) {
        scan(*band_lo);
        scan(*band_hi);
    }
    if (!std::isfinite(lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi - lo < 1e-300) {
        const double pad = std::max(std::abs(hi) * 1e-3, 1e-12);
        lo -= pad;
        hi += pad;
    }
    const double span_x = n > 1 ? static_cast<double>(n - 1) : 1.0;
    auto px = [&](std::size_t i) { return L + (W - L - R) * static_cast<double>(i) / span_x; };
    auto py = [&](double y) { return T + (H - T - B) * (hi - y) / (hi - lo); };
    auto pt = [&](std::size_t i, double y) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(i), py(y));
        return std::string(buf);
    };

    std::ostringstream s;
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!-- " << header.substr(2) << " -->\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << " " << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
      << title << "</text>\n"
      << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double y = lo + (hi - lo) * k / 4.0;
        char label[32];
        std::snprintf(label, sizeof label, "%.3g", y);
        s << "<text x=\"" << L - 6 << "\" y=\"" << py(y) + 4
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << label << "</text>\n";
    }
    s << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\" font-family=\"sans-serif\" font-size=\"11\">0</text>\n"
      << "<text x=\"" << W - R << "\" y=\"" << H - B + 16
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << (n > 0 ? n - 1 : 0) << "</text>\n";
    if (band_lo && band_hi && !band_lo->empty()) {
        s << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < band_hi->size(); ++i) {
            s << pt(i, (*band_hi)[i]);
        }
        for (std::size_t i = band_lo->size(); i-- > 0;) {
            s << pt(i, (*band_lo)[i]);
        }
        s << "\"/>\n";
    }
    double legend_y = T + 16;
    for (const auto& line : lines) {
        s << "<polyline fill=\"none\" stroke=\"" << line.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < line.y.size(); ++i) {
            s << pt(i, line.y[i]);
        }
        s << "\"/>\n<text x=\"" << L + 10 << "\" y=\"" << legend_y << "\" fill=\"" << line.color
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << line.label << "</text>\n";
        legend_y += 16;
    }
    s << "</svg>\n";
    return s.str();
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw RuntimeFault("cannot write " + path.string());
    }
}

const char* side_name(Side s) { return s == Side::Bid ? "bid" : "ask"; }
const char* owner_name(Owner o) { return o == Owner::Agent ? "agent" : "market"; }

void write_comparison(const fs::path& path, const RunConfig& config, std::uint64_t seed,
                      const std::vector<ComparisonRow>& rows)
{
    OutFile out(path, config, seed);
    out << "agent,n,mean_return,volatility,sortino,ann_return,warnings\n";
    for (const auto& r : rows) {
        out << r.agent << "," << r.n << "," << num(r.mean_return) << "," << num(r.volatility) << ","
            << num(r.sortino) << "," << num(r.ann_return) << "," << r.warnings << "\n";
    }
}

void write_return_figure(const fs::path& dir, const RunConfig& config, std::uint64_t seed, const ComparisonRow& row)
{
    const ReturnBand band = return_band(row.episodes);
    std::vector<double> lo(band.mean.size());
    std::vector<double> hi(band.mean.size());
    for (std::size_t i = 0; i < band.mean.size(); ++i) {
        lo[i] = band.mean[i] - band.sd[i];
        hi[i] = band.mean[i] + band.sd[i];
    }
    const std::string title =
        "Financial return of " + row.agent + ", mean and 1 sd over " + std::to_string(row.n) + " episodes";
    write_text(dir / ("returns_" + row.agent + ".svg"),
               svg_chart(title, artifact_header(config, seed), {{"mean return", band.mean, "#08519c"}}, &lo, &hi));
}

ComparisonRow run_evaluation(const RunConfig& config, std::uint64_t seed, QuotingAgent& agent, std::size_t episodes,
                             const fs::path& dir)
{
    if (!config.io.trajectory_dump) {
        return evaluate(agent, config.env, episodes, seed);
    }
    OutFile traj(dir / ("trajectory_" + agent.name() + ".csv"), config, seed);
    traj << "episode,t,rsi,oi,microprice,inventory,ma10,ma15,ma30,delta_ask,delta_bid,q_ask,q_bid,reward,pnl,mid\n";
    return evaluate(agent, config.env, episodes, seed,
                    [&traj](std::size_t e, int t, const StepResult& s, const Action&) {
                        const Observation& o = s.observation;
                        const Action& a = s.executed;
                        traj << e << "," << t << "," << num(o.rsi) << "," << num(o.oi) << "," << num(o.microprice)
                             << "," << num(o.inventory) << "," << num(o.ma10) << "," << num(o.ma15) << ","
                             << num(o.ma30) << "," << num(a.delta_ask) << "," << num(a.delta_bid) << "," << a.q_ask
                             << "," << a.q_bid << "," << num(s.reward) << "," << num(s.pnl.pnl) << "," << num(o.mid)
                             << "\n";
                    });
}

std::size_t episode_count(const RunConfig& config, std::optional<int> episodes)
{
    const int n = episodes.value_or(config.eval.episodes);
    if (n < 1) {
        throw ConfigError("evaluation needs at least one episode");
    }
    return static_cast<std::size_t>(n);
}

}  // namespace

std::string version_string() { return LOBGYM_VERSION; }

std::string artifact_header(const RunConfig& config, std::uint64_t seed)
{
    return "# lobgym " + version_string() + " config_hash=" + hex64(config.hash()) + " seed=" + std::to_string(seed);
}

Moments moments(const std::vector<double>& x)
{
    Moments m;
    if (x.size() < 2) {
        return m;
    }
    const double n = static_cast<double>(x.size());
    double mu = 0.0;
    for (double v : x) {
        mu += v;
    }
    mu /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - mu;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 > 0.0) {
        m.skew = m3 / std::pow(m2, 1.5);
        m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return m;
}

double lag1_autocorrelation(const std::vector<double>& x)
{
    if (x.size() < 3) {
        return 0.0;
    }
    double mu = 0.0;
    for (double v : x) {
        mu += v;
    }
    mu /= static_cast<double>(x.size());
    double num_ = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        den += (x[i] - mu) * (x[i] - mu);
        if (i > 0) {
            num_ += (x[i] - mu) * (x[i - 1] - mu);
        }
    }
    return den > 0.0 ? num_ / den : 0.0;
}

double dispersion_index(const std::vector<double>& times, double width)
{
    if (times.empty() || !(width > 0.0)) {
        return 0.0;
    }
    const auto windows = static_cast<std::size_t>(std::floor(times.back() / width));
    if (windows < 2) {
        return 0.0;
    }
    std::vector<double> counts(windows, 0.0);
    for (double t : times) {
        const auto w = static_cast<std::size_t>(std::floor(t / width));
        if (w < windows) {
            counts[w] += 1.0;
        }
    }
    const double n = static_cast<double>(windows);
    double mu = 0.0;
    for (double c : counts) {
        mu += c;
    }
    mu /= n;
    double var = 0.0;
    for (double c : counts) {
        var += (c - mu) * (c - mu);
    }
    var /= n - 1.0;
    return mu > 0.0 ? var / mu : 0.0;
}

StylizedFacts cmd_simulate(const RunConfig& config, std::uint64_t seed, int steps, const Logger& log)
{
    config.validate();
    if (steps < 1) {
        throw ConfigError("simulate needs --steps >= 1");
    }
    const fs::path dir = prepare_out_dir(config);
    MarketSimulator sim(config.env.market, RngStream(seed, 0));
    const LimitOrderBook& book = sim.book();

    std::optional<OutFile> events;
    if (config.io.log_events) {
        events.emplace(dir / "events.csv", config, seed);
        *events << "t,type,side,price,qty,owner,fill_price,fill_qty\n";
    }

    StylizedFacts facts;
    facts.steps = steps;
    std::vector<double> mids;
    mids.reserve(static_cast<std::size_t>(steps) + 1);
    mids.push_back(book.midprice());
    for (int i = 0; i < steps; ++i) {
        const MarketEvent ev = sim.next_event();
        mids.push_back(book.midprice());
        const auto bid = book.best_bid();
        const auto ask = book.best_ask();
        if (bid && ask) {
            ++facts.two_sided_steps;
            if (*ask > *bid) {
                ++facts.positive_spread_steps;
            } else {
                ++facts.nonpositive_spread_steps;
            }
        }
        if (events) {
            Quantity filled = 0;
            for (const Fill& f : ev.fills) {
                filled += f.quantity;
            }
            *events << num(ev.time) << "," << (ev.market_order ? "market" : "limit") << "," << side_name(ev.side)
                    << "," << (ev.market_order ? "" : num(book.to_price(ev.price))) << "," << ev.quantity
                    << ",market,," << filled << "\n";
            for (const Fill& f : ev.fills) {
                *events << num(f.timestamp) << ",fill," << side_name(opposite(f.taker_side)) << ","
                        << num(book.to_price(f.price)) << "," << f.quantity << "," << owner_name(f.maker_owner)
                        << "," << num(book.to_price(f.price)) << "," << f.quantity << "\n";
            }
        }
    }

    std::vector<double> r;
    std::vector<double> r2;
    r.reserve(mids.size());
    for (std::size_t i = 1; i < mids.size(); ++i) {
        r.push_back(std::log(mids[i] / mids[i - 1]));
        r2.push_back(r.back() * r.back());
    }
    const Moments per_event = moments(r);
    facts.per_event_skew = per_event.skew;
    facts.per_event_excess_kurtosis = per_event.excess_kurtosis;
    std::vector<double> blocks;
    for (std::size_t i = kReturnBlock; i < mids.size(); i += kReturnBlock) {
        blocks.push_back(std::log(mids[i] / mids[i - kReturnBlock]));
    }
    facts.block_returns = blocks.size();
    const Moments per_block = moments(blocks);
    facts.block_skew = per_block.skew;
    facts.block_excess_kurtosis = per_block.excess_kurtosis;
    facts.dispersion_index = dispersion_index(sim.hawkes().event_times(), 1.0);
    facts.squared_return_acf1 = lag1_autocorrelation(r2);

    {
        OutFile out(dir / "stylized_facts.csv", config, seed);
        out << "metric,value\n"
            << "steps," << facts.steps << "\n"
            << "per_event_skew," << num(facts.per_event_skew) << "\n"
            << "per_event_excess_kurtosis," << num(facts.per_event_excess_kurtosis) << "\n"
            << "block_events," << facts.block << "\n"
            << "block_returns," << facts.block_returns << "\n"
            << "block_skew," << num(facts.block_skew) << "\n"
            << "block_excess_kurtosis," << num(facts.block_excess_kurtosis) << "\n"
            << "two_sided_steps," << facts.two_sided_steps << "\n"
            << "positive_spread_steps," << facts.positive_spread_steps << "\n"
            << "nonpositive_spread_steps," << facts.nonpositive_spread_steps << "\n"
            << "dispersion_index," << num(facts.dispersion_index) << "\n"
            << "squared_return_acf1," << num(facts.squared_return_acf1) << "\n";
    }
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "simulated %d events: block skew %.3f, block excess kurtosis %.3f, spread > 0 on %d/%d "
                  "two-sided steps, dispersion %.3f, acf1(r^2) %.3f",
                  steps, facts.block_skew, facts.block_excess_kurtosis, facts.positive_spread_steps,
                  facts.two_sided_steps, facts.dispersion_index, facts.squared_return_acf1);
    say(log, buf);
    return facts;
}

TrainOutcome cmd_train(const RunConfig& config, std::uint64_t seed, std::optional<int> episodes,
                       const std::optional<fs::path>& resume, const Logger& log)
{
    config.validate();
    const int target = episodes.value_or(config.ppo.episodes);
    if (target < 0) {
        throw ConfigError("train needs --episodes >= 0");
    }
    const fs::path dir = prepare_out_dir(config);
    const std::uint64_t hash = config.hash();

    TrainState state(config.ppo.network);
    std::optional<Trainer> trainer;
    if (resume) {
        const Checkpoint ckpt = read_checkpoint(*resume);
        if (ckpt.seed != seed) {
            throw ConfigError("checkpoint was trained with seed " + std::to_string(ckpt.seed) + ", not "
                              + std::to_string(seed));
        }
        if (ckpt.config_hash != hash) {
            say(log, "warning: checkpoint config hash " + hex64(ckpt.config_hash) + " differs from " + hex64(hash));
        }
        restore(ckpt, state);
        say(log, "resumed at episode " + std::to_string(state.episodes_done));
        trainer.emplace(config.env, config.ppo, seed, std::move(state));
    } else {
        trainer.emplace(config.env, config.ppo, seed);
    }

    const fs::path ckpt_path = dir / "checkpoint.bin";
    const auto every = static_cast<std::uint64_t>(config.ppo.checkpoint_every);
    std::uint64_t last_saved = trainer->state().episodes_done;
    trainer->run(static_cast<std::uint64_t>(target), [&](const TrainState& s) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "episode %llu mean_reward %.9g ema %.9g",
                      static_cast<unsigned long long>(s.episodes_done), s.reward_log.back(), s.ema_log.back());
        say(log, buf);
        if (trainer->last_update().aborted) {
            say(log, "warning: non-finite update rolled back");
        }
        if (every > 0 && s.episodes_done / every > last_saved / every) {
            write_checkpoint(ckpt_path, make_checkpoint(s, hash, seed));
            last_saved = s.episodes_done;
        }
    });
    const TrainState& s = trainer->state();
    write_checkpoint(ckpt_path, make_checkpoint(s, hash, seed));

    {
        OutFile out(dir / "reward_log.csv", config, seed);
        out << "episode,mean_reward,ema_reward\n";
        for (std::size_t i = 0; i < s.reward_log.size(); ++i) {
            out << i + 1 << "," << num(s.reward_log[i]) << "," << num(s.ema_log[i]) << "\n";
        }
    }
    write_text(dir / "reward_ema.svg",
               svg_chart("Exponential moving average of the training reward", artifact_header(config, seed),
                         {{"mean episode reward", s.reward_log, "#bdbdbd"}, {"EMA (half-life 20)", s.ema_log, "#cb181d"}}));

    TrainOutcome outcome;
    outcome.episodes_done = s.episodes_done;
    outcome.ema_slope = ols_slope(s.ema_log);
    outcome.checkpoint = ckpt_path;
    char buf[160];
    std::snprintf(buf, sizeof buf, "trained %llu episodes, EMA slope %.6g",
                  static_cast<unsigned long long>(outcome.episodes_done), outcome.ema_slope);
    say(log, buf);
    return outcome;
}

std::unique_ptr<QuotingAgent> make_agent(const RunConfig& config, const std::string& kind)
{
    const double tick = config.env.market.tick;
    if (kind == "stoikov") {
        return std::make_unique<StoikovAgent>(
            EstimatorConfig{config.agent.stoikov_window, unconditional_step_sigma(config.env.market)}, tick);
    }
    if (kind == "long_only") {
        return long_only_agent(tick);
    }
    if (kind != "rl") {
        throw ConfigError("unknown agent kind '" + kind + "'");
    }
    if (config.agent.checkpoint.empty()) {
        throw ConfigError("agent rl needs a checkpoint (--checkpoint or agent.checkpoint)");
    }
    if (!fs::exists(config.agent.checkpoint)) {
        throw ConfigError("checkpoint not found: " + config.agent.checkpoint);
    }
    TrainState state(config.ppo.network);
    restore(read_checkpoint(config.agent.checkpoint), state);
    return std::make_unique<PolicyAgent>(state.learner.actor, state.learner.stats, input_scales(config.env),
                                         action_mapping(config.env, config.ppo));
}

ComparisonRow cmd_evaluate(const RunConfig& config, std::uint64_t seed, const std::string& kind,
                           std::optional<int> episodes, const Logger& log)
{
    config.validate();
    const std::size_t n = episode_count(config, episodes);
    auto agent = make_agent(config, kind);
    const fs::path dir = prepare_out_dir(config);
    ComparisonRow row = run_evaluation(config, seed, *agent, n, dir);
    write_comparison(dir / "comparison.csv", config, seed, {row});
    write_return_figure(dir, config, seed, row);
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s: n=%zu mean %.6g vol %.6g sortino %.6g annualized %.6g", row.agent.c_str(),
                  row.n, row.mean_return, row.volatility, row.sortino, row.ann_return);
    say(log, buf);
    return row;
}

std::vector<ComparisonRow> cmd_compare(const RunConfig& config, std::uint64_t seed, std::optional<int> episodes,
                                       const Logger& log)
{
    config.validate();
    const std::size_t n = episode_count(config, episodes);
    std::vector<std::unique_ptr<QuotingAgent>> agents;
    for (const char* kind : {"rl", "stoikov", "long_only"}) {
        agents.push_back(make_agent(config, kind));
    }
    const fs::path dir = prepare_out_dir(config);
    std::vector<ComparisonRow> rows;
    for (auto& agent : agents) {
        rows.push_back(run_evaluation(config, seed, *agent, n, dir));
        write_return_figure(dir, config, seed, rows.back());
        char buf[200];
        std::snprintf(buf, sizeof buf, "%s: n=%zu mean %.6g vol %.6g sortino %.6g annualized %.6g",
                      rows.back().agent.c_str(), rows.back().n, rows.back().mean_return, rows.back().volatility,
                      rows.back().sortino, rows.back().ann_return);
        say(log, buf);
    }
    write_comparison(dir / "comparison.csv", config, seed, rows);
    return rows;
}

}  // namespace lobgym
