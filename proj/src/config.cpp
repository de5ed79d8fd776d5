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

#include "lobgym/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>
#include <vector>

#include "lobgym/errors.hpp"

namespace lobgym {

namespace {

using Ref = std::variant<double*, int*, std::size_t*, std::int64_t*, bool*, std::string*, PnlConvention*>;

struct Field {
    const char* section;
    const char* key;
    Ref ref;
};

// The single source of truth for the file layout. Order defines the
// canonical form, so append new keys rather than reshuffling.
std::vector<Field> fields(RunConfig& c)
{
    MarketConfig& m = c.env.market;
    PpoConfig& p = c.ppo;
    return {
        {"market", "tick", &m.tick},
        {"market", "initial_mid", &m.initial_mid},
        {"market", "hawkes_mu", &m.hawkes.mu},
        {"market", "hawkes_alpha", &m.hawkes.alpha},
        {"market", "hawkes_beta", &m.hawkes.beta},
        {"market", "hawkes_cap_multiple", &m.hawkes.cap_multiple},
        {"market", "ou_kappa", &m.ou.kappa},
        {"market", "ou_mean", &m.ou.mean},
        {"market", "ou_vol", &m.ou.vol},
        {"market", "cir_kappa", &m.cir.kappa},
        {"market", "cir_mean", &m.cir.mean},
        {"market", "cir_vol", &m.cir.vol},
        {"market", "garch_omega", &m.garch.omega},
        {"market", "garch_alpha", &m.garch.alpha},
        {"market", "garch_beta", &m.garch.beta},
        {"market", "quantity_lambda", &m.quantity.lambda},
        {"market", "market_order_prob", &m.market_order_prob},
        {"market", "price_time_unit", &m.price_time_unit},
        {"env", "steps", &c.env.steps},
        {"env", "warmup", &c.env.warmup},
        {"env", "gamma_risk", &c.env.gamma_risk},
        {"env", "eta_inv", &c.env.eta_inv},
        {"env", "q_max", &c.env.q_max},
        {"env", "depth_levels", &c.env.depth_levels},
        {"env", "rsi_period", &c.env.rsi_period},
        {"env", "pnl_convention", &c.env.pnl_convention},
        {"agent", "kind", &c.agent.kind},
        {"agent", "checkpoint", &c.agent.checkpoint},
        {"agent", "stoikov_window", &c.agent.stoikov_window},
        {"ppo", "learning_rate", &p.learning_rate},
        {"ppo", "gamma", &p.gamma},
        {"ppo", "gae_lambda", &p.gae_lambda},
        {"ppo", "clip_eps", &p.clip_eps},
        {"ppo", "entropy_coef", &p.entropy_coef},
        {"ppo", "epochs", &p.epochs},
        {"ppo", "minibatch", &p.minibatch},
        {"ppo", "episodes", &p.episodes},
        {"ppo", "workers", &p.workers},
        {"ppo", "critic_coef", &p.critic_coef},
        {"ppo", "max_grad_norm", &p.max_grad_norm},
        {"ppo", "init_log_std", &p.init_log_std},
        {"ppo", "spread_scale", &p.spread_scale},
        {"ppo", "checkpoint_every", &p.checkpoint_every},
        {"ppo", "embed_dim", &p.network.embed_dim},
        {"ppo", "attention_layers", &p.network.attention_layers},
        {"ppo", "feature_dim", &p.network.feature_dim},
        {"ppo", "head_dim", &p.network.head_dim},
        {"ppo", "critic_hidden1", &p.network.critic_hidden1},
        {"ppo", "critic_hidden2", &p.network.critic_hidden2},
        {"eval", "episodes", &c.eval.episodes},
        {"io", "out_dir", &c.io.out_dir},
        {"io", "log_events", &c.io.log_events},
        {"io", "trajectory_dump", &c.io.trajectory_dump},
    };
}

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Drop a trailing comment, ignoring '#' inside a quoted string.
std::string_view strip_comment(std::string_view s)
{
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && quoted) {
            ++i;
        } else if (s[i] == '"') {
            quoted = !quoted;
        } else if (s[i] == '#' && !quoted) {
            return s.substr(0, i);
        }
    }
    return s;
}

std::string parse_string(std::string_view v, int line)
{
    if (v.size() < 2 || v.front() != '"' || v.back() != '"') {
        throw ConfigError("expected a double-quoted string, got '" + std::string(v) + "'", line);
    }
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        char ch = v[i];
        if (ch == '\\') {
            if (i + 2 >= v.size()) {
                throw ConfigError("dangling escape in string", line);
            }
            const char e = v[++i];
            switch (e) {
            case '"': ch = '"'; break;
            case '\\': ch = '\\'; break;
            case 'n': ch = '\n'; break;
            case 't': ch = '\t'; break;
            default: throw ConfigError(std::string("unsupported escape \\") + e, line);
            }
        } else if (ch == '"') {
            throw ConfigError("unescaped quote in string", line);
        }
        out.push_back(ch);
    }
    return out;
}

template <class T>
T parse_number(std::string_view v, int line, const char* what)
{
    std::string cleaned;
    for (char ch : v) {
        if (ch != '_') {
            cleaned.push_back(ch);
        }
    }
    const char* first = cleaned.data();
    const char* last = first + cleaned.size();
    if (first != last && *first == '+') {
        ++first;
    }
    T out{};
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last || first == last) {
        throw ConfigError(std::string("expected ") + what + ", got '" + std::string(v) + "'", line);
    }
    return out;
}

void assign(const Ref& ref, std::string_view v, int line)
{
    std::visit(
        [&](auto* p) {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, double>) {
                *p = parse_number<double>(v, line, "a number");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (v == "true") {
                    *p = true;
                } else if (v == "false") {
                    *p = false;
                } else {
                    throw ConfigError("expected true or false, got '" + std::string(v) + "'", line);
                }
            } else if constexpr (std::is_same_v<T, std::string>) {
                *p = parse_string(v, line);
            } else if constexpr (std::is_same_v<T, PnlConvention>) {
                const std::string s = parse_string(v, line);
                if (s == "asymmetric") {
                    *p = PnlConvention::Asymmetric;
                } else if (s == "symmetric") {
                    *p = PnlConvention::Symmetric;
                } else {
                    throw ConfigError("pnl_convention must be \"asymmetric\" or \"symmetric\"", line);
                }
            } else if constexpr (std::is_same_v<T, std::size_t>) {
                *p = parse_number<std::size_t>(v, line, "a non-negative integer");
            } else {
                *p = parse_number<T>(v, line, "an integer");
            }
        },
        ref);
}

std::string format_double(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    std::string s(buf);
    // Keep doubles recognizable as floats when read back.
    if (s.find_first_of(".eEn") == std::string::npos) {
        s += ".0";
    }
    return s;
}

std::string quote(const std::string& s)
{
    std::string out = "\"";
    for (char ch : s) {
        switch (ch) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out.push_back(ch);
        }
    }
    return out + "\"";
}

std::string render(const Ref& ref)
{
    return std::visit(
        [](auto* p) -> std::string {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, double>) {
                return format_double(*p);
            } else if constexpr (std::is_same_v<T, bool>) {
                return *p ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::string>) {
                return quote(*p);
            } else if constexpr (std::is_same_v<T, PnlConvention>) {
                return *p == PnlConvention::Asymmetric ? "\"asymmetric\"" : "\"symmetric\"";
            } else {
                return std::to_string(*p);
            }
        },
        ref);
}

const std::set<std::string_view> kSections = {"market", "env", "agent", "ppo", "eval", "io"};

void finalize(RunConfig& c) { c.ppo.network.depth_levels = c.env.depth_levels; }

}  // namespace

void RunConfig::validate() const
{
    env.validate();
    try {
        ppo.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("ppo: ") + e.what());
    }
    if (agent.kind != "rl" && agent.kind != "stoikov" && agent.kind != "long_only") {
        throw ConfigError("agent: kind must be rl, stoikov or long_only");
    }
    if (agent.stoikov_window < 2) {
        throw ConfigError("agent: stoikov_window must be >= 2");
    }
    if (eval.episodes < 1) {
        throw ConfigError("eval: episodes must be >= 1");
    }
    if (ppo.network.depth_levels != env.depth_levels) {
        throw ConfigError("ppo network depth must match env.depth_levels");
    }
}

std::string RunConfig::canonical() const
{
    RunConfig copy = *this;
    std::string out;
    for (const Field& f : fields(copy)) {
        if (std::string_view(f.section) == "io") {
            continue;
        }
        out += std::string(f.section) + "." + f.key + " = " + render(f.ref) + "\n";
    }
    return out;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical()); }

std::string RunConfig::to_toml() const
{
    RunConfig copy = *this;
    std::ostringstream out;
    if (seed) {
        out << "seed = " << *seed << "\n";
    }
    std::string_view section;
    for (const Field& f : fields(copy)) {
        if (section != f.section) {
            section = f.section;
            out << "\n[" << section << "]\n";
        }
        out << f.key << " = " << render(f.ref) << "\n";
    }
    return out.str();
}

RunConfig parse_config(std::string_view text)
{
    RunConfig config;
    auto table = fields(config);
    std::string section;
    std::set<std::string> seen;
    int line_no = 0;

    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        const std::string_view line = trim(strip_comment(text.substr(pos, end - pos)));
        ++line_no;
        pos = end + 1;
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("malformed section header", line_no);
            }
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!kSections.count(section)) {
                throw ConfigError("unknown section [" + section + "]", line_no);
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("expected key = value", line_no);
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("expected key = value", line_no);
        }
        const std::string dotted = section.empty() ? key : section + "." + key;
        if (!seen.insert(dotted).second) {
            throw ConfigError("duplicate key " + dotted, line_no);
        }
        if (section.empty()) {
            if (key != "seed") {
                throw ConfigError("unknown top-level key '" + key + "'", line_no);
            }
            config.seed = parse_number<std::uint64_t>(value, line_no, "an unsigned integer");
            continue;
        }
        bool found = false;
        for (const Field& f : table) {
            if (section == f.section && key == f.key) {
                assign(f.ref, value, line_no);
                found = true;
                break;
            }
        }
        if (!found) {
            throw ConfigError("unknown key '" + key + "' in [" + section + "]", line_no);
        }
    }
    finalize(config);
    config.validate();
    return config;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void set_config_value(RunConfig& config, std::string_view dotted_key, std::string_view value)
{
    const std::string_view v = trim(value);
    if (dotted_key == "seed") {
        config.seed = parse_number<std::uint64_t>(v, 0, "an unsigned integer");
        return;
    }
    const auto dot = dotted_key.find('.');
    if (dot == std::string_view::npos) {
        throw ConfigError("unknown key '" + std::string(dotted_key) + "'");
    }
    const std::string_view section = dotted_key.substr(0, dot);
    const std::string_view key = dotted_key.substr(dot + 1);
    for (const Field& f : fields(config)) {
        if (section == f.section && key == f.key) {
            assign(f.ref, v, 0);
            finalize(config);
            return;
        }
    }
    throw ConfigError("unknown key '" + std::string(dotted_key) + "'");
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> cli, const RunConfig& config, const char* env_value)
{
    if (cli) {
        return *cli;
    }
    if (config.seed) {
        return *config.seed;
    }
    if (env_value != nullptr && *env_value != '\0') {
        return parse_number<std::uint64_t>(trim(env_value), 0, "an unsigned integer in LOBGYM_SEED");
    }
    return kDefaultSeed;
}

std::uint64_t fnv1a64(std::string_view data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t x)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

}  // namespace lobgym
