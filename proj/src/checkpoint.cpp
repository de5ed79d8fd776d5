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

#include "lobgym/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "lobgym/config.hpp"

namespace lobgym {

namespace {

constexpr const char* kRewardLog = "history.reward";
constexpr const char* kEmaLog = "history.ema";

bool is_history(const std::string& name) { return name == kRewardLog || name == kEmaLog; }

void add_store(std::vector<CheckpointArray>& out, const ParameterStore& store)
{
    for (const auto& t : store.tensors()) {
        const std::size_t n = static_cast<std::size_t>(t.rows) * static_cast<std::size_t>(t.cols);
        const auto first = store.values.begin() + static_cast<std::ptrdiff_t>(t.offset);
        out.push_back({t.name,
                       {static_cast<std::uint64_t>(t.rows), static_cast<std::uint64_t>(t.cols)},
                       std::vector<double>(first, first + static_cast<std::ptrdiff_t>(n))});
    }
}

void add_adam(std::vector<CheckpointArray>& out, const std::string& prefix, const Adam& opt)
{
    out.push_back({prefix + ".m", {opt.m().size()}, opt.m()});
    out.push_back({prefix + ".v", {opt.v().size()}, opt.v()});
    out.push_back({prefix + ".t", {1}, {static_cast<double>(opt.t())}});
}

std::string shape_str(const std::vector<std::uint64_t>& shape)
{
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        s += (i ? "x" : "") + std::to_string(shape[i]);
    }
    return s + "]";
}

class Writer {
public:
    template <class T>
    void put(const T& v)
    {
        const auto* p = reinterpret_cast<const char*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }
    void put_bytes(const void* p, std::size_t n)
    {
        const auto* c = static_cast<const char*>(p);
        bytes.insert(bytes.end(), c, c + n);
    }
    std::string bytes;
};

class Reader {
public:
    explicit Reader(std::string_view data) : data_(data) {}

    template <class T>
    T get()
    {
        T v;
        std::memcpy(&v, take(sizeof(T)), sizeof(T));
        return v;
    }
    const char* take(std::size_t n)
    {
        if (n > data_.size() - pos_) {
            throw CheckpointError("checkpoint truncated");
        }
        const char* p = data_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::size_t pos() const { return pos_; }

private:
    std::string_view data_;
    std::size_t pos_ = 0;
};

void copy_into(const CheckpointArray& a, std::vector<double>& dst, std::size_t offset = 0)
{
    std::copy(a.data.begin(), a.data.end(), dst.begin() + static_cast<std::ptrdiff_t>(offset));
}

}  // namespace

const CheckpointArray* Checkpoint::find(const std::string& name) const
{
    for (const auto& a : arrays) {
        if (a.name == name) {
            return &a;
        }
    }
    return nullptr;
}

Checkpoint make_checkpoint(const TrainState& state, std::uint64_t config_hash, std::uint64_t seed)
{
    Checkpoint c;
    c.config_hash = config_hash;
    c.seed = seed;
    c.episodes_done = state.episodes_done;
    c.rounds_done = state.rounds_done;
    const Learner& l = state.learner;
    add_store(c.arrays, l.actor.params);
    add_store(c.arrays, l.critic.params);
    add_adam(c.arrays, "adam.actor", l.actor_opt);
    add_adam(c.arrays, "adam.critic", l.critic_opt);
    c.arrays.push_back({"stats.count", {1}, {l.stats.count()}});
    c.arrays.push_back({"stats.mean", {l.stats.dim()}, l.stats.mean()});
    c.arrays.push_back({"stats.m2", {l.stats.dim()}, l.stats.m2()});
    c.arrays.push_back({"reward_stats.count", {1}, {state.reward_stats.count()}});
    c.arrays.push_back({"reward_stats.mean", {1}, state.reward_stats.mean()});
    c.arrays.push_back({"reward_stats.m2", {1}, state.reward_stats.m2()});
    c.arrays.push_back({kRewardLog, {state.reward_log.size()}, state.reward_log});
    c.arrays.push_back({kEmaLog, {state.ema_log.size()}, state.ema_log});
    return c;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt)
{
    Writer w;
    w.put_bytes(kCheckpointMagic, sizeof kCheckpointMagic);
    w.put(kCheckpointVersion);
    w.put(ckpt.config_hash);
    w.put(ckpt.seed);
    w.put(ckpt.episodes_done);
    w.put(ckpt.rounds_done);
    w.put(static_cast<std::uint32_t>(ckpt.arrays.size()));
    for (const auto& a : ckpt.arrays) {
        w.put(static_cast<std::uint32_t>(a.name.size()));
        w.put_bytes(a.name.data(), a.name.size());
        w.put(static_cast<std::uint32_t>(a.shape.size()));
        for (auto d : a.shape) {
            w.put(d);
        }
        w.put(static_cast<std::uint64_t>(a.data.size()));
        w.put_bytes(a.data.data(), a.data.size() * sizeof(double));
    }
    w.put(fnv1a64(w.bytes));

    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(w.bytes.data(), static_cast<std::streamsize>(w.bytes.size()));
        if (!out) {
            throw RuntimeFault("cannot write checkpoint " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw RuntimeFault("cannot move checkpoint into place: " + ec.message());
    }
}

Checkpoint read_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CheckpointError("cannot open checkpoint " + path.string());
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < sizeof kCheckpointMagic + sizeof(std::uint64_t)
        || std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
        throw CheckpointError(path.string() + " is not a checkpoint");
    }
    const std::string_view body(bytes.data(), bytes.size() - sizeof(std::uint64_t));
    std::uint64_t stored = 0;
    std::memcpy(&stored, bytes.data() + body.size(), sizeof stored);
    if (stored != fnv1a64(body)) {
        throw CheckpointError(path.string() + ": checksum mismatch");
    }

    Reader r(body);
    r.take(sizeof kCheckpointMagic);
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint c;
    c.config_hash = r.get<std::uint64_t>();
    c.seed = r.get<std::uint64_t>();
    c.episodes_done = r.get<std::uint64_t>();
    c.rounds_done = r.get<std::uint64_t>();
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        CheckpointArray a;
        const auto name_len = r.get<std::uint32_t>();
        a.name.assign(r.take(name_len), name_len);
        const auto dims = r.get<std::uint32_t>();
        std::uint64_t expected = 1;
        for (std::uint32_t d = 0; d < dims; ++d) {
            a.shape.push_back(r.get<std::uint64_t>());
            expected *= a.shape.back();
        }
        const auto n = r.get<std::uint64_t>();
        if (n != expected) {
            throw CheckpointError("array " + a.name + " size disagrees with its shape");
        }
        a.data.resize(n);
        std::memcpy(a.data.data(), r.take(n * sizeof(double)), n * sizeof(double));
        c.arrays.push_back(std::move(a));
    }
    if (r.pos() != body.size()) {
        throw CheckpointError(path.string() + ": trailing bytes");
    }
    return c;
}

std::string manifest_diff(const Checkpoint& expected, const Checkpoint& actual)
{
    std::map<std::string, std::vector<std::uint64_t>> want;
    std::map<std::string, std::vector<std::uint64_t>> have;
    for (const auto& a : expected.arrays) {
        if (!is_history(a.name)) {
            want[a.name] = a.shape;
        }
    }
    for (const auto& a : actual.arrays) {
        if (!is_history(a.name)) {
            have[a.name] = a.shape;
        }
    }
    std::ostringstream out;
    for (const auto& [name, shape] : want) {
        auto it = have.find(name);
        if (it == have.end()) {
            out << "  missing  " << name << " " << shape_str(shape) << "\n";
        } else if (it->second != shape) {
            out << "  shape    " << name << " expected " << shape_str(shape) << " found " << shape_str(it->second)
                << "\n";
        }
    }
    for (const auto& [name, shape] : have) {
        if (!want.count(name)) {
            out << "  extra    " << name << " " << shape_str(shape) << "\n";
        }
    }
    return out.str();
}

void restore(const Checkpoint& ckpt, TrainState& state)
{
    const Checkpoint expected = make_checkpoint(state, 0, 0);
    const std::string diff = manifest_diff(expected, ckpt);
    if (!diff.empty()) {
        throw CheckpointError("checkpoint does not match the configured networks:\n" + diff);
    }
    for (const char* name : {kRewardLog, kEmaLog}) {
        if (ckpt.find(name) == nullptr) {
            throw CheckpointError(std::string("checkpoint lacks ") + name);
        }
    }
    Learner& l = state.learner;
    auto load_store = [&ckpt](ParameterStore& store) {
        for (const auto& t : store.tensors()) {
            copy_into(*ckpt.find(t.name), store.values, t.offset);
        }
    };
    load_store(l.actor.params);
    load_store(l.critic.params);
    auto load_adam = [&ckpt](const std::string& prefix, Adam& opt) {
        copy_into(*ckpt.find(prefix + ".m"), opt.m());
        copy_into(*ckpt.find(prefix + ".v"), opt.v());
        opt.set_t(static_cast<std::uint64_t>(ckpt.find(prefix + ".t")->data[0]));
    };
    load_adam("adam.actor", l.actor_opt);
    load_adam("adam.critic", l.critic_opt);
    l.stats.set(ckpt.find("stats.count")->data[0], ckpt.find("stats.mean")->data, ckpt.find("stats.m2")->data);
    state.reward_stats.set(ckpt.find("reward_stats.count")->data[0], ckpt.find("reward_stats.mean")->data,
                           ckpt.find("reward_stats.m2")->data);
    state.reward_log = ckpt.find(kRewardLog)->data;
    state.ema_log = ckpt.find(kEmaLog)->data;
    if (state.reward_log.size() != ckpt.episodes_done || state.ema_log.size() != ckpt.episodes_done) {
        throw CheckpointError("checkpoint history length disagrees with its episode count");
    }
    state.episodes_done = ckpt.episodes_done;
    state.rounds_done = ckpt.rounds_done;
}

}  // namespace lobgym
