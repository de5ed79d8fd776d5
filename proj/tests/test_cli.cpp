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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const fs::path kOut = LOBGYM_TEST_OUT;

int run(const std::string& args, const std::string& log_name = "last.log")
{
    fs::create_directories(kOut);
    const std::string cmd = std::string("\"") + LOBGYM_CLI_PATH + "\" " + args + " > \"" + (kOut / log_name).string() +
                            "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path write_file(const std::string& name, const std::string& text)
{
    fs::create_directories(kOut);
    const fs::path p = kOut / name;
    std::ofstream(p) << text;
    return p;
}

// Data rows (no comments, no header).
std::vector<std::string> data_rows(const fs::path& csv)
{
    std::vector<std::string> rows;
    std::istringstream in(slurp(csv));
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (header) {
            header = false;
            continue;
        }
        rows.push_back(line);
    }
    return rows;
}

std::map<std::string, double> facts(const fs::path& csv)
{
    std::map<std::string, double> m;
    for (const auto& row : data_rows(csv)) {
        const auto comma = row.find(',');
        m[row.substr(0, comma)] = std::stod(row.substr(comma + 1));
    }
    return m;
}

// Small networks and short episodes keep each invocation well under a second.
const std::string kTiny = "[env]\nsteps = 40\nwarmup = 100\ndepth_levels = 4\n"
                          "[ppo]\nembed_dim = 8\nattention_layers = 1\nhead_dim = 8\nfeature_dim = 6\n"
                          "critic_hidden1 = 8\ncritic_hidden2 = 8\nminibatch = 20\nepochs = 2\n";

std::string tiny_args(const std::string& out)
{
    return "--config \"" + write_file("tiny.toml", kTiny).string() + "\" --seed 5 --out \"" + (kOut / out).string() +
           "\"";
}

}  // namespace

TEST_CASE("exit codes")
{
    CHECK(run("--help") == 0);
    CHECK(run("--version") == 0);
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    const fs::path bad = write_file("bad.toml", "[env]\nbogus = 1\n");
    CHECK(run("--config \"" + bad.string() + "\" simulate") == 2);
    CHECK(slurp(kOut / "last.log").find("line 2") != std::string::npos);
    const fs::path infeasible = write_file("feller.toml", "[market]\ncir_vol = 5.0\n");
    CHECK(run("--config \"" + infeasible.string() + "\" simulate --steps 10") == 2);
    CHECK(run("--out \"" + (kOut / "x").string() + "\" evaluate --agent rl") == 2);
    const fs::path garbage = write_file("garbage.bin", "not a checkpoint at all");
    CHECK(run("--out \"" + (kOut / "x").string() + "\" evaluate --agent rl --checkpoint \"" + garbage.string() + "\"")
          == 3);
}

TEST_CASE("simulate with alpha = 0 has Poisson dispersion")
{
    const fs::path cfg = write_file("poisson.toml", "[market]\nhawkes_alpha = 0\n");
    REQUIRE(run("--config \"" + cfg.string() + "\" --seed 11 --out \"" + (kOut / "poisson").string() +
                "\" simulate --steps 100000") == 0);
    const auto f = facts(kOut / "poisson" / "stylized_facts.csv");
    REQUIRE(f.count("dispersion_index") == 1);
    MESSAGE("dispersion " << f.at("dispersion_index"));
    CHECK(f.at("dispersion_index") == doctest::Approx(1.0).epsilon(0.10));
    CHECK(f.at("nonpositive_spread_steps") == 0.0);
}

TEST_CASE("simulate event log is deterministic")
{
    for (const char* d : {"sim_a", "sim_b"}) {
        REQUIRE(run("--seed 13 --log-events --out \"" + (kOut / d).string() + "\" simulate --steps 3000") == 0);
    }
    const std::string a = slurp(kOut / "sim_a" / "events.csv");
    CHECK(data_rows(kOut / "sim_a" / "events.csv").size() >= 3000);
    CHECK(a == slurp(kOut / "sim_b" / "events.csv"));
    CHECK(run("--seed 14 --log-events --out \"" + (kOut / "sim_c").string() + "\" simulate --steps 3000") == 0);
    CHECK(a != slurp(kOut / "sim_c" / "events.csv"));
}

TEST_CASE("train writes a log row per episode and a checkpoint")
{
    fs::remove_all(kOut / "train");
    REQUIRE(run(tiny_args("train") + " --episodes 2 train") == 0);
    CHECK(data_rows(kOut / "train" / "reward_log.csv").size() == 2);
    CHECK(fs::exists(kOut / "train" / "checkpoint.bin"));
    CHECK(fs::exists(kOut / "train" / "reward_ema.svg"));
    CHECK(slurp(kOut / "train" / "reward_log.csv").rfind("# lobgym", 0) == 0);

    // Resuming to four episodes matches a straight four-episode run.
    fs::remove_all(kOut / "train4");
    REQUIRE(run(tiny_args("train4") + " --episodes 4 train") == 0);
    REQUIRE(run(tiny_args("train") + " --episodes 4 train --resume \"" + (kOut / "train" / "checkpoint.bin").string() +
                "\"") == 0);
    CHECK(slurp(kOut / "train" / "reward_log.csv") == slurp(kOut / "train4" / "reward_log.csv"));
    CHECK(slurp(kOut / "train" / "checkpoint.bin") == slurp(kOut / "train4" / "checkpoint.bin"));

    // A checkpoint from a different network shape is refused.
    std::string wider_text = kTiny;
    wider_text.replace(wider_text.find("embed_dim = 8"), 13, "embed_dim = 12");
    const fs::path wider = write_file("wider.toml", wider_text);
    CHECK(run("--config \"" + wider.string() + "\" --seed 5 --episodes 6 --out \"" + (kOut / "wider").string() +
              "\" train --resume \"" + (kOut / "train4" / "checkpoint.bin").string() + "\"") == 3);
}

TEST_CASE("evaluate and compare are byte-identical across runs")
{
    const fs::path ckpt = kOut / "train4" / "checkpoint.bin";
    if (!fs::exists(ckpt)) {
        REQUIRE(run(tiny_args("train4") + " --episodes 4 train") == 0);
    }
    for (const char* d : {"cmp_a", "cmp_b"}) {
        fs::remove_all(kOut / d);
        REQUIRE(run(tiny_args(d) + " --episodes 5 compare --checkpoint \"" + ckpt.string() + "\"") == 0);
    }
    const auto rows = data_rows(kOut / "cmp_a" / "comparison.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].rfind("rl,5,", 0) == 0);
    CHECK(rows[1].rfind("stoikov,5,", 0) == 0);
    CHECK(rows[2].rfind("long_only,5,", 0) == 0);
    for (const auto& e : fs::directory_iterator(kOut / "cmp_a")) {
        CHECK_MESSAGE(slurp(e.path()) == slurp(kOut / "cmp_b" / e.path().filename()), e.path().filename());
    }

    for (const char* d : {"ev_a", "ev_b"}) {
        fs::remove_all(kOut / d);
        REQUIRE(run(tiny_args(d) + " --episodes 5 evaluate --agent stoikov") == 0);
    }
    CHECK(data_rows(kOut / "ev_a" / "comparison.csv").size() == 1);
    CHECK(slurp(kOut / "ev_a" / "comparison.csv") == slurp(kOut / "ev_b" / "comparison.csv"));
}
