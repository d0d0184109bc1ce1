#pragma once
// One entry point per CLI subcommand. Runners resolve the JSON/TOML config,
// execute the experiment family, and serialize CSV curves plus a manifest.

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace fit::runners {

struct CommonArgs {
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;  // --seed overrides the config seed
    int threads = 0;        // 0 = hardware concurrency
    std::string mode = "cw";  // cw | td (switch command only)
};

int run_spectrum(const nlohmann::json& cfg, const CommonArgs& args);
int run_dressed(const nlohmann::json& cfg, const CommonArgs& args);
int run_switch(const nlohmann::json& cfg, const CommonArgs& args);
int run_montecarlo(const nlohmann::json& cfg, const CommonArgs& args);
int run_multichannel(const nlohmann::json& cfg, const CommonArgs& args);
int run_validate(const CommonArgs& args);

} // namespace fit::runners
