#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "rednet/data.hpp"
#include "rednet/network.hpp"
#include "rednet/optim.hpp"

namespace rednet {

// Parsed JSON run config. Sections are independent so one file can drive
// train, eval and ablate; each command checks that the sections it needs
// are present.
struct RunConfig {
    REDNetConfig model;
    bool has_model = false;

    TrainConfig train;
    bool has_train = false;

    struct DataSection {
        std::string train_dir;
        int patch_size = 50;
        int patch_count = 1000;
        CorruptionSpec corruption;
    } data;
    bool has_data = false;

    struct EvalSection {
        std::string test_dir;
        CorruptionSpec levels;
        bool ensemble = false;
        std::uint64_t seed = 0;
        bool has_seed = false;  // falls back to train.seed when absent
    } eval;
    bool has_eval = false;

    struct OutputSection {
        std::string checkpoint;
        std::string loss_csv;
        std::string metrics_csv;
        std::string manifest;       // optional dataset provenance JSON
        std::string ablate_prefix;  // per-arm loss CSVs: prefix + label + ".csv"
    } output;
    bool has_output = false;
};

// Strict parse: unknown keys and wrong types are ConfigErrors naming the
// offending key.
RunConfig parse_run_config(const std::filesystem::path& path);
RunConfig run_config_from_json_text(const std::string& text);

int run_train(const RunConfig& rc, std::optional<std::uint64_t> seed_override);
int run_restore(const std::filesystem::path& ckpt, const std::filesystem::path& input,
                const std::filesystem::path& output, bool ensemble);
int run_eval(const RunConfig& rc, const std::string& ckpt_override,
             std::optional<std::uint64_t> seed_override, bool ensemble_flag);
int run_ablate(const std::string& variant, const RunConfig& rc,
               std::optional<std::uint64_t> seed_override);

// Full argv entry point. Exit codes: 0 success, 2 usage/config/format
// errors, 3 data/runtime errors.
int cli_main(int argc, char** argv);

}  // namespace rednet
