#include "rednet/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rednet/infer.hpp"
#include "rednet/metrics.hpp"
#include "rednet/rng.hpp"

namespace rednet {

namespace {

using nlohmann::json;

// Weight-init stream tag; batch sampling and dataset build derive their
// own streams from the same user seed elsewhere.
constexpr std::uint64_t kInitStream = 0x696e69741e371e37ull;

[[noreturn]] void unknown_key(const std::string& section, const std::string& key) {
    throw ConfigError("config: unknown key '" + (section.empty() ? key : section + "." + key) +
                      "'");
}

int get_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError("config: '" + path + "' must be an integer");
    return v.get<int>();
}

std::uint64_t get_u64(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
    throw ConfigError("config: '" + path + "' must be a non-negative integer");
}

double get_double(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError("config: '" + path + "' must be a number");
    return v.get<double>();
}

bool get_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw ConfigError("config: '" + path + "' must be a boolean");
    return v.get<bool>();
}

std::string get_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError("config: '" + path + "' must be a string");
    return v.get<std::string>();
}

REDNetConfig parse_model_section(const json& j) {
    if (!j.is_object()) throw ConfigError("config: 'model' must be an object");
    REDNetConfig m;
    // A preset is the base; explicit keys override it.
    if (j.contains("preset")) {
        const std::string preset = get_string(j["preset"], "model.preset");
        if (preset == "red10") m = REDNetConfig::red10();
        else if (preset == "red20") m = REDNetConfig::red20();
        else if (preset == "red30") m = REDNetConfig::red30();
        else throw ConfigError("config: unknown model.preset '" + preset +
                               "' (expected red10, red20 or red30)");
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "preset") continue;
        else if (key == "conv_layers") m.conv_layers = get_int(value, "model.conv_layers");
        else if (key == "feature_width") m.feature_width = get_int(value, "model.feature_width");
        else if (key == "kernel") m.kernel = get_int(value, "model.kernel");
        else if (key == "stride") m.stride = get_int(value, "model.stride");
        else if (key == "padding") m.padding = get_int(value, "model.padding");
        else if (key == "skip_style") m.skip_style = skip_style_from_string(get_string(value, "model.skip_style"));
        else if (key == "skip_step") m.skip_step = get_int(value, "model.skip_step");
        else if (key == "global_input_skip") m.global_input_skip = get_bool(value, "model.global_input_skip");
        else if (key == "in_channels") m.in_channels = get_int(value, "model.in_channels");
        else unknown_key("model", key);
    }
    m.validate();
    return m;
}

CorruptionSpec parse_corruption(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError("config: '" + path + "' must be an object");
    if (!j.contains("kind")) throw ConfigError("config: '" + path + ".kind' is required");
    CorruptionSpec spec;
    const std::string kind = get_string(j["kind"], path + ".kind");
    if (kind == "gaussian") spec.kind = CorruptionSpec::Kind::gaussian;
    else if (kind == "sr") spec.kind = CorruptionSpec::Kind::sr;
    else throw ConfigError("config: '" + path + ".kind' must be 'gaussian' or 'sr'");

    for (const auto& [key, value] : j.items()) {
        if (key == "kind") continue;
        if (key == "sigmas") {
            if (spec.kind != CorruptionSpec::Kind::gaussian) {
                throw ConfigError("config: '" + path + ".sigmas' is only valid for kind 'gaussian'");
            }
            if (!value.is_array()) throw ConfigError("config: '" + path + ".sigmas' must be an array");
            for (const auto& s : value) spec.sigmas.push_back(get_double(s, path + ".sigmas[]"));
        } else if (key == "scales") {
            if (spec.kind != CorruptionSpec::Kind::sr) {
                throw ConfigError("config: '" + path + ".scales' is only valid for kind 'sr'");
            }
            if (!value.is_array()) throw ConfigError("config: '" + path + ".scales' must be an array");
            for (const auto& s : value) spec.scales.push_back(get_int(s, path + ".scales[]"));
        } else {
            unknown_key(path, key);
        }
    }
    spec.validate();
    return spec;
}

RunConfig::DataSection parse_data_section(const json& j) {
    if (!j.is_object()) throw ConfigError("config: 'data' must be an object");
    RunConfig::DataSection d;
    bool has_corruption = false;
    for (const auto& [key, value] : j.items()) {
        if (key == "train_dir") d.train_dir = get_string(value, "data.train_dir");
        else if (key == "patch_size") d.patch_size = get_int(value, "data.patch_size");
        else if (key == "patch_count") d.patch_count = get_int(value, "data.patch_count");
        else if (key == "corruption") {
            d.corruption = parse_corruption(value, "data.corruption");
            has_corruption = true;
        } else unknown_key("data", key);
    }
    if (d.train_dir.empty()) throw ConfigError("config: 'data.train_dir' is required");
    if (!has_corruption) throw ConfigError("config: 'data.corruption' is required");
    if (d.patch_size < 1) throw ConfigError("config: 'data.patch_size' must be >= 1");
    if (d.patch_count < 1) throw ConfigError("config: 'data.patch_count' must be >= 1");
    return d;
}

TrainConfig parse_train_section(const json& j) {
    if (!j.is_object()) throw ConfigError("config: 'train' must be an object");
    TrainConfig t;
    for (const auto& [key, value] : j.items()) {
        if (key == "optimizer") t.optimizer = optimizer_from_string(get_string(value, "train.optimizer"));
        else if (key == "lr") t.lr = get_double(value, "train.lr");
        else if (key == "iterations") t.iterations = get_int(value, "train.iterations");
        else if (key == "batch") t.batch = get_int(value, "train.batch");
        else if (key == "seed") t.seed = get_u64(value, "train.seed");
        else if (key == "loss_log_interval") t.loss_log_interval = get_int(value, "train.loss_log_interval");
        else unknown_key("train", key);
    }
    t.validate();
    return t;
}

RunConfig::EvalSection parse_eval_section(const json& j) {
    if (!j.is_object()) throw ConfigError("config: 'eval' must be an object");
    RunConfig::EvalSection e;
    bool has_levels = false;
    for (const auto& [key, value] : j.items()) {
        if (key == "test_dir") e.test_dir = get_string(value, "eval.test_dir");
        else if (key == "levels") {
            e.levels = parse_corruption(value, "eval.levels");
            has_levels = true;
        } else if (key == "ensemble") e.ensemble = get_bool(value, "eval.ensemble");
        else if (key == "seed") {
            e.seed = get_u64(value, "eval.seed");
            e.has_seed = true;
        } else unknown_key("eval", key);
    }
    if (e.test_dir.empty()) throw ConfigError("config: 'eval.test_dir' is required");
    if (!has_levels) throw ConfigError("config: 'eval.levels' is required");
    return e;
}

RunConfig::OutputSection parse_output_section(const json& j) {
    if (!j.is_object()) throw ConfigError("config: 'output' must be an object");
    RunConfig::OutputSection o;
    for (const auto& [key, value] : j.items()) {
        if (key == "checkpoint") o.checkpoint = get_string(value, "output.checkpoint");
        else if (key == "loss_csv") o.loss_csv = get_string(value, "output.loss_csv");
        else if (key == "metrics_csv") o.metrics_csv = get_string(value, "output.metrics_csv");
        else if (key == "manifest") o.manifest = get_string(value, "output.manifest");
        else if (key == "ablate_prefix") o.ablate_prefix = get_string(value, "output.ablate_prefix");
        else unknown_key("output", key);
    }
    return o;
}

// Creates parent directories and proves the file is writable before any
// compute happens. Append mode keeps existing content intact.
void prepare_output(const std::string& path) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) {
            throw IoError("cannot create directory '" + p.parent_path().string() +
                          "': " + ec.message());
        }
    }
    std::ofstream probe(p, std::ios::app | std::ios::binary);
    if (!probe) throw IoError("cannot write to '" + path + "'");
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

struct LoadedImages {
    std::vector<ImageGray> images;
    std::vector<std::string> names;
};

LoadedImages load_image_dir(const std::string& dir) {
    const std::vector<std::filesystem::path> files = list_image_files(dir);
    if (files.empty()) throw DataError("no images found in '" + dir + "'");
    LoadedImages out;
    out.images.reserve(files.size());
    out.names.reserve(files.size());
    for (const auto& f : files) {
        out.images.push_back(load_image(f));
        out.names.push_back(f.filename().string());
    }
    return out;
}

}  // namespace

RunConfig run_config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");

    RunConfig rc;
    for (const auto& [key, value] : j.items()) {
        if (key == "model") {
            rc.model = parse_model_section(value);
            rc.has_model = true;
        } else if (key == "data") {
            rc.data = parse_data_section(value);
            rc.has_data = true;
        } else if (key == "train") {
            rc.train = parse_train_section(value);
            rc.has_train = true;
        } else if (key == "eval") {
            rc.eval = parse_eval_section(value);
            rc.has_eval = true;
        } else if (key == "output") {
            rc.output = parse_output_section(value);
            rc.has_output = true;
        } else {
            unknown_key("", key);
        }
    }
    return rc;
}

RunConfig parse_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    const std::string text((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    return run_config_from_json_text(text);
}

int run_train(const RunConfig& rc, std::optional<std::uint64_t> seed_override) {
    if (!rc.has_model) throw ConfigError("train needs a 'model' section");
    if (!rc.has_data) throw ConfigError("train needs a 'data' section");
    if (!rc.has_train) throw ConfigError("train needs a 'train' section");
    if (rc.output.checkpoint.empty()) throw ConfigError("train needs 'output.checkpoint'");
    if (rc.output.loss_csv.empty()) throw ConfigError("train needs 'output.loss_csv'");

    const std::uint64_t seed = seed_override.value_or(rc.train.seed);

    // Validate every path before the slow part starts.
    LoadedImages data = load_image_dir(rc.data.train_dir);
    prepare_output(rc.output.checkpoint);
    prepare_output(rc.output.loss_csv);
    if (!rc.output.manifest.empty()) prepare_output(rc.output.manifest);

    const PatchSet set = make_dataset(data.images, rc.data.corruption, rc.data.patch_size,
                                      rc.data.patch_count, seed, data.names);
    Network<float> net = Network<float>::build(rc.model, derive_seed(seed, kInitStream));

    TrainConfig tc = rc.train;
    tc.seed = seed;
    const std::vector<LossRow> rows = train_loop(net, set, tc);

    write_text(rc.output.loss_csv, loss_trace_csv(rows));
    save_checkpoint(net, rc.output.checkpoint);
    if (!rc.output.manifest.empty()) {
        write_text(rc.output.manifest,
                   dataset_manifest(set, rc.data.corruption, seed).dump(2) + "\n");
    }

    std::printf("trained %d iterations on %zu patches (seed %llu)\n", tc.iterations,
                set.pairs.size(), static_cast<unsigned long long>(seed));
    std::printf("final loss: %.9g\n", rows.empty() ? 0.0 : rows.back().loss);
    std::printf("checkpoint: %s\n", rc.output.checkpoint.c_str());
    std::printf("loss trace: %s\n", rc.output.loss_csv.c_str());
    return 0;
}

int run_restore(const std::filesystem::path& ckpt, const std::filesystem::path& input,
                const std::filesystem::path& output, bool ensemble) {
    const Network<float> net = load_checkpoint(ckpt);
    const ImageGray img = load_image(input);
    prepare_output(output.string());
    const ImageGray out = ensemble ? restore_ensemble(net, img) : restore(net, img);
    save_image(out, output);
    std::printf("restored '%s' -> '%s'%s\n", input.string().c_str(), output.string().c_str(),
                ensemble ? " (8-orientation ensemble)" : "");
    return 0;
}

int run_eval(const RunConfig& rc, const std::string& ckpt_override,
             std::optional<std::uint64_t> seed_override, bool ensemble_flag) {
    if (!rc.has_eval) throw ConfigError("eval needs an 'eval' section");
    if (rc.output.metrics_csv.empty()) throw ConfigError("eval needs 'output.metrics_csv'");
    const std::string ckpt = !ckpt_override.empty() ? ckpt_override : rc.output.checkpoint;
    if (ckpt.empty()) {
        throw ConfigError("eval needs a checkpoint: pass --ckpt or set output.checkpoint");
    }

    const Network<float> net = load_checkpoint(ckpt);
    LoadedImages data = load_image_dir(rc.eval.test_dir);
    prepare_output(rc.output.metrics_csv);

    const std::uint64_t seed = seed_override
                                   ? *seed_override
                                   : (rc.eval.has_seed ? rc.eval.seed : rc.train.seed);
    const bool ensemble = ensemble_flag || rc.eval.ensemble;

    const MetricReport report =
        evaluate(net, data.images, data.names, rc.eval.levels, seed, ensemble);
    write_text(rc.output.metrics_csv, report.to_csv());

    std::printf("evaluated %zu images at %zu levels%s (seed %llu)\n", data.images.size(),
                rc.eval.levels.level_count(), ensemble ? " with 8-orientation ensemble" : "",
                static_cast<unsigned long long>(seed));
    for (const LevelSummary& s : report.summaries) {
        std::printf("  %s: avg psnr %.4f dB, avg ssim %.4f (%d images)\n", s.level.c_str(),
                    s.avg_psnr, s.avg_ssim, s.images);
    }
    std::printf("metrics: %s\n", rc.output.metrics_csv.c_str());
    return 0;
}

int run_ablate(const std::string& variant, const RunConfig& rc,
               std::optional<std::uint64_t> seed_override) {
    if (!rc.has_model) throw ConfigError("ablate needs a 'model' section");
    if (!rc.has_data) throw ConfigError("ablate needs a 'data' section");
    if (!rc.has_train) throw ConfigError("ablate needs a 'train' section");
    if (rc.output.ablate_prefix.empty()) throw ConfigError("ablate needs 'output.ablate_prefix'");

    const std::uint64_t seed = seed_override.value_or(rc.train.seed);

    struct Arm {
        std::string label;
        REDNetConfig cfg;
    };
    std::vector<Arm> arms;
    int patch = rc.data.patch_size;

    if (variant == "depth-noskip") {
        for (int L : {5, 10, 15}) {
            REDNetConfig cfg = rc.model;
            cfg.conv_layers = L;
            cfg.skip_style = SkipStyle::none;
            arms.push_back({"depth" + std::to_string(2 * L) + "-noskip", cfg});
        }
    } else if (variant == "depth-skip") {
        for (int L : {10, 15}) {
            REDNetConfig cfg = rc.model;
            cfg.conv_layers = L;
            cfg.skip_style = SkipStyle::mirrored;
            arms.push_back({"depth" + std::to_string(2 * L) + "-skip", cfg});
        }
    } else if (variant == "block-compare") {
        // Mirrored pairing vs chained identity blocks at the same step.
        const int b = rc.model.skip_step;
        REDNetConfig red = rc.model;
        red.skip_style = SkipStyle::mirrored;
        arms.push_back({"red-block-" + std::to_string(b), red});
        REDNetConfig he = rc.model;
        he.skip_style = SkipStyle::sequential;
        arms.push_back({"he-block-" + std::to_string(b), he});
    } else if (variant == "bottleneck-stride3") {
        // Five stride-3 conv layers collapse 243x243 to a 1x1 bottleneck.
        patch = 243;
        REDNetConfig base = rc.model;
        base.conv_layers = 5;
        base.kernel = 3;
        base.stride = 3;
        base.padding = 0;
        REDNetConfig with = base;
        with.skip_style = SkipStyle::mirrored;
        arms.push_back({"bottleneck-skip", with});
        REDNetConfig without = base;
        without.skip_style = SkipStyle::none;
        arms.push_back({"bottleneck-noskip", without});
    } else {
        throw ConfigError("unknown ablation variant '" + variant +
                          "' (valid: depth-noskip, depth-skip, block-compare, "
                          "bottleneck-stride3)");
    }

    LoadedImages data = load_image_dir(rc.data.train_dir);
    for (const Arm& arm : arms) prepare_output(rc.output.ablate_prefix + arm.label + ".csv");

    if (variant == "bottleneck-stride3") {
        const auto sizes = encoder_sizes(arms[0].cfg, patch, patch);
        std::string trace = "bottleneck trace:";
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            trace += (i == 0 ? " " : " -> ") + std::to_string(sizes[i].first) + "x" +
                     std::to_string(sizes[i].second);
        }
        std::printf("%s\n", trace.c_str());
    }

    // One dataset, shared by every arm, so the comparison isolates the
    // architecture change.
    const PatchSet set = make_dataset(data.images, rc.data.corruption, patch,
                                      rc.data.patch_count, seed, data.names);

    std::printf("ablation '%s': %zu arms, %zu patches, %d iterations (seed %llu)\n",
                variant.c_str(), arms.size(), set.pairs.size(), rc.train.iterations,
                static_cast<unsigned long long>(seed));
    for (const Arm& arm : arms) {
        Network<float> net = Network<float>::build(arm.cfg, derive_seed(seed, kInitStream));
        TrainConfig tc = rc.train;
        tc.seed = seed;
        const std::vector<LossRow> rows = train_loop(net, set, tc);
        const std::string csv_path = rc.output.ablate_prefix + arm.label + ".csv";
        write_text(csv_path, loss_trace_csv(rows));
        std::printf("  %s: final loss %.9g -> %s\n", arm.label.c_str(),
                    rows.empty() ? 0.0 : rows.back().loss, csv_path.c_str());
    }
    return 0;
}

int cli_main(int argc, char** argv) {
    CLI::App app{"Symmetric conv/deconv image restoration: training, inference, metrics"};
    app.require_subcommand(1);

    std::string config_path, ckpt, input, output, variant;
    std::uint64_t seed_value = 0;
    bool ensemble = false;

    CLI::App* train_cmd = app.add_subcommand("train", "Train a model from a JSON run config");
    train_cmd->add_option("--config", config_path, "Run config JSON")->required();
    train_cmd->add_option("--seed", seed_value, "Override train.seed");

    CLI::App* restore_cmd =
        app.add_subcommand("restore", "Restore one image with a trained checkpoint");
    restore_cmd->add_option("--ckpt", ckpt, "Checkpoint file")->required();
    restore_cmd->add_option("--input", input, "Degraded input image (.pgm/.png)")->required();
    restore_cmd->add_option("--output", output, "Restored output image")->required();
    restore_cmd->add_flag("--ensemble", ensemble, "Average the 8 dihedral orientations");

    CLI::App* eval_cmd =
        app.add_subcommand("eval", "Corrupt, restore and score a directory of clean images");
    eval_cmd->add_option("--config", config_path, "Run config JSON")->required();
    eval_cmd->add_option("--ckpt", ckpt, "Checkpoint (overrides output.checkpoint)");
    eval_cmd->add_option("--seed", seed_value, "Override the evaluation seed");
    eval_cmd->add_flag("--ensemble", ensemble, "Average the 8 dihedral orientations");

    CLI::App* ablate_cmd =
        app.add_subcommand("ablate", "Train matched architecture arms and emit loss CSVs");
    ablate_cmd->add_option("--config", config_path, "Run config JSON")->required();
    ablate_cmd->add_option("--variant", variant, "Comparison to run")->required();
    ablate_cmd->add_option("--seed", seed_value, "Override train.seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        std::optional<std::uint64_t> seed_override;
        if (train_cmd->count("--seed") || eval_cmd->count("--seed") ||
            ablate_cmd->count("--seed")) {
            seed_override = seed_value;
        }
        if (train_cmd->parsed()) {
            return run_train(parse_run_config(config_path), seed_override);
        }
        if (restore_cmd->parsed()) {
            return run_restore(ckpt, input, output, ensemble);
        }
        if (eval_cmd->parsed()) {
            return run_eval(parse_run_config(config_path), ckpt, seed_override, ensemble);
        }
        if (ablate_cmd->parsed()) {
            return run_ablate(variant, parse_run_config(config_path), seed_override);
        }
        return 2;  // unreachable: require_subcommand(1)
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace rednet
