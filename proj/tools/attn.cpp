#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "attn/config.hpp"
#include "attn/errors.hpp"
#include "attn/kernels.hpp"
#include "attn/pipeline.hpp"

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

bool is_dotted_flag(const std::string& arg)
{
    if (arg.size() < 3 || arg.compare(0, 2, "--") != 0) {
        return false;
    }
    const std::string key = arg.substr(2, arg.find('=') - 2);
    return key.find('.') != std::string::npos && key.find_first_not_of("abcdefghijklmnopqrstuvwxyz_.") == std::string::npos;
}

/// Removes "--a.b value" and "--a.b=value" pairs from argv.
std::vector<std::string> extract_overrides(int argc, char** argv, Overrides& overrides)
{
    std::vector<std::string> rest{argv[0]};
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (!is_dotted_flag(arg)) {
            rest.push_back(arg);
            continue;
        }
        const auto eq = arg.find('=');
        if (eq != std::string::npos) {
            overrides.emplace_back(arg.substr(2, eq - 2), arg.substr(eq + 1));
        } else if (i + 1 < argc) {
            overrides.emplace_back(arg.substr(2), argv[++i]);
        } else {
            throw attn::ValidationError("option " + arg + " needs a value");
        }
    }
    return rest;
}

void setup_logging()
{
    auto logger = spdlog::stderr_color_st("attn");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* level = std::getenv("ATTN_LOG")) {
        spdlog::set_level(spdlog::level::from_str(level));
    }
}

template <typename T>
std::string join(const std::vector<T>& values)
{
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        out += (i ? "," : "") + attn::format_double(values[i]);
    }
    return out + "]";
}

int run(int argc, char** argv)
{
    Overrides overrides;
    std::vector<std::string> args = extract_overrides(argc, argv, overrides);

    CLI::App app{"Gaze attention maps: build, augment, fuse, train and evaluate"};
    app.fallthrough();
    app.require_subcommand(0, 1);

    std::string config_path;
    bool print_config = false;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    app.add_option("--config", config_path, "JSON pipeline config")->check(CLI::ExistingFile);
    app.add_flag("--print-config", print_config, "Print the resolved config and exit");
    app.add_option("--seed", seed, "Top-level seed");
    app.add_option("--workers", workers, "Worker threads (0 = default)");

    std::string out;

    auto* build = app.add_subcommand("build", "Attention maps from gaze recordings");
    std::vector<std::string> gaze_files, manifest_files, names;
    build->add_option("--gaze", gaze_files, "Gaze JSONL (repeat per recording)")->required();
    build->add_option("--manifest", manifest_files, "Frame manifest JSONL (repeat per recording)")->required();
    build->add_option("--name", names, "Sequence names (default: manifest directory name)");
    build->add_option("--out", out, "Output directory");

    auto* augment = app.add_subcommand("augment", "Augment a sample index");
    std::string index, boxes, commands;
    augment->add_option("--index", index, "Sample index (index.jsonl)")->required();
    augment->add_option("--boxes", boxes, "Box annotations JSONL");
    augment->add_option("--out", out, "Output directory");

    auto* fuse = app.add_subcommand("fuse", "Fuse attention into images");
    fuse->add_option("--index", index, "Sample index (index.jsonl)")->required();
    fuse->add_option("--commands", commands, "JSONL {id, steering, velocity}");
    fuse->add_option("--boxes", boxes, "Box annotations JSONL to reference");
    fuse->add_option("--out", out, "Output directory");

    auto* train = app.add_subcommand("train", "Train the attention predictor");
    train->add_option("--index", index, "Sample index (index.jsonl)")->required();
    train->add_option("--out", out, "Output directory");

    auto* eval = app.add_subcommand("eval", "Evaluate predictions");
    eval->require_subcommand(1);
    std::string dets, gt, checkpoint, pred, target;
    auto* eval_map = eval->add_subcommand("map", "COCO mAP@.5:.95 of detections");
    eval_map->add_option("--dets", dets, "Detections JSONL")->required();
    eval_map->add_option("--gt", gt, "Ground-truth boxes JSONL")->required();
    auto* eval_att = eval->add_subcommand("att", "Attention predictor error on an index");
    eval_att->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    eval_att->add_option("--index", index, "Sample index (index.jsonl)")->required();
    auto* eval_mse = eval->add_subcommand("mse", "Driving command MSE");
    eval_mse->add_option("--pred", pred, "Predicted commands JSONL")->required();
    eval_mse->add_option("--target", target, "Target commands JSONL")->required();

    auto* sweep = app.add_subcommand("sweep", "Robustness and budget sweeps");
    sweep->require_subcommand(1);
    std::vector<double> factors, fractions;
    std::string preds;
    auto* sweep_brightness = sweep->add_subcommand("brightness", "mAP under brightness perturbation");
    sweep_brightness->add_option("--gt", gt, "Ground-truth boxes JSONL")->required();
    sweep_brightness->add_option("--preds", preds, "Directory holding <factor>.jsonl detections")->required();
    sweep_brightness->add_option("--index", index, "Sample index; writes the perturbed sets");
    sweep_brightness->add_option("--factors", factors, "Brightness factors")->delimiter(',');
    sweep_brightness->add_option("--out", out, "Output directory");
    auto* sweep_budget = sweep->add_subcommand("budget", "Synthetic training-budget sweep");
    sweep_budget->add_option("--fractions", fractions, "Training fractions")->delimiter(',');
    sweep_budget->add_option("--out", out, "Output directory");

    std::vector<char*> cargs;
    for (std::string& a : args) {
        cargs.push_back(a.data());
    }
    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (seed) {
        overrides.emplace_back("seed", std::to_string(*seed));
    }
    if (workers) {
        overrides.emplace_back("workers", std::to_string(*workers));
    }
    if (!factors.empty()) {
        overrides.emplace_back("eval.factors", join(factors));
    }
    if (!fractions.empty()) {
        overrides.emplace_back("eval.fractions", join(fractions));
    }
    const attn::PipelineConfig base = config_path.empty() ? attn::PipelineConfig{} : attn::load_config(config_path);
    const attn::PipelineConfig cfg = attn::parse_config(attn::apply_overrides(attn::config_to_json(base), overrides));

    if (print_config) {
        std::cout << attn::config_to_json(cfg);
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return 2;
    }
    if (cfg.workers > 0) {
        attn::kernels::set_workers(cfg.workers);
    }
    const attn::fs::path out_dir = out.empty() ? attn::fs::path(cfg.io.out_dir) : attn::fs::path(out);
    auto optional_path = [](const std::string& s) {
        return s.empty() ? std::optional<attn::fs::path>{} : std::optional<attn::fs::path>{s};
    };

    if (build->parsed()) {
        if (gaze_files.size() != manifest_files.size()) {
            throw attn::ValidationError("build needs one --manifest per --gaze");
        }
        if (!names.empty() && names.size() != gaze_files.size()) {
            throw attn::ValidationError("build needs one --name per recording when names are given");
        }
        std::vector<attn::Recording> recordings;
        for (std::size_t i = 0; i < gaze_files.size(); ++i) {
            recordings.push_back({names.empty() ? std::string{} : names[i], gaze_files[i], manifest_files[i]});
        }
        attn::cmd_build(cfg, recordings, out_dir);
    } else if (augment->parsed()) {
        attn::cmd_augment(cfg, index, optional_path(boxes), out_dir);
    } else if (fuse->parsed()) {
        attn::cmd_fuse(cfg, index, optional_path(commands), optional_path(boxes), out_dir);
    } else if (train->parsed()) {
        attn::cmd_train(cfg, index, out_dir);
    } else if (eval_map->parsed()) {
        std::cout << attn::format_double(attn::cmd_eval_map(dets, gt)) << '\n';
    } else if (eval_att->parsed()) {
        const attn::AttentionScore s = attn::cmd_eval_att(cfg, checkpoint, index);
        std::cout << "{\"smooth_l1\":" << attn::format_double(s.smooth_l1) << ",\"mse\":"
                  << attn::format_double(s.mse) << ",\"count\":" << s.count << "}\n";
    } else if (eval_mse->parsed()) {
        std::cout << attn::format_double(attn::cmd_eval_mse(pred, target)) << '\n';
    } else if (sweep_brightness->parsed()) {
        std::cout << attn::cmd_sweep_brightness(cfg, gt, preds, optional_path(index), out_dir).to_csv();
    } else if (sweep_budget->parsed()) {
        std::cout << attn::cmd_sweep_budget(cfg, out_dir).to_csv();
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    setup_logging();
    try {
        return run(argc, argv);
    } catch (const attn::IoError& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const attn::ValidationError& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
}
