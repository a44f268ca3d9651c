#pragma once

#include "microsplat/scene.hpp"
#include "microsplat/trainer.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace microsplat {

struct OutputConfig {
    std::string dir = "out";
    std::string model = "model.ply";
    std::string log = "train_log.jsonl";
    bool write_images = true;   // ground truth and final renders as PNG
    bool write_plots = true;
};

/// Full run description: {"scene": ..., "train": ..., "output": ...}. Every key
/// is optional; unknown keys are rejected.
struct RunConfig {
    SceneSpec scene;
    TrainConfig train;
    OutputConfig output;
};

RunConfig run_config_from_json(const nlohmann::json &doc);
nlohmann::json run_config_to_json(const RunConfig &config);
RunConfig load_run_config(const std::filesystem::path &path);

} // namespace microsplat
