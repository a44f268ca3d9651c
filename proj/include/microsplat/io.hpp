#pragma once

#include "microsplat/camera.hpp"
#include "microsplat/image.hpp"
#include "microsplat/trainer.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace microsplat {

/// 8-bit RGB PNG; values are clamped to [0, 1] and rounded.
void write_png(const Image &image, const std::filesystem::path &path);
Image read_png(const std::filesystem::path &path);

/// Camera manifest: a JSON array of {fx, fy, cx, cy, width, height,
/// rotation (3x3 rows), translation, near}.
nlohmann::json cameras_to_json(const std::vector<Camera> &cameras);
std::vector<Camera> cameras_from_json(const nlohmann::json &doc);
void save_cameras(const std::vector<Camera> &cameras, const std::filesystem::path &path);
std::vector<Camera> load_cameras(const std::filesystem::path &path);

nlohmann::json read_json_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, const std::string &text);

nlohmann::json to_json(const TrainLogRecord &rec, bool with_wall_clock);
nlohmann::json to_json(const SplitEvent &ev);
nlohmann::json to_json(const RefineEvent &ev);

/// Line-delimited JSON records, flushed per line.
class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path &path);
    void write(const nlohmann::json &record);

private:
    std::ofstream out_;
    std::filesystem::path path_;
};

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal SVG line chart with axes and tick labels.
std::string line_chart_svg(const std::string &title, const std::string &x_label,
                           const std::string &y_label, const std::vector<PlotSeries> &series);

} // namespace microsplat
