#include "microsplat/io.hpp"

#include "microsplat/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

namespace microsplat {

namespace {

struct FileCloser {
    void operator()(std::FILE *f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

void write_png(const Image &image, const std::filesystem::path &path) {
    require(image.width > 0 && image.height > 0, ErrorCode::InvalidParameter, "empty image");
    FilePtr file(std::fopen(path.c_str(), "wb"));
    require(file != nullptr, ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::Io, "libpng initialization failed");
    }
    std::vector<png_byte> row(static_cast<std::size_t>(image.width) * 3);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::Io, "failed writing PNG '" + path.string() + "'");
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width * 3; ++x) {
            const double v = std::clamp(image.data[static_cast<std::size_t>(y) * image.width * 3 + x], 0.0, 1.0);
            row[x] = static_cast<png_byte>(std::lround(v * 255.0));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path &path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    require(file != nullptr, ErrorCode::Io, "cannot open '" + path.string() + "'");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::Io, "libpng initialization failed");
    }
    Image image;
    std::vector<png_byte> row;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::Format, "failed reading PNG '" + path.string() + "'");
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_expand(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    image = Image(w, h);
    row.resize(png_get_rowbytes(png, info));
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < w * 3; ++x) {
            image.data[static_cast<std::size_t>(y) * w * 3 + x] = row[x] / 255.0;
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

namespace {

void check_keys(const nlohmann::json &obj, const std::set<std::string> &allowed,
                const std::string &where) {
    require(obj.is_object(), ErrorCode::Format, where + " must be a JSON object");
    for (const auto &[key, _] : obj.items()) {
        require(allowed.contains(key), ErrorCode::Format, "unknown key '" + key + "' in " + where);
    }
}

template <class T>
T get_required(const nlohmann::json &obj, const std::string &key, const std::string &where) {
    require(obj.contains(key), ErrorCode::Format, "missing key '" + key + "' in " + where);
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception &) {
        fail(ErrorCode::Format, "bad value for '" + key + "' in " + where);
    }
}

} // namespace

nlohmann::json cameras_to_json(const std::vector<Camera> &cameras) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto &c : cameras) {
        nlohmann::json rot = nlohmann::json::array();
        for (int r = 0; r < 3; ++r) rot.push_back({c.rotation(r, 0), c.rotation(r, 1), c.rotation(r, 2)});
        doc.push_back({{"fx", c.fx},
                       {"fy", c.fy},
                       {"cx", c.cx},
                       {"cy", c.cy},
                       {"width", c.width},
                       {"height", c.height},
                       {"rotation", rot},
                       {"translation", {c.translation.x(), c.translation.y(), c.translation.z()}},
                       {"near", c.near_plane}});
    }
    return doc;
}

std::vector<Camera> cameras_from_json(const nlohmann::json &doc) {
    require(doc.is_array(), ErrorCode::Format, "camera manifest must be a JSON array");
    std::vector<Camera> out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto &obj = doc[i];
        const std::string where = "camera " + std::to_string(i);
        check_keys(obj, {"fx", "fy", "cx", "cy", "width", "height", "rotation", "translation", "near"},
                   where);
        Camera c;
        c.fx = get_required<double>(obj, "fx", where);
        c.fy = get_required<double>(obj, "fy", where);
        c.cx = get_required<double>(obj, "cx", where);
        c.cy = get_required<double>(obj, "cy", where);
        c.width = get_required<int>(obj, "width", where);
        c.height = get_required<int>(obj, "height", where);
        const auto rot = get_required<std::vector<std::vector<double>>>(obj, "rotation", where);
        require(rot.size() == 3 && rot[0].size() == 3 && rot[1].size() == 3 && rot[2].size() == 3,
                ErrorCode::Format, where + ": rotation must be 3x3");
        for (int r = 0; r < 3; ++r)
            for (int k = 0; k < 3; ++k) c.rotation(r, k) = rot[r][k];
        const auto t = get_required<std::vector<double>>(obj, "translation", where);
        require(t.size() == 3, ErrorCode::Format, where + ": translation must have 3 entries");
        c.translation = Vec3(t[0], t[1], t[2]);
        if (obj.contains("near")) c.near_plane = get_required<double>(obj, "near", where);
        c.validate();
        out.push_back(c);
    }
    return out;
}

nlohmann::json read_json_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open '" + path.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        fail(ErrorCode::Format, "invalid JSON in '" + path.string() + "': " + e.what());
    }
}

void write_text_file(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    out << text;
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing '" + path.string() + "'");
}

void save_cameras(const std::vector<Camera> &cameras, const std::filesystem::path &path) {
    write_text_file(path, cameras_to_json(cameras).dump(2) + "\n");
}

std::vector<Camera> load_cameras(const std::filesystem::path &path) {
    return cameras_from_json(read_json_file(path));
}

namespace {

nlohmann::json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

} // namespace

nlohmann::json to_json(const TrainLogRecord &rec, bool with_wall_clock) {
    nlohmann::json j = {{"type", "metrics"},
                        {"iteration", rec.iteration},
                        {"loss", rec.total},
                        {"l1", rec.l1},
                        {"l2", rec.l2},
                        {"ssim_term", rec.ssim_term},
                        {"cov_term", rec.cov_term},
                        {"heldout_psnr", finite_or_null(rec.heldout_psnr)},
                        {"splat_count", rec.splat_count},
                        {"radius_histogram", rec.radius_histogram}};
    if (with_wall_clock) j["wall_clock_s"] = rec.wall_clock_s;
    return j;
}

nlohmann::json to_json(const SplitEvent &ev) {
    return {{"type", "split"},
            {"iteration", ev.iteration},
            {"threshold", ev.threshold},
            {"by_score", ev.by_score},
            {"by_trace", ev.by_trace},
            {"split", ev.split},
            {"count_before", ev.count_before},
            {"count_after", ev.count_after}};
}

nlohmann::json to_json(const RefineEvent &ev) {
    const auto &r = ev.report;
    return {{"type", "refine"},
            {"iteration", ev.iteration},
            {"tau_xyz", ev.thresholds.xyz},
            {"tau_col", ev.thresholds.col},
            {"tau_scale", ev.thresholds.scale},
            {"pruned", r.pruned},
            {"merged_pairs", r.merged_pairs},
            {"count_before", r.count_before},
            {"count_after", r.count_after},
            {"score_min", r.scores.min},
            {"score_median", r.scores.median},
            {"score_mean", r.scores.mean},
            {"score_max", r.scores.max}};
}

JsonlWriter::JsonlWriter(const std::filesystem::path &path)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    require(static_cast<bool>(out_), ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
}

void JsonlWriter::write(const nlohmann::json &record) {
    out_ << record.dump() << '\n';
    out_.flush();
    require(static_cast<bool>(out_), ErrorCode::Io, "failed writing '" + path_.string() + "'");
}

namespace {

std::string escape_xml(const std::string &s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += ch;
        }
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

} // namespace

std::string line_chart_svg(const std::string &title, const std::string &x_label,
                           const std::string &y_label, const std::vector<PlotSeries> &series) {
    constexpr double kW = 640, kH = 400, kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
    const char *palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto &s : series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); };
    auto py = [&](double y) { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
        << escape_xml(title) << "</text>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kH - kBottom << "\" x2=\"" << kW - kRight
        << "\" y2=\"" << kH - kBottom << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kH - kBottom << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double xv = x0 + (x1 - x0) * t / 5.0, yv = y0 + (y1 - y0) * t / 5.0;
        svg << "<text x=\"" << px(xv) << "\" y=\"" << kH - kBottom + 16
            << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
        svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
            << fmt(yv) << "</text>\n";
        svg << "<line x1=\"" << kLeft << "\" y1=\"" << py(yv) << "\" x2=\"" << kW - kRight
            << "\" y2=\"" << py(yv) << "\" stroke=\"#ddd\"/>\n";
    }
    svg << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">"
        << escape_xml(x_label) << "</text>\n";
    svg << "<text transform=\"translate(16," << kH / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << escape_xml(y_label) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto &s = series[k];
        const char *color = palette[k % 4];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            svg << px(s.x[i]) << "," << py(s.y[i]) << " ";
        }
        svg << "\"/>\n";
        if (!s.label.empty()) {
            svg << "<text x=\"" << kW - kRight - 4 << "\" y=\"" << kTop + 14 * (k + 1)
                << "\" text-anchor=\"end\" fill=\"" << color << "\">" << escape_xml(s.label)
                << "</text>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace microsplat
