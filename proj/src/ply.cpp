#include "microsplat/ply.hpp"

#include "microsplat/error.hpp"
#include "microsplat/sh.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <vector>

namespace microsplat {

namespace {

void put_float(std::string &out, double v) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
}

float get_float(const char *p) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[b])) << (8 * b);
    return std::bit_cast<float>(bits);
}

std::vector<std::string> property_names(int degree) {
    std::vector<std::string> names = {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"};
    const int rest = 3 * (sh_coeff_count(degree) - 1);
    for (int i = 0; i < rest; ++i) names.push_back("f_rest_" + std::to_string(i));
    names.push_back("opacity");
    for (int i = 0; i < 3; ++i) names.push_back("scale_" + std::to_string(i));
    for (int i = 0; i < 4; ++i) names.push_back("rot_" + std::to_string(i));
    return names;
}

} // namespace

std::string save_ply(const SplatModel &model) {
    require(model.sh_degree >= 0 && model.sh_degree <= kMaxShDegree, ErrorCode::InvalidParameter,
            "SH degree must be in [0, 3]");
    const int k = sh_coeff_count(model.sh_degree);
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\nelement vertex " << model.size() << "\n";
    for (const auto &name : property_names(model.sh_degree)) header << "property float " << name << "\n";
    header << "end_header\n";

    std::string out = header.str();
    out.reserve(out.size() + model.size() * 4 * (14 + 3 * static_cast<std::size_t>(k)));
    for (const auto &s : model.splats) {
        for (int i = 0; i < 3; ++i) put_float(out, s.position[i]);
        for (int i = 0; i < 3; ++i) put_float(out, 0.0);
        for (int c = 0; c < 3; ++c) put_float(out, s.sh[0][c]);
        for (int c = 0; c < 3; ++c)
            for (int j = 1; j < k; ++j) put_float(out, s.sh[j][c]);
        put_float(out, s.opacity_logit);
        for (int i = 0; i < 3; ++i) put_float(out, s.log_scales[i]);
        for (int i = 0; i < 4; ++i) put_float(out, s.rotation[i]);
    }
    return out;
}

SplatModel load_ply(std::string_view bytes) {
    const std::size_t end = bytes.find("end_header\n");
    require(bytes.substr(0, 4) == "ply\n" && end != std::string_view::npos, ErrorCode::Format,
            "not a PLY file or missing end_header");
    std::istringstream header{std::string(bytes.substr(0, end))};
    std::string line;
    std::getline(header, line);

    bool have_format = false;
    long long vertex_count = -1;
    bool in_vertex = false;
    std::unordered_map<std::string, int> index;
    int property_count = 0;
    while (std::getline(header, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word.empty() || word == "comment" || word == "obj_info") continue;
        if (word == "format") {
            std::string kind, version;
            ls >> kind >> version;
            require(kind == "binary_little_endian", ErrorCode::Format,
                    "unsupported PLY format '" + kind + "'");
            have_format = true;
        } else if (word == "element") {
            std::string name;
            long long count = -1;
            ls >> name >> count;
            require(name == "vertex" && vertex_count < 0, ErrorCode::Format,
                    "unexpected PLY element '" + name + "'");
            require(count >= 0, ErrorCode::Format, "bad vertex count");
            vertex_count = count;
            in_vertex = true;
        } else if (word == "property") {
            require(in_vertex, ErrorCode::Format, "property outside the vertex element");
            std::string type, name;
            ls >> type >> name;
            require(type == "float" || type == "float32", ErrorCode::Format,
                    "property '" + name + "' has non-float type '" + type + "'");
            require(!name.empty() && !index.contains(name), ErrorCode::Format,
                    "duplicate or unnamed property");
            index[name] = property_count++;
        } else {
            fail(ErrorCode::Format, "unrecognized header line '" + line + "'");
        }
    }
    require(have_format, ErrorCode::Format, "missing format line");
    require(vertex_count >= 0, ErrorCode::Format, "missing vertex element");

    int rest = 0;
    while (index.contains("f_rest_" + std::to_string(rest))) ++rest;
    int degree = -1;
    for (int l = 0; l <= kMaxShDegree; ++l) {
        if (3 * (sh_coeff_count(l) - 1) == rest) degree = l;
    }
    require(degree >= 0, ErrorCode::Format,
            "f_rest count " + std::to_string(rest) + " matches no SH degree");

    auto field = [&](const std::string &name) {
        const auto it = index.find(name);
        require(it != index.end(), ErrorCode::Format, "missing property '" + name + "'");
        return it->second;
    };
    int pos[3], dc[3], scale[3], rot[4];
    for (int i = 0; i < 3; ++i) {
        pos[i] = field(std::string(1, "xyz"[i]));
        dc[i] = field("f_dc_" + std::to_string(i));
        scale[i] = field("scale_" + std::to_string(i));
    }
    for (int i = 0; i < 4; ++i) rot[i] = field("rot_" + std::to_string(i));
    const int opacity = field("opacity");
    const int k = sh_coeff_count(degree);
    std::vector<int> rest_index(static_cast<std::size_t>(rest));
    for (int i = 0; i < rest; ++i) rest_index[i] = field("f_rest_" + std::to_string(i));

    const std::size_t stride = 4 * static_cast<std::size_t>(property_count);
    const std::size_t payload = bytes.size() - (end + 11);
    require(stride == 0 || payload / stride >= static_cast<std::size_t>(vertex_count),
            ErrorCode::Format, "truncated PLY payload");
    require(payload == stride * static_cast<std::size_t>(vertex_count), ErrorCode::Format,
            "PLY payload size does not match the header");

    SplatModel model;
    model.sh_degree = degree;
    model.splats.resize(static_cast<std::size_t>(vertex_count));
    const char *base = bytes.data() + end + 11;
    for (std::size_t v = 0; v < model.splats.size(); ++v) {
        const char *row = base + v * stride;
        auto at = [&](int prop) { return static_cast<double>(get_float(row + 4 * prop)); };
        auto &s = model.splats[v];
        for (int i = 0; i < 3; ++i) {
            s.position[i] = at(pos[i]);
            s.sh[0][i] = at(dc[i]);
            s.log_scales[i] = at(scale[i]);
        }
        for (int c = 0; c < 3; ++c)
            for (int j = 1; j < k; ++j) s.sh[j][c] = at(rest_index[c * (k - 1) + j - 1]);
        s.opacity_logit = at(opacity);
        for (int i = 0; i < 4; ++i) s.rotation[i] = at(rot[i]);
    }
    return model;
}

void save_ply_file(const SplatModel &model, const std::filesystem::path &path) {
    const std::string bytes = save_ply(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing '" + path.string() + "'");
}

SplatModel load_ply_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_ply(ss.str());
}

} // namespace microsplat
