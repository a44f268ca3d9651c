#pragma once

#include "microsplat/splat.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace microsplat {

/// Binary little-endian PLY in the usual splat layout: x y z nx ny nz
/// f_dc_0..2 f_rest_* opacity scale_0..2 rot_0..3, all float32. f_rest is
/// channel-major. Values are narrowed to float on save.
std::string save_ply(const SplatModel &model);

/// Inverse of save_ply. Properties may appear in any order and unknown float
/// properties are ignored; the SH degree follows from the f_rest count.
SplatModel load_ply(std::string_view bytes);

void save_ply_file(const SplatModel &model, const std::filesystem::path &path);
SplatModel load_ply_file(const std::filesystem::path &path);

} // namespace microsplat
