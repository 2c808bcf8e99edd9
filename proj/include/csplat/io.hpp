#pragma once

#include "csplat/camera.hpp"
#include "csplat/cloud.hpp"
#include "csplat/image.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace csplat {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat float image container: 16-byte header (magic "FIMG", u32 width,
/// u32 height, u32 channels, little-endian) followed by row-major float32
/// data with interleaved channels. Exact within float32; previews are PNG.
inline constexpr std::uint32_t kFimgMagic = 0x474D4946u;  // "FIMG"

void writeFimg(const std::filesystem::path& path, const Imaged& img);
Imaged readFimg(const std::filesystem::path& path);

/// 8-bit RGB preview; values clamped to [0,1]. Never read back.
void writePng8(const std::filesystem::path& path, const Imaged& img);

/// Pose file: header "fx fy cx cy width height", then one line per frame
/// "frame_id qw qx qy qz tx ty tz" (world-to-camera), text with enough
/// digits that the parser round-trips the writer exactly.
struct PoseFile {
    std::vector<Camerad> cameras;
    int width = 0;
    int height = 0;
};

void writePoses(const std::filesystem::path& path, const std::vector<Camerad>& cameras,
                int width, int height);
PoseFile readPoses(const std::filesystem::path& path);

/// Splat model snapshot: header line "csplat-cloud 1 <count>", then one
/// line per Gaussian "px py pz sx sy sz qw qx qy qz opacity r g b".
void writeCloud(const std::filesystem::path& path, const GaussianCloudd& cloud);
GaussianCloudd readCloud(const std::filesystem::path& path);

}  // namespace csplat
