#pragma once

#include <filesystem>
#include <iosfwd>

#include "flowerpose/cloud.hpp"

namespace flowerpose {

enum class PlyFormat { ascii, binary_little_endian };

// Precision of stored attributes. `quantized` writes float positions and
// uchar colors (what photogrammetry tools emit); `exact` writes doubles for
// both so a cloud survives a write/read cycle bit for bit.
enum class PlyPrecision { quantized, exact };

struct PlyWriteOptions {
    PlyFormat format = PlyFormat::binary_little_endian;
    PlyPrecision precision = PlyPrecision::exact;
};

// Reads the vertex element of an ASCII or binary-little-endian PLY file.
// Requires x,y,z plus red,green,blue (or r,g,b) properties. Integer colors
// are scaled by their type maximum; float colors are taken as [0,1]. Other
// elements (faces, ...) and extra vertex properties are skipped.
PointCloud load_ply(const std::filesystem::path& path);
PointCloud read_ply(std::istream& in);

void save_ply(const std::filesystem::path& path, const PointCloud& cloud, const PlyWriteOptions& options = {});
void write_ply(std::ostream& out, const PointCloud& cloud, const PlyWriteOptions& options = {});

} // namespace flowerpose
