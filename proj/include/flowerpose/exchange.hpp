#pragma once

// File exchange protocol for out-of-process 2D detectors.
//
// For each request the primary writes, inside the exchange directory:
//   <id>.png       the raster (8-bit RGB)
//   <id>.req.json  {"id": "<id>", "image": "<absolute png path>", "width": W, "height": H}
// The adapter answers with
//   <id>.resp.json {"id": "<id>", "boxes": [{"x_min":..,"y_min":..,"x_max":..,"y_max":..,"score":..}, ...],
//                   "error": "<optional message>"}
// Coordinates are pixels with y increasing downward; bounds are inclusive.
// Both sides publish files by writing "<name>.tmp" and renaming, so a
// reader never sees a partial record. One request is in flight per
// directory at a time.

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowerpose/bbox.hpp"
#include "flowerpose/image.hpp"

namespace flowerpose {

struct ExchangeRequest {
    std::string id;
    std::filesystem::path image;
    int width = 0;
    int height = 0;
};

nlohmann::json request_to_json(const ExchangeRequest& request);
ExchangeRequest request_from_json(const nlohmann::json& j);

// Parses a response record and clips boxes to a width x height raster.
// Clipping, and dropping boxes that fall entirely outside, are logged as
// warnings. Structural problems throw DetectionError.
std::vector<BBox2D> parse_response(const nlohmann::json& response, int width, int height);

nlohmann::json boxes_to_json(const std::vector<BBox2D>& boxes);

// Writes `text` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

// Runs one request/response round trip. Throws DetectionError on timeout,
// malformed response, or an adapter-reported error.
std::vector<BBox2D> external_detect(const RgbImage& image, const std::filesystem::path& exchange_dir,
                                    std::chrono::milliseconds timeout);

} // namespace flowerpose
