#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prada/geometry.hpp"

namespace prada {

// 8-bit raster, 1 channel (PGM P5) or 3 channels (PPM P6), row major.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<uint8_t> data;

  uint8_t* pixel(int x, int y) { return data.data() + (size_t(y) * width + x) * channels; }
  const uint8_t* pixel(int x, int y) const {
    return data.data() + (size_t(y) * width + x) * channels;
  }
};

Image read_pnm(const std::string& path);
void write_pnm(const std::string& path, const Image& img);

// For each target pixel, the source pixel it samples from under the model's
// undistortion, or (-1, -1) when the target ray is outside the distorted
// field of view. The target image is an ideal pinhole with the given focal
// (pixels) centered on the frame's principal point.
std::vector<Vec2> undistort_map(const DivisionModel& model, const ImageFrame& frame,
                                double focal_px);

// Bilinear remap of src through the map; unmapped pixels become black.
Image remap(const Image& src, const std::vector<Vec2>& map, int width, int height);

// Full pipeline: map with the small-angle aligned focal, then remap.
Image undistort_image(const Image& src, const DivisionModel& model, const ImageFrame& frame);

}  // namespace prada
