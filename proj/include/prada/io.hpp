#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "prada/geometry.hpp"
#include "prada/metrics.hpp"

namespace prada {

// Malformed or inconsistent input files; distinguished from numerical
// failures so the CLI can map them to separate exit codes.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest-exact decimal form of a double; all file writers use it so that
// write -> read -> write is byte-identical.
std::string format_double(double v);

struct MatchFileImage {
  std::string image_id;
  std::string camera_id;
  ImageFrame frame;
};

// Line-oriented text container for pairwise correspondences:
//   PRADA_MATCHES 1
//   images <n>
//   <image_id> <camera_id> <width> <height> <ppx> <ppy>
//   pair <image_a> <image_b> <n_matches>
//   <xa> <ya> <xb> <yb>
struct MatchFile {
  std::vector<MatchFileImage> images;
  std::vector<CorrespondenceSet> pairs;

  const MatchFileImage& image(const std::string& id) const;
};

MatchFile read_match_file(const std::string& path);
void write_match_file(const std::string& path, const MatchFile& file);

struct CameraModelFile {
  std::string camera_id;
  DivisionModel model;
  ImageFrame frame;
  std::string stage = "global";
  bool low_confidence = false;
  int n_pairs = 0;
  long inlier_count = 0;
  std::map<std::string, double> costs;

  Camera camera() const { return {model, frame}; }
};

CameraModelFile read_camera_model(const std::string& path);
void write_camera_model(const std::string& path, const CameraModelFile& cam);

}  // namespace prada
