#include "prada/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace prada {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

const MatchFileImage& MatchFile::image(const std::string& id) const {
  for (const auto& img : images)
    if (img.image_id == id) return img;
  throw DataError("unknown image id: " + id);
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> toks;
  std::string t;
  while (ss >> t) toks.push_back(t);
  return toks;
}

double parse_double(const std::string& s, const std::string& what) {
  size_t used = 0;
  double v;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw DataError("bad " + what + ": " + s);
  }
  if (used != s.size() || !std::isfinite(v)) throw DataError("bad " + what + ": " + s);
  return v;
}

long parse_long(const std::string& s, const std::string& what) {
  size_t used = 0;
  long v;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    throw DataError("bad " + what + ": " + s);
  }
  if (used != s.size()) throw DataError("bad " + what + ": " + s);
  return v;
}

std::string next_line(std::istream& in, int& lineno) {
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] != '#' && line.find_first_not_of(" \t") != std::string::npos)
      return line;
  }
  throw DataError("unexpected end of match file at line " + std::to_string(lineno));
}

void check_in_frame(const Vec2& p, const ImageFrame& frame, const std::string& where) {
  // 10% slack per side; matchers may report slightly out-of-bounds keypoints.
  const double sx = 0.1 * frame.width, sy = 0.1 * frame.height;
  if (p.x() < -sx || p.x() > frame.width + sx || p.y() < -sy || p.y() > frame.height + sy)
    throw DataError("coordinate far outside its frame in " + where + ": (" +
                    format_double(p.x()) + ", " + format_double(p.y()) + ")");
}

}  // namespace

MatchFile read_match_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open match file: " + path);
  int lineno = 0;

  MatchFile out;
  {
    const auto toks = split_ws(next_line(in, lineno));
    if (toks.size() != 2 || toks[0] != "PRADA_MATCHES" || toks[1] != "1")
      throw DataError("not a PRADA_MATCHES 1 file: " + path);
  }
  {
    const auto toks = split_ws(next_line(in, lineno));
    if (toks.size() != 2 || toks[0] != "images")
      throw DataError("expected 'images <n>' at line " + std::to_string(lineno));
    const long n = parse_long(toks[1], "image count");
    if (n < 2) throw DataError("match file needs at least 2 images");
    std::set<std::string> seen;
    for (long i = 0; i < n; ++i) {
      const auto t = split_ws(next_line(in, lineno));
      if (t.size() != 6)
        throw DataError("bad image record at line " + std::to_string(lineno));
      MatchFileImage img;
      img.image_id = t[0];
      img.camera_id = t[1];
      const long w = parse_long(t[2], "width");
      const long h = parse_long(t[3], "height");
      if (w <= 0 || h <= 0) throw DataError("bad image size at line " + std::to_string(lineno));
      img.frame = ImageFrame(int(w), int(h),
                             Vec2(parse_double(t[4], "ppx"), parse_double(t[5], "ppy")));
      check_in_frame(img.frame.principal_point, img.frame, "image " + img.image_id);
      if (!seen.insert(img.image_id).second)
        throw DataError("duplicate image id: " + img.image_id);
      out.images.push_back(std::move(img));
    }
  }

  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t") == std::string::npos)
      continue;
    const auto toks = split_ws(line);
    if (toks.size() != 4 || toks[0] != "pair")
      throw DataError("expected 'pair <img_a> <img_b> <n>' at line " + std::to_string(lineno));
    const MatchFileImage& a = out.image(toks[1]);
    const MatchFileImage& b = out.image(toks[2]);
    if (a.image_id == b.image_id)
      throw DataError("pair of an image with itself: " + a.image_id);
    const long n = parse_long(toks[3], "match count");
    if (n < 0) throw DataError("negative match count at line " + std::to_string(lineno));

    CorrespondenceSet set;
    set.camera_id_a = a.camera_id;
    set.camera_id_b = b.camera_id;
    set.image_id_a = a.image_id;
    set.image_id_b = b.image_id;
    set.frame_a = a.frame;
    set.frame_b = b.frame;
    set.pairs.reserve(size_t(n));
    const std::string where = "pair " + a.image_id + "-" + b.image_id;
    for (long i = 0; i < n; ++i) {
      const auto t = split_ws(next_line(in, lineno));
      if (t.size() != 4)
        throw DataError("bad match record at line " + std::to_string(lineno));
      const Vec2 pa(parse_double(t[0], "xa"), parse_double(t[1], "ya"));
      const Vec2 pb(parse_double(t[2], "xb"), parse_double(t[3], "yb"));
      check_in_frame(pa, a.frame, where);
      check_in_frame(pb, b.frame, where);
      set.pairs.emplace_back(pa, pb);
    }
    out.pairs.push_back(std::move(set));
  }
  if (out.pairs.empty()) throw DataError("match file has no pairs: " + path);
  return out;
}

void write_match_file(const std::string& path, const MatchFile& file) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write match file: " + path);
  os << "PRADA_MATCHES 1\n";
  os << "images " << file.images.size() << "\n";
  for (const auto& img : file.images)
    os << img.image_id << " " << img.camera_id << " " << img.frame.width << " "
       << img.frame.height << " " << format_double(img.frame.principal_point.x()) << " "
       << format_double(img.frame.principal_point.y()) << "\n";
  for (const auto& set : file.pairs) {
    os << "pair " << set.image_id_a << " " << set.image_id_b << " " << set.pairs.size() << "\n";
    for (const auto& [pa, pb] : set.pairs)
      os << format_double(pa.x()) << " " << format_double(pa.y()) << " "
         << format_double(pb.x()) << " " << format_double(pb.y()) << "\n";
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

CameraModelFile read_camera_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open camera model: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError("bad camera model json in " + path + ": " + e.what());
  }
  try {
    CameraModelFile cam;
    cam.camera_id = j.at("camera_id").get<std::string>();
    if (j.at("normalization").get<std::string>() != "diagonal")
      throw DataError("unsupported normalization in " + path);
    auto coeffs = j.at("coefficients").get<std::vector<double>>();
    cam.model = DivisionModel(std::move(coeffs));
    if (cam.model.degree() != j.at("degree").get<int>())
      throw DataError("degree does not match the coefficient count in " + path);
    const auto& fr = j.at("frame");
    cam.frame = ImageFrame(fr.at("width").get<int>(), fr.at("height").get<int>(),
                           Vec2(fr.at("ppx").get<double>(), fr.at("ppy").get<double>()));
    if (j.contains("provenance")) {
      const auto& p = j["provenance"];
      cam.stage = p.value("stage", std::string("global"));
      cam.low_confidence = p.value("low_confidence", false);
      cam.n_pairs = p.value("n_pairs", 0);
      cam.inlier_count = p.value("inlier_count", 0l);
      if (p.contains("costs"))
        for (auto it = p["costs"].begin(); it != p["costs"].end(); ++it)
          cam.costs[it.key()] = it.value().get<double>();
    }
    return cam;
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError("bad camera model in " + path + ": " + e.what());
  }
}

void write_camera_model(const std::string& path, const CameraModelFile& cam) {
  nlohmann::ordered_json j;
  j["camera_id"] = cam.camera_id;
  j["model"] = "polynomial_division";
  j["normalization"] = "diagonal";
  j["degree"] = cam.model.degree();
  j["coefficients"] = cam.model.coeffs();
  j["frame"] = {{"width", cam.frame.width},
                {"height", cam.frame.height},
                {"ppx", cam.frame.principal_point.x()},
                {"ppy", cam.frame.principal_point.y()}};
  nlohmann::ordered_json prov;
  prov["stage"] = cam.stage;
  prov["low_confidence"] = cam.low_confidence;
  prov["n_pairs"] = cam.n_pairs;
  prov["inlier_count"] = cam.inlier_count;
  nlohmann::ordered_json costs = nlohmann::ordered_json::object();
  for (const auto& [k, v] : cam.costs) costs[k] = v;
  prov["costs"] = std::move(costs);
  j["provenance"] = std::move(prov);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write camera model: " + path);
  os << j.dump(2) << "\n";
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace prada
