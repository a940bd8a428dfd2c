#include "prada/image.hpp"

#include <cmath>
#include <fstream>

#include "prada/io.hpp"
#include "prada/metrics.hpp"
#include "prada/synth.hpp"

namespace prada {

namespace {

// Skips whitespace and '#' comments between PNM header tokens.
int read_header_int(std::istream& in, const std::string& path) {
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
    } else if (!std::isspace(c)) {
      in.unget();
      break;
    }
  }
  int v;
  if (!(in >> v)) throw DataError("bad PNM header in " + path);
  return v;
}

}  // namespace

Image read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image: " + path);
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || (m1 != '5' && m1 != '6'))
    throw DataError("not a binary PGM (P5) or PPM (P6) file: " + path);

  Image img;
  img.channels = m1 == '6' ? 3 : 1;
  img.width = read_header_int(in, path);
  img.height = read_header_int(in, path);
  const int maxval = read_header_int(in, path);
  if (img.width <= 0 || img.height <= 0 || maxval != 255)
    throw DataError("unsupported PNM geometry or depth in " + path);
  in.get();  // single whitespace byte after maxval

  img.data.resize(size_t(img.width) * img.height * img.channels);
  in.read(reinterpret_cast<char*>(img.data.data()), std::streamsize(img.data.size()));
  if (size_t(in.gcount()) != img.data.size())
    throw DataError("truncated image data in " + path);
  return img;
}

void write_pnm(const std::string& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("write_pnm: 1 or 3 channels only");
  if (img.data.size() != size_t(img.width) * img.height * img.channels)
    throw std::invalid_argument("write_pnm: data size mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write image: " + path);
  os << (img.channels == 3 ? "P6" : "P5") << "\n"
     << img.width << " " << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.data.data()), std::streamsize(img.data.size()));
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<Vec2> undistort_map(const DivisionModel& model, const ImageFrame& frame,
                                double focal_px) {
  std::vector<Vec2> map(size_t(frame.width) * frame.height, Vec2(-1, -1));
  const double r_cap = 1.5 * frame.max_radius();
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      // Target pixel center -> ideal pinhole ray -> distorted source pixel.
      const Vec2 t(x + 0.5, y + 0.5);
      const Vec2 u = (t - frame.principal_point) / focal_px;
      const auto rd = distorted_radius(model, u.norm(), r_cap);
      if (!rd) continue;
      const Vec2 pn = u.norm() > 0.0 ? Vec2(u * (*rd / u.norm())) : Vec2(0, 0);
      const Vec2 src = denormalize(pn, frame);
      if (src.x() < 0 || src.x() > frame.width || src.y() < 0 || src.y() > frame.height)
        continue;
      map[size_t(y) * frame.width + x] = src;
    }
  }
  return map;
}

Image remap(const Image& src, const std::vector<Vec2>& map, int width, int height) {
  if (map.size() != size_t(width) * height)
    throw std::invalid_argument("remap: map size mismatch");
  Image out;
  out.width = width;
  out.height = height;
  out.channels = src.channels;
  out.data.assign(size_t(width) * height * src.channels, 0);

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Vec2& s = map[size_t(y) * width + x];
      if (s.x() < 0) continue;
      // Bilinear sample at the pixel-center grid, clamped at the border.
      const double fx = std::clamp(s.x() - 0.5, 0.0, double(src.width - 1));
      const double fy = std::clamp(s.y() - 0.5, 0.0, double(src.height - 1));
      const int x0 = std::min(int(fx), src.width - 2 >= 0 ? src.width - 2 : 0);
      const int y0 = std::min(int(fy), src.height - 2 >= 0 ? src.height - 2 : 0);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const int y1 = std::min(y0 + 1, src.height - 1);
      const double ax = fx - x0, ay = fy - y0;
      uint8_t* dst = out.pixel(x, y);
      for (int c = 0; c < src.channels; ++c) {
        const double v = (1 - ay) * ((1 - ax) * src.pixel(x0, y0)[c] + ax * src.pixel(x1, y0)[c]) +
                         ay * ((1 - ax) * src.pixel(x0, y1)[c] + ax * src.pixel(x1, y1)[c]);
        dst[c] = uint8_t(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

Image undistort_image(const Image& src, const DivisionModel& model, const ImageFrame& frame) {
  if (src.width != frame.width || src.height != frame.height)
    throw DataError("undistort_image: image size does not match the camera frame");
  const double focal = align_focal_small_angle(model, frame);
  return remap(src, undistort_map(model, frame, focal), frame.width, frame.height);
}

}  // namespace prada
