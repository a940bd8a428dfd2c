#include "prada/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"

using namespace prada;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("prada_test_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

MatchFile sample_matches() {
  MatchFile mf;
  mf.images.push_back({"img0", "cam0", ImageFrame(640, 480)});
  mf.images.push_back({"img1", "cam0", ImageFrame(640, 480)});
  mf.images.push_back({"img2", "cam1", ImageFrame(512, 512, Vec2(250.25, 260.125))});
  CorrespondenceSet set;
  set.camera_id_a = "cam0";
  set.camera_id_b = "cam1";
  set.image_id_a = "img0";
  set.image_id_b = "img2";
  set.frame_a = mf.images[0].frame;
  set.frame_b = mf.images[2].frame;
  set.pairs = {{Vec2(12.5, 300.0), Vec2(400.123456789, 17.0)},
               {Vec2(0.1, 0.2), Vec2(511.0, 511.0)},
               {Vec2(-30.0, 10.0), Vec2(1.0, 2.0)}};  // inside the 10% slack
  mf.pairs.push_back(set);
  return mf;
}

}  // namespace

TEST_CASE("match file round trip is byte identical") {
  TempDir dir;
  const MatchFile mf = sample_matches();
  write_match_file(dir.file("a.txt"), mf);
  const MatchFile read = read_match_file(dir.file("a.txt"));
  write_match_file(dir.file("b.txt"), read);
  CHECK(slurp(dir.file("a.txt")) == slurp(dir.file("b.txt")));
  REQUIRE(read.pairs.size() == 1);
  CHECK(read.pairs[0].pairs.size() == 3);
  CHECK(read.pairs[0].camera_id_b == "cam1");
  CHECK(read.image("img2").frame.principal_point.x() == 250.25);
}

TEST_CASE("match file rejects malformed input") {
  TempDir dir;
  auto write = [&](const std::string& body) {
    std::ofstream os(dir.file("bad.txt"), std::ios::binary);
    os << body;
  };
  write("NOT_A_HEADER\n");
  CHECK_THROWS_AS(read_match_file(dir.file("bad.txt")), DataError);

  write("PRADA_MATCHES 1\nimages 1\nimg0 cam0 640 480 320 240\n");
  CHECK_THROWS_AS(read_match_file(dir.file("bad.txt")), DataError);  // < 2 images

  write(
      "PRADA_MATCHES 1\nimages 2\nimg0 cam0 640 480 320 240\nimg1 cam0 640 480 320 240\n"
      "pair img0 imgX 0\n");
  CHECK_THROWS_AS(read_match_file(dir.file("bad.txt")), DataError);  // unknown image

  write(
      "PRADA_MATCHES 1\nimages 2\nimg0 cam0 640 480 320 240\nimg1 cam0 640 480 320 240\n"
      "pair img0 img1 1\n5000 10 10 10\n");
  CHECK_THROWS_AS(read_match_file(dir.file("bad.txt")), DataError);  // outside slack

  write(
      "PRADA_MATCHES 1\nimages 2\nimg0 cam0 640 480 320 240\nimg1 cam0 640 480 320 240\n"
      "pair img0 img1 2\n10 10 10 10\n");
  CHECK_THROWS_AS(read_match_file(dir.file("bad.txt")), DataError);  // truncated

  CHECK_THROWS_AS(read_match_file(dir.file("missing.txt")), DataError);
}

TEST_CASE("match file accepts comments and blank lines") {
  TempDir dir;
  std::ofstream os(dir.file("c.txt"), std::ios::binary);
  os << "PRADA_MATCHES 1\n# a comment\n\nimages 2\nimg0 cam0 640 480 320 240\n"
        "img1 cam0 640 480 320 240\n\npair img0 img1 1\n# match\n1.5 2.5 3.5 4.5\n";
  os.close();
  const MatchFile mf = read_match_file(dir.file("c.txt"));
  CHECK(mf.pairs[0].pairs[0].first.x() == 1.5);
}

TEST_CASE("camera model round trip") {
  TempDir dir;
  CameraModelFile cam;
  cam.camera_id = "cam0";
  cam.model = DivisionModel({1.0, 0.0, -0.2134567890123456, 0.05, -0.001});
  cam.frame = ImageFrame(1024, 768, Vec2(510.5, 386.25));
  cam.stage = "global";
  cam.low_confidence = true;
  cam.n_pairs = 7;
  cam.inlier_count = 1234;
  cam.costs = {{"global", 0.125}, {"init", 3.5}};

  write_camera_model(dir.file("cam.json"), cam);
  const CameraModelFile read = read_camera_model(dir.file("cam.json"));
  CHECK(read.camera_id == "cam0");
  CHECK(read.model.coeffs() == cam.model.coeffs());
  CHECK(read.frame.width == 1024);
  CHECK(read.frame.principal_point.y() == 386.25);
  CHECK(read.low_confidence);
  CHECK(read.n_pairs == 7);
  CHECK(read.inlier_count == 1234);
  CHECK(read.costs.at("init") == 3.5);

  write_camera_model(dir.file("cam2.json"), read);
  CHECK(slurp(dir.file("cam.json")) == slurp(dir.file("cam2.json")));
}

TEST_CASE("camera model rejects broken files") {
  TempDir dir;
  std::ofstream(dir.file("x.json")) << "{ not json";
  CHECK_THROWS_AS(read_camera_model(dir.file("x.json")), DataError);
  std::ofstream(dir.file("y.json")) << "{\"camera_id\": \"c\"}";
  CHECK_THROWS_AS(read_camera_model(dir.file("y.json")), DataError);
  CHECK_THROWS_AS(read_camera_model(dir.file("missing.json")), DataError);
}

TEST_CASE("format_double survives a parse round trip") {
  for (double v : {0.0, 1.0, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.1, 724.0772122536838}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}
