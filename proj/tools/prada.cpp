#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "prada/image.hpp"
#include "prada/io.hpp"
#include "prada/metrics.hpp"
#include "prada/pipeline.hpp"
#include "prada/synth.hpp"

namespace fs = std::filesystem;
using namespace prada;

namespace {

int cmd_calibrate(const std::string& matches_path, const PipelineConfig& cfg,
                  const std::string& out_dir) {
  const MatchFile matches = read_match_file(matches_path);
  const PipelineResult result = calibrate(matches, cfg);
  fs::create_directories(out_dir);
  for (const auto& [id, cam] : result.cameras)
    write_camera_model((fs::path(out_dir) / ("camera_" + id + ".json")).string(),
                       cam.to_file(result.stage_costs));
  write_report((fs::path(out_dir) / "report.csv").string(), result);
  for (const auto& [id, cam] : result.cameras)
    if (cam.low_confidence)
      std::cerr << "warning: camera '" << id
                << "' is low confidence (near-degenerate motion dominates its pairs)\n";
  std::cout << "calibrated " << result.cameras.size() << " camera(s), "
            << result.pairs.size() << " pair(s); outputs in " << out_dir << "\n";
  return 0;
}

int cmd_synth(const SceneConfig& scene, int n_cameras, const std::string& out_dir) {
  SceneConfig cfg = scene;
  if (n_cameras > 1) {
    cfg.camera_of_image.resize(cfg.n_images);
    for (int i = 0; i < cfg.n_images; ++i)
      cfg.camera_of_image[i] = "cam" + std::to_string(i % n_cameras);
  }
  auto [sets, gt] = generate(cfg);

  fs::create_directories(out_dir);
  MatchFile mf;
  for (int i = 0; i < cfg.n_images; ++i) {
    MatchFileImage img;
    img.image_id = "img" + std::to_string(i);
    img.camera_id = cfg.camera_of_image.empty() ? "cam0" : cfg.camera_of_image[i];
    img.frame = gt.frames.at(img.camera_id);
    mf.images.push_back(std::move(img));
  }
  mf.pairs = std::move(sets);
  write_match_file((fs::path(out_dir) / "matches.txt").string(), mf);

  for (const auto& [id, model] : gt.models) {
    CameraModelFile cam;
    cam.camera_id = id;
    cam.model = model;
    cam.frame = gt.frames.at(id);
    cam.stage = "ground_truth";
    write_camera_model((fs::path(out_dir) / ("gt_camera_" + id + ".json")).string(), cam);
  }
  std::cout << "wrote " << mf.pairs.size() << " pair(s) for " << gt.models.size()
            << " camera(s) in " << out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& est_path, const std::string& gt_path,
             const std::string& out_path, bool dense) {
  const CameraModelFile est = read_camera_model(est_path);
  const CameraModelFile gt = read_camera_model(gt_path);
  if (est.frame.width != gt.frame.width || est.frame.height != gt.frame.height)
    throw DataError("eval: frame sizes differ between estimate and ground truth");

  ReprojOptions opts;
  opts.dense = dense;
  const ReprojResult re = reprojection_error(est.camera(), gt.camera(), 1.0, opts);
  double best_focal = 1.0;
  const ReprojResult fare = focal_adjusted_re(est.camera(), gt.camera(), opts, &best_focal);
  const double aligned_focal = align_focal_small_angle(est.model, est.frame);

  std::ostringstream csv;
  csv << "metric,value\n";
  csv << "re_px," << format_double(re.mean_px) << "\n";
  csv << "fare_px," << format_double(fare.mean_px) << "\n";
  csv << "best_focal_scale," << format_double(best_focal) << "\n";
  csv << "aligned_focal_px," << format_double(aligned_focal) << "\n";
  csv << "skipped_fraction," << format_double(fare.skipped_fraction) << "\n";
  if (out_path.empty() || out_path == "-") {
    std::cout << csv.str();
  } else {
    std::ofstream os(out_path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + out_path);
    os << csv.str();
  }
  if (fare.skip_warning)
    std::cerr << "warning: more than 10% of grid pixels were outside the usable field of view\n";
  return 0;
}

int cmd_undistort(const std::string& model_path, const std::string& image_path,
                  const std::string& grid_path, const std::string& out_dir) {
  const CameraModelFile cam = read_camera_model(model_path);
  fs::create_directories(out_dir);
  const double focal = align_focal_small_angle(cam.model, cam.frame);
  const auto map = undistort_map(cam.model, cam.frame, focal);

  if (!grid_path.empty()) {
    std::ofstream os(grid_path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + grid_path);
    os << "x,y,src_x,src_y\n";
    for (int y = 0; y < cam.frame.height; ++y)
      for (int x = 0; x < cam.frame.width; ++x) {
        const Vec2& s = map[size_t(y) * cam.frame.width + x];
        os << x << "," << y << "," << format_double(s.x()) << "," << format_double(s.y())
           << "\n";
      }
  }
  if (!image_path.empty()) {
    const Image src = read_pnm(image_path);
    if (src.width != cam.frame.width || src.height != cam.frame.height)
      throw DataError("undistort: image size does not match the camera frame");
    const Image out = remap(src, map, cam.frame.width, cam.frame.height);
    const std::string name = fs::path(image_path).stem().string() + "_undistorted." +
                             (out.channels == 3 ? "ppm" : "pgm");
    write_pnm((fs::path(out_dir) / name).string(), out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radial distortion calibration from pairwise 2D correspondences"};
  app.require_subcommand(1);

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Estimate per-camera distortion from a match file");
  std::string matches_path, out_dir = "prada_out";
  PipelineConfig pcfg;
  cal->add_option("matches", matches_path, "MatchFile path")->required();
  cal->add_option("--degree", pcfg.degree, "Polynomial degree of h")->check(CLI::Range(2, 16));
  cal->add_option("--threshold-px", pcfg.threshold_px, "Inlier threshold in pixels")
      ->check(CLI::PositiveNumber);
  cal->add_option("--reg-weight", pcfg.reg_weight, "Regularization weight per inlier")
      ->check(CLI::NonNegativeNumber);
  cal->add_option("--seed", pcfg.seed, "RNG seed");
  cal->add_option("--jobs", pcfg.jobs, "Worker threads (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
  cal->add_flag("--optimize-centers", pcfg.optimize_centers, "Also optimize principal points");
  cal->add_option("--outer-rounds", pcfg.outer_rounds, "Global refinement outer rounds")
      ->check(CLI::PositiveNumber);
  cal->add_option("--out-dir", out_dir, "Output directory");

  // synth
  auto* syn = app.add_subcommand("synth", "Generate a synthetic scene and its ground truth");
  SceneConfig scfg;
  int n_cameras = 1;
  std::string synth_out = "prada_synth";
  std::vector<double> gt_free;
  std::string motion = "orbit";
  syn->add_option("--n-images", scfg.n_images)->check(CLI::Range(2, 1000));
  syn->add_option("--width", scfg.width)->check(CLI::PositiveNumber);
  syn->add_option("--height", scfg.height)->check(CLI::PositiveNumber);
  syn->add_option("--n-points", scfg.n_points_per_pair)->check(CLI::PositiveNumber);
  syn->add_option("--noise", scfg.noise_sigma, "Pixel noise sigma")
      ->check(CLI::NonNegativeNumber);
  syn->add_option("--outliers", scfg.outlier_fraction, "Outlier fraction")
      ->check(CLI::Range(0.0, 0.95));
  syn->add_option("--seed", scfg.rng_seed, "RNG seed");
  syn->add_option("--cameras", n_cameras, "Number of cameras (round-robin over images)")
      ->check(CLI::PositiveNumber);
  syn->add_option("--motion", motion, "orbit or forward")
      ->check(CLI::IsMember({"orbit", "forward"}));
  syn->add_option("--gt-coeffs", gt_free,
                  "Ground-truth coefficients theta_2.. (shared by all cameras)");
  syn->add_option("--out-dir", synth_out, "Output directory");

  // eval
  auto* ev = app.add_subcommand("eval", "Compare an estimated model against ground truth");
  std::string est_path, gt_path, eval_out = "-";
  bool dense = false;
  ev->add_option("--est", est_path, "Estimated CameraModelFile")->required();
  ev->add_option("--gt", gt_path, "Ground-truth CameraModelFile")->required();
  ev->add_option("--out", eval_out, "Output CSV path ('-' for stdout)");
  ev->add_flag("--dense", dense, "Evaluate every pixel instead of a 64x64 grid");

  // undistort
  auto* und = app.add_subcommand("undistort", "Remap grid and/or undistorted image");
  std::string model_path, image_path, grid_path, und_out = "prada_out";
  und->add_option("--model", model_path, "CameraModelFile")->required();
  und->add_option("--image", image_path, "Input PPM (P6) or PGM (P5) image");
  und->add_option("--grid", grid_path, "Write the per-pixel remap grid CSV here");
  und->add_option("--out-dir", und_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (cal->parsed()) return cmd_calibrate(matches_path, pcfg, out_dir);
    if (syn->parsed()) {
      if (motion == "forward") scfg.motion = SceneConfig::Motion::forward;
      if (!gt_free.empty()) {
        std::vector<double> coeffs{1.0, 0.0};
        coeffs.insert(coeffs.end(), gt_free.begin(), gt_free.end());
        scfg.gt_models["shared"] = DivisionModel(coeffs);
        for (int c = 0; c < n_cameras; ++c)
          scfg.gt_models["cam" + std::to_string(c)] = scfg.gt_models["shared"];
        scfg.gt_models.erase("shared");
      }
      return cmd_synth(scfg, n_cameras, synth_out);
    }
    if (ev->parsed()) return cmd_eval(est_path, gt_path, eval_out, dense);
    if (und->parsed()) {
      if (image_path.empty() && grid_path.empty()) {
        std::cerr << "undistort: need --image and/or --grid\n";
        return 1;
      }
      return cmd_undistort(model_path, image_path, grid_path, und_out);
    }
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
