// trove: command-line front end for the scene compiler.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <json.hpp>

#include "fixture.hpp"
#include "trove/nuscenes.hpp"
#include "trove/pipeline.hpp"
#include "trove/raster_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kInputError = 3, kStageFailure = 4 };

int exit_code_for(trove::Errc code) {
  using trove::Errc;
  switch (code) {
    case Errc::ConfigError: return kConfigError;
    case Errc::MissingFile:
    case Errc::SchemaViolation:
    case Errc::EmptyScene:
    case Errc::XmlMalformed:
    case Errc::UnresolvedNodeRef:
    case Errc::TruncatedRecord:
    case Errc::NonFinitePoint:
    case Errc::SchemaVersionMismatch:
    case Errc::CorruptStream:
    case Errc::OsmUnavailable:
    case Errc::MeshLoadFailure: return kInputError;
    default: return kStageFailure;
  }
}

trove::ClassTaxonomy load_taxonomy(const trove::PipelineConfig& cfg) {
  trove::ClassTaxonomy tax;
  if (cfg.remap13) tax.load_remap13(trove::read_text_file(cfg.resolve(*cfg.remap13)));
  return tax;
}

trove::PipelineConfig load_config(const std::string& path, int jobs) {
  trove::PipelineConfig cfg = trove::load_pipeline_config(path);
  if (jobs > 0) cfg.jobs = jobs;
  return cfg;
}

void print_warnings(const trove::Warnings& ws) {
  for (const auto& w : ws) trove::log_warning(w);
}

int cmd_ingest(const std::string& config, const std::string& scene) {
  const auto cfg = load_config(config, 0);
  const auto rec = trove::parse_scene_record(cfg.resolve(cfg.dataset_root), scene);
  print_warnings(rec.warnings);
  std::size_t points = 0;
  for (const auto& s : rec.sweeps) points += s.points.size();
  json j = {{"scene_id", rec.scene_id},   {"ego_poses", rec.ego_poses.size()},
            {"cameras", rec.cameras.size()}, {"objects", rec.objects.size()},
            {"sweeps", rec.sweeps.size()}, {"lidar_points", points},
            {"osm", rec.osm_file ? json(*rec.osm_file) : json(nullptr)}};
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_build_scene(const std::string& config, const std::string& scene, const std::string& out) {
  const auto cfg = load_config(config, 0);
  const auto tax = load_taxonomy(cfg);
  const auto catalog = trove::load_catalog(cfg.resolve(cfg.catalog));
  const auto built = trove::build_scene(cfg, scene, catalog, tax);
  print_warnings(built.warnings);
  const fs::path dir = out.empty() ? cfg.resolve(cfg.output) / scene : fs::path(out);
  fs::create_directories(dir);
  for (const auto& f : trove::write_scene_files(built, catalog, dir)) std::cout << (dir / f).string() << "\n";
  return kOk;
}

int cmd_annotate(const std::string& config, const std::string& scene_file, const std::string& out) {
  const auto cfg = load_config(config, 0);
  const auto tax = load_taxonomy(cfg);
  const auto catalog = trove::load_catalog(cfg.resolve(cfg.catalog));
  const auto graph = trove::deserialize_scene(trove::read_text_file(scene_file));
  const fs::path dir = out.empty() ? fs::path(scene_file).parent_path() : fs::path(out);
  fs::create_directories(dir);
  const auto result = trove::annotate_scene(graph, catalog, tax, cfg, dir);
  std::cerr << "annotated " << graph.cameras.size() << " cameras, kept " << result.curation.kept_count() << "\n";
  return kOk;
}

int cmd_color_transfer(const std::string& input, const std::string& target, const std::string& stats,
                       double alpha, const std::string& out, const std::string& stats_out) {
  if (target.empty() == stats.empty()) throw trove::Error(trove::Errc::ConfigError, "give exactly one of --target or --stats");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw trove::Error(trove::Errc::ConfigError, "--alpha must lie in [0, 1]");
  const trove::LabStats target_stats = target.empty() ? trove::parse_lab_stats(trove::read_text_file(stats))
                                                      : trove::lab_stats(trove::read_rgb_png(target));
  if (!stats_out.empty()) trove::write_text_file(stats_out, trove::lab_stats_json(target_stats));
  if (!input.empty()) {
    const auto src = trove::read_rgb_png(input);
    trove::write_rgb_png(out, trove::quantize(trove::color_transfer(src, target_stats, alpha)));
  }
  return kOk;
}

int cmd_curate(const std::vector<std::string>& rasters, const trove::CurationConfig& ccfg, const std::string& out) {
  std::vector<trove::SampleReport> samples;
  for (const auto& r : rasters) {
    const auto img = trove::decode_png(trove::read_binary_file(r));
    if (img.channels != 1 || img.bit_depth != 8) {
      throw trove::Error(trove::Errc::SchemaViolation, r + ": expected an 8-bit single-channel class raster");
    }
    std::vector<std::uint8_t> ids(img.samples.begin(), img.samples.end());
    samples.push_back(trove::evaluate_sample(r, trove::class_histogram(ids), ccfg));
  }
  const auto report = trove::curate_histograms(std::move(samples), ccfg);
  if (out.empty()) {
    std::cout << trove::curation_csv(report);
  } else {
    fs::create_directories(out);
    trove::write_text_file(fs::path(out) / "curation.csv", trove::curation_csv(report));
    trove::write_text_file(fs::path(out) / "curation.json", trove::curation_json(report));
  }
  return kOk;
}

int cmd_stats(const std::vector<std::string>& manifests, bool csv) {
  std::vector<trove::RunManifest> ms;
  for (const auto& m : manifests) ms.push_back(trove::parse_manifest(trove::read_text_file(m)));
  std::cout << trove::stats_report(ms, csv);
  return kOk;
}

int cmd_run(const std::string& config, int jobs) {
  const auto cfg = load_config(config, jobs);
  const auto manifest = trove::run_pipeline(cfg);
  std::size_t images = 0;
  for (const auto& s : manifest.scenes) images += s.images;
  std::cerr << "run complete: " << manifest.scenes.size() << " scenes, " << images << " images, config "
            << manifest.config_hash << "\n";
  std::cout << (cfg.resolve(cfg.output) / "manifest.json").string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trove: compile driving logs and map data into annotated synthetic scenes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(trove::kToolVersion));

  std::string config, scene, out, scene_file;
  int jobs = 0;

  auto* ingest = app.add_subcommand("ingest", "Parse and validate one scene record");
  ingest->add_option("-c,--config", config, "Pipeline config")->required();
  ingest->add_option("-s,--scene", scene, "Scene id")->required();

  auto* build = app.add_subcommand("build-scene", "Build the scene file for one scene");
  build->add_option("-c,--config", config, "Pipeline config")->required();
  build->add_option("-s,--scene", scene, "Scene id")->required();
  build->add_option("-o,--out", out, "Output directory (default <output>/<scene>)");

  auto* annotate = app.add_subcommand("annotate", "Rasterize annotations for a scene file");
  annotate->add_option("-c,--config", config, "Pipeline config")->required();
  annotate->add_option("-f,--scene-file", scene_file, "scene_graph.json")->required()->check(CLI::ExistingFile);
  annotate->add_option("-o,--out", out, "Output directory (default: next to the scene file)");

  std::string input, target, stats_file, stats_out;
  double alpha = trove::kDefaultTransferAlpha;
  auto* ct = app.add_subcommand("color-transfer", "Lab mean/variance transfer onto an RGB image");
  ct->add_option("-i,--input", input, "Source RGB PNG");
  ct->add_option("-t,--target", target, "Target RGB PNG");
  ct->add_option("--stats", stats_file, "Stored target LabStats JSON");
  ct->add_option("-a,--alpha", alpha, "Blend factor in [0, 1]");
  ct->add_option("-o,--out", out, "Output PNG");
  ct->add_option("--write-stats", stats_out, "Also store the target LabStats JSON here");

  std::vector<std::string> rasters;
  trove::CurationConfig ccfg;
  auto* curate = app.add_subcommand("curate", "Class-distribution curation over 13-class rasters");
  curate->add_option("rasters", rasters, "8-bit 13-class semantic PNGs")->required()->check(CLI::ExistingFile);
  curate->add_option("--min-classes", ccfg.min_classes, "Present classes required to keep a sample");
  curate->add_option("--pixel-floor", ccfg.pixel_floor, "Pixel fraction for a class to count as present");
  curate->add_flag("--count-void", ccfg.count_void, "Count void toward the distinct classes");
  curate->add_option("-o,--out", out, "Directory for curation.csv and curation.json (default: CSV to stdout)");

  std::vector<std::string> manifests;
  bool csv = false;
  auto* stats = app.add_subcommand("stats", "Summarize run manifests");
  stats->add_option("manifests", manifests, "manifest.json files")->required()->check(CLI::ExistingFile);
  stats->add_flag("--csv", csv, "CSV instead of text");

  auto* run = app.add_subcommand("run", "Run every stage for every configured scene");
  run->add_option("-c,--config", config, "Pipeline config")->required();
  run->add_option("-j,--jobs", jobs, "Scenes in flight (overrides the config)")->check(CLI::PositiveNumber);

  std::string dataroot;
  trove::NuScenesOptions nus;
  std::string nus_osm;
  auto* nu = app.add_subcommand("import-nuscenes", "Convert a nuScenes scene into a TRoVE-IN record");
  nu->add_option("--dataroot", dataroot, "nuScenes root")->required();
  nu->add_option("-s,--scene", scene, "Scene name, e.g. scene-0061")->required();
  nu->add_option("-o,--out", out, "Dataset root to write into")->required();
  nu->add_option("--version-dir", nus.version, "Table directory under the root");
  nu->add_option("--keyframe", nus.keyframe, "Keyframe whose annotations become the objects");
  nu->add_flag("!--no-lidar", nus.convert_lidar, "Skip LiDAR conversion");
  nu->add_option("--osm", nus_osm, "OSM file to reference from the record");

  trove::fixture::Options fopt;
  auto* fix = app.add_subcommand("make-fixture", "Write the synthetic fixture dataset");
  fix->add_option("-o,--out", out, "Directory")->required();
  fix->add_option("--seed", fopt.pipeline_seed, "Seed written into the config");
  fix->add_option("--cameras", fopt.cameras_per_scene, "cameras_per_scene written into the config");
  fix->add_option("--width", fopt.width, "Image width");
  fix->add_option("--height", fopt.height, "Image height");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*ingest) return cmd_ingest(config, scene);
    if (*build) return cmd_build_scene(config, scene, out);
    if (*annotate) return cmd_annotate(config, scene_file, out);
    if (*ct) {
      if (!input.empty() && out.empty()) throw trove::Error(trove::Errc::ConfigError, "--out is required with --input");
      return cmd_color_transfer(input, target, stats_file, alpha, out, stats_out);
    }
    if (*curate) return cmd_curate(rasters, ccfg, out);
    if (*stats) return cmd_stats(manifests, csv);
    if (*run) return cmd_run(config, jobs);
    if (*nu) {
      if (!nus_osm.empty()) nus.osm_file = nus_osm;
      const auto rec = trove::convert_nuscenes_scene(dataroot, scene, out, nus);
      print_warnings(rec.warnings);
      std::cout << (fs::path(out) / rec.scene_id / "scene.json").string() << "\n";
      return kOk;
    }
    if (*fix) {
      const auto paths = trove::fixture::write_fixture(out, fopt);
      std::cout << paths.config.string() << "\n";
      return kOk;
    }
  } catch (const trove::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStageFailure;
  }
  return kOk;
}
