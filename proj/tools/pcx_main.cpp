// SPDX-License-Identifier: Apache-2.0

// pcx — point-cloud scene expansion toolkit.
//
// Subcommands:
//   gen      generate procedural object assets into a bank directory
//   expand   insert bank objects into labeled scenes, emit bundles + manifest
//   stats    dataset statistics over a directory of scene bundles
//   eval     instance-segmentation AP/AP50/AP25 against ground-truth bundles
//   convert  import external dataset layouts (S3DIS rooms) into bundles
//
// Exit codes: 0 success, 2 configuration/spec error, 3 data/IO error,
// 4 evaluation-input error. Outputs are written temp-then-rename so a failed
// run never leaves partial files.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcx/expansion.hpp"
#include "pcx/io.hpp"
#include "pcx/metrics.hpp"
#include "pcx/rng.hpp"
#include "pcx/scene.hpp"
#include "pcx/synthesis.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitEvalInput = 4;

[[noreturn]] void die(int code, const std::string& message) {
  std::cerr << "pcx: error: " << message << "\n";
  std::exit(code);
}

unsigned default_workers() {
  if (const char* env = std::getenv("PCX_WORKERS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == nullptr || *end != '\0' || v == 0) {
      die(kExitConfig, std::string("PCX_WORKERS=\"") + env +
                           "\" is not a positive integer");
    }
    return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::string asset_file_name(const pcx::synth::GenerationRequest& req) {
  return req.object_class + "_" + req.spec.kind_name() + "_s" +
         std::to_string(req.spec.seed) + "_n" + std::to_string(req.spec.n_points) + ".ply";
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

struct GenArgs {
  std::string spec_file;
  std::string out_dir;
  std::string kind;
  std::uint64_t n_points = 0;
  std::uint64_t seed = 0;
  std::string object_class;
  std::string prompt;
  double radius = 1.0;
  std::vector<double> extents;
  double base_radius = 1.0;
  double amplitude = 0.25;
  double frequency = 2.0;
  std::uint64_t octaves = 3;
};

int run_gen(const GenArgs& args) {
  std::vector<pcx::synth::GenerationRequest> requests;
  try {
    if (!args.spec_file.empty()) {
      requests =
          pcx::synth::parse_generation_requests(pcx::io::read_file(args.spec_file));
    } else {
      pcx::synth::GenerationRequest req;
      req.spec.n_points = args.n_points;
      req.spec.seed = args.seed;
      if (args.kind == "sphere_surface") {
        req.spec.params = pcx::synth::SphereParams{args.radius};
      } else if (args.kind == "box_surface") {
        if (args.extents.size() != 3) {
          throw pcx::Error(pcx::ErrorCode::InvalidSpec,
                           "box_surface needs --extents x y z");
        }
        req.spec.params = pcx::synth::BoxParams{
            {args.extents[0], args.extents[1], args.extents[2]}};
      } else if (args.kind == "perlin_blob") {
        pcx::synth::PerlinBlobParams params;
        params.base_radius = args.base_radius;
        params.amplitude = args.amplitude;
        params.frequency = args.frequency;
        params.octaves = static_cast<int>(args.octaves);
        req.spec.params = params;
      } else if (args.kind == "ifs_fractal") {
        throw pcx::Error(pcx::ErrorCode::InvalidSpec,
                         "ifs_fractal maps are structured; use --spec <file>");
      } else {
        throw pcx::Error(pcx::ErrorCode::InvalidSpec,
                         "unknown generator kind \"" + args.kind + "\"");
      }
      req.object_class = args.object_class;
      req.prompt = args.prompt.empty() ? args.object_class : args.prompt;
      pcx::synth::validate_spec(req.spec);
      if (!pcx::is_valid_class_name(req.object_class)) {
        throw pcx::Error(pcx::ErrorCode::InvalidSpec,
                         "--class \"" + req.object_class + "\" is not a valid class name");
      }
      requests.push_back(std::move(req));
    }
  } catch (const pcx::Error& e) {
    die(kExitConfig, e.what());
  }

  try {
    std::error_code ec;
    fs::create_directories(args.out_dir, ec);
    if (ec) {
      throw pcx::Error(pcx::ErrorCode::IoFailure,
                       "cannot create " + args.out_dir + ": " + ec.message());
    }

    pcx::synth::BankIndex index;
    const fs::path index_path = fs::path(args.out_dir) / pcx::synth::kBankIndexName;
    if (fs::exists(index_path)) {
      index = pcx::synth::read_bank_index(pcx::io::read_file(index_path));
    }

    for (const auto& req : requests) {
      const pcx::ObjectAsset asset =
          pcx::synth::generate(req.spec, req.object_class, req.prompt);
      const std::string file = asset_file_name(req);
      pcx::io::write_ply_file(asset.cloud, pcx::io::PlyFormat::binary_little_endian,
                              fs::path(args.out_dir) / file);

      pcx::synth::BankIndexEntry entry{file,       asset.object_class,
                                       asset.provenance, asset.generator_name,
                                       asset.seed, asset.prompt};
      auto existing = std::find_if(index.entries.begin(), index.entries.end(),
                                   [&](const auto& e) { return e.file == file; });
      if (existing != index.entries.end()) {
        *existing = entry;
      } else {
        index.entries.push_back(entry);
      }
      std::cout << "wrote " << file << " (" << asset.cloud.size() << " points, class "
                << asset.object_class << ")\n";
    }
    std::sort(index.entries.begin(), index.entries.end(),
              [](const auto& a, const auto& b) { return a.file < b.file; });
    pcx::io::write_file_atomic(index_path, pcx::synth::write_bank_index(index));
  } catch (const pcx::Error& e) {
    die(kExitData, e.what());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// expand
// ---------------------------------------------------------------------------

struct ExpandArgs {
  std::string scenes_dir;
  std::string bank_dir;
  std::string config_file;
  std::string out_dir;
  std::string manifest_path;
  std::string dataset_id = "dataset";
  unsigned workers = 0;  // 0 = default
  bool strict_classes = false;
  std::optional<std::uint64_t> master_seed;
  std::optional<std::uint64_t> budget;
  std::optional<std::uint32_t> max_per_scene;
  std::optional<std::string> count_mode;
};

int run_expand(const ExpandArgs& args) {
  // phase 1: configuration
  pcx::expansion::ExpansionConfig config;
  try {
    if (!args.config_file.empty()) {
      config = pcx::expansion::config_from_json(pcx::io::read_file(args.config_file));
    }
    if (args.master_seed) config.master_seed = *args.master_seed;
    if (args.budget) config.budget = *args.budget;
    if (args.max_per_scene) config.max_per_scene = *args.max_per_scene;
    if (args.count_mode) {
      if (*args.count_mode == "per_scene_uniform") {
        config.count_mode = pcx::expansion::CountMode::per_scene_uniform;
      } else if (*args.count_mode == "exact_budget") {
        config.count_mode = pcx::expansion::CountMode::exact_budget;
      } else {
        throw pcx::Error(pcx::ErrorCode::InvalidConfig,
                         "--count-mode must be per_scene_uniform or exact_budget");
      }
    }
    pcx::expansion::validate_config(config);
  } catch (const pcx::Error& e) {
    die(kExitConfig, e.what());
  }

  // phase 2: inputs
  pcx::synth::ObjectBank bank;
  std::vector<fs::path> scene_dirs;
  try {
    bank = pcx::synth::load_bank(args.bank_dir);
    scene_dirs = pcx::io::list_bundle_dirs(args.scenes_dir);
  } catch (const pcx::Error& e) {
    die(kExitData, e.what());
  }

  if (config.vocabulary) {
    for (const pcx::ObjectAsset& asset : bank.assets) {
      pcx::SemanticClass cls = asset.object_class;
      if (const auto it = config.class_map.find(cls); it != config.class_map.end()) {
        cls = it->second;
      }
      if (config.vocabulary->count(cls) == 0) {
        if (args.strict_classes) {
          die(kExitConfig, "bank class \"" + cls + "\" is not in the dataset vocabulary");
        }
        std::cerr << "pcx: warning: bank class \"" << cls
                  << "\" is not in the dataset vocabulary\n";
      }
    }
  }

  // phase 3: plan, then fan scenes out to the worker pool
  std::vector<std::uint32_t> counts;
  try {
    pcx::Rng plan_rng = pcx::plan_substream(config.master_seed);
    counts = pcx::expansion::plan_counts(scene_dirs.size(), config, plan_rng);
    bool any = false;
    for (std::uint32_t c : counts) any |= c > 0;
    if (any && bank.empty()) {
      throw pcx::Error(pcx::ErrorCode::EmptyBank,
                       "expansion requires a non-empty object bank");
    }
    std::error_code ec;
    fs::create_directories(args.out_dir, ec);
    if (ec) {
      throw pcx::Error(pcx::ErrorCode::IoFailure,
                       "cannot create " + args.out_dir + ": " + ec.message());
    }
  } catch (const pcx::Error& e) {
    die(e.code() == pcx::ErrorCode::InfeasibleBudget ? kExitConfig : kExitData, e.what());
  }

  const std::size_t n = scene_dirs.size();
  std::vector<pcx::io::SceneExpansionRecord> records(n);
  std::vector<std::uint64_t> before_counts(n, 0);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex failure_mutex;
  std::string failure_message;

  auto work = [&]() {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        const pcx::LabeledScene scene = pcx::io::read_bundle(scene_dirs[i]);
        before_counts[i] = pcx::instance_count(scene);
        pcx::Rng rng = pcx::scene_substream(config.master_seed, scene.scene_id);
        auto [expanded, inserted] =
            pcx::expansion::expand_scene(scene, bank, counts[i], config, rng);
        pcx::io::write_bundle(expanded, fs::path(args.out_dir) / scene_dirs[i].filename());
        records[i] = {scene.scene_id, std::move(inserted)};
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failed.exchange(true)) {
          failure_message = "scene " + scene_dirs[i].string() + ": " + e.what();
        }
        return;
      }
    }
  };

  unsigned workers = args.workers == 0 ? default_workers() : args.workers;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (std::thread& t : pool) t.join();

  if (failed.load()) die(kExitData, failure_message);

  // phase 4: manifest (written last, after every bundle landed)
  try {
    std::set<std::string> ids;
    for (const auto& rec : records) {
      if (!ids.insert(rec.scene_id).second) {
        throw pcx::Error(pcx::ErrorCode::InvalidScene,
                         "duplicate scene_id \"" + rec.scene_id + "\" across bundles");
      }
    }
    std::uint64_t before = 0;
    for (std::uint64_t c : before_counts) before += c;

    const pcx::io::ExpansionManifest manifest = pcx::expansion::assemble_manifest(
        args.dataset_id, config, std::move(records), before);
    const fs::path manifest_path = args.manifest_path.empty()
                                       ? fs::path(args.out_dir) / "manifest.json"
                                       : fs::path(args.manifest_path);
    pcx::io::write_manifest_file(manifest, manifest_path);

    std::printf("scenes=%llu before=%llu after=%llu added=%llu\n",
                static_cast<unsigned long long>(manifest.totals.scenes),
                static_cast<unsigned long long>(manifest.totals.instances_before),
                static_cast<unsigned long long>(manifest.totals.instances_after),
                static_cast<unsigned long long>(manifest.totals.instances_added));
  } catch (const pcx::Error& e) {
    die(kExitData, e.what());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

int run_stats(const std::string& scenes_dir, const std::string& json_path) {
  try {
    std::vector<pcx::LabeledScene> scenes;
    for (const fs::path& dir : pcx::io::list_bundle_dirs(scenes_dir)) {
      scenes.push_back(pcx::io::read_bundle(dir));
    }
    const pcx::expansion::DatasetStats stats = pcx::expansion::dataset_stats(scenes);

    std::printf("scenes: %zu\n", stats.scenes);
    std::printf("instances: %zu\n", stats.total_instances);
    std::printf("per_scene: min=%zu mean=%.2f max=%zu\n", stats.min_instances,
                stats.mean_instances, stats.max_instances);
    std::printf("class counts:\n");
    for (const auto& [cls, count] : stats.per_class) {
      std::printf("  %-16s %zu\n", cls.c_str(), count);
    }

    if (!json_path.empty()) {
      nlohmann::ordered_json j;
      j["scenes"] = stats.scenes;
      j["total_instances"] = stats.total_instances;
      j["per_scene"] = {{"min", stats.min_instances},
                        {"mean", stats.mean_instances},
                        {"max", stats.max_instances}};
      nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
      for (const auto& [cls, count] : stats.per_class) per_class[cls] = count;
      j["per_class"] = std::move(per_class);
      pcx::io::write_file_atomic(json_path, j.dump(2) + "\n");
    }
  } catch (const pcx::Error& e) {
    die(kExitData, e.what());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int run_eval(const std::string& gt_dir, const std::string& pred_file,
             const std::string& report_path) {
  std::vector<pcx::LabeledScene> scenes;
  try {
    for (const fs::path& dir : pcx::io::list_bundle_dirs(gt_dir)) {
      scenes.push_back(pcx::io::read_bundle(dir));
    }
  } catch (const pcx::Error& e) {
    die(kExitData, e.what());
  }

  pcx::metrics::MetricsReport report;
  try {
    const std::vector<pcx::metrics::PredictedInstance> preds =
        pcx::metrics::read_predictions(pcx::io::read_file(pred_file));
    report = pcx::metrics::evaluate(preds, scenes);
  } catch (const pcx::Error& e) {
    die(kExitEvalInput, e.what());
  }

  for (const pcx::SemanticClass& cls : report.excluded_classes) {
    std::cerr << "pcx: warning: class \"" << cls
              << "\" has no ground truth; excluded from means\n";
  }

  try {
    if (!report_path.empty()) {
      pcx::io::write_file_atomic(report_path, pcx::metrics::write_report(report));
    }
  } catch (const pcx::Error& e) {
    die(kExitData, e.what());
  }

  std::printf("AP=%.4f AP50=%.4f AP25=%.4f\n", report.map_50_95, report.ap50, report.ap25);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// convert
// ---------------------------------------------------------------------------

int run_convert(const std::string& from, const std::string& in_dir,
                const std::string& out_dir, std::string scene_id) {
  if (from != "s3dis") {
    die(kExitConfig, "--from supports only \"s3dis\"");
  }
  try {
    if (scene_id.empty()) {
      fs::path p = fs::path(in_dir);
      scene_id = p.filename().string();
      if (scene_id.empty() || scene_id == "Annotations") {
        scene_id = p.parent_path().filename().string();
      }
      if (scene_id.empty()) scene_id = "room";
    }
    const pcx::LabeledScene scene = pcx::io::import_s3dis_room(in_dir, scene_id);
    pcx::io::write_bundle(scene, out_dir);
    std::printf("wrote bundle %s (%zu points, %zu instances)\n", out_dir.c_str(),
                scene.cloud.size(), scene.classes.size());
  } catch (const pcx::Error& e) {
    die(kExitData, e.what());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pcx — point-cloud scene expansion toolkit"};
  app.require_subcommand(1);

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "generate object assets into a bank");
  gen->add_option("--spec", gen_args.spec_file, "JSON file with generation requests");
  gen->add_option("--kind", gen_args.kind,
                  "generator kind (sphere_surface, box_surface, perlin_blob)");
  gen->add_option("--n", gen_args.n_points, "number of points");
  gen->add_option("--seed", gen_args.seed, "generator seed");
  gen->add_option("--class", gen_args.object_class, "semantic class of the asset");
  gen->add_option("--prompt", gen_args.prompt, "single-word prompt (defaults to class)");
  gen->add_option("--radius", gen_args.radius, "sphere radius");
  gen->add_option("--extents", gen_args.extents, "box extents x y z")->expected(3);
  gen->add_option("--base-radius", gen_args.base_radius, "perlin blob base radius");
  gen->add_option("--amplitude", gen_args.amplitude, "perlin displacement amplitude");
  gen->add_option("--frequency", gen_args.frequency, "perlin frequency");
  gen->add_option("--octaves", gen_args.octaves, "perlin octave count");
  gen->add_option("--out", gen_args.out_dir, "bank output directory")->required();

  ExpandArgs expand_args;
  std::uint64_t opt_master_seed = 0;
  std::uint64_t opt_budget = 0;
  std::uint32_t opt_max_per_scene = 0;
  std::string opt_count_mode;
  CLI::App* expand = app.add_subcommand("expand", "insert objects into labeled scenes");
  expand->add_option("--scenes", expand_args.scenes_dir, "directory of scene bundles")
      ->required();
  expand->add_option("--bank", expand_args.bank_dir, "object bank directory")->required();
  expand->add_option("--config", expand_args.config_file, "expansion config JSON");
  expand->add_option("--out", expand_args.out_dir, "output directory")->required();
  expand->add_option("--manifest", expand_args.manifest_path,
                     "manifest path (default <out>/manifest.json)");
  expand->add_option("--dataset-id", expand_args.dataset_id, "manifest dataset id");
  expand->add_option("--workers", expand_args.workers,
                     "worker count (default PCX_WORKERS or cores)");
  auto* opt_seed_flag = expand->add_option("--master-seed", opt_master_seed,
                                           "override config master seed");
  auto* opt_budget_flag = expand->add_option("--budget", opt_budget,
                                             "override exact_budget total");
  auto* opt_max_flag = expand->add_option("--max-per-scene", opt_max_per_scene,
                                          "override per-scene insertion cap");
  auto* opt_mode_flag = expand->add_option("--count-mode", opt_count_mode,
                                           "per_scene_uniform or exact_budget");
  expand->add_flag("--strict-classes", expand_args.strict_classes,
                   "fail when a bank class is outside the vocabulary");

  std::string stats_scenes, stats_json;
  CLI::App* stats = app.add_subcommand("stats", "dataset statistics");
  stats->add_option("--scenes", stats_scenes, "directory of scene bundles")->required();
  stats->add_option("--json", stats_json, "also write the report as JSON");

  std::string eval_gt, eval_pred, eval_report;
  CLI::App* eval = app.add_subcommand("eval", "evaluate instance segmentation");
  eval->add_option("--gt", eval_gt, "directory of ground-truth bundles")->required();
  eval->add_option("--pred", eval_pred, "predictions JSON file")->required();
  eval->add_option("--report", eval_report, "metrics report output path");

  std::string conv_from = "s3dis", conv_in, conv_out, conv_scene_id;
  CLI::App* convert = app.add_subcommand("convert", "import external dataset layouts");
  convert->add_option("--from", conv_from, "source layout (s3dis)");
  convert->add_option("--in", conv_in, "input room directory")->required();
  convert->add_option("--out", conv_out, "output bundle directory")->required();
  convert->add_option("--scene-id", conv_scene_id, "scene id (default from path)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  if (gen->parsed()) return run_gen(gen_args);
  if (expand->parsed()) {
    if (opt_seed_flag->count() > 0) expand_args.master_seed = opt_master_seed;
    if (opt_budget_flag->count() > 0) expand_args.budget = opt_budget;
    if (opt_max_flag->count() > 0) expand_args.max_per_scene = opt_max_per_scene;
    if (opt_mode_flag->count() > 0) expand_args.count_mode = opt_count_mode;
    return run_expand(expand_args);
  }
  if (stats->parsed()) return run_stats(stats_scenes, stats_json);
  if (eval->parsed()) return run_eval(eval_gt, eval_pred, eval_report);
  if (convert->parsed()) return run_convert(conv_from, conv_in, conv_out, conv_scene_id);
  return kExitConfig;
}
