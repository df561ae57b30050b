// SPDX-License-Identifier: Apache-2.0

#include "pcx/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "json_util.hpp"

namespace pcx::expansion {

using jsonu::Json;

void validate_config(const ExpansionConfig& config) {
  for (double eta : config.noise_fraction) {
    if (!(eta >= 0.0 && eta <= 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "noise_fraction values must lie in [0,1]");
    }
  }
  if (config.sizing.mode == SizingPolicy::Mode::table) {
    for (const auto& [cls, target] : config.sizing.table) {
      if (!(target > 0.0)) {
        throw Error(ErrorCode::InvalidConfig,
                    "sizing target for \"" + cls + "\" must be > 0");
      }
    }
  }
  if (config.vocabulary) {
    for (const SemanticClass& cls : *config.vocabulary) {
      if (!is_valid_class_name(cls)) {
        throw Error(ErrorCode::InvalidConfig,
                    "vocabulary entry \"" + cls + "\" is not a valid class name");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Configuration file
// ---------------------------------------------------------------------------

ExpansionConfig config_from_json(const std::string& json_bytes) {
  const Json j = jsonu::parse(json_bytes, "expansion config");
  jsonu::reject_unknown_keys(j, "/",
                             {"max_per_scene", "count_mode", "budget", "noise_mode",
                              "noise_fraction", "yaw_augmentation", "sizing", "master_seed",
                              "class_map", "vocabulary"});

  ExpansionConfig config;
  if (j.contains("max_per_scene")) {
    const std::uint64_t v = jsonu::get_u64(j["max_per_scene"], "/max_per_scene");
    if (v > UINT32_MAX) jsonu::fail("/max_per_scene", "value out of range");
    config.max_per_scene = static_cast<std::uint32_t>(v);
  }
  if (j.contains("count_mode")) {
    const std::string mode = jsonu::get_string(j["count_mode"], "/count_mode");
    if (mode == "per_scene_uniform") {
      config.count_mode = CountMode::per_scene_uniform;
    } else if (mode == "exact_budget") {
      config.count_mode = CountMode::exact_budget;
    } else {
      jsonu::fail("/count_mode", "expected \"per_scene_uniform\" or \"exact_budget\"");
    }
  }
  if (j.contains("budget")) config.budget = jsonu::get_u64(j["budget"], "/budget");
  if (j.contains("noise_mode")) {
    // the single supported distribution; the key exists so configs say it out loud
    if (jsonu::get_string(j["noise_mode"], "/noise_mode") != "uniform_fraction") {
      jsonu::fail("/noise_mode", "only \"uniform_fraction\" is supported");
    }
  }
  if (j.contains("noise_fraction")) {
    const Json& nf = j["noise_fraction"];
    jsonu::require_array(nf, "/noise_fraction");
    if (nf.size() != 3) jsonu::fail("/noise_fraction", "expected [eta_x, eta_y, eta_z]");
    for (std::size_t i = 0; i < 3; ++i) {
      config.noise_fraction[i] =
          jsonu::get_finite_double(nf[i], "/noise_fraction/" + std::to_string(i));
    }
  }
  if (j.contains("yaw_augmentation")) {
    config.yaw_augmentation = jsonu::get_bool(j["yaw_augmentation"], "/yaw_augmentation");
  }
  if (j.contains("sizing")) {
    const Json& s = j["sizing"];
    if (s.is_string()) {
      const std::string mode = s.get<std::string>();
      if (mode == "off") {
        config.sizing.mode = SizingPolicy::Mode::off;
      } else if (mode == "default") {
        config.sizing.mode = SizingPolicy::Mode::generated_default;
      } else {
        jsonu::fail("/sizing", "expected \"off\", \"default\", or a class->meters table");
      }
    } else if (s.is_object()) {
      config.sizing.mode = SizingPolicy::Mode::table;
      for (auto it = s.begin(); it != s.end(); ++it) {
        config.sizing.table[it.key()] =
            jsonu::get_finite_double(it.value(), "/sizing/" + it.key());
      }
    } else {
      jsonu::fail("/sizing", "expected \"off\", \"default\", or a class->meters table");
    }
  }
  if (j.contains("master_seed")) {
    config.master_seed = jsonu::get_u64(j["master_seed"], "/master_seed");
  }
  if (j.contains("class_map")) {
    const Json& cm = j["class_map"];
    jsonu::require_object(cm, "/class_map");
    for (auto it = cm.begin(); it != cm.end(); ++it) {
      config.class_map[it.key()] = jsonu::get_string(it.value(), "/class_map/" + it.key());
    }
  }
  if (j.contains("vocabulary")) {
    const Json& vocab = j["vocabulary"];
    jsonu::require_array(vocab, "/vocabulary");
    config.vocabulary.emplace();
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      config.vocabulary->insert(
          jsonu::get_string(vocab[i], "/vocabulary/" + std::to_string(i)));
    }
  }
  validate_config(config);
  return config;
}

std::string config_to_json(const ExpansionConfig& config) {
  Json j;
  j["max_per_scene"] = config.max_per_scene;
  j["count_mode"] = config.count_mode == CountMode::exact_budget ? "exact_budget"
                                                                 : "per_scene_uniform";
  j["budget"] = config.budget;
  j["noise_mode"] = "uniform_fraction";
  j["noise_fraction"] = config.noise_fraction;
  j["yaw_augmentation"] = config.yaw_augmentation;
  switch (config.sizing.mode) {
    case SizingPolicy::Mode::off: j["sizing"] = "off"; break;
    case SizingPolicy::Mode::generated_default: j["sizing"] = "default"; break;
    case SizingPolicy::Mode::table: {
      Json table = Json::object();
      for (const auto& [cls, target] : config.sizing.table) table[cls] = target;
      j["sizing"] = std::move(table);
      break;
    }
  }
  j["master_seed"] = config.master_seed;
  Json cm = Json::object();
  for (const auto& [word, cls] : config.class_map) cm[word] = cls;
  j["class_map"] = std::move(cm);
  if (config.vocabulary) {
    j["vocabulary"] = std::vector<SemanticClass>(config.vocabulary->begin(),
                                                 config.vocabulary->end());
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------------

std::vector<std::uint32_t> plan_counts(std::size_t n_scenes, const ExpansionConfig& config,
                                       Rng& rng) {
  validate_config(config);
  std::vector<std::uint32_t> counts(n_scenes, 0);

  if (config.count_mode == CountMode::per_scene_uniform) {
    if (config.max_per_scene == 0) return counts;
    for (std::uint32_t& c : counts) {
      c = 1 + static_cast<std::uint32_t>(rng.uniform_index(config.max_per_scene));
    }
    return counts;
  }

  // exact_budget: pick `budget` of the n * max unit slots without replacement;
  // a scene's count is the number of its slots picked, so the cap holds and
  // the sum is exactly the budget.
  const std::uint64_t slots =
      static_cast<std::uint64_t>(n_scenes) * config.max_per_scene;
  if (config.budget > slots) {
    throw Error(ErrorCode::InfeasibleBudget,
                "budget " + std::to_string(config.budget) + " exceeds " +
                    std::to_string(slots) + " available slots (" +
                    std::to_string(n_scenes) + " scenes x " +
                    std::to_string(config.max_per_scene) + ")");
  }
  std::vector<std::uint64_t> slot_ids(slots);
  std::iota(slot_ids.begin(), slot_ids.end(), 0);
  // partial Fisher-Yates: only the first `budget` positions need settling
  for (std::uint64_t i = 0; i < config.budget; ++i) {
    const std::uint64_t j = i + rng.uniform_index(slots - i);
    std::swap(slot_ids[i], slot_ids[j]);
    ++counts[slot_ids[i] / config.max_per_scene];
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Placement
// ---------------------------------------------------------------------------

namespace {

PointCloud maybe_resize(const PointCloud& cloud, const SemanticClass& dataset_class,
                        Provenance provenance, const ExpansionConfig& config) {
  const SizingPolicy& sizing = config.sizing;
  const std::map<SemanticClass, double>* table = nullptr;
  switch (sizing.mode) {
    case SizingPolicy::Mode::off:
      return cloud;
    case SizingPolicy::Mode::generated_default:
      if (provenance != Provenance::generated) return cloud;  // pre-scaled
      table = &synth::default_size_table();
      break;
    case SizingPolicy::Mode::table:
      table = &sizing.table;
      break;
  }
  const auto it = table->find(dataset_class);
  if (it == table->end()) return cloud;  // no target for this class
  return synth::normalize_to_extent(cloud, it->second);
}

}  // namespace

std::pair<LabeledScene, io::InsertionRecord> place_object(const LabeledScene& scene,
                                                          const ObjectAsset& asset,
                                                          const ExpansionConfig& config,
                                                          Rng& rng) {
  if (scene.cloud.empty()) {
    throw Error(ErrorCode::EmptyScene,
                "cannot place into empty scene \"" + scene.scene_id + "\"");
  }

  // prompt words may not match the dataset vocabulary; remap first so sizing
  // keys on the dataset class
  SemanticClass dataset_class = asset.object_class;
  if (const auto it = config.class_map.find(dataset_class); it != config.class_map.end()) {
    dataset_class = it->second;
  }

  PointCloud object = maybe_resize(asset.cloud, dataset_class, asset.provenance, config);
  if (config.yaw_augmentation) {
    object = rotate_yaw_about_centroid(object, rng.uniform(0.0, 2.0 * std::numbers::pi));
  }

  const Point3 scene_cog = centroid(scene.cloud);
  const Point3 half = aabb(scene.cloud).half_extent();
  Point3 noise;
  noise.x = rng.uniform(-config.noise_fraction[0] * half.x, config.noise_fraction[0] * half.x);
  noise.y = rng.uniform(-config.noise_fraction[1] * half.y, config.noise_fraction[1] * half.y);
  noise.z = rng.uniform(-config.noise_fraction[2] * half.z, config.noise_fraction[2] * half.z);

  const Point3 object_cog = centroid(object);
  const Point3 offset = scene_cog + noise - object_cog;

  // the invariant every manifest reader relies on: |offset - ideal| <= eta*h
  const Point3 ideal = scene_cog - object_cog;
  const std::array<double, 3> deviation = {std::abs(offset.x - ideal.x),
                                           std::abs(offset.y - ideal.y),
                                           std::abs(offset.z - ideal.z)};
  const std::array<double, 3> bound = {config.noise_fraction[0] * half.x,
                                       config.noise_fraction[1] * half.y,
                                       config.noise_fraction[2] * half.z};
  for (int axis = 0; axis < 3; ++axis) {
    if (deviation[axis] > bound[axis]) {
      throw std::logic_error("placement noise escaped its per-axis bound");
    }
  }

  ObjectAsset placed = asset;
  placed.object_class = dataset_class;
  placed.cloud = translate(object, offset);

  auto [expanded, fresh_id] = add_instance(scene, placed);

  io::InsertionRecord record;
  record.instance_id = fresh_id;
  record.object_class = placed.object_class;
  record.provenance = placed.provenance;
  record.generator_name = placed.generator_name;
  record.asset_seed = placed.seed;
  record.applied_offset = offset;
  return {std::move(expanded), std::move(record)};
}

std::pair<LabeledScene, std::vector<io::InsertionRecord>> expand_scene(
    const LabeledScene& scene, const synth::ObjectBank& bank, std::uint32_t count,
    const ExpansionConfig& config, Rng& rng) {
  if (count > config.max_per_scene) {
    throw std::invalid_argument("expand_scene count exceeds max_per_scene");
  }
  LabeledScene current = scene;
  std::vector<io::InsertionRecord> records;
  records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const ObjectAsset& asset = synth::draw_asset(bank, rng);
    auto [next, record] = place_object(current, asset, config, rng);
    current = std::move(next);
    records.push_back(std::move(record));
  }
  return {std::move(current), std::move(records)};
}

// ---------------------------------------------------------------------------
// Dataset expansion
// ---------------------------------------------------------------------------

io::ExpansionManifest assemble_manifest(const std::string& dataset_id,
                                        const ExpansionConfig& config,
                                        std::vector<io::SceneExpansionRecord> records,
                                        std::uint64_t instances_before) {
  std::uint64_t added = 0;
  for (const io::SceneExpansionRecord& rec : records) {
    if (rec.inserted.size() > config.max_per_scene) {
      throw Error(ErrorCode::InvalidConfig,
                  "scene \"" + rec.scene_id + "\" received " +
                      std::to_string(rec.inserted.size()) + " insertions, cap is " +
                      std::to_string(config.max_per_scene));
    }
    added += rec.inserted.size();
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const io::SceneExpansionRecord& a, const io::SceneExpansionRecord& b) {
                     return a.scene_id < b.scene_id;
                   });

  io::ExpansionManifest manifest;
  manifest.dataset_id = dataset_id;
  manifest.master_seed = config.master_seed;
  manifest.totals.scenes = records.size();
  manifest.totals.instances_before = instances_before;
  manifest.totals.instances_added = added;
  manifest.totals.instances_after = instances_before + added;
  manifest.scenes = std::move(records);
  return manifest;
}

std::pair<std::vector<LabeledScene>, io::ExpansionManifest> expand_dataset(
    const std::vector<LabeledScene>& scenes, const synth::ObjectBank& bank,
    const ExpansionConfig& config, const std::string& dataset_id) {
  validate_config(config);

  Rng plan_rng = plan_substream(config.master_seed);
  const std::vector<std::uint32_t> counts = plan_counts(scenes.size(), config, plan_rng);

  const bool any_insertion =
      std::any_of(counts.begin(), counts.end(), [](std::uint32_t c) { return c > 0; });
  if (any_insertion && bank.empty()) {
    throw Error(ErrorCode::EmptyBank, "expansion requires a non-empty object bank");
  }

  std::vector<LabeledScene> expanded;
  expanded.reserve(scenes.size());
  std::vector<io::SceneExpansionRecord> records;
  records.reserve(scenes.size());

  const std::uint64_t before = dataset_instance_count(scenes);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    Rng rng = scene_substream(config.master_seed, scenes[i].scene_id);
    try {
      auto [scene, inserted] = expand_scene(scenes[i], bank, counts[i], config, rng);
      expanded.push_back(std::move(scene));
      records.push_back({scenes[i].scene_id, std::move(inserted)});
    } catch (const Error& e) {
      // abort the run, naming the failing scene
      throw Error(e.code(), "scene \"" + scenes[i].scene_id + "\": " + e.what());
    }
  }
  return {std::move(expanded),
          assemble_manifest(dataset_id, config, std::move(records), before)};
}

DatasetStats dataset_stats(const std::vector<LabeledScene>& scenes) {
  DatasetStats stats;
  stats.scenes = scenes.size();
  if (scenes.empty()) return stats;

  stats.min_instances = SIZE_MAX;
  for (const LabeledScene& scene : scenes) {
    const std::size_t count = instance_count(scene);
    stats.total_instances += count;
    stats.min_instances = std::min(stats.min_instances, count);
    stats.max_instances = std::max(stats.max_instances, count);
    for (const auto& [id, cls] : scene.classes) {
      (void)id;
      ++stats.per_class[cls];
    }
  }
  stats.mean_instances =
      static_cast<double>(stats.total_instances) / static_cast<double>(scenes.size());
  return stats;
}

}  // namespace pcx::expansion
