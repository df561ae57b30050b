// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pcx/io.hpp"
#include "pcx/rng.hpp"
#include "pcx/scene.hpp"
#include "pcx/synthesis.hpp"

namespace pcx::expansion {

enum class CountMode {
  per_scene_uniform,  // each scene draws k uniform on {1..max_per_scene}
  exact_budget,       // total insertions across the dataset = budget, exactly
};

/// How inserted assets are resized before placement.
///  - off: never resize
///  - generated_default: procedural assets use the built-in class table,
///    external assets are assumed pre-scaled and left alone
///  - table: every asset whose class appears in the table is resized
struct SizingPolicy {
  enum class Mode { off, generated_default, table };
  Mode mode = Mode::generated_default;
  std::map<SemanticClass, double> table;  // class -> target longest dimension, meters
};

struct ExpansionConfig {
  std::uint32_t max_per_scene = 2;
  CountMode count_mode = CountMode::per_scene_uniform;
  std::uint64_t budget = 0;  // exact_budget mode only
  // per-axis placement noise as a fraction of the scene AABB half-extent
  std::array<double, 3> noise_fraction{0.5, 0.5, 0.5};
  bool yaw_augmentation = false;
  SizingPolicy sizing;
  std::uint64_t master_seed = 0;
  std::map<std::string, SemanticClass> class_map;  // prompt word -> dataset class
  std::optional<std::set<SemanticClass>> vocabulary;  // active dataset classes, if loaded
};

/// Bounds checks on the config itself (noise fractions in [0,1], budget
/// feasibility is checked against the scene count in plan_counts).
void validate_config(const ExpansionConfig& config);

/// JSON round trip for the configuration file; unknown keys rejected.
ExpansionConfig config_from_json(const std::string& json_bytes);
std::string config_to_json(const ExpansionConfig& config);

/// Decides how many objects each of n_scenes receives.
/// exact_budget distributes `budget` insertion slots uniformly at random
/// over the n_scenes x max_per_scene slot grid (so no scene exceeds the cap
/// and the sum is exact); throws InfeasibleBudget when budget > n * max.
std::vector<std::uint32_t> plan_counts(std::size_t n_scenes, const ExpansionConfig& config,
                                       Rng& rng);

/// One placement: optional per-class resize, optional uniform yaw, then a
/// translation landing the asset centroid at
///   centroid(scene) + noise,  noise_c ~ Uniform(-eta_c h_c, +eta_c h_c)
/// where h is the scene AABB half-extent. Labels are assigned through
/// add_instance; the record captures the exact applied translation.
/// Per-object draw order is fixed: yaw, noise x, y, z.
std::pair<LabeledScene, io::InsertionRecord> place_object(const LabeledScene& scene,
                                                          const ObjectAsset& asset,
                                                          const ExpansionConfig& config,
                                                          Rng& rng);

/// Draws `count` assets from the bank and places them sequentially.
/// count = 0 returns the scene unchanged.
std::pair<LabeledScene, std::vector<io::InsertionRecord>> expand_scene(
    const LabeledScene& scene, const synth::ObjectBank& bank, std::uint32_t count,
    const ExpansionConfig& config, Rng& rng);

/// Whole-dataset expansion: plan_counts on the planning substream, then one
/// independent substream per scene keyed by (master_seed, scene_id), so the
/// result does not depend on processing order or worker count. Manifest
/// records are merged in scene-id order.
std::pair<std::vector<LabeledScene>, io::ExpansionManifest> expand_dataset(
    const std::vector<LabeledScene>& scenes, const synth::ObjectBank& bank,
    const ExpansionConfig& config, const std::string& dataset_id = "dataset");

struct DatasetStats {
  std::size_t scenes = 0;
  std::size_t total_instances = 0;
  std::map<SemanticClass, std::size_t> per_class;
  std::size_t min_instances = 0;
  std::size_t max_instances = 0;
  double mean_instances = 0.0;
};

DatasetStats dataset_stats(const std::vector<LabeledScene>& scenes);

/// Helper shared by expand_dataset and the CLI's streaming path: assembles
/// per-scene records into a manifest (records sorted by scene_id) and checks
/// the accounting invariants.
io::ExpansionManifest assemble_manifest(const std::string& dataset_id,
                                        const ExpansionConfig& config,
                                        std::vector<io::SceneExpansionRecord> records,
                                        std::uint64_t instances_before);

}  // namespace pcx::expansion
