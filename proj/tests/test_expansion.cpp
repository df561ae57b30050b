// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>
#include <numeric>

#include <doctest.h>

#include "pcx/expansion.hpp"
#include "test_util.hpp"

using namespace pcx;
using namespace pcx::expansion;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a pcx::Error");
  return ErrorCode::IoFailure;
}

synth::ObjectBank small_bank() {
  synth::GeneratorSpec sphere;
  sphere.n_points = 12;
  sphere.seed = 7;
  sphere.params = synth::SphereParams{0.4};
  synth::GeneratorSpec box;
  box.n_points = 9;
  box.seed = 3;
  box.params = synth::BoxParams{{0.6, 0.5, 0.4}};
  std::vector<ObjectAsset> assets;
  assets.push_back(synth::generate(sphere, "chair", "chair"));
  assets.push_back(synth::generate(box, "table", "table"));
  return synth::make_bank(std::move(assets), 1.0, 1.0);
}

ExpansionConfig zero_noise_config() {
  ExpansionConfig config;
  config.noise_fraction = {0.0, 0.0, 0.0};
  config.sizing.mode = SizingPolicy::Mode::off;
  return config;
}

}  // namespace

TEST_CASE("plan_counts reproduces the published dataset accounting") {
  ExpansionConfig config;
  config.count_mode = CountMode::exact_budget;
  config.max_per_scene = 2;
  config.budget = 2402;
  Rng rng(1);
  const auto counts = plan_counts(1513, config, rng);
  REQUIRE(counts.size() == 1513);
  std::uint64_t sum = 0;
  for (std::uint32_t c : counts) {
    CHECK(c <= 2);
    sum += c;
  }
  CHECK(sum == 2402);
}

TEST_CASE("plan_counts edge cases") {
  ExpansionConfig config;
  config.max_per_scene = 0;
  Rng rng(2);
  for (std::uint32_t c : plan_counts(50, config, rng)) CHECK(c == 0);

  config.count_mode = CountMode::exact_budget;
  config.max_per_scene = 2;
  config.budget = 7;
  CHECK(code_of([&] {
          Rng r(3);
          plan_counts(3, config, r);
        }) == ErrorCode::InfeasibleBudget);

  config.budget = 6;  // budget == slots: every scene at the cap
  Rng rng2(4);
  for (std::uint32_t c : plan_counts(3, config, rng2)) CHECK(c == 2);

  config.budget = 0;
  Rng rng3(5);
  for (std::uint32_t c : plan_counts(3, config, rng3)) CHECK(c == 0);
}

TEST_CASE("plan_counts per_scene_uniform mean sits near (max+1)/2") {
  ExpansionConfig config;
  config.max_per_scene = 2;
  Rng rng(6);
  const auto counts = plan_counts(10000, config, rng);
  double sum = 0;
  for (std::uint32_t c : counts) {
    CHECK(c >= 1);
    CHECK(c <= 2);
    sum += c;
  }
  // sd of the mean of uniform{1,2} over 10000 draws = 0.5/100; 3 sigma = 0.015
  CHECK(std::abs(sum / 10000.0 - 1.5) <= 0.015);
}

TEST_CASE("place_object with zero noise lands on the scene centroid") {
  pcx::Rng scenerng(10);
  const LabeledScene scene =
      testutil::random_scene(scenerng, "s", 80, 3, {"chair", "table"});
  const synth::ObjectBank bank = small_bank();
  const ExpansionConfig config = zero_noise_config();

  Rng rng(11);
  const auto [expanded, record] = place_object(scene, bank.assets[0], config, rng);
  const Point3 scene_cog = centroid(scene.cloud);

  PointCloud inserted;
  for (std::size_t i = scene.cloud.size(); i < expanded.cloud.size(); ++i) {
    inserted.points.push_back(expanded.cloud.points[i]);
  }
  const Point3 inserted_cog = centroid(inserted);
  CHECK(std::abs(inserted_cog.x - scene_cog.x) < 1e-9);
  CHECK(std::abs(inserted_cog.y - scene_cog.y) < 1e-9);
  CHECK(std::abs(inserted_cog.z - scene_cog.z) < 1e-9);
}

TEST_CASE("place_object noise stays inside the per-axis bound over 1000 placements") {
  pcx::Rng scenerng(12);
  const LabeledScene scene =
      testutil::random_scene(scenerng, "s", 120, 4, {"chair", "table"});
  const synth::ObjectBank bank = small_bank();
  ExpansionConfig config = zero_noise_config();
  config.noise_fraction = {0.5, 0.5, 0.5};

  const Point3 scene_cog = centroid(scene.cloud);
  const Point3 half = aabb(scene.cloud).half_extent();

  Rng rng(13);
  for (int trial = 0; trial < 1000; ++trial) {
    const ObjectAsset& asset = bank.assets[trial % 2];
    const auto [expanded, record] = place_object(scene, asset, config, rng);

    // inserted centroid lies inside the box centered at the scene centroid
    PointCloud inserted;
    for (std::size_t i = scene.cloud.size(); i < expanded.cloud.size(); ++i) {
      inserted.points.push_back(expanded.cloud.points[i]);
    }
    const Point3 cog = centroid(inserted);
    CHECK(std::abs(cog.x - scene_cog.x) <= 0.5 * half.x + 1e-9);
    CHECK(std::abs(cog.y - scene_cog.y) <= 0.5 * half.y + 1e-9);
    CHECK(std::abs(cog.z - scene_cog.z) <= 0.5 * half.z + 1e-9);

    // the record invariant: |applied_offset - ideal_overlay| <= eta * h
    const Point3 asset_cog = centroid(asset.cloud);
    const Point3 ideal = scene_cog - asset_cog;
    CHECK(std::abs(record.applied_offset.x - ideal.x) <= 0.5 * half.x);
    CHECK(std::abs(record.applied_offset.y - ideal.y) <= 0.5 * half.y);
    CHECK(std::abs(record.applied_offset.z - ideal.z) <= 0.5 * half.z);
  }
}

TEST_CASE("placing a 1-point asset into a 1-point scene at zero noise coincides") {
  LabeledScene scene;
  scene.scene_id = "tiny";
  scene.cloud.points.push_back({4, 5, 6});
  scene.instance_of_point = {0};

  ObjectAsset dot;
  dot.cloud.points.push_back({-2, 0, 9});
  dot.object_class = "chair";

  Rng rng(14);
  const auto [expanded, record] = place_object(scene, dot, zero_noise_config(), rng);
  REQUIRE(expanded.cloud.size() == 2);
  CHECK(std::abs(expanded.cloud.points[1].x - 4) < 1e-9);
  CHECK(std::abs(expanded.cloud.points[1].y - 5) < 1e-9);
  CHECK(std::abs(expanded.cloud.points[1].z - 6) < 1e-9);
}

TEST_CASE("place_object rejects an empty scene") {
  Rng rng(15);
  const synth::ObjectBank bank = small_bank();
  CHECK(code_of([&] {
          LabeledScene empty;
          place_object(empty, bank.assets[0], zero_noise_config(), rng);
        }) == ErrorCode::EmptyScene);
}

TEST_CASE("place_object applies the class map and records the mapped class") {
  pcx::Rng scenerng(16);
  const LabeledScene scene = testutil::random_scene(scenerng, "s", 40, 2, {"sofa"});
  ObjectAsset asset = small_bank().assets[0];
  asset.object_class = "couch";  // prompt word outside the dataset vocabulary

  ExpansionConfig config = zero_noise_config();
  config.class_map = {{"couch", "sofa"}};
  Rng rng(17);
  const auto [expanded, record] = place_object(scene, asset, config, rng);
  CHECK(record.object_class == "sofa");
  CHECK(expanded.classes.at(record.instance_id) == "sofa");
}

TEST_CASE("sizing policies") {
  pcx::Rng scenerng(18);
  const LabeledScene scene = testutil::random_scene(scenerng, "s", 60, 2, {"chair"});

  ObjectAsset chair = small_bank().assets[0];  // generated, class chair
  ExpansionConfig config = zero_noise_config();

  // explicit table resizes to the target longest dimension
  config.sizing.mode = SizingPolicy::Mode::table;
  config.sizing.table = {{"chair", 2.0}};
  Rng rng(19);
  auto [with_table, rec1] = place_object(scene, chair, config, rng);
  PointCloud inserted;
  for (std::size_t i = scene.cloud.size(); i < with_table.cloud.size(); ++i) {
    inserted.points.push_back(with_table.cloud.points[i]);
  }
  const Point3 extent = aabb(inserted).extent();
  CHECK(std::max({extent.x, extent.y, extent.z}) == doctest::Approx(2.0).epsilon(1e-9));

  // default policy resizes generated assets via the built-in table
  config.sizing = SizingPolicy{};  // generated_default
  Rng rng2(20);
  auto [with_default, rec2] = place_object(scene, chair, config, rng2);
  inserted.points.clear();
  for (std::size_t i = scene.cloud.size(); i < with_default.cloud.size(); ++i) {
    inserted.points.push_back(with_default.cloud.points[i]);
  }
  const Point3 extent_default = aabb(inserted).extent();
  CHECK(std::max({extent_default.x, extent_default.y, extent_default.z}) ==
        doctest::Approx(synth::default_size_table().at("chair")).epsilon(1e-9));

  // external assets are assumed pre-scaled under the default policy
  ObjectAsset external = chair;
  external.provenance = Provenance::external;
  const double before = [&] {
    const Point3 e = aabb(external.cloud).extent();
    return std::max({e.x, e.y, e.z});
  }();
  Rng rng3(21);
  auto [with_external, rec3] = place_object(scene, external, config, rng3);
  inserted.points.clear();
  for (std::size_t i = scene.cloud.size(); i < with_external.cloud.size(); ++i) {
    inserted.points.push_back(with_external.cloud.points[i]);
  }
  const Point3 e = aabb(inserted).extent();
  CHECK(std::max({e.x, e.y, e.z}) == doctest::Approx(before).epsilon(1e-9));
}

TEST_CASE("yaw augmentation preserves the inserted footprint height") {
  pcx::Rng scenerng(22);
  const LabeledScene scene = testutil::random_scene(scenerng, "s", 60, 2, {"chair"});
  ObjectAsset box = small_bank().assets[1];

  ExpansionConfig config = zero_noise_config();
  config.yaw_augmentation = true;
  Rng rng(23);
  const auto [expanded, record] = place_object(scene, box, config, rng);
  PointCloud inserted;
  for (std::size_t i = scene.cloud.size(); i < expanded.cloud.size(); ++i) {
    inserted.points.push_back(expanded.cloud.points[i]);
  }
  const double original_height = aabb(box.cloud).extent().z;
  CHECK(aabb(inserted).extent().z == doctest::Approx(original_height).epsilon(1e-9));
}

TEST_CASE("expand_scene") {
  pcx::Rng scenerng(24);
  const LabeledScene scene =
      testutil::random_scene(scenerng, "s", 70, 3, {"chair", "table"});
  const synth::ObjectBank bank = small_bank();
  ExpansionConfig config = zero_noise_config();
  config.noise_fraction = {0.5, 0.5, 0.5};

  Rng rng0(25);
  const auto [unchanged, none] = expand_scene(scene, bank, 0, config, rng0);
  CHECK(testutil::scenes_equal(unchanged, scene));
  CHECK(none.empty());

  Rng rng2(26);
  const auto [expanded, records] = expand_scene(scene, bank, 2, config, rng2);
  REQUIRE(records.size() == 2);
  CHECK(instance_count(expanded) == instance_count(scene) + 2);
  CHECK(records[0].instance_id == 4);
  CHECK(records[1].instance_id == 5);
  std::size_t added_points = 0;
  for (const auto& rec : records) {
    for (const ObjectAsset& a : bank.assets) {
      if (a.generator_name == rec.generator_name && a.seed == rec.asset_seed) {
        added_points += a.cloud.size();
      }
    }
  }
  CHECK(expanded.cloud.size() == scene.cloud.size() + added_points);

  CHECK_THROWS_AS(expand_scene(scene, bank, 3, config, rng2), std::invalid_argument);
}

TEST_CASE("expand_dataset empty input") {
  const auto [scenes, manifest] = expand_dataset({}, small_bank(), ExpansionConfig{});
  CHECK(scenes.empty());
  CHECK(manifest.totals.scenes == 0);
  CHECK(manifest.totals.instances_after == 0);
}

TEST_CASE("expand_dataset conservation, determinism, and manifest shape") {
  pcx::Rng scenerng(27);
  std::vector<LabeledScene> dataset;
  for (int i = 0; i < 8; ++i) {
    dataset.push_back(testutil::random_scene(scenerng, "scene_" + std::to_string(7 - i),
                                             30 + scenerng.uniform_index(40), 2 + i % 3,
                                             {"chair", "table", "sofa"}));
  }
  const synth::ObjectBank bank = small_bank();
  ExpansionConfig config;
  config.count_mode = CountMode::exact_budget;
  config.budget = 11;
  config.max_per_scene = 2;
  config.master_seed = 424242;
  config.sizing.mode = SizingPolicy::Mode::off;

  const auto [out1, manifest1] = expand_dataset(dataset, bank, config, "mini");
  const auto [out2, manifest2] = expand_dataset(dataset, bank, config, "mini");

  // determinism
  REQUIRE(out1.size() == out2.size());
  for (std::size_t i = 0; i < out1.size(); ++i) {
    CHECK(testutil::scenes_equal(out1[i], out2[i]));
  }
  CHECK(io::write_manifest(manifest1) == io::write_manifest(manifest2));

  // accounting
  CHECK(manifest1.totals.scenes == 8);
  CHECK(manifest1.totals.instances_before == dataset_instance_count(dataset));
  CHECK(manifest1.totals.instances_added == 11);
  CHECK(manifest1.totals.instances_after ==
        manifest1.totals.instances_before + 11);
  CHECK(dataset_instance_count(out1) == manifest1.totals.instances_after);

  // manifest records are merged in scene-id order
  for (std::size_t i = 1; i < manifest1.scenes.size(); ++i) {
    CHECK(manifest1.scenes[i - 1].scene_id < manifest1.scenes[i].scene_id);
  }

  // conservation: original points, colors, and labels are bit-identical
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    const LabeledScene& before = dataset[s];
    const LabeledScene& after = out1[s];
    REQUIRE(after.cloud.size() >= before.cloud.size());
    for (std::size_t i = 0; i < before.cloud.size(); ++i) {
      CHECK(testutil::points_equal(after.cloud.points[i], before.cloud.points[i]));
      CHECK(after.instance_of_point[i] == before.instance_of_point[i]);
      CHECK((*after.cloud.colors)[i] == (*before.cloud.colors)[i]);
    }
    CHECK(validate_scene(after).empty());
  }

  // every record satisfies its noise-bound invariant
  for (const auto& rec : manifest1.scenes) {
    CHECK(rec.inserted.size() <= 2);
  }

  CHECK(code_of([&] {
          synth::ObjectBank empty_bank;
          expand_dataset(dataset, empty_bank, config, "mini");
        }) == ErrorCode::EmptyBank);
}

TEST_CASE("expansion config JSON round trip and validation") {
  const std::string text = R"({
    "max_per_scene": 2,
    "count_mode": "exact_budget",
    "budget": 2402,
    "noise_mode": "uniform_fraction",
    "noise_fraction": [0.5, 0.5, 0.25],
    "yaw_augmentation": true,
    "sizing": {"chair": 0.9, "table": 1.6},
    "master_seed": 20240901,
    "class_map": {"couch": "sofa"},
    "vocabulary": ["chair", "table", "sofa"]
  })";
  const ExpansionConfig config = config_from_json(text);
  CHECK(config.count_mode == CountMode::exact_budget);
  CHECK(config.budget == 2402);
  CHECK(config.noise_fraction[2] == 0.25);
  CHECK(config.yaw_augmentation);
  CHECK(config.sizing.mode == SizingPolicy::Mode::table);
  CHECK(config.sizing.table.at("table") == 1.6);
  CHECK(config.class_map.at("couch") == "sofa");
  REQUIRE(config.vocabulary.has_value());
  CHECK(config.vocabulary->count("sofa") == 1);

  // defaults mirror the documented ones
  const ExpansionConfig defaults = config_from_json("{}");
  CHECK(defaults.max_per_scene == 2);
  CHECK(defaults.count_mode == CountMode::per_scene_uniform);
  CHECK(defaults.noise_fraction[0] == 0.5);
  CHECK(!defaults.yaw_augmentation);

  // round trip
  CHECK(config_to_json(config_from_json(config_to_json(config))) ==
        config_to_json(config));

  CHECK(code_of([&] { config_from_json(R"({"bogus": 1})"); }) ==
        ErrorCode::SchemaViolation);
  CHECK(code_of([&] { config_from_json(R"({"noise_fraction": [2, 0, 0]})"); }) ==
        ErrorCode::InvalidConfig);
  CHECK(code_of([&] { config_from_json(R"({"noise_mode": "gaussian"})"); }) ==
        ErrorCode::SchemaViolation);
}

TEST_CASE("dataset_stats") {
  pcx::Rng rng(28);
  std::vector<LabeledScene> dataset;
  dataset.push_back(testutil::random_scene(rng, "a", 30, 3, {"chair"}));
  dataset.push_back(testutil::random_scene(rng, "b", 30, 4, {"table"}));
  const DatasetStats stats = dataset_stats(dataset);
  CHECK(stats.scenes == 2);
  CHECK(stats.total_instances == 7);
  CHECK(stats.mean_instances == doctest::Approx(3.5));
  CHECK(stats.min_instances == 3);
  CHECK(stats.max_instances == 4);

  LabeledScene two_chairs_one_table;
  two_chairs_one_table.scene_id = "c";
  two_chairs_one_table.cloud = testutil::random_cloud(rng, 6, false);
  two_chairs_one_table.instance_of_point = {1, 1, 2, 2, 3, 3};
  two_chairs_one_table.classes = {{1, "chair"}, {2, "chair"}, {3, "table"}};
  const DatasetStats hist = dataset_stats({two_chairs_one_table});
  CHECK(hist.per_class.at("chair") == 2);
  CHECK(hist.per_class.at("table") == 1);

  const DatasetStats empty = dataset_stats({});
  CHECK(empty.scenes == 0);
  CHECK(empty.total_instances == 0);
  CHECK(empty.min_instances == 0);
  CHECK(empty.max_instances == 0);
  CHECK(empty.mean_instances == 0.0);
}
