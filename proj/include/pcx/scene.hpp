// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pcx/geometry.hpp"

namespace pcx {

/// Semantic class names are lowercase tokens without whitespace
/// ("chair", "sofa", "board").
using SemanticClass = std::string;

bool is_valid_class_name(const SemanticClass& name);

/// Instance ids are >= 1; 0 marks unlabeled/background points and never
/// appears in the instance table.
using InstanceId = std::uint32_t;
inline constexpr InstanceId kBackgroundId = 0;

/// A point cloud with per-point instance ids and the instance -> class table.
struct LabeledScene {
  PointCloud cloud;
  std::vector<InstanceId> instance_of_point;  // one entry per point, 0 = none
  std::map<InstanceId, SemanticClass> classes;
  std::string scene_id;
};

enum class Provenance { generated, external };

const char* provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& name);  // SchemaViolation

/// A candidate object for insertion: synthetic output of a generator or an
/// externally supplied point cloud. `prompt` is the single-word text prompt
/// the asset was produced from (informational).
struct ObjectAsset {
  PointCloud cloud;
  SemanticClass object_class;
  Provenance provenance = Provenance::generated;
  std::string generator_name;
  std::uint64_t seed = 0;
  std::string prompt;
};

struct Violation {
  enum class Kind {
    LengthMismatch,        // instance_of_point length != point count
    ColorLengthMismatch,   // color channel length != point count
    UnmappedInstance,      // id appears on points but not in classes
    OrphanInstance,        // id in classes but on no point
    ReservedInstanceId,    // id 0 in the class table
    BadClassName,          // class name empty / uppercase / whitespace
    NonFinitePoint,        // NaN or infinity in a coordinate
  };

  Kind kind;
  InstanceId id = 0;   // offending instance where applicable
  std::string detail;  // human-readable description
};

const char* violation_kind_name(Violation::Kind kind);

/// Checks every LabeledScene invariant; returns one descriptor per breach
/// and never throws. An empty result means the scene is well formed.
std::vector<Violation> validate_scene(const LabeledScene& scene);

/// Smallest unused id: max id in the class table + 1, or 1 when the scene
/// has no instances. Ids are never recycled.
InstanceId next_instance_id(const LabeledScene& scene);

inline constexpr Color kDefaultFillColor{128, 128, 128};

/// Appends the asset's points as one fresh instance. Pre-existing points,
/// labels, and colors are untouched. When the scene carries color and the
/// asset does not, appended points get `fill_color`; a colorless scene stays
/// colorless. Returns the new scene and the fresh id.
/// Throws InvalidScene when the scene fails validation or the asset is empty.
std::pair<LabeledScene, InstanceId> add_instance(const LabeledScene& scene,
                                                 const ObjectAsset& asset,
                                                 Color fill_color = kDefaultFillColor);

/// Indices of exactly the points labeled `id`, ascending.
/// Throws UnknownInstance when the id is not in the class table.
std::vector<std::size_t> instance_points(const LabeledScene& scene, InstanceId id);

/// Number of distinct nonzero ids on the scene's points.
std::size_t instance_count(const LabeledScene& scene);

/// Sum of per-scene instance counts.
std::size_t dataset_instance_count(const std::vector<LabeledScene>& scenes);

}  // namespace pcx
