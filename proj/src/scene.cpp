// SPDX-License-Identifier: Apache-2.0

#include "pcx/scene.hpp"

#include <algorithm>
#include <set>

namespace pcx {

bool is_valid_class_name(const SemanticClass& name) {
  if (name.empty()) return false;
  for (unsigned char c : name) {
    if (c <= ' ') return false;          // whitespace and control characters
    if (c >= 'A' && c <= 'Z') return false;
  }
  return true;
}

const char* provenance_name(Provenance p) {
  return p == Provenance::generated ? "generated" : "external";
}

Provenance provenance_from_name(const std::string& name) {
  if (name == "generated") return Provenance::generated;
  if (name == "external") return Provenance::external;
  throw Error(ErrorCode::SchemaViolation,
              "provenance must be \"generated\" or \"external\", got \"" + name + "\"");
}

const char* violation_kind_name(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::LengthMismatch: return "LengthMismatch";
    case Violation::Kind::ColorLengthMismatch: return "ColorLengthMismatch";
    case Violation::Kind::UnmappedInstance: return "UnmappedInstance";
    case Violation::Kind::OrphanInstance: return "OrphanInstance";
    case Violation::Kind::ReservedInstanceId: return "ReservedInstanceId";
    case Violation::Kind::BadClassName: return "BadClassName";
    case Violation::Kind::NonFinitePoint: return "NonFinitePoint";
  }
  return "Unknown";
}

std::vector<Violation> validate_scene(const LabeledScene& scene) {
  std::vector<Violation> out;

  if (scene.instance_of_point.size() != scene.cloud.size()) {
    out.push_back({Violation::Kind::LengthMismatch, 0,
                   "instance_of_point has " + std::to_string(scene.instance_of_point.size()) +
                       " entries for " + std::to_string(scene.cloud.size()) + " points"});
  }
  if (scene.cloud.has_colors() && scene.cloud.colors->size() != scene.cloud.size()) {
    out.push_back({Violation::Kind::ColorLengthMismatch, 0,
                   "color channel has " + std::to_string(scene.cloud.colors->size()) +
                       " entries for " + std::to_string(scene.cloud.size()) + " points"});
  }
  for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
    if (!scene.cloud.points[i].is_finite()) {
      out.push_back({Violation::Kind::NonFinitePoint, 0,
                     "non-finite coordinate at point " + std::to_string(i)});
      break;  // one descriptor per breach kind is enough here
    }
  }

  std::set<InstanceId> on_points;
  const std::size_t n = std::min(scene.instance_of_point.size(), scene.cloud.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (scene.instance_of_point[i] != kBackgroundId) {
      on_points.insert(scene.instance_of_point[i]);
    }
  }
  for (InstanceId id : on_points) {
    if (scene.classes.find(id) == scene.classes.end()) {
      out.push_back({Violation::Kind::UnmappedInstance, id,
                     "instance " + std::to_string(id) + " has points but no class"});
    }
  }
  for (const auto& [id, cls] : scene.classes) {
    if (id == kBackgroundId) {
      out.push_back({Violation::Kind::ReservedInstanceId, id,
                     "id 0 is reserved for background"});
      continue;
    }
    if (on_points.find(id) == on_points.end()) {
      out.push_back({Violation::Kind::OrphanInstance, id,
                     "instance " + std::to_string(id) + " has a class but no points"});
    }
    if (!is_valid_class_name(cls)) {
      out.push_back({Violation::Kind::BadClassName, id,
                     "instance " + std::to_string(id) + " has invalid class name \"" + cls + "\""});
    }
  }
  return out;
}

InstanceId next_instance_id(const LabeledScene& scene) {
  if (scene.classes.empty()) return 1;
  return scene.classes.rbegin()->first + 1;
}

std::pair<LabeledScene, InstanceId> add_instance(const LabeledScene& scene,
                                                 const ObjectAsset& asset,
                                                 Color fill_color) {
  if (asset.cloud.empty()) {
    throw Error(ErrorCode::InvalidScene, "asset cloud is empty");
  }
  const auto violations = validate_scene(scene);
  if (!violations.empty()) {
    throw Error(ErrorCode::InvalidScene,
                std::string("scene fails validation: ") +
                    violation_kind_name(violations.front().kind) + " (" +
                    violations.front().detail + ")");
  }

  LabeledScene out = scene;
  const InstanceId fresh = next_instance_id(scene);

  out.cloud.points.insert(out.cloud.points.end(), asset.cloud.points.begin(),
                          asset.cloud.points.end());
  if (out.cloud.has_colors()) {
    if (asset.cloud.has_colors()) {
      out.cloud.colors->insert(out.cloud.colors->end(), asset.cloud.colors->begin(),
                               asset.cloud.colors->end());
    } else {
      out.cloud.colors->insert(out.cloud.colors->end(), asset.cloud.size(), fill_color);
    }
  }
  // A colorless scene stays colorless even when the asset carries color.

  out.instance_of_point.insert(out.instance_of_point.end(), asset.cloud.size(), fresh);
  out.classes.emplace(fresh, asset.object_class);
  return {std::move(out), fresh};
}

std::vector<std::size_t> instance_points(const LabeledScene& scene, InstanceId id) {
  if (scene.classes.find(id) == scene.classes.end()) {
    throw Error(ErrorCode::UnknownInstance,
                "instance " + std::to_string(id) + " not in scene \"" + scene.scene_id + "\"");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scene.instance_of_point.size(); ++i) {
    if (scene.instance_of_point[i] == id) out.push_back(i);
  }
  return out;
}

std::size_t instance_count(const LabeledScene& scene) {
  std::set<InstanceId> ids;
  for (InstanceId id : scene.instance_of_point) {
    if (id != kBackgroundId) ids.insert(id);
  }
  return ids.size();
}

std::size_t dataset_instance_count(const std::vector<LabeledScene>& scenes) {
  std::size_t total = 0;
  for (const LabeledScene& s : scenes) total += instance_count(s);
  return total;
}

}  // namespace pcx
