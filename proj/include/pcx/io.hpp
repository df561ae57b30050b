// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pcx/geometry.hpp"
#include "pcx/scene.hpp"

namespace pcx::io {

// ---------------------------------------------------------------------------
// PLY 1.0, ascii and binary_little_endian.
//
// Readers accept a vertex element with float (or double) x/y/z and an
// optional uchar red/green/blue triple; unknown scalar vertex properties are
// skipped, non-vertex elements are ignored. Inconsistent input is rejected:
//   MalformedHeader    - header structure errors, with a line number
//   UnsupportedFormat  - big-endian files, list-typed vertex properties
//   TruncatedBody      - short or unparsable body, with line/byte position
// ---------------------------------------------------------------------------

enum class PlyFormat { ascii, binary_little_endian };

/// Parses a whole PLY file from memory. 32-bit floats widen losslessly.
PointCloud read_ply(const std::string& bytes);

/// Serializes deterministically: fixed header order (x,y,z then red,green,
/// blue when colored), 32-bit float storage. Coordinates outside float range
/// throw CoordinateOverflow.
std::string write_ply(const PointCloud& cloud, PlyFormat format);

PointCloud read_ply_file(const std::filesystem::path& path);
void write_ply_file(const PointCloud& cloud, PlyFormat format,
                    const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Scene bundles: <dir>/scene.ply + <dir>/labels.json
//
// labels.json = {"scene_id", "instances": [{"id", "class"}],
//                "point_instance_ids": [int, ...]}
// ---------------------------------------------------------------------------

inline constexpr const char* kBundlePlyName = "scene.ply";
inline constexpr const char* kBundleLabelsName = "labels.json";

/// Reads and validates a bundle. Label/vertex count disagreement throws
/// LengthMismatch; an id missing from either side of the instance table
/// throws UnmappedInstance.
LabeledScene read_bundle(const std::filesystem::path& dir);

/// Writes binary PLY + labels.json; each file lands via temp-and-rename.
/// The scene must pass validate_scene.
void write_bundle(const LabeledScene& scene, const std::filesystem::path& dir);

/// True when the directory holds both bundle files.
bool is_bundle_dir(const std::filesystem::path& dir);

/// Immediate subdirectories of `root` in sorted name order. Every subdirectory
/// must be a bundle (MissingFile otherwise); plain files in `root` are ignored.
std::vector<std::filesystem::path> list_bundle_dirs(const std::filesystem::path& root);

// ---------------------------------------------------------------------------
// S3DIS room import: a directory of per-object files named <class>_<k>.txt,
// each line "x y z r g b". One file becomes one instance; files are taken in
// filename-sorted order and ids assigned 1..n.
// ---------------------------------------------------------------------------

LabeledScene import_s3dis_room(const std::filesystem::path& annotations_dir,
                               const std::string& scene_id);

// ---------------------------------------------------------------------------
// Expansion manifest
// ---------------------------------------------------------------------------

struct InsertionRecord {
  InstanceId instance_id = 0;
  SemanticClass object_class;
  Provenance provenance = Provenance::generated;
  std::string generator_name;
  std::uint64_t asset_seed = 0;
  Point3 applied_offset;  // translation applied to the (prepared) asset
};

struct SceneExpansionRecord {
  std::string scene_id;
  std::vector<InsertionRecord> inserted;
};

struct ManifestTotals {
  std::uint64_t scenes = 0;
  std::uint64_t instances_before = 0;
  std::uint64_t instances_after = 0;
  std::uint64_t instances_added = 0;
};

/// Per-scene record of an expansion run plus dataset-level accounting.
/// Always satisfies: instances_after = instances_before + instances_added,
/// and instances_added = sum of per-scene insertion counts.
struct ExpansionManifest {
  std::string dataset_id;
  std::uint64_t master_seed = 0;
  std::vector<SceneExpansionRecord> scenes;
  ManifestTotals totals;
};

/// JSON with stable key ordering; arithmetic invariants are checked and a
/// breach throws SchemaViolation naming the JSON path.
std::string write_manifest(const ExpansionManifest& manifest);
ExpansionManifest read_manifest(const std::string& bytes);

ExpansionManifest read_manifest_file(const std::filesystem::path& path);
void write_manifest_file(const ExpansionManifest& manifest,
                         const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

/// Whole-file read; MissingFile when absent, IoFailure on a read error.
std::string read_file(const std::filesystem::path& path);

/// Writes to a temp file in the target directory, then renames into place,
/// so interrupted runs never leave partial files.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace pcx::io
