// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "pcx/geometry.hpp"
#include "pcx/rng.hpp"
#include "pcx/scene.hpp"

namespace pcx::synth {

// Deterministic, seeded point-cloud object generators. Identical requests
// produce bit-identical assets; all randomness flows from the request seed.

struct SphereParams {
  double radius = 1.0;
};

struct BoxParams {
  Point3 extents{1.0, 1.0, 1.0};  // full side lengths
};

struct PerlinBlobParams {
  double base_radius = 1.0;
  double amplitude = 0.25;  // radial displacement bound, must be < base_radius
  double frequency = 2.0;
  int octaves = 3;
};

/// Affine map p -> A p + t with contractive linear part.
struct IfsMap {
  std::array<double, 9> linear{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major A
  Point3 offset;

  /// Uniform contraction by `factor` toward `target` (whose fixed point it is).
  static IfsMap contraction_toward(const Point3& target, double factor);

  Point3 apply(const Point3& p) const;
  Point3 fixed_point() const;          // solves (I - A) x = t
  double contraction_factor() const;   // spectral norm of A
};

struct IfsParams {
  std::vector<IfsMap> maps;
  int burn_in = 20;  // contraction >= 0.5 per step reaches the attractor to ~1e-6
};

struct GeneratorSpec {
  std::size_t n_points = 0;
  std::uint64_t seed = 0;
  std::variant<SphereParams, BoxParams, PerlinBlobParams, IfsParams> params;

  const char* kind_name() const;
};

/// Checks every parameter bound; throws InvalidSpec naming the violated one.
void validate_spec(const GeneratorSpec& spec);

/// Runs the generator. Exactly n_points points, provenance = generated,
/// generator_name = kind, no color channel.
ObjectAsset generate(const GeneratorSpec& spec, const SemanticClass& object_class,
                     const std::string& prompt);

/// Seeded gradient lattice noise (the classic permutation-table scheme).
/// The table is 0..255 Fisher-Yates-shuffled by the splitmix64 stream of the
/// seed, then doubled; gradients are the 12 cube-edge directions selected by
/// hash & 15. Single-octave output lies in [-1, 1].
class PerlinNoise {
 public:
  explicit PerlinNoise(std::uint64_t seed);

  double noise(double x, double y, double z) const;

  /// Octaves with persistence 0.5 and frequency doubling, normalized by the
  /// weight sum so the result stays in [-1, 1].
  double fbm(const Point3& p, double frequency, int octaves) const;

 private:
  std::array<std::uint8_t, 512> perm_;
};

/// Moves each point radially by amplitude * fbm(p * frequency). Amplitude 0
/// is an exact identity; output radii stay within +-amplitude of the input
/// radius. Throws InvalidSpec for amplitude < 0 or octaves < 1.
PointCloud perlin_displace(const PointCloud& base, double amplitude, double frequency,
                           int octaves, std::uint64_t seed);

/// Uniform scale about the centroid so the longest AABB dimension equals
/// `target_longest_dim`. Throws DegenerateCloud when all points coincide.
PointCloud normalize_to_extent(const PointCloud& cloud, double target_longest_dim);

/// Wraps a PLY file as an external (pre-sampled) asset.
ObjectAsset load_external_asset(const std::filesystem::path& path,
                                const SemanticClass& object_class);

/// Immutable pool of insertion candidates with a generated/external source mix.
struct ObjectBank {
  std::vector<ObjectAsset> assets;
  double weight_generated = 1.0;
  double weight_external = 1.0;
  std::map<SemanticClass, std::vector<std::size_t>> by_class;
  std::vector<std::size_t> generated_indices;
  std::vector<std::size_t> external_indices;

  bool empty() const { return assets.empty(); }
};

/// Builds the indexes and validates assets and weights (non-negative, not
/// both zero -> InvalidConfig).
ObjectBank make_bank(std::vector<ObjectAsset> assets, double weight_generated,
                     double weight_external);

/// Picks a source by mix weights (a source with no assets gets weight 0),
/// then uniformly among that source's assets. Deterministic given the stream.
const ObjectAsset& draw_asset(const ObjectBank& bank, Rng& rng);

/// Artifact default target sizes (longest dimension, meters) for procedural
/// assets; freely editable via configuration.
const std::map<SemanticClass, double>& default_size_table();

// ---------------------------------------------------------------------------
// Generation requests and the on-disk bank index (bank.json)
// ---------------------------------------------------------------------------

struct GenerationRequest {
  GeneratorSpec spec;
  SemanticClass object_class;
  std::string prompt;  // single-word text prompt; defaults to the class name
};

/// Parses a JSON array of generation requests; unknown keys are rejected.
std::vector<GenerationRequest> parse_generation_requests(const std::string& json_bytes);

inline constexpr const char* kBankIndexName = "bank.json";

struct BankIndexEntry {
  std::string file;  // PLY file name relative to the bank directory
  SemanticClass object_class;
  Provenance provenance = Provenance::generated;
  std::string generator_name;
  std::uint64_t seed = 0;
  std::string prompt;
};

struct BankIndex {
  double weight_generated = 1.0;
  double weight_external = 1.0;
  std::vector<BankIndexEntry> entries;
};

BankIndex read_bank_index(const std::string& json_bytes);
std::string write_bank_index(const BankIndex& index);

/// Reads bank.json plus every referenced PLY into an ObjectBank.
ObjectBank load_bank(const std::filesystem::path& dir);

}  // namespace pcx::synth
