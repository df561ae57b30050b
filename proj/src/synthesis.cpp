// SPDX-License-Identifier: Apache-2.0

#include "pcx/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "pcx/io.hpp"
#include "json_util.hpp"

namespace pcx::synth {

using jsonu::Json;

// ---------------------------------------------------------------------------
// IFS maps
// ---------------------------------------------------------------------------

IfsMap IfsMap::contraction_toward(const Point3& target, double factor) {
  IfsMap m;
  m.linear = {factor, 0, 0, 0, factor, 0, 0, 0, factor};
  m.offset = target * (1.0 - factor);
  return m;
}

Point3 IfsMap::apply(const Point3& p) const {
  const auto& a = linear;
  return {a[0] * p.x + a[1] * p.y + a[2] * p.z + offset.x,
          a[3] * p.x + a[4] * p.y + a[5] * p.z + offset.y,
          a[6] * p.x + a[7] * p.y + a[8] * p.z + offset.z};
}

namespace {

double det3(const std::array<double, 9>& m) {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

/// Largest eigenvalue of a symmetric 3x3 matrix, closed-form trigonometric
/// method (no iteration, deterministic to roundoff).
double max_eigenvalue_sym3(const std::array<double, 9>& b) {
  const double p1 = b[1] * b[1] + b[2] * b[2] + b[5] * b[5];
  const double q = (b[0] + b[4] + b[8]) / 3.0;
  if (p1 == 0.0) {
    return std::max({b[0], b[4], b[8]});  // already diagonal
  }
  const double p2 = (b[0] - q) * (b[0] - q) + (b[4] - q) * (b[4] - q) +
                    (b[8] - q) * (b[8] - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  std::array<double, 9> scaled = b;
  scaled[0] -= q;
  scaled[4] -= q;
  scaled[8] -= q;
  for (double& v : scaled) v /= p;
  const double r = std::clamp(det3(scaled) / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  return q + 2.0 * p * std::cos(phi);
}

}  // namespace

double IfsMap::contraction_factor() const {
  // spectral norm = sqrt(lambda_max(A^T A))
  const auto& a = linear;
  std::array<double, 9> ata{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a[k * 3 + i] * a[k * 3 + j];
      ata[i * 3 + j] = s;
    }
  }
  return std::sqrt(std::max(0.0, max_eigenvalue_sym3(ata)));
}

Point3 IfsMap::fixed_point() const {
  // (I - A) x = t by Cramer's rule
  const auto& a = linear;
  const std::array<double, 9> m = {1.0 - a[0], -a[1],      -a[2],
                                   -a[3],      1.0 - a[4], -a[5],
                                   -a[6],      -a[7],      1.0 - a[8]};
  const double d = det3(m);
  if (std::abs(d) < 1e-300) {
    throw Error(ErrorCode::InvalidSpec, "IFS map has no unique fixed point");
  }
  auto replace_col = [&](int col, const Point3& t) {
    std::array<double, 9> r = m;
    r[col] = t.x;
    r[col + 3] = t.y;
    r[col + 6] = t.z;
    return r;
  };
  return {det3(replace_col(0, offset)) / d, det3(replace_col(1, offset)) / d,
          det3(replace_col(2, offset)) / d};
}

// ---------------------------------------------------------------------------
// Spec validation
// ---------------------------------------------------------------------------

const char* GeneratorSpec::kind_name() const {
  switch (params.index()) {
    case 0: return "sphere_surface";
    case 1: return "box_surface";
    case 2: return "perlin_blob";
    default: return "ifs_fractal";
  }
}

void validate_spec(const GeneratorSpec& spec) {
  auto bad = [](const std::string& msg) -> void {
    throw Error(ErrorCode::InvalidSpec, msg);
  };
  if (spec.n_points < 1) bad("n_points must be >= 1");

  if (const auto* sphere = std::get_if<SphereParams>(&spec.params)) {
    if (!(sphere->radius > 0.0)) bad("sphere radius must be > 0");
  } else if (const auto* box = std::get_if<BoxParams>(&spec.params)) {
    if (!(box->extents.x > 0.0 && box->extents.y > 0.0 && box->extents.z > 0.0)) {
      bad("box extents must all be > 0");
    }
  } else if (const auto* blob = std::get_if<PerlinBlobParams>(&spec.params)) {
    if (!(blob->base_radius > 0.0)) bad("perlin base_radius must be > 0");
    if (!(blob->amplitude >= 0.0)) bad("perlin amplitude must be >= 0");
    if (!(blob->amplitude < blob->base_radius)) {
      bad("perlin amplitude must be < base_radius to avoid self-inversion");
    }
    if (!(blob->frequency > 0.0)) bad("perlin frequency must be > 0");
    if (blob->octaves < 1) bad("perlin octaves must be >= 1");
  } else if (const auto* ifs = std::get_if<IfsParams>(&spec.params)) {
    if (ifs->maps.empty()) bad("ifs needs at least one map");
    if (ifs->burn_in < 0) bad("ifs burn_in must be >= 0");
    for (std::size_t i = 0; i < ifs->maps.size(); ++i) {
      const double factor = ifs->maps[i].contraction_factor();
      if (!(factor > 0.0 && factor < 1.0)) {
        bad("ifs map " + std::to_string(i) + " has contraction factor " +
            std::to_string(factor) + ", required in (0,1)");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Perlin noise
// ---------------------------------------------------------------------------

PerlinNoise::PerlinNoise(std::uint64_t seed) {
  std::array<std::uint8_t, 256> table;
  std::iota(table.begin(), table.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 255; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i + 1));
    std::swap(table[i], table[j]);
  }
  for (std::size_t i = 0; i < 512; ++i) perm_[i] = table[i & 255];
}

namespace {

// lattice cell index mod 256, well defined for the whole double range
int lattice_index(double floored) {
  return static_cast<int>(floored - std::floor(floored / 256.0) * 256.0) & 255;
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double lerp(double t, double a, double b) { return a + t * (b - a); }

// the 12 cube-edge gradient directions, duplicated to 16 cases
double grad(int hash, double x, double y, double z) {
  switch (hash & 15) {
    case 0: return x + y;
    case 1: return -x + y;
    case 2: return x - y;
    case 3: return -x - y;
    case 4: return x + z;
    case 5: return -x + z;
    case 6: return x - z;
    case 7: return -x - z;
    case 8: return y + z;
    case 9: return -y + z;
    case 10: return y - z;
    case 11: return -y - z;
    case 12: return x + y;
    case 13: return -y + z;
    case 14: return -x + y;
    default: return -y - z;
  }
}

}  // namespace

double PerlinNoise::noise(double x, double y, double z) const {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double fz = std::floor(z);
  const int xi = lattice_index(fx);
  const int yi = lattice_index(fy);
  const int zi = lattice_index(fz);
  x -= fx;
  y -= fy;
  z -= fz;
  const double u = fade(x);
  const double v = fade(y);
  const double w = fade(z);

  const auto& p = perm_;
  const int a = p[xi] + yi;
  const int aa = p[a] + zi;
  const int ab = p[a + 1] + zi;
  const int b = p[xi + 1] + yi;
  const int ba = p[b] + zi;
  const int bb = p[b + 1] + zi;

  return lerp(w,
              lerp(v, lerp(u, grad(p[aa], x, y, z), grad(p[ba], x - 1, y, z)),
                   lerp(u, grad(p[ab], x, y - 1, z), grad(p[bb], x - 1, y - 1, z))),
              lerp(v, lerp(u, grad(p[aa + 1], x, y, z - 1), grad(p[ba + 1], x - 1, y, z - 1)),
                   lerp(u, grad(p[ab + 1], x, y - 1, z - 1),
                        grad(p[bb + 1], x - 1, y - 1, z - 1))));
}

double PerlinNoise::fbm(const Point3& p, double frequency, int octaves) const {
  double sum = 0.0;
  double weight = 1.0;
  double weight_total = 0.0;
  double freq = frequency;
  for (int o = 0; o < octaves; ++o) {
    sum += weight * noise(p.x * freq, p.y * freq, p.z * freq);
    weight_total += weight;
    weight *= 0.5;
    freq *= 2.0;
  }
  return sum / weight_total;
}

PointCloud perlin_displace(const PointCloud& base, double amplitude, double frequency,
                           int octaves, std::uint64_t seed) {
  if (amplitude < 0.0) {
    throw Error(ErrorCode::InvalidSpec, "perlin amplitude must be >= 0");
  }
  if (octaves < 1) {
    throw Error(ErrorCode::InvalidSpec, "perlin octaves must be >= 1");
  }
  const PerlinNoise noise(seed);
  PointCloud out = base;
  for (Point3& p : out.points) {
    const double r = norm(p);
    if (r == 0.0) continue;  // no radial direction at the origin
    const double displaced = amplitude * noise.fbm(p, frequency, octaves);
    p = p * ((r + displaced) / r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

namespace {

void sample_sphere_surface(PointCloud& cloud, std::size_t n, double radius, Rng& rng) {
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = radius * (2.0 * rng.uniform01() - 1.0);
    const double phi = 2.0 * std::numbers::pi * rng.uniform01();
    const double rho = std::sqrt(std::max(0.0, radius * radius - z * z));
    cloud.points.push_back({rho * std::cos(phi), rho * std::sin(phi), z});
  }
}

PointCloud generate_sphere(const SphereParams& params, std::size_t n, std::uint64_t seed) {
  PointCloud cloud;
  Rng rng(mix_seed(seed, fnv1a64("sphere_surface")));
  sample_sphere_surface(cloud, n, params.radius, rng);
  return cloud;
}

PointCloud generate_box(const BoxParams& params, std::size_t n, std::uint64_t seed) {
  const double ex = params.extents.x, ey = params.extents.y, ez = params.extents.z;
  // area-weighted choice over the six faces, fixed order +-z, +-y, +-x
  const std::array<double, 6> areas = {ex * ey, ex * ey, ex * ez, ex * ez, ey * ez, ey * ez};
  std::array<double, 6> cumulative{};
  double total = 0.0;
  for (std::size_t f = 0; f < 6; ++f) {
    total += areas[f];
    cumulative[f] = total;
  }

  PointCloud cloud;
  cloud.points.reserve(n);
  Rng rng(mix_seed(seed, fnv1a64("box_surface")));
  for (std::size_t i = 0; i < n; ++i) {
    const double roll = rng.uniform01() * total;
    std::size_t face = 0;
    while (face < 5 && roll >= cumulative[face]) ++face;
    const double u = rng.uniform01() - 0.5;
    const double v = rng.uniform01() - 0.5;
    switch (face) {
      case 0: cloud.points.push_back({ex * u, ey * v, ez * 0.5}); break;
      case 1: cloud.points.push_back({ex * u, ey * v, -ez * 0.5}); break;
      case 2: cloud.points.push_back({ex * u, ey * 0.5, ez * v}); break;
      case 3: cloud.points.push_back({ex * u, -ey * 0.5, ez * v}); break;
      case 4: cloud.points.push_back({ex * 0.5, ey * u, ez * v}); break;
      default: cloud.points.push_back({-ex * 0.5, ey * u, ez * v}); break;
    }
  }
  return cloud;
}

PointCloud generate_perlin_blob(const PerlinBlobParams& params, std::size_t n,
                                std::uint64_t seed) {
  PointCloud base;
  Rng rng(mix_seed(seed, fnv1a64("perlin_base")));
  sample_sphere_surface(base, n, params.base_radius, rng);
  // noise table is seeded by the asset seed itself
  return perlin_displace(base, params.amplitude, params.frequency, params.octaves, seed);
}

PointCloud generate_ifs(const IfsParams& params, std::size_t n, std::uint64_t seed) {
  Rng rng(mix_seed(seed, fnv1a64("ifs_fractal")));
  Point3 state = params.maps.front().fixed_point();  // starts on the attractor
  const std::size_t k = params.maps.size();
  for (int i = 0; i < params.burn_in; ++i) {
    state = params.maps[rng.uniform_index(k)].apply(state);
  }
  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    state = params.maps[rng.uniform_index(k)].apply(state);
    cloud.points.push_back(state);
  }
  return cloud;
}

}  // namespace

ObjectAsset generate(const GeneratorSpec& spec, const SemanticClass& object_class,
                     const std::string& prompt) {
  validate_spec(spec);
  if (!is_valid_class_name(object_class)) {
    throw Error(ErrorCode::InvalidSpec,
                "\"" + object_class + "\" is not a valid class name");
  }

  ObjectAsset asset;
  asset.object_class = object_class;
  asset.provenance = Provenance::generated;
  asset.generator_name = spec.kind_name();
  asset.seed = spec.seed;
  asset.prompt = prompt.empty() ? object_class : prompt;

  if (const auto* sphere = std::get_if<SphereParams>(&spec.params)) {
    asset.cloud = generate_sphere(*sphere, spec.n_points, spec.seed);
  } else if (const auto* box = std::get_if<BoxParams>(&spec.params)) {
    asset.cloud = generate_box(*box, spec.n_points, spec.seed);
  } else if (const auto* blob = std::get_if<PerlinBlobParams>(&spec.params)) {
    asset.cloud = generate_perlin_blob(*blob, spec.n_points, spec.seed);
  } else {
    asset.cloud = generate_ifs(std::get<IfsParams>(spec.params), spec.n_points, spec.seed);
  }
  return asset;
}

// ---------------------------------------------------------------------------
// Sizing and external assets
// ---------------------------------------------------------------------------

PointCloud normalize_to_extent(const PointCloud& cloud, double target_longest_dim) {
  if (!(target_longest_dim > 0.0)) {
    throw Error(ErrorCode::InvalidScale, "target extent must be > 0");
  }
  const Point3 extent = aabb(cloud).extent();
  const double longest = std::max({extent.x, extent.y, extent.z});
  if (longest <= 0.0) {
    throw Error(ErrorCode::DegenerateCloud,
                "cloud has zero extent; need >= 2 non-coincident points");
  }
  return scale_about_centroid(cloud, target_longest_dim / longest);
}

ObjectAsset load_external_asset(const std::filesystem::path& path,
                                const SemanticClass& object_class) {
  if (!is_valid_class_name(object_class)) {
    throw Error(ErrorCode::InvalidSpec,
                "\"" + object_class + "\" is not a valid class name");
  }
  ObjectAsset asset;
  asset.cloud = io::read_ply_file(path);
  if (asset.cloud.empty()) {
    throw Error(ErrorCode::EmptyCloud, path.string() + " holds no points");
  }
  asset.object_class = object_class;
  asset.provenance = Provenance::external;
  return asset;
}

// ---------------------------------------------------------------------------
// Object bank
// ---------------------------------------------------------------------------

ObjectBank make_bank(std::vector<ObjectAsset> assets, double weight_generated,
                     double weight_external) {
  if (!(weight_generated >= 0.0) || !(weight_external >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "bank mix weights must be non-negative");
  }
  if (weight_generated == 0.0 && weight_external == 0.0) {
    throw Error(ErrorCode::InvalidConfig, "bank mix weights must not both be zero");
  }
  ObjectBank bank;
  bank.weight_generated = weight_generated;
  bank.weight_external = weight_external;
  bank.assets = std::move(assets);
  for (std::size_t i = 0; i < bank.assets.size(); ++i) {
    const ObjectAsset& a = bank.assets[i];
    if (a.cloud.empty()) {
      throw Error(ErrorCode::EmptyCloud, "bank asset " + std::to_string(i) + " has no points");
    }
    if (!is_valid_class_name(a.object_class)) {
      throw Error(ErrorCode::InvalidConfig,
                  "bank asset " + std::to_string(i) + " has invalid class \"" +
                      a.object_class + "\"");
    }
    bank.by_class[a.object_class].push_back(i);
    (a.provenance == Provenance::generated ? bank.generated_indices : bank.external_indices)
        .push_back(i);
  }
  return bank;
}

const ObjectAsset& draw_asset(const ObjectBank& bank, Rng& rng) {
  const double wg = bank.generated_indices.empty() ? 0.0 : bank.weight_generated;
  const double we = bank.external_indices.empty() ? 0.0 : bank.weight_external;
  const double total = wg + we;
  if (total <= 0.0) {
    throw Error(ErrorCode::EmptyBank, "no drawable assets for the configured mix weights");
  }
  const double roll = rng.uniform01() * total;
  const auto& indices = roll < wg ? bank.generated_indices : bank.external_indices;
  return bank.assets[indices[rng.uniform_index(indices.size())]];
}

const std::map<SemanticClass, double>& default_size_table() {
  static const std::map<SemanticClass, double> table = {
      {"chair", 0.9}, {"table", 1.6}, {"sofa", 2.0}};
  return table;
}

// ---------------------------------------------------------------------------
// JSON: generation requests and bank index
// ---------------------------------------------------------------------------

namespace {

Point3 parse_point(const Json& j, const std::string& path) {
  jsonu::require_array(j, path);
  if (j.size() != 3) jsonu::fail(path, "expected [x, y, z]");
  return {jsonu::get_finite_double(j[0], path + "/0"),
          jsonu::get_finite_double(j[1], path + "/1"),
          jsonu::get_finite_double(j[2], path + "/2")};
}

IfsMap parse_ifs_map(const Json& j, const std::string& path) {
  jsonu::require_object(j, path);
  if (j.contains("scale") || j.contains("target")) {
    jsonu::reject_unknown_keys(j, path, {"scale", "target"});
    const double scale =
        jsonu::get_finite_double(jsonu::require_key(j, path, "scale"), path + "/scale");
    return IfsMap::contraction_toward(
        parse_point(jsonu::require_key(j, path, "target"), path + "/target"), scale);
  }
  jsonu::reject_unknown_keys(j, path, {"linear", "offset"});
  const Json& lin = jsonu::require_key(j, path, "linear");
  jsonu::require_array(lin, path + "/linear");
  if (lin.size() != 3) jsonu::fail(path + "/linear", "expected 3 rows");
  IfsMap m;
  for (std::size_t r = 0; r < 3; ++r) {
    const std::string rpath = path + "/linear/" + std::to_string(r);
    jsonu::require_array(lin[r], rpath);
    if (lin[r].size() != 3) jsonu::fail(rpath, "expected 3 columns");
    for (std::size_t c = 0; c < 3; ++c) {
      m.linear[r * 3 + c] =
          jsonu::get_finite_double(lin[r][c], rpath + "/" + std::to_string(c));
    }
  }
  m.offset = parse_point(jsonu::require_key(j, path, "offset"), path + "/offset");
  return m;
}

GeneratorSpec parse_spec_object(const Json& j, const std::string& path,
                                std::initializer_list<const char*> extra_keys) {
  const std::string kind =
      jsonu::get_string(jsonu::require_key(j, path, "kind"), path + "/kind");

  GeneratorSpec spec;
  spec.n_points = jsonu::get_u64(jsonu::require_key(j, path, "n_points"), path + "/n_points");
  spec.seed = jsonu::get_u64(jsonu::require_key(j, path, "seed"), path + "/seed");

  auto allowed = [&](std::initializer_list<const char*> kind_keys) {
    std::vector<const char*> keys{"kind", "n_points", "seed"};
    keys.insert(keys.end(), kind_keys.begin(), kind_keys.end());
    keys.insert(keys.end(), extra_keys.begin(), extra_keys.end());
    jsonu::require_object(j, path);
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (std::none_of(keys.begin(), keys.end(),
                       [&](const char* k) { return it.key() == k; })) {
        jsonu::fail(path, "unknown key \"" + it.key() + "\"");
      }
    }
  };

  if (kind == "sphere_surface") {
    allowed({"radius"});
    SphereParams params;
    params.radius =
        jsonu::get_finite_double(jsonu::require_key(j, path, "radius"), path + "/radius");
    spec.params = params;
  } else if (kind == "box_surface") {
    allowed({"extents"});
    BoxParams params;
    params.extents = parse_point(jsonu::require_key(j, path, "extents"), path + "/extents");
    spec.params = params;
  } else if (kind == "perlin_blob") {
    allowed({"base_radius", "amplitude", "frequency", "octaves"});
    PerlinBlobParams params;
    params.base_radius = jsonu::get_finite_double(
        jsonu::require_key(j, path, "base_radius"), path + "/base_radius");
    params.amplitude = jsonu::get_finite_double(jsonu::require_key(j, path, "amplitude"),
                                                path + "/amplitude");
    params.frequency = jsonu::get_finite_double(jsonu::require_key(j, path, "frequency"),
                                                path + "/frequency");
    params.octaves = static_cast<int>(
        jsonu::get_u64(jsonu::require_key(j, path, "octaves"), path + "/octaves"));
    spec.params = params;
  } else if (kind == "ifs_fractal") {
    allowed({"maps", "burn_in"});
    IfsParams params;
    const Json& maps = jsonu::require_key(j, path, "maps");
    jsonu::require_array(maps, path + "/maps");
    for (std::size_t i = 0; i < maps.size(); ++i) {
      params.maps.push_back(parse_ifs_map(maps[i], path + "/maps/" + std::to_string(i)));
    }
    if (j.contains("burn_in")) {
      params.burn_in =
          static_cast<int>(jsonu::get_u64(j["burn_in"], path + "/burn_in"));
    }
    spec.params = params;
  } else {
    jsonu::fail(path + "/kind", "unknown generator kind \"" + kind + "\"");
  }
  return spec;
}

}  // namespace

std::vector<GenerationRequest> parse_generation_requests(const std::string& json_bytes) {
  const Json j = jsonu::parse(json_bytes, "generator spec");
  jsonu::require_array(j, "/");
  std::vector<GenerationRequest> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = "/" + std::to_string(i);
    GenerationRequest req;
    req.spec = parse_spec_object(j[i], path, {"class", "prompt"});
    req.object_class =
        jsonu::get_string(jsonu::require_key(j[i], path, "class"), path + "/class");
    req.prompt = j[i].contains("prompt")
                     ? jsonu::get_string(j[i]["prompt"], path + "/prompt")
                     : req.object_class;
    validate_spec(req.spec);
    if (!is_valid_class_name(req.object_class)) {
      jsonu::fail(path + "/class", "\"" + req.object_class + "\" is not a valid class name");
    }
    out.push_back(std::move(req));
  }
  return out;
}

BankIndex read_bank_index(const std::string& json_bytes) {
  const Json j = jsonu::parse(json_bytes, "bank index");
  jsonu::reject_unknown_keys(j, "/", {"weights", "assets"});

  BankIndex index;
  if (j.contains("weights")) {
    const Json& w = j["weights"];
    jsonu::reject_unknown_keys(w, "/weights", {"generated", "external"});
    index.weight_generated = jsonu::get_finite_double(
        jsonu::require_key(w, "/weights", "generated"), "/weights/generated");
    index.weight_external = jsonu::get_finite_double(
        jsonu::require_key(w, "/weights", "external"), "/weights/external");
  }

  const Json& assets = jsonu::require_key(j, "/", "assets");
  jsonu::require_array(assets, "/assets");
  for (std::size_t i = 0; i < assets.size(); ++i) {
    const std::string path = "/assets/" + std::to_string(i);
    const Json& a = assets[i];
    jsonu::reject_unknown_keys(
        a, path, {"file", "class", "provenance", "generator_name", "seed", "prompt"});
    BankIndexEntry entry;
    entry.file = jsonu::get_string(jsonu::require_key(a, path, "file"), path + "/file");
    entry.object_class =
        jsonu::get_string(jsonu::require_key(a, path, "class"), path + "/class");
    entry.provenance = provenance_from_name(
        jsonu::get_string(jsonu::require_key(a, path, "provenance"), path + "/provenance"));
    if (a.contains("generator_name")) {
      entry.generator_name = jsonu::get_string(a["generator_name"], path + "/generator_name");
    }
    if (a.contains("seed")) entry.seed = jsonu::get_u64(a["seed"], path + "/seed");
    if (a.contains("prompt")) entry.prompt = jsonu::get_string(a["prompt"], path + "/prompt");
    if (entry.provenance == Provenance::generated &&
        (entry.generator_name.empty() || !a.contains("seed"))) {
      jsonu::fail(path, "generated assets need generator_name and seed");
    }
    index.entries.push_back(std::move(entry));
  }
  return index;
}

std::string write_bank_index(const BankIndex& index) {
  Json j;
  j["weights"] = {{"generated", index.weight_generated},
                  {"external", index.weight_external}};
  Json assets = Json::array();
  for (const BankIndexEntry& e : index.entries) {
    Json a;
    a["file"] = e.file;
    a["class"] = e.object_class;
    a["provenance"] = provenance_name(e.provenance);
    a["generator_name"] = e.generator_name;
    a["seed"] = e.seed;
    a["prompt"] = e.prompt;
    assets.push_back(std::move(a));
  }
  j["assets"] = std::move(assets);
  return j.dump(2) + "\n";
}

ObjectBank load_bank(const std::filesystem::path& dir) {
  const BankIndex index = read_bank_index(io::read_file(dir / kBankIndexName));
  std::vector<ObjectAsset> assets;
  assets.reserve(index.entries.size());
  for (const BankIndexEntry& entry : index.entries) {
    ObjectAsset asset;
    asset.cloud = io::read_ply_file(dir / entry.file);
    if (asset.cloud.empty()) {
      throw Error(ErrorCode::EmptyCloud, (dir / entry.file).string() + " holds no points");
    }
    asset.object_class = entry.object_class;
    asset.provenance = entry.provenance;
    asset.generator_name = entry.generator_name;
    asset.seed = entry.seed;
    asset.prompt = entry.prompt;
    assets.push_back(std::move(asset));
  }
  return make_bank(std::move(assets), index.weight_generated, index.weight_external);
}

}  // namespace pcx::synth
