// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>

#include <doctest.h>

#include "pcx/io.hpp"
#include "pcx/synthesis.hpp"
#include "test_util.hpp"

using namespace pcx;
using namespace pcx::synth;

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

GeneratorSpec sphere_spec(std::size_t n, std::uint64_t seed, double radius) {
  GeneratorSpec spec;
  spec.n_points = n;
  spec.seed = seed;
  spec.params = SphereParams{radius};
  return spec;
}

// Independent straight-line re-derivation of the documented lattice noise:
// permutation = 0..255 Fisher-Yates-shuffled by splitmix64(seed), doubled;
// fade 6t^5-15t^4+10t^3; gradients = Perlin's reference hash&15 table.
// Written flat on purpose; shares no code with the library.
double flat_lattice_noise(std::uint64_t seed, double x, double y, double z) {
  int perm[512];
  {
    int table[256];
    for (int i = 0; i < 256; ++i) table[i] = i;
    std::uint64_t state = seed;
    auto next_u64 = [&state]() {
      state += 0x9E3779B97F4A7C15ull;
      std::uint64_t v = state;
      v = (v ^ (v >> 30)) * 0xBF58476D1CE4E5B9ull;
      v = (v ^ (v >> 27)) * 0x94D049BB133111EBull;
      return v ^ (v >> 31);
    };
    auto index_below = [&](std::uint64_t n) {
      const std::uint64_t threshold = (0 - n) % n;
      for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
      }
    };
    for (int i = 255; i > 0; --i) {
      const int j = static_cast<int>(index_below(static_cast<std::uint64_t>(i) + 1));
      const int tmp = table[i];
      table[i] = table[j];
      table[j] = tmp;
    }
    for (int i = 0; i < 512; ++i) perm[i] = table[i & 255];
  }

  const double fx = std::floor(x), fy = std::floor(y), fz = std::floor(z);
  const int xi = static_cast<int>(fx) & 255;
  const int yi = static_cast<int>(fy) & 255;
  const int zi = static_cast<int>(fz) & 255;
  const double dx = x - fx, dy = y - fy, dz = z - fz;
  const double u = dx * dx * dx * (dx * (dx * 6 - 15) + 10);
  const double v = dy * dy * dy * (dy * (dy * 6 - 15) + 10);
  const double w = dz * dz * dz * (dz * (dz * 6 - 15) + 10);

  auto g = [&](int hash, double px, double py, double pz) {
    const int h = hash & 15;
    const double a = h < 8 ? px : py;
    const double b = h < 4 ? py : (h == 12 || h == 14 ? px : pz);
    return ((h & 1) == 0 ? a : -a) + ((h & 2) == 0 ? b : -b);
  };

  const int A = perm[xi] + yi, AA = perm[A] + zi, AB = perm[A + 1] + zi;
  const int B = perm[xi + 1] + yi, BA = perm[B] + zi, BB = perm[B + 1] + zi;

  auto mix = [](double t, double p, double q) { return p + t * (q - p); };
  return mix(w,
             mix(v, mix(u, g(perm[AA], dx, dy, dz), g(perm[BA], dx - 1, dy, dz)),
                 mix(u, g(perm[AB], dx, dy - 1, dz), g(perm[BB], dx - 1, dy - 1, dz))),
             mix(v,
                 mix(u, g(perm[AA + 1], dx, dy, dz - 1), g(perm[BA + 1], dx - 1, dy, dz - 1)),
                 mix(u, g(perm[AB + 1], dx, dy - 1, dz - 1),
                     g(perm[BB + 1], dx - 1, dy - 1, dz - 1))));
}

}  // namespace

TEST_CASE("sphere_surface points sit on the sphere") {
  const ObjectAsset asset = generate(sphere_spec(1000, 7, 1.0), "chair", "chair");
  REQUIRE(asset.cloud.size() == 1000);
  for (const Point3& p : asset.cloud.points) {
    CHECK(std::abs(norm(p) - 1.0) < 1e-9);
  }
  CHECK(asset.provenance == Provenance::generated);
  CHECK(asset.generator_name == std::string("sphere_surface"));
  CHECK(asset.seed == 7);
}

TEST_CASE("generators are deterministic, bit for bit") {
  std::vector<GeneratorSpec> specs;
  specs.push_back(sphere_spec(500, 7, 1.0));
  {
    GeneratorSpec s;
    s.n_points = 400;
    s.seed = 3;
    s.params = BoxParams{{0.8, 0.6, 0.75}};
    specs.push_back(s);
  }
  {
    GeneratorSpec s;
    s.n_points = 300;
    s.seed = 11;
    s.params = PerlinBlobParams{0.5, 0.15, 2.5, 3};
    specs.push_back(s);
  }
  {
    GeneratorSpec s;
    s.n_points = 600;
    s.seed = 5;
    IfsParams ifs;
    ifs.maps.push_back(IfsMap::contraction_toward({0, 0, 0}, 0.5));
    ifs.maps.push_back(IfsMap::contraction_toward({1, 0, 0}, 0.5));
    ifs.maps.push_back(IfsMap::contraction_toward({0, 1, 0}, 0.5));
    s.params = ifs;
    specs.push_back(s);
  }
  for (const GeneratorSpec& spec : specs) {
    const ObjectAsset a = generate(spec, "chair", "chair");
    const ObjectAsset b = generate(spec, "chair", "chair");
    REQUIRE(a.cloud.size() == spec.n_points);
    CHECK(io::write_ply(a.cloud, io::PlyFormat::binary_little_endian) ==
          io::write_ply(b.cloud, io::PlyFormat::binary_little_endian));
    for (std::size_t i = 0; i < a.cloud.size(); ++i) {
      CHECK(testutil::points_equal(a.cloud.points[i], b.cloud.points[i]));
    }
  }
}

TEST_CASE("box_surface points lie on the box boundary") {
  GeneratorSpec spec;
  spec.n_points = 500;
  spec.seed = 3;
  spec.params = BoxParams{{0.8, 0.6, 0.75}};
  const ObjectAsset asset = generate(spec, "table", "table");
  for (const Point3& p : asset.cloud.points) {
    const bool on_x = std::abs(std::abs(p.x) - 0.4) < 1e-12;
    const bool on_y = std::abs(std::abs(p.y) - 0.3) < 1e-12;
    const bool on_z = std::abs(std::abs(p.z) - 0.375) < 1e-12;
    CHECK((on_x || on_y || on_z));
    CHECK(std::abs(p.x) <= 0.4 + 1e-12);
    CHECK(std::abs(p.y) <= 0.3 + 1e-12);
    CHECK(std::abs(p.z) <= 0.375 + 1e-12);
  }
}

TEST_CASE("perlin_displace with amplitude 0 is the exact identity") {
  pcx::Rng rng(401);
  const PointCloud base = testutil::random_cloud(rng, 64, false);
  const PointCloud out = perlin_displace(base, 0.0, 2.0, 3, 9);
  CHECK(testutil::clouds_equal(out, base));
}

TEST_CASE("perlin_displace keeps radii within +-amplitude") {
  GeneratorSpec spec;
  spec.n_points = 2000;
  spec.seed = 11;
  spec.params = PerlinBlobParams{0.5, 0.15, 2.5, 4};
  const ObjectAsset asset = generate(spec, "sofa", "sofa");
  for (const Point3& p : asset.cloud.points) {
    const double r = norm(p);
    CHECK(r >= 0.5 - 0.15 - 1e-12);
    CHECK(r <= 0.5 + 0.15 + 1e-12);
  }
}

TEST_CASE("lattice noise matches an independent scalar re-derivation") {
  const PerlinNoise noise(1234);
  pcx::Rng rng(402);
  // 16 fixed probe points spread over several lattice cells
  for (int i = 0; i < 16; ++i) {
    const double x = rng.uniform(-8.0, 8.0);
    const double y = rng.uniform(-8.0, 8.0);
    const double z = rng.uniform(-8.0, 8.0);
    const double expected = flat_lattice_noise(1234, x, y, z);
    CHECK(noise.noise(x, y, z) == doctest::Approx(expected).epsilon(1e-15));
  }
}

TEST_CASE("single-octave lattice noise stays inside [-1, 1]") {
  const PerlinNoise noise(77);
  pcx::Rng rng(403);
  for (int i = 0; i < 20000; ++i) {
    const double v =
        noise.noise(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20));
    CHECK(v <= 1.0);
    CHECK(v >= -1.0);
  }
}

TEST_CASE("ifs_fractal attractor stays in the hull of the map fixed points") {
  // four maps contracting by 0.5 toward the vertices of a regular tetrahedron
  const std::array<Point3, 4> verts = {Point3{1, 1, 1}, Point3{1, -1, -1},
                                       Point3{-1, 1, -1}, Point3{-1, -1, 1}};
  GeneratorSpec spec;
  spec.n_points = 4000;
  spec.seed = 5;
  IfsParams ifs;
  for (const Point3& v : verts) ifs.maps.push_back(IfsMap::contraction_toward(v, 0.5));
  ifs.burn_in = 20;
  spec.params = ifs;

  const ObjectAsset asset = generate(spec, "clutter", "clutter");

  // barycentric membership test against the analytic hull
  const Point3 d1 = verts[0] - verts[3];
  const Point3 d2 = verts[1] - verts[3];
  const Point3 d3 = verts[2] - verts[3];
  auto det3 = [](const Point3& a, const Point3& b, const Point3& c) {
    return a.x * (b.y * c.z - b.z * c.y) - a.y * (b.x * c.z - b.z * c.x) +
           a.z * (b.x * c.y - b.y * c.x);
  };
  const double d = det3(d1, d2, d3);
  REQUIRE(std::abs(d) > 1e-9);
  for (const Point3& p : asset.cloud.points) {
    const Point3 rhs = p - verts[3];
    const double l1 = det3(rhs, d2, d3) / d;
    const double l2 = det3(d1, rhs, d3) / d;
    const double l3 = det3(d1, d2, rhs) / d;
    const double l4 = 1.0 - l1 - l2 - l3;
    CHECK(l1 >= -1e-9);
    CHECK(l2 >= -1e-9);
    CHECK(l3 >= -1e-9);
    CHECK(l4 >= -1e-9);
  }
}

TEST_CASE("IfsMap algebra") {
  const IfsMap m = IfsMap::contraction_toward({2, -1, 3}, 0.5);
  CHECK(m.contraction_factor() == doctest::Approx(0.5).epsilon(1e-12));
  const Point3 fp = m.fixed_point();
  CHECK(fp.x == doctest::Approx(2.0));
  CHECK(fp.y == doctest::Approx(-1.0));
  CHECK(fp.z == doctest::Approx(3.0));

  // anisotropic linear part: spectral norm is the largest singular value
  IfsMap aniso;
  aniso.linear = {0.3, 0, 0, 0, 0.9, 0, 0, 0, 0.5};
  CHECK(aniso.contraction_factor() == doctest::Approx(0.9).epsilon(1e-12));

  // scaled rotation
  const double c = 0.8 * std::cos(0.7), s = 0.8 * std::sin(0.7);
  IfsMap rot;
  rot.linear = {c, -s, 0, s, c, 0, 0, 0, 0.8};
  CHECK(rot.contraction_factor() == doctest::Approx(0.8).epsilon(1e-9));
}

TEST_CASE("validate_spec names the violated bound") {
  CHECK(code_of([&] { validate_spec(sphere_spec(0, 1, 1.0)); }) == ErrorCode::InvalidSpec);
  CHECK(code_of([&] { validate_spec(sphere_spec(10, 1, 0.0)); }) == ErrorCode::InvalidSpec);

  GeneratorSpec box;
  box.n_points = 10;
  box.params = BoxParams{{1, -1, 1}};
  CHECK(code_of([&] { validate_spec(box); }) == ErrorCode::InvalidSpec);

  GeneratorSpec blob;
  blob.n_points = 10;
  blob.params = PerlinBlobParams{0.5, 0.6, 2.0, 3};  // amplitude >= base radius
  CHECK(code_of([&] { validate_spec(blob); }) == ErrorCode::InvalidSpec);
  blob.params = PerlinBlobParams{0.5, 0.1, 2.0, 0};  // octaves < 1
  CHECK(code_of([&] { validate_spec(blob); }) == ErrorCode::InvalidSpec);

  GeneratorSpec ifs;
  ifs.n_points = 10;
  IfsParams params;
  params.maps.push_back(IfsMap::contraction_toward({0, 0, 0}, 1.0));  // not contractive
  ifs.params = params;
  CHECK(code_of([&] { validate_spec(ifs); }) == ErrorCode::InvalidSpec);
  params.maps.clear();
  ifs.params = params;  // no maps at all
  CHECK(code_of([&] { validate_spec(ifs); }) == ErrorCode::InvalidSpec);

  try {
    validate_spec(sphere_spec(10, 1, -2.0));
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("radius") != std::string::npos);
  }
}

TEST_CASE("normalize_to_extent") {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {2, 0, 0}, {0, 1, 0}, {0, 0, 1}};  // AABB 2 x 1 x 1
  const PointCloud scaled = normalize_to_extent(cloud, 1.0);
  const Point3 extent = aabb(scaled).extent();
  CHECK(extent.x == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(extent.y == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(extent.z == doctest::Approx(0.5).epsilon(1e-9));

  // already at target: identity within 1e-12
  const PointCloud same = normalize_to_extent(scaled, 1.0);
  for (std::size_t i = 0; i < same.size(); ++i) {
    CHECK(std::abs(same.points[i].x - scaled.points[i].x) < 1e-12);
    CHECK(std::abs(same.points[i].y - scaled.points[i].y) < 1e-12);
    CHECK(std::abs(same.points[i].z - scaled.points[i].z) < 1e-12);
  }

  // idempotence within 1e-9
  pcx::Rng rng(404);
  for (int trial = 0; trial < 10; ++trial) {
    const PointCloud c = testutil::random_cloud(rng, 2 + rng.uniform_index(30), false);
    const PointCloud once = normalize_to_extent(c, 1.3);
    const PointCloud again = normalize_to_extent(once, 1.3);
    for (std::size_t i = 0; i < once.size(); ++i) {
      CHECK(std::abs(once.points[i].x - again.points[i].x) < 1e-9);
    }
  }

  PointCloud degenerate;
  degenerate.points = {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
  CHECK(code_of([&] { normalize_to_extent(degenerate, 1.0); }) ==
        ErrorCode::DegenerateCloud);
  CHECK(code_of([&] { normalize_to_extent(PointCloud{}, 1.0); }) == ErrorCode::EmptyCloud);
}

TEST_CASE("load_external_asset") {
  testutil::TempDir tmp("external");
  pcx::Rng rng(405);
  const PointCloud cloud = testutil::random_cloud(rng, 1024, false);
  io::write_ply_file(cloud, io::PlyFormat::binary_little_endian, tmp.path() / "chair.ply");

  const ObjectAsset asset = load_external_asset(tmp.path() / "chair.ply", "chair");
  CHECK(asset.cloud.size() == 1024);
  CHECK(asset.provenance == Provenance::external);
  CHECK(asset.object_class == "chair");

  CHECK(code_of([&] { load_external_asset(tmp.path() / "absent.ply", "chair"); }) ==
        ErrorCode::MissingFile);

  std::ofstream(tmp.path() / "broken.ply") << "not a ply\n";
  CHECK(code_of([&] { load_external_asset(tmp.path() / "broken.ply", "chair"); }) ==
        ErrorCode::MalformedHeader);
}

TEST_CASE("make_bank validation") {
  std::vector<ObjectAsset> assets;
  assets.push_back(generate(sphere_spec(10, 1, 1.0), "chair", "chair"));
  CHECK(code_of([&] { make_bank(assets, -1.0, 1.0); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([&] { make_bank(assets, 0.0, 0.0); }) == ErrorCode::InvalidConfig);

  const ObjectBank bank = make_bank(assets, 1.0, 1.0);
  CHECK(bank.assets.size() == 1);
  CHECK(bank.by_class.at("chair").size() == 1);
  CHECK(bank.generated_indices.size() == 1);
  CHECK(bank.external_indices.empty());
}

TEST_CASE("draw_asset source selection") {
  pcx::Rng seed_rng(406);

  // single-asset bank: always that asset
  ObjectBank single = make_bank({generate(sphere_spec(10, 1, 1.0), "chair", "chair")}, 1, 1);
  pcx::Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    CHECK(draw_asset(single, rng).object_class == "chair");
  }

  // weights (1, 0): only generated assets are ever drawn
  std::vector<ObjectAsset> mixed;
  mixed.push_back(generate(sphere_spec(10, 1, 1.0), "chair", "chair"));
  ObjectAsset external = generate(sphere_spec(10, 2, 1.0), "table", "table");
  external.provenance = Provenance::external;
  external.generator_name.clear();
  external.seed = 0;
  mixed.push_back(external);
  const ObjectBank gen_only = make_bank(mixed, 1.0, 0.0);
  pcx::Rng rng2(2);
  for (int i = 0; i < 200; ++i) {
    CHECK(draw_asset(gen_only, rng2).provenance == Provenance::generated);
  }

  // a nonzero weight on an empty source is renormalized away
  const ObjectBank only_external = make_bank({external}, 1.0, 1.0);
  pcx::Rng rng3(3);
  for (int i = 0; i < 50; ++i) {
    CHECK(draw_asset(only_external, rng3).provenance == Provenance::external);
  }

  CHECK(code_of([&] {
          pcx::Rng r(4);
          const ObjectBank empty = make_bank({}, 1.0, 1.0);
          draw_asset(empty, r);
        }) == ErrorCode::EmptyBank);
}

TEST_CASE("draw_asset frequencies follow the mix weights") {
  std::vector<ObjectAsset> assets;
  assets.push_back(generate(sphere_spec(10, 1, 1.0), "chair", "chair"));
  ObjectAsset external = generate(sphere_spec(10, 2, 1.0), "table", "table");
  external.provenance = Provenance::external;
  assets.push_back(external);
  const ObjectBank bank = make_bank(assets, 1.0, 1.0);

  // binomial(n = 10000, p = 0.5): 3 sigma = 150
  pcx::Rng rng(407);
  int generated = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    generated += draw_asset(bank, rng).provenance == Provenance::generated;
  }
  CHECK(std::abs(generated - 5000) <= 150);
}

TEST_CASE("generation requests parse and reject unknown keys") {
  const std::string good = R"([
    {"kind": "sphere_surface", "n_points": 100, "seed": 7, "radius": 1.0,
     "class": "chair"},
    {"kind": "ifs_fractal", "n_points": 50, "seed": 3, "burn_in": 25,
     "maps": [{"scale": 0.5, "target": [0, 0, 0]},
              {"linear": [[0.4, 0, 0], [0, 0.4, 0], [0, 0, 0.4]],
               "offset": [0.6, 0, 0]}],
     "class": "clutter", "prompt": "clutter"}
  ])";
  const auto requests = parse_generation_requests(good);
  REQUIRE(requests.size() == 2);
  CHECK(requests[0].prompt == "chair");  // defaults to the class
  CHECK(std::get<IfsParams>(requests[1].spec.params).burn_in == 25);

  CHECK(code_of([&] {
          parse_generation_requests(
              R"([{"kind": "sphere_surface", "n_points": 1, "seed": 0,
                   "radius": 1.0, "class": "chair", "bogus": 1}])");
        }) == ErrorCode::SchemaViolation);
  CHECK(code_of([&] {
          parse_generation_requests(
              R"([{"kind": "warp_core", "n_points": 1, "seed": 0, "class": "c"}])");
        }) == ErrorCode::SchemaViolation);
}

TEST_CASE("bank index round trip and load_bank") {
  testutil::TempDir tmp("bank");
  const ObjectAsset a = generate(sphere_spec(64, 7, 1.0), "chair", "chair");
  const ObjectAsset b = generate(sphere_spec(32, 9, 0.5), "table", "table");
  io::write_ply_file(a.cloud, io::PlyFormat::binary_little_endian, tmp.path() / "a.ply");
  io::write_ply_file(b.cloud, io::PlyFormat::binary_little_endian, tmp.path() / "b.ply");

  BankIndex index;
  index.entries.push_back({"a.ply", "chair", Provenance::generated, "sphere_surface", 7, "chair"});
  index.entries.push_back({"b.ply", "table", Provenance::generated, "sphere_surface", 9, "table"});
  const std::string bytes = write_bank_index(index);
  io::write_file_atomic(tmp.path() / kBankIndexName, bytes);

  const BankIndex back = read_bank_index(bytes);
  CHECK(write_bank_index(back) == bytes);

  const ObjectBank bank = load_bank(tmp.path());
  REQUIRE(bank.assets.size() == 2);
  CHECK(bank.assets[0].cloud.size() == 64);
  CHECK(bank.assets[1].object_class == "table");

  CHECK(code_of([&] { load_bank(tmp.path() / "absent"); }) == ErrorCode::MissingFile);
}
