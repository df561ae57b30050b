// SPDX-License-Identifier: Apache-2.0

#include "pcx/io.hpp"

#include <algorithm>
#include <bit>
#include <cfloat>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json_util.hpp"

namespace pcx::io {

namespace fs = std::filesystem;
using jsonu::Json;

// ---------------------------------------------------------------------------
// byte-level helpers (explicit little-endian, independent of host order)
// ---------------------------------------------------------------------------

namespace {

std::uint32_t load_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t load_u64le(const unsigned char* p) {
  return static_cast<std::uint64_t>(load_u32le(p)) |
         (static_cast<std::uint64_t>(load_u32le(p + 4)) << 32);
}

float load_f32le(const unsigned char* p) { return std::bit_cast<float>(load_u32le(p)); }
double load_f64le(const unsigned char* p) { return std::bit_cast<double>(load_u64le(p)); }

void store_f32le(std::string& out, float v) {
  const std::uint32_t u = std::bit_cast<std::uint32_t>(v);
  out.push_back(static_cast<char>(u & 0xFF));
  out.push_back(static_cast<char>((u >> 8) & 0xFF));
  out.push_back(static_cast<char>((u >> 16) & 0xFF));
  out.push_back(static_cast<char>((u >> 24) & 0xFF));
}

// ---------------------------------------------------------------------------
// PLY header model
// ---------------------------------------------------------------------------

struct PlyProperty {
  std::string type;   // scalar type, or value type for lists
  std::string name;
  bool is_list = false;
  std::string count_type;  // lists only
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyHeader {
  PlyFormat format = PlyFormat::ascii;
  std::vector<PlyElement> elements;
  std::size_t header_bytes = 0;  // offset of the first body byte
  std::size_t header_lines = 0;  // line count including end_header
};

std::size_t scalar_size(const std::string& type) {
  if (type == "char" || type == "int8" || type == "uchar" || type == "uint8") return 1;
  if (type == "short" || type == "int16" || type == "ushort" || type == "uint16") return 2;
  if (type == "int" || type == "int32" || type == "uint" || type == "uint32") return 4;
  if (type == "float" || type == "float32") return 4;
  if (type == "double" || type == "float64") return 8;
  return 0;
}

bool is_float_type(const std::string& t) { return t == "float" || t == "float32"; }
bool is_double_type(const std::string& t) { return t == "double" || t == "float64"; }
bool is_uchar_type(const std::string& t) { return t == "uchar" || t == "uint8"; }

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

[[noreturn]] void header_error(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::MalformedHeader, "header line " + std::to_string(line) + ": " + msg);
}

PlyHeader parse_ply_header(const std::string& bytes) {
  PlyHeader header;
  std::size_t offset = 0;
  std::size_t line_no = 0;
  bool have_format = false;
  bool done = false;

  while (offset <= bytes.size()) {
    const std::size_t eol = bytes.find('\n', offset);
    if (eol == std::string::npos) {
      throw Error(ErrorCode::MalformedHeader,
                  "unexpected end of file at line " + std::to_string(line_no + 1) +
                      " before end_header");
    }
    std::string line = bytes.substr(offset, eol - offset);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    offset = eol + 1;
    ++line_no;

    if (line_no == 1) {
      if (line != "ply") header_error(1, "missing \"ply\" magic");
      continue;
    }

    const auto tokens = split_ws(line);
    if (tokens.empty()) header_error(line_no, "blank line in header");

    if (tokens[0] == "comment" || tokens[0] == "obj_info") continue;

    if (tokens[0] == "format") {
      if (have_format) header_error(line_no, "duplicate format line");
      if (tokens.size() != 3) header_error(line_no, "format line needs type and version");
      if (tokens[2] != "1.0") {
        throw Error(ErrorCode::UnsupportedFormat, "PLY version " + tokens[2]);
      }
      if (tokens[1] == "ascii") {
        header.format = PlyFormat::ascii;
      } else if (tokens[1] == "binary_little_endian") {
        header.format = PlyFormat::binary_little_endian;
      } else if (tokens[1] == "binary_big_endian") {
        throw Error(ErrorCode::UnsupportedFormat, "binary_big_endian is not supported");
      } else {
        header_error(line_no, "unknown format \"" + tokens[1] + "\"");
      }
      have_format = true;
      continue;
    }

    if (tokens[0] == "element") {
      if (tokens.size() != 3) header_error(line_no, "element line needs name and count");
      char* end = nullptr;
      const unsigned long long count = std::strtoull(tokens[2].c_str(), &end, 10);
      if (end == nullptr || *end != '\0') {
        header_error(line_no, "element count \"" + tokens[2] + "\" is not an integer");
      }
      header.elements.push_back({tokens[1], static_cast<std::size_t>(count), {}});
      continue;
    }

    if (tokens[0] == "property") {
      if (header.elements.empty()) header_error(line_no, "property before any element");
      PlyProperty prop;
      if (tokens.size() == 3) {
        prop.type = tokens[1];
        prop.name = tokens[2];
        if (scalar_size(prop.type) == 0) {
          header_error(line_no, "unknown property type \"" + prop.type + "\"");
        }
      } else if (tokens.size() == 5 && tokens[1] == "list") {
        prop.is_list = true;
        prop.count_type = tokens[2];
        prop.type = tokens[3];
        prop.name = tokens[4];
        if (scalar_size(prop.count_type) == 0 || scalar_size(prop.type) == 0) {
          header_error(line_no, "unknown list property types");
        }
      } else {
        header_error(line_no, "malformed property line");
      }
      header.elements.back().properties.push_back(std::move(prop));
      continue;
    }

    if (tokens[0] == "end_header") {
      done = true;
      break;
    }

    header_error(line_no, "unknown keyword \"" + tokens[0] + "\"");
  }

  if (!done) {
    throw Error(ErrorCode::MalformedHeader, "missing end_header");
  }
  if (!have_format) {
    throw Error(ErrorCode::MalformedHeader, "missing format line");
  }
  header.header_bytes = offset;
  header.header_lines = line_no;
  return header;
}

struct VertexLayout {
  std::size_t x = SIZE_MAX, y = SIZE_MAX, z = SIZE_MAX;  // property slots
  std::size_t red = SIZE_MAX, green = SIZE_MAX, blue = SIZE_MAX;
  bool has_color = false;
};

VertexLayout vertex_layout(const PlyElement& vertex) {
  VertexLayout layout;
  for (std::size_t i = 0; i < vertex.properties.size(); ++i) {
    const PlyProperty& prop = vertex.properties[i];
    if (prop.is_list) {
      throw Error(ErrorCode::UnsupportedFormat,
                  "list-typed vertex property \"" + prop.name + "\"");
    }
    const bool is_coord_type = is_float_type(prop.type) || is_double_type(prop.type);
    if (prop.name == "x" && is_coord_type) layout.x = i;
    if (prop.name == "y" && is_coord_type) layout.y = i;
    if (prop.name == "z" && is_coord_type) layout.z = i;
    if (prop.name == "red" && is_uchar_type(prop.type)) layout.red = i;
    if (prop.name == "green" && is_uchar_type(prop.type)) layout.green = i;
    if (prop.name == "blue" && is_uchar_type(prop.type)) layout.blue = i;
  }
  if (layout.x == SIZE_MAX || layout.y == SIZE_MAX || layout.z == SIZE_MAX) {
    throw Error(ErrorCode::MalformedHeader,
                "vertex element lacks float x/y/z properties");
  }
  layout.has_color =
      layout.red != SIZE_MAX && layout.green != SIZE_MAX && layout.blue != SIZE_MAX;
  return layout;
}

double parse_double_token(const std::string& tok, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == nullptr || *end != '\0' || tok.empty()) {
    throw Error(ErrorCode::TruncatedBody,
                "body line " + std::to_string(line_no) + ": \"" + tok + "\" is not a number");
  }
  return v;
}

std::uint8_t parse_uchar_token(const std::string& tok, std::size_t line_no) {
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (end == nullptr || *end != '\0' || tok.empty() || v < 0 || v > 255) {
    throw Error(ErrorCode::TruncatedBody,
                "body line " + std::to_string(line_no) + ": \"" + tok +
                    "\" is not an integer in [0,255]");
  }
  return static_cast<std::uint8_t>(v);
}

PointCloud read_ply_ascii(const std::string& bytes, const PlyHeader& header) {
  // Body rows are line-based, one row per element entry, in declared order.
  std::size_t offset = header.header_bytes;
  std::size_t line_no = header.header_lines;

  auto next_line = [&](std::string& line) -> bool {
    if (offset >= bytes.size()) return false;
    const std::size_t eol = bytes.find('\n', offset);
    const std::size_t end = (eol == std::string::npos) ? bytes.size() : eol;
    line = bytes.substr(offset, end - offset);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    offset = (eol == std::string::npos) ? bytes.size() : eol + 1;
    ++line_no;
    return true;
  };

  PointCloud cloud;
  for (const PlyElement& element : header.elements) {
    const bool is_vertex = element.name == "vertex";
    VertexLayout layout;
    if (is_vertex) {
      layout = vertex_layout(element);
      cloud.points.reserve(element.count);
      if (layout.has_color) cloud.colors.emplace();
    }
    for (std::size_t row = 0; row < element.count; ++row) {
      std::string line;
      if (!next_line(line)) {
        throw Error(ErrorCode::TruncatedBody,
                    "line " + std::to_string(line_no + 1) + ": header declares " +
                        std::to_string(element.count) + " \"" + element.name +
                        "\" rows, body ends after " + std::to_string(row));
      }
      if (!is_vertex) continue;  // skipped element, content not interpreted

      const auto tokens = split_ws(line);
      if (tokens.size() != element.properties.size()) {
        throw Error(ErrorCode::TruncatedBody,
                    "body line " + std::to_string(line_no) + ": expected " +
                        std::to_string(element.properties.size()) + " values, got " +
                        std::to_string(tokens.size()));
      }
      Point3 p{parse_double_token(tokens[layout.x], line_no),
               parse_double_token(tokens[layout.y], line_no),
               parse_double_token(tokens[layout.z], line_no)};
      cloud.points.push_back(p);
      if (layout.has_color) {
        cloud.colors->push_back({parse_uchar_token(tokens[layout.red], line_no),
                                 parse_uchar_token(tokens[layout.green], line_no),
                                 parse_uchar_token(tokens[layout.blue], line_no)});
      }
    }
    if (is_vertex) break;  // elements after vertex are ignored
  }
  return cloud;
}

PointCloud read_ply_binary(const std::string& bytes, const PlyHeader& header) {
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  std::size_t offset = header.header_bytes;

  auto need = [&](std::size_t n) {
    if (offset + n > bytes.size()) {
      throw Error(ErrorCode::TruncatedBody,
                  "byte offset " + std::to_string(bytes.size()) + ": need " +
                      std::to_string(offset + n - bytes.size()) + " more bytes");
    }
  };

  PointCloud cloud;
  for (const PlyElement& element : header.elements) {
    if (element.name != "vertex") {
      // Only fixed-size rows can be skipped without interpreting the data.
      std::size_t stride = 0;
      for (const PlyProperty& prop : element.properties) {
        if (prop.is_list) {
          throw Error(ErrorCode::UnsupportedFormat,
                      "cannot skip list-typed element \"" + element.name +
                          "\" preceding vertex data");
        }
        stride += scalar_size(prop.type);
      }
      need(element.count * stride);
      offset += element.count * stride;
      continue;
    }

    const VertexLayout layout = vertex_layout(element);
    std::vector<std::size_t> prop_offsets(element.properties.size(), 0);
    std::size_t stride = 0;
    for (std::size_t i = 0; i < element.properties.size(); ++i) {
      prop_offsets[i] = stride;
      stride += scalar_size(element.properties[i].type);
    }

    cloud.points.reserve(element.count);
    if (layout.has_color) cloud.colors.emplace();

    auto coord_at = [&](std::size_t slot) -> double {
      const unsigned char* p = data + offset + prop_offsets[slot];
      return is_double_type(element.properties[slot].type)
                 ? load_f64le(p)
                 : static_cast<double>(load_f32le(p));
    };

    for (std::size_t row = 0; row < element.count; ++row) {
      need(stride);
      cloud.points.push_back({coord_at(layout.x), coord_at(layout.y), coord_at(layout.z)});
      if (layout.has_color) {
        cloud.colors->push_back({data[offset + prop_offsets[layout.red]],
                                 data[offset + prop_offsets[layout.green]],
                                 data[offset + prop_offsets[layout.blue]]});
      }
      offset += stride;
    }
    break;  // elements after vertex are ignored
  }
  return cloud;
}

}  // namespace

PointCloud read_ply(const std::string& bytes) {
  const PlyHeader header = parse_ply_header(bytes);
  bool has_vertex = false;
  for (const PlyElement& e : header.elements) has_vertex |= e.name == "vertex";
  if (!has_vertex) {
    throw Error(ErrorCode::MalformedHeader, "no vertex element declared");
  }
  if (header.format == PlyFormat::ascii) return read_ply_ascii(bytes, header);
  return read_ply_binary(bytes, header);
}

std::string write_ply(const PointCloud& cloud, PlyFormat format) {
  if (cloud.has_colors() && cloud.colors->size() != cloud.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "color channel has " + std::to_string(cloud.colors->size()) +
                    " entries for " + std::to_string(cloud.size()) + " points");
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    for (double v : {p.x, p.y, p.z}) {
      if (!std::isfinite(v) || std::abs(v) > static_cast<double>(FLT_MAX)) {
        throw Error(ErrorCode::CoordinateOverflow,
                    "point " + std::to_string(i) +
                        " is not representable as a 32-bit float");
      }
    }
  }

  std::string out;
  out += "ply\n";
  out += format == PlyFormat::ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_colors()) {
    out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  out += "end_header\n";

  char buf[64];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    const float fx = static_cast<float>(p.x);
    const float fy = static_cast<float>(p.y);
    const float fz = static_cast<float>(p.z);
    if (format == PlyFormat::ascii) {
      std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g", fx, fy, fz);
      out += buf;
      if (cloud.has_colors()) {
        const Color& c = (*cloud.colors)[i];
        std::snprintf(buf, sizeof(buf), " %u %u %u", c.r, c.g, c.b);
        out += buf;
      }
      out += '\n';
    } else {
      store_f32le(out, fx);
      store_f32le(out, fy);
      store_f32le(out, fz);
      if (cloud.has_colors()) {
        const Color& c = (*cloud.colors)[i];
        out.push_back(static_cast<char>(c.r));
        out.push_back(static_cast<char>(c.g));
        out.push_back(static_cast<char>(c.b));
      }
    }
  }
  return out;
}

PointCloud read_ply_file(const fs::path& path) { return read_ply(read_file(path)); }

void write_ply_file(const PointCloud& cloud, PlyFormat format, const fs::path& path) {
  write_file_atomic(path, write_ply(cloud, format));
}

// ---------------------------------------------------------------------------
// Scene bundles
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void rethrow_scene_violation(const Violation& v) {
  switch (v.kind) {
    case Violation::Kind::LengthMismatch:
    case Violation::Kind::ColorLengthMismatch:
      throw Error(ErrorCode::LengthMismatch, v.detail);
    case Violation::Kind::UnmappedInstance:
    case Violation::Kind::OrphanInstance:
      throw Error(ErrorCode::UnmappedInstance, v.detail);
    default:
      throw Error(ErrorCode::InvalidScene,
                  std::string(violation_kind_name(v.kind)) + ": " + v.detail);
  }
}

}  // namespace

bool is_bundle_dir(const fs::path& dir) {
  return fs::is_regular_file(dir / kBundlePlyName) &&
         fs::is_regular_file(dir / kBundleLabelsName);
}

std::vector<fs::path> list_bundle_dirs(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw Error(ErrorCode::MissingFile, root.string() + " is not a directory");
  }
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    if (!is_bundle_dir(entry.path())) {
      throw Error(ErrorCode::MissingFile,
                  entry.path().string() + " lacks " + kBundlePlyName + " or " +
                      kBundleLabelsName);
    }
    dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return dirs;
}

LabeledScene read_bundle(const fs::path& dir) {
  const fs::path ply_path = dir / kBundlePlyName;
  const fs::path labels_path = dir / kBundleLabelsName;

  LabeledScene scene;
  scene.cloud = read_ply_file(ply_path);

  const Json j = jsonu::parse(read_file(labels_path), labels_path.string());
  jsonu::reject_unknown_keys(j, "/", {"scene_id", "instances", "point_instance_ids"});
  scene.scene_id = jsonu::get_string(jsonu::require_key(j, "/", "scene_id"), "/scene_id");

  const Json& instances = jsonu::require_key(j, "/", "instances");
  jsonu::require_array(instances, "/instances");
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const std::string path = "/instances/" + std::to_string(i);
    const Json& entry = instances[i];
    jsonu::reject_unknown_keys(entry, path, {"id", "class"});
    const std::uint64_t id = jsonu::get_u64(jsonu::require_key(entry, path, "id"), path + "/id");
    if (id == 0 || id > UINT32_MAX) {
      jsonu::fail(path + "/id", "instance id must be in [1, 2^32)");
    }
    const std::string cls =
        jsonu::get_string(jsonu::require_key(entry, path, "class"), path + "/class");
    if (!is_valid_class_name(cls)) {
      jsonu::fail(path + "/class", "\"" + cls + "\" is not a lowercase whitespace-free token");
    }
    if (!scene.classes.emplace(static_cast<InstanceId>(id), cls).second) {
      jsonu::fail(path + "/id", "duplicate instance id " + std::to_string(id));
    }
  }

  const Json& ids = jsonu::require_key(j, "/", "point_instance_ids");
  jsonu::require_array(ids, "/point_instance_ids");
  scene.instance_of_point.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::string path = "/point_instance_ids/" + std::to_string(i);
    const std::uint64_t id = jsonu::get_u64(ids[i], path);
    if (id > UINT32_MAX) jsonu::fail(path, "instance id out of range");
    scene.instance_of_point.push_back(static_cast<InstanceId>(id));
  }

  if (scene.instance_of_point.size() != scene.cloud.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "labels.json has " + std::to_string(scene.instance_of_point.size()) +
                    " ids for " + std::to_string(scene.cloud.size()) + " vertices in " +
                    (dir / kBundlePlyName).string());
  }
  const auto violations = validate_scene(scene);
  if (!violations.empty()) rethrow_scene_violation(violations.front());
  return scene;
}

void write_bundle(const LabeledScene& scene, const fs::path& dir) {
  const auto violations = validate_scene(scene);
  if (!violations.empty()) rethrow_scene_violation(violations.front());

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  }

  write_ply_file(scene.cloud, PlyFormat::binary_little_endian, dir / kBundlePlyName);

  Json j;
  j["scene_id"] = scene.scene_id;
  Json instances = Json::array();
  for (const auto& [id, cls] : scene.classes) {
    instances.push_back({{"id", id}, {"class", cls}});
  }
  j["instances"] = std::move(instances);
  j["point_instance_ids"] = scene.instance_of_point;
  write_file_atomic(dir / kBundleLabelsName, j.dump());
}

// ---------------------------------------------------------------------------
// S3DIS room import
// ---------------------------------------------------------------------------

LabeledScene import_s3dis_room(const fs::path& annotations_dir, const std::string& scene_id) {
  if (!fs::is_directory(annotations_dir)) {
    throw Error(ErrorCode::MissingFile, annotations_dir.string() + " is not a directory");
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(annotations_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) {
    throw Error(ErrorCode::EmptyRoom, "no annotation files in " + annotations_dir.string());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  LabeledScene scene;
  scene.scene_id = scene_id;
  scene.cloud.colors.emplace();
  InstanceId next_id = 1;

  for (const fs::path& file : files) {
    // class is the filename prefix before the final underscore, lowercased
    const std::string stem = file.stem().string();
    const std::size_t underscore = stem.rfind('_');
    if (underscore == std::string::npos || underscore == 0) {
      throw Error(ErrorCode::UnparsableFilename,
                  file.filename().string() + ": expected <class>_<index>.txt");
    }
    std::string cls = stem.substr(0, underscore);
    for (char& c : cls) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (!is_valid_class_name(cls)) {
      throw Error(ErrorCode::UnparsableFilename,
                  file.filename().string() + ": \"" + cls + "\" is not a valid class name");
    }

    const std::string content = read_file(file);
    std::size_t offset = 0;
    std::size_t line_no = 0;
    std::size_t points_in_file = 0;
    while (offset < content.size()) {
      const std::size_t eol = content.find('\n', offset);
      const std::size_t end = (eol == std::string::npos) ? content.size() : eol;
      std::string line = content.substr(offset, end - offset);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      offset = (eol == std::string::npos) ? content.size() : eol + 1;
      ++line_no;

      const auto tokens = split_ws(line);
      if (tokens.empty()) continue;  // blank line (commonly the trailing one)
      if (tokens.size() != 6) {
        throw Error(ErrorCode::MalformedLine,
                    file.filename().string() + " line " + std::to_string(line_no) +
                        ": expected \"x y z r g b\", got " + std::to_string(tokens.size()) +
                        " fields");
      }
      Point3 p;
      Color c;
      try {
        p = {parse_double_token(tokens[0], line_no), parse_double_token(tokens[1], line_no),
             parse_double_token(tokens[2], line_no)};
        c = {parse_uchar_token(tokens[3], line_no), parse_uchar_token(tokens[4], line_no),
             parse_uchar_token(tokens[5], line_no)};
      } catch (const Error&) {
        throw Error(ErrorCode::MalformedLine,
                    file.filename().string() + " line " + std::to_string(line_no) +
                        ": unparsable \"" + line + "\"");
      }
      if (!p.is_finite()) {
        throw Error(ErrorCode::MalformedLine,
                    file.filename().string() + " line " + std::to_string(line_no) +
                        ": non-finite coordinate");
      }
      scene.cloud.points.push_back(p);
      scene.cloud.colors->push_back(c);
      scene.instance_of_point.push_back(next_id);
      ++points_in_file;
    }
    if (points_in_file == 0) {
      throw Error(ErrorCode::MalformedLine,
                  file.filename().string() + " line 1: annotation file contains no points");
    }
    scene.classes.emplace(next_id, cls);
    ++next_id;
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Expansion manifest
// ---------------------------------------------------------------------------

namespace {

void check_manifest_arithmetic(const ExpansionManifest& m) {
  std::uint64_t inserted_total = 0;
  for (const SceneExpansionRecord& rec : m.scenes) inserted_total += rec.inserted.size();
  if (m.totals.instances_added != inserted_total) {
    jsonu::fail("/totals/instances_added",
                "declared " + std::to_string(m.totals.instances_added) +
                    " but scene records hold " + std::to_string(inserted_total));
  }
  if (m.totals.instances_after != m.totals.instances_before + m.totals.instances_added) {
    jsonu::fail("/totals/instances_after",
                "totals do not satisfy after = before + added");
  }
  if (m.totals.scenes != m.scenes.size()) {
    jsonu::fail("/totals/scenes", "declared " + std::to_string(m.totals.scenes) +
                                      " but manifest holds " + std::to_string(m.scenes.size()) +
                                      " scene records");
  }
}

}  // namespace

std::string write_manifest(const ExpansionManifest& manifest) {
  check_manifest_arithmetic(manifest);

  Json j;
  j["dataset_id"] = manifest.dataset_id;
  j["master_seed"] = manifest.master_seed;
  Json scenes = Json::array();
  for (const SceneExpansionRecord& rec : manifest.scenes) {
    Json inserted = Json::array();
    for (const InsertionRecord& ins : rec.inserted) {
      Json e;
      e["instance_id"] = ins.instance_id;
      e["class"] = ins.object_class;
      e["provenance"] = provenance_name(ins.provenance);
      e["generator_name"] = ins.generator_name;
      e["asset_seed"] = ins.asset_seed;
      e["applied_offset"] = {ins.applied_offset.x, ins.applied_offset.y, ins.applied_offset.z};
      inserted.push_back(std::move(e));
    }
    scenes.push_back({{"scene_id", rec.scene_id}, {"inserted", std::move(inserted)}});
  }
  j["scenes"] = std::move(scenes);
  j["totals"] = {{"scenes", manifest.totals.scenes},
                 {"instances_before", manifest.totals.instances_before},
                 {"instances_after", manifest.totals.instances_after},
                 {"instances_added", manifest.totals.instances_added}};
  return j.dump(2) + "\n";
}

ExpansionManifest read_manifest(const std::string& bytes) {
  const Json j = jsonu::parse(bytes, "manifest");
  jsonu::reject_unknown_keys(j, "/", {"dataset_id", "master_seed", "scenes", "totals"});

  ExpansionManifest m;
  m.dataset_id = jsonu::get_string(jsonu::require_key(j, "/", "dataset_id"), "/dataset_id");
  m.master_seed = jsonu::get_u64(jsonu::require_key(j, "/", "master_seed"), "/master_seed");

  const Json& scenes = jsonu::require_key(j, "/", "scenes");
  jsonu::require_array(scenes, "/scenes");
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const std::string spath = "/scenes/" + std::to_string(i);
    const Json& sj = scenes[i];
    jsonu::reject_unknown_keys(sj, spath, {"scene_id", "inserted"});
    SceneExpansionRecord rec;
    rec.scene_id =
        jsonu::get_string(jsonu::require_key(sj, spath, "scene_id"), spath + "/scene_id");
    const Json& inserted = jsonu::require_key(sj, spath, "inserted");
    jsonu::require_array(inserted, spath + "/inserted");
    for (std::size_t k = 0; k < inserted.size(); ++k) {
      const std::string ipath = spath + "/inserted/" + std::to_string(k);
      const Json& ij = inserted[k];
      jsonu::reject_unknown_keys(ij, ipath,
                                 {"instance_id", "class", "provenance", "generator_name",
                                  "asset_seed", "applied_offset"});
      InsertionRecord ins;
      const std::uint64_t id =
          jsonu::get_u64(jsonu::require_key(ij, ipath, "instance_id"), ipath + "/instance_id");
      if (id == 0 || id > UINT32_MAX) jsonu::fail(ipath + "/instance_id", "id out of range");
      ins.instance_id = static_cast<InstanceId>(id);
      ins.object_class =
          jsonu::get_string(jsonu::require_key(ij, ipath, "class"), ipath + "/class");
      ins.provenance = provenance_from_name(jsonu::get_string(
          jsonu::require_key(ij, ipath, "provenance"), ipath + "/provenance"));
      ins.generator_name = jsonu::get_string(
          jsonu::require_key(ij, ipath, "generator_name"), ipath + "/generator_name");
      ins.asset_seed =
          jsonu::get_u64(jsonu::require_key(ij, ipath, "asset_seed"), ipath + "/asset_seed");
      const Json& off = jsonu::require_key(ij, ipath, "applied_offset");
      jsonu::require_array(off, ipath + "/applied_offset");
      if (off.size() != 3) jsonu::fail(ipath + "/applied_offset", "expected [x, y, z]");
      ins.applied_offset = {jsonu::get_finite_double(off[0], ipath + "/applied_offset/0"),
                            jsonu::get_finite_double(off[1], ipath + "/applied_offset/1"),
                            jsonu::get_finite_double(off[2], ipath + "/applied_offset/2")};
      rec.inserted.push_back(std::move(ins));
    }
    m.scenes.push_back(std::move(rec));
  }

  const Json& totals = jsonu::require_key(j, "/", "totals");
  jsonu::reject_unknown_keys(totals, "/totals",
                             {"scenes", "instances_before", "instances_after", "instances_added"});
  m.totals.scenes =
      jsonu::get_u64(jsonu::require_key(totals, "/totals", "scenes"), "/totals/scenes");
  m.totals.instances_before = jsonu::get_u64(
      jsonu::require_key(totals, "/totals", "instances_before"), "/totals/instances_before");
  m.totals.instances_after = jsonu::get_u64(
      jsonu::require_key(totals, "/totals", "instances_after"), "/totals/instances_after");
  m.totals.instances_added = jsonu::get_u64(
      jsonu::require_key(totals, "/totals", "instances_added"), "/totals/instances_added");

  check_manifest_arithmetic(m);
  return m;
}

ExpansionManifest read_manifest_file(const fs::path& path) {
  return read_manifest(read_file(path));
}

void write_manifest_file(const ExpansionManifest& manifest, const fs::path& path) {
  write_file_atomic(path, write_manifest(manifest));
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

std::string read_file(const fs::path& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::MissingFile, path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw Error(ErrorCode::IoFailure, "read failed for " + path.string());
  }
  return std::move(buf).str();
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::IoFailure, "cannot open " + tmp.string() + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw Error(ErrorCode::IoFailure, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorCode::IoFailure,
                "rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
  }
}

}  // namespace pcx::io
