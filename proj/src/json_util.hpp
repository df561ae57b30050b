// SPDX-License-Identifier: Apache-2.0

// Internal helpers for schema-checked JSON parsing. Every reader in this
// project rejects unknown keys and reports the JSON path of the first
// violation instead of silently coercing.

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "pcx/error.hpp"

namespace pcx::jsonu {

using Json = nlohmann::ordered_json;

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::SchemaViolation, path + ": " + msg);
}

inline Json parse(const std::string& bytes, const std::string& what) {
  Json j = Json::parse(bytes, nullptr, false);
  if (j.is_discarded()) fail("/", "invalid JSON in " + what);
  return j;
}

inline void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

inline void require_array(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
}

inline const Json& require_key(const Json& obj, const std::string& path, const char* key) {
  require_object(obj, path);
  auto it = obj.find(key);
  if (it == obj.end()) fail(path, std::string("missing key \"") + key + "\"");
  return *it;
}

inline void reject_unknown_keys(const Json& obj, const std::string& path,
                                std::initializer_list<const char*> allowed) {
  require_object(obj, path);
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail(path, "unknown key \"" + it.key() + "\"");
  }
}

inline std::string get_string(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

inline std::uint64_t get_u64(const Json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  fail(path, "expected a non-negative integer");
}

inline double get_finite_double(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

inline bool get_bool(const Json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  return j.get<bool>();
}

}  // namespace pcx::jsonu
