#pragma once

#include <initializer_list>
#include <nlohmann/json.hpp>
#include <string>

#include "pas/errors.hpp"

namespace pas::jsonio {

using nlohmann::json;

inline json parse(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(where + ": invalid JSON: " + e.what());
  }
}

// Strict schema check: every present key must be listed, every required key
// must be present. `where` prefixes the error so messages name the section.
inline void require_keys(const json& object, const std::string& where,
                         std::initializer_list<const char*> required,
                         std::initializer_list<const char*> optional) {
  if (!object.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& item : object.items()) {
    bool known = false;
    for (const char* key : required)
      if (item.key() == key) known = true;
    for (const char* key : optional)
      if (item.key() == key) known = true;
    if (!known) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
  for (const char* key : required)
    if (!object.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
}

template <typename T>
T get_as(const json& object, const std::string& where, const char* key) {
  try {
    return object.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": key '" + std::string(key) + "' has the wrong type");
  }
}

template <typename T>
T get_or(const json& object, const std::string& where, const char* key, T fallback) {
  if (!object.contains(key)) return fallback;
  return get_as<T>(object, where, key);
}

}  // namespace pas::jsonio
