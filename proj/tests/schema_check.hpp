#pragma once

// Minimal JSON-Schema subset checker (type / required / properties / items),
// enough to validate the shipped output schemas in tests.

#include <string>

#include <json.hpp>

namespace dsl::test {

inline bool schema_type_matches(const nlohmann::json& value, const std::string& type) {
  if (type == "object") return value.is_object();
  if (type == "array") return value.is_array();
  if (type == "string") return value.is_string();
  if (type == "boolean") return value.is_boolean();
  if (type == "integer") return value.is_number_integer() || value.is_number_unsigned();
  if (type == "number") return value.is_number();
  return false;
}

inline void validate_against_schema(const nlohmann::json& value,
                                    const nlohmann::json& schema,
                                    const std::string& path = "$") {
  if (schema.contains("type") &&
      !schema_type_matches(value, schema["type"].get<std::string>())) {
    throw std::runtime_error(path + ": expected type " +
                             schema["type"].get<std::string>());
  }
  if (schema.contains("required")) {
    for (const auto& key : schema["required"]) {
      if (!value.contains(key.get<std::string>())) {
        throw std::runtime_error(path + ": missing required key " +
                                 key.get<std::string>());
      }
    }
  }
  if (schema.contains("properties") && value.is_object()) {
    for (const auto& [key, sub] : schema["properties"].items()) {
      if (value.contains(key)) {
        validate_against_schema(value.at(key), sub, path + "." + key);
      }
    }
  }
  if (schema.contains("items") && value.is_array()) {
    for (std::size_t i = 0; i < value.size(); ++i) {
      validate_against_schema(value[i], schema["items"],
                              path + "[" + std::to_string(i) + "]");
    }
  }
}

}  // namespace dsl::test
