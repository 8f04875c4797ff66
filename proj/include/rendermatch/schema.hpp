#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "rendermatch/text.hpp"

namespace rendermatch {

enum class ValueType { kConcept, kNumeric };

struct AttributeSpec {
  std::string_view key;
  ValueType type;
  std::string_view description;
};

// The closed attribute schema shared by service profiles and requirement
// sets. Add a row here to extend it.
inline constexpr std::array<AttributeSpec, 8> kSchema{{
    {"compute_unit_type", ValueType::kConcept, "Compute unit type"},
    {"license_fee", ValueType::kConcept, "Supported software license fee"},
    {"job_mgmt", ValueType::kConcept, "Job management software"},
    {"software", ValueType::kConcept, "Supported 3D software"},
    {"render_engine", ValueType::kConcept, "Render engine software"},
    {"plugin", ValueType::kConcept, "Plugin support"},
    {"os", ValueType::kConcept, "Operating system"},
    {"render_node_cost", ValueType::kNumeric, "Render node cost"},
}};

inline const AttributeSpec* find_attribute(std::string_view key) {
  for (const auto& spec : kSchema)
    if (spec.key == key) return &spec;
  return nullptr;
}

// A reference to a non-version concept node, optionally narrowed to one of
// its version children by label.
struct ConceptRef {
  std::string concept_id;
  std::optional<int> label;
  friend bool operator==(const ConceptRef&, const ConceptRef&) = default;
};

struct NumericValue {
  double value = 0;
  std::string unit;
  friend bool operator==(const NumericValue&, const NumericValue&) = default;
};

using AttributeValue = std::variant<ConceptRef, NumericValue>;

inline ValueType type_of(const AttributeValue& v) {
  return std::holds_alternative<ConceptRef>(v) ? ValueType::kConcept : ValueType::kNumeric;
}

// Canonical surface form: "maya@7", "cpu", "0.6 usd_per_core_hour".
inline std::string to_string(const AttributeValue& v) {
  if (const auto* c = std::get_if<ConceptRef>(&v))
    return c->label ? c->concept_id + "@" + std::to_string(*c->label) : c->concept_id;
  const auto& n = std::get<NumericValue>(v);
  return text::format_double(n.value) + " " + n.unit;
}

}  // namespace rendermatch
