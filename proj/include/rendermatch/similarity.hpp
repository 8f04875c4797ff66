#pragma once

// The three similarity reasoners and the per-attribute dispatcher.
//
//   concept:    rho * |A(x) & A(y)| / |A(x)| + (1 - rho) * |A(x) & A(y)| / |A(y)|
//               where A(n) is the upward closure of n
//   equivalent: min(1, base + bonus_base^|c1 - c2| * bonus_scale)
//   numeric:    max(0, 1 - |a - b| / (max - min))

#include <cmath>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "rendermatch/errors.hpp"
#include "rendermatch/ontology.hpp"
#include "rendermatch/schema.hpp"

namespace rendermatch {

// A similarity value in [0, 1].
using SimilarityScore = double;

struct ReasonerConfig {
  double rho = 0.5;
  double threshold = 0.5;
  double version_bonus_base = 0.8;
  double version_bonus_scale = 0.1;

  void validate() const {
    if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in [0, 1]");
    if (!std::isfinite(threshold)) throw ConfigError("threshold must be finite");
    if (!(version_bonus_base > 0.0 && version_bonus_base < 1.0))
      throw ConfigError("version bonus base must lie in (0, 1)");
    if (!std::isfinite(version_bonus_scale) || version_bonus_scale < 0.0)
      throw ConfigError("version bonus scale must be non-negative");
  }
};

struct NumericSpan {
  std::string attribute;
  double min = 0;
  double max = 0;
};

// Ancestor-overlap similarity. The overlap of two upward closures in a tree
// is the closure of their lowest common ancestor, so it is computed from
// depths without materializing either set.
inline SimilarityScore concept_sim(const ConceptGraph& graph, std::string_view x, std::string_view y,
                                   const ReasonerConfig& cfg = {}) {
  auto a = graph.index_of(x);
  auto b = graph.index_of(y);
  const double size_x = static_cast<double>(graph.depth_at(a) + 1);
  const double size_y = static_cast<double>(graph.depth_at(b) + 1);
  while (graph.depth_at(a) > graph.depth_at(b)) a = graph.parent_index(a);
  while (graph.depth_at(b) > graph.depth_at(a)) b = graph.parent_index(b);
  while (a != b) {
    a = graph.parent_index(a);
    b = graph.parent_index(b);
  }
  const double shared = static_cast<double>(graph.depth_at(a) + 1);
  const double by_x = shared / size_x;
  const double by_y = shared / size_y;
  if (by_x == by_y) return by_x;  // exact for every rho, including identity
  return cfg.rho * by_x + (1.0 - cfg.rho) * by_y;
}

inline SimilarityScore equivalent_sim(SimilarityScore base, int c1, int c2, const ReasonerConfig& cfg = {}) {
  if (c1 < 1 || c2 < 1) throw std::invalid_argument("version labels must be positive");
  if (!(base >= 0.0 && base <= 1.0)) throw std::invalid_argument("base similarity must lie in [0, 1]");
  const double bonus = std::pow(cfg.version_bonus_base, std::abs(c1 - c2)) * cfg.version_bonus_scale;
  return std::min(1.0, base + bonus);
}

inline SimilarityScore numeric_sim(double a, double b, const NumericSpan& span) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(span.min) || !std::isfinite(span.max))
    throw std::invalid_argument("numeric similarity needs finite inputs");
  if (span.min > span.max) throw std::invalid_argument("span min exceeds max for '" + span.attribute + "'");
  if (span.max == span.min) return a == b ? 1.0 : 0.0;
  return std::max(0.0, 1.0 - std::abs(a - b) / (span.max - span.min));
}

inline bool passes_threshold(SimilarityScore s, const ReasonerConfig& cfg = {}) { return s > cfg.threshold; }

// kMissing marks a requested attribute the service does not offer.
enum class Reasoner { kConcept, kEquivalent, kNumeric, kMissing };

inline std::string_view to_string(Reasoner r) {
  switch (r) {
    case Reasoner::kConcept: return "concept";
    case Reasoner::kEquivalent: return "equivalent";
    case Reasoner::kNumeric: return "numeric";
    case Reasoner::kMissing: return "missing";
  }
  return "?";
}

struct AttributeScore {
  Reasoner reasoner = Reasoner::kConcept;
  SimilarityScore raw = 0;       // reasoner output
  SimilarityScore reported = 0;  // raw, or 0 when it fails the threshold
};

// Picks the reasoner for one requirement/offer pair. Version reasoning runs
// only when both sides name the same concept and both carry a label; its base
// is the concept similarity of the two version nodes themselves.
inline AttributeScore score_attribute(const ConceptGraph& graph, const AttributeValue& required,
                                      const AttributeValue& offered, const std::optional<NumericSpan>& span,
                                      const ReasonerConfig& cfg = {}) {
  if (type_of(required) != type_of(offered))
    throw SemanticError("cannot compare a concept value with a numeric value");

  AttributeScore out;
  if (const auto* req = std::get_if<NumericValue>(&required)) {
    if (!span) throw std::invalid_argument("numeric comparison needs a span");
    out.reasoner = Reasoner::kNumeric;
    out.raw = numeric_sim(req->value, std::get<NumericValue>(offered).value, *span);
  } else {
    const auto& rc = std::get<ConceptRef>(required);
    const auto& oc = std::get<ConceptRef>(offered);
    out.reasoner = Reasoner::kConcept;
    out.raw = concept_sim(graph, rc.concept_id, oc.concept_id, cfg);
    if (rc.concept_id == oc.concept_id && rc.label && oc.label) {
      const auto vx = version_child(graph, rc.concept_id, *rc.label);
      const auto vy = version_child(graph, oc.concept_id, *oc.label);
      if (!vx) throw NotFoundError(rc.concept_id + "@" + std::to_string(*rc.label));
      if (!vy) throw NotFoundError(oc.concept_id + "@" + std::to_string(*oc.label));
      out.reasoner = Reasoner::kEquivalent;
      out.raw = equivalent_sim(concept_sim(graph, *vx, *vy, cfg), *rc.label, *oc.label, cfg);
    }
  }
  out.reported = passes_threshold(out.raw, cfg) ? out.raw : 0.0;
  return out;
}

inline SimilarityScore attribute_sim(const ConceptGraph& graph, const AttributeValue& required,
                                     const AttributeValue& offered, const std::optional<NumericSpan>& span,
                                     const ReasonerConfig& cfg = {}) {
  return score_attribute(graph, required, offered, span, cfg).reported;
}

}  // namespace rendermatch
