#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rendermatch/errors.hpp"
#include "rendermatch/ontology.hpp"
#include "rendermatch/registry.hpp"
#include "rendermatch/similarity.hpp"

namespace rendermatch {

// Explicit [min, max] per numeric attribute, taking precedence over the
// registry-derived span.
using SpanOverrides = std::map<std::string, NumericSpan>;

struct MatchResult {
  std::string service_id;
  std::map<std::string, AttributeScore> per_attribute;
  double aggregate = 0;
  std::size_t rank = 0;  // 1-based
};

struct MatchOptions {
  ReasonerConfig reasoner;
  bool strict = false;  // drop services with any zero-scored requirement
  SpanOverrides spans;
  std::optional<std::size_t> top_k;
};

// Weighted arithmetic mean of the per-attribute scores.
inline double aggregate_sim(const std::map<std::string, SimilarityScore>& scores,
                            const std::map<std::string, double>& weights) {
  double num = 0;
  double den = 0;
  for (const auto& [key, s] : scores) {
    auto it = weights.find(key);
    if (it == weights.end()) throw std::invalid_argument("no weight for attribute '" + key + "'");
    if (!(it->second >= 0.0)) throw std::invalid_argument("negative weight for attribute '" + key + "'");
    num += it->second * s;
    den += it->second;
  }
  if (!(den > 0.0)) throw SemanticError("total weight is zero");
  return std::clamp(num / den, 0.0, 1.0);
}

// Min/max of `key` over every registered service, widened to include the
// query value.
inline NumericSpan corpus_span(const RegistrySnapshot& registry, const std::string& key,
                               std::optional<double> query_value) {
  std::optional<NumericSpan> span;
  auto widen = [&](double v) {
    if (!span) span = NumericSpan{key, v, v};
    span->min = std::min(span->min, v);
    span->max = std::max(span->max, v);
  };
  for (const auto& [id, p] : registry.profiles) {
    auto it = p.attributes.find(key);
    if (it == p.attributes.end()) continue;
    if (const auto* n = std::get_if<NumericValue>(&it->second)) widen(n->value);
  }
  if (query_value) widen(*query_value);
  if (!span) throw SemanticError("no numeric values for '" + key + "' to derive a span from");
  return *span;
}

// Applies `--weight key=w` style overrides; keys must be requested by the query.
inline void apply_weights(RequirementSet& req, const std::map<std::string, double>& overrides) {
  for (const auto& [key, w] : overrides) {
    if (!req.entries.count(key)) throw ConfigError("weight given for '" + key + "' which the query does not request");
    if (!(w >= 0.0)) throw ConfigError("weight for '" + key + "' must be non-negative");
    req.weights[key] = w;
  }
  bool any_positive = false;
  for (const auto& [key, v] : req.entries) any_positive |= req.weight(key) > 0.0;
  if (!any_positive) throw SemanticError("all weights are zero");
}

inline std::vector<MatchResult> rank_services(const ConceptGraph& graph, const RegistrySnapshot& registry,
                                              const RequirementSet& req, const MatchOptions& opts = {}) {
  std::map<std::string, NumericSpan> spans;
  std::map<std::string, double> weights;
  for (const auto& [key, value] : req.entries) {
    weights[key] = req.weight(key);
    const auto* num = std::get_if<NumericValue>(&value);
    if (!num) continue;
    if (auto it = opts.spans.find(key); it != opts.spans.end())
      spans[key] = it->second;
    else
      spans[key] = corpus_span(registry, key, num->value);
  }

  std::vector<MatchResult> results;
  results.reserve(registry.size());
  for (const auto& [id, profile] : registry.profiles) {
    MatchResult r;
    r.service_id = id;
    std::map<std::string, SimilarityScore> reported;
    bool any_zero = false;
    for (const auto& [key, required] : req.entries) {
      AttributeScore score{Reasoner::kMissing, 0.0, 0.0};
      if (auto it = profile.attributes.find(key); it != profile.attributes.end()) {
        std::optional<NumericSpan> span;
        if (auto s = spans.find(key); s != spans.end()) span = s->second;
        score = score_attribute(graph, required, it->second, span, opts.reasoner);
      }
      any_zero |= score.reported == 0.0;
      reported[key] = score.reported;
      r.per_attribute.emplace(key, score);
    }
    if (opts.strict && any_zero) continue;
    r.aggregate = aggregate_sim(reported, weights);
    results.push_back(std::move(r));
  }

  std::sort(results.begin(), results.end(), [](const MatchResult& a, const MatchResult& b) {
    if (a.aggregate != b.aggregate) return a.aggregate > b.aggregate;
    return a.service_id < b.service_id;
  });
  if (opts.top_k && results.size() > *opts.top_k) results.resize(*opts.top_k);
  for (std::size_t i = 0; i < results.size(); ++i) results[i].rank = i + 1;
  return results;
}

}  // namespace rendermatch
