#pragma once

// Synthetic evaluation corpus whose relevance can only be recognised with
// the concept tree.
//
// Each query asks for one leaf concept per concept attribute (with a version
// label when the leaf has versions) and a node cost in [0.40, 0.80]. For every
// query the generator registers:
//   - one verbatim copy of the query;
//   - `near_per_query` near variants, each changing 1..3 attributes to a
//     sibling leaf, another version of the same concept, or a cost within
//     0.12 of the requested one;
//   - `decoys_per_query` decoys that copy the query but move one attribute
//     far away: a leaf under a different parent, or a cost in [1.80, 2.00];
// plus two anchors pinning the cost range to [0.20, 2.00] and
// `fillers` random services.
//
// Gold relevance is decided by brute force over every (query, service) pair
// with a structural rule independent of the similarity formulas: each
// requested concept must be offered as the same concept or a sibling under
// the same parent, and the cost must be within `cost_tolerance`.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "rendermatch/eval.hpp"
#include "rendermatch/ontology.hpp"
#include "rendermatch/registry.hpp"
#include "rendermatch/schema.hpp"

namespace rendermatch::eval {

struct CorpusOptions {
  std::size_t queries = 10;
  std::size_t near_per_query = 2;
  std::size_t decoys_per_query = 2;
  std::size_t fillers = 8;
  double cost_tolerance = 0.15;
  // Ontology subtree holding the values of each concept attribute.
  std::map<std::string, std::string> categories{
      {"compute_unit_type", "compute_unit_type"}, {"license_fee", "license_fee"},
      {"job_mgmt", "job_mgmt"},                   {"software", "software"},
      {"render_engine", "render_engine"},         {"plugin", "plugin_software"},
      {"os", "operating_system"},
  };
};

struct SyntheticCorpus {
  RegistrySnapshot registry;
  std::vector<RequirementSet> queries;
  GoldJudgments gold;
  std::size_t relevant_pairs = 0;
  std::size_t non_verbatim_pairs = 0;  // relevant pairs the keyword match misses
};

namespace detail {

inline constexpr std::string_view kCostKey = "render_node_cost";
inline constexpr std::string_view kCostUnit = "usd_per_core_hour";

// Non-version concepts without concept children, in id order.
inline std::vector<std::string> value_leaves(const ConceptGraph& g, const std::string& category) {
  std::vector<std::string> out;
  std::vector<std::string> stack{category};
  while (!stack.empty()) {
    auto id = stack.back();
    stack.pop_back();
    bool has_concept_child = false;
    for (const auto& c : g.children(id)) {
      if (g.node(c).is_version()) continue;
      has_concept_child = true;
      stack.push_back(c);
    }
    if (!has_concept_child && id != category) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

class Generator {
 public:
  Generator(const ConceptGraph& g, std::uint64_t seed, const CorpusOptions& opts) : g_(g), rng_(seed), opts_(opts) {
    for (const auto& [key, cat] : opts_.categories) {
      auto leaves = value_leaves(g_, cat);
      if (leaves.size() < 2) throw SemanticError("category '" + cat + "' needs at least two leaf values");
      leaves_[key] = std::move(leaves);
    }
  }

  template <typename Seq>
  const auto& pick(const Seq& s) {
    return s[std::uniform_int_distribution<std::size_t>(0, s.size() - 1)(rng_)];
  }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool coin() { return std::bernoulli_distribution(0.5)(rng_); }

  ConceptRef random_value(const std::string& key) {
    ConceptRef ref{pick(leaves_.at(key)), std::nullopt};
    if (auto labels = versions(g_, ref.concept_id); !labels.empty()) ref.label = pick(labels);
    return ref;
  }

  RequirementSet make_query(std::size_t index) {
    RequirementSet q;
    q.query_id = "q" + std::string(index < 10 ? "0" : "") + std::to_string(index);
    for (const auto& [key, cat] : opts_.categories) q.entries[key] = random_value(key);
    q.entries[std::string(kCostKey)] = NumericValue{round2(uniform(0.40, 0.80)), std::string(kCostUnit)};
    return q;
  }

  // Same parent, different concept; or another version of the same concept.
  ConceptRef near_value(const std::string& key, const ConceptRef& ref) {
    const auto labels = versions(g_, ref.concept_id);
    std::vector<std::string> siblings;
    for (const auto& c : leaves_.at(key))
      if (c != ref.concept_id && g_.parent(c) == g_.parent(ref.concept_id)) siblings.push_back(c);
    if (labels.size() > 1 && (siblings.empty() || coin())) {
      int label = *ref.label;
      while (label == *ref.label) label = pick(labels);
      return {ref.concept_id, label};
    }
    if (siblings.empty()) return ref;
    ConceptRef out{pick(siblings), std::nullopt};
    if (auto l = versions(g_, out.concept_id); !l.empty()) out.label = pick(l);
    return out;
  }

  ConceptRef far_value(const std::string& key, const ConceptRef& ref) {
    std::vector<std::string> far;
    for (const auto& c : leaves_.at(key))
      if (g_.parent(c) != g_.parent(ref.concept_id)) far.push_back(c);
    ConceptRef out{pick(far), std::nullopt};
    if (auto l = versions(g_, out.concept_id); !l.empty()) out.label = pick(l);
    return out;
  }

  ServiceProfile from_query(const RequirementSet& q, std::string id) {
    ServiceProfile p{id, id, q.entries};
    return p;
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& [key, cat] : opts_.categories) out.push_back(key);
    out.emplace_back(kCostKey);
    return out;
  }

  void perturb_near(ServiceProfile& p, const std::string& key) {
    auto& v = p.attributes.at(key);
    if (auto* n = std::get_if<NumericValue>(&v)) {
      const double delta = round2(uniform(0.01, 0.12)) * (coin() ? 1.0 : -1.0);
      n->value = round2(n->value + (delta == 0.0 ? 0.01 : delta));
    } else {
      v = near_value(key, std::get<ConceptRef>(v));
    }
  }

  void perturb_far(ServiceProfile& p, const std::string& key) {
    auto& v = p.attributes.at(key);
    if (auto* n = std::get_if<NumericValue>(&v))
      n->value = round2(uniform(1.80, 2.00));
    else
      v = far_value(key, std::get<ConceptRef>(v));
  }

  ServiceProfile random_service(std::string id, double cost) {
    ServiceProfile p{id, id, {}};
    for (const auto& [key, cat] : opts_.categories) p.attributes[key] = random_value(key);
    p.attributes[std::string(kCostKey)] = NumericValue{cost, std::string(kCostUnit)};
    return p;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  const ConceptGraph& g_;
  std::mt19937_64 rng_;
  const CorpusOptions& opts_;
  std::map<std::string, std::vector<std::string>> leaves_;
};

}  // namespace detail

// Structural relevance rule used for the gold judgments.
inline bool structurally_relevant(const ConceptGraph& g, const RequirementSet& q, const ServiceProfile& p,
                                  double cost_tolerance) {
  for (const auto& [key, required] : q.entries) {
    auto it = p.attributes.find(key);
    if (it == p.attributes.end() || type_of(it->second) != type_of(required)) return false;
    if (const auto* n = std::get_if<NumericValue>(&required)) {
      if (std::abs(std::get<NumericValue>(it->second).value - n->value) > cost_tolerance + 1e-9) return false;
    } else {
      const auto& a = std::get<ConceptRef>(required).concept_id;
      const auto& b = std::get<ConceptRef>(it->second).concept_id;
      if (a != b && g.parent(a) != g.parent(b)) return false;
    }
  }
  return true;
}

inline SyntheticCorpus make_synthetic_corpus(const ConceptGraph& graph, std::uint64_t seed,
                                             const CorpusOptions& opts = {}) {
  detail::Generator gen(graph, seed, opts);
  SyntheticCorpus corpus;
  auto add = [&](ServiceProfile p) {
    auto id = p.service_id;
    corpus.registry.profiles.insert_or_assign(std::move(id), std::move(p));
  };
  const auto keys = gen.keys();

  for (std::size_t qi = 0; qi < opts.queries; ++qi) {
    auto q = gen.make_query(qi + 1);
    const auto prefix = "s_" + q.query_id;
    add(gen.from_query(q, prefix + "_exact"));
    for (std::size_t v = 0; v < opts.near_per_query; ++v) {
      auto p = gen.from_query(q, prefix + "_near" + std::to_string(v + 1));
      auto order = keys;
      std::shuffle(order.begin(), order.end(), gen.rng());
      const auto changes = std::uniform_int_distribution<std::size_t>(1, 3)(gen.rng());
      for (std::size_t c = 0; c < changes; ++c) gen.perturb_near(p, order[c]);
      add(std::move(p));
    }
    for (std::size_t d = 0; d < opts.decoys_per_query; ++d) {
      auto p = gen.from_query(q, prefix + "_decoy" + std::to_string(d + 1));
      gen.perturb_far(p, gen.pick(keys));
      add(std::move(p));
    }
    corpus.queries.push_back(std::move(q));
  }
  add(gen.random_service("s_anchor_low", 0.20));
  add(gen.random_service("s_anchor_high", 2.00));
  for (std::size_t f = 0; f < opts.fillers; ++f)
    add(gen.random_service("s_filler" + std::to_string(f + 1), detail::round2(gen.uniform(0.20, 2.00))));

  corpus.registry.revision = corpus.registry.profiles.size();
  for (const auto& q : corpus.queries) {
    auto& rel = corpus.gold[q.query_id];
    for (const auto& [id, p] : corpus.registry.profiles) {
      if (!structurally_relevant(graph, q, p, opts.cost_tolerance)) continue;
      rel.insert(id);
      ++corpus.relevant_pairs;
      corpus.non_verbatim_pairs += keyword_score(p, q) < 1.0;
    }
  }
  return corpus;
}

}  // namespace rendermatch::eval
