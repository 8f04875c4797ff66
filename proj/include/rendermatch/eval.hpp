#pragma once

// Retrieval evaluation: precision / recall / F1 of the ontology ranker and a
// keyword baseline against gold relevance judgments.

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rendermatch/errors.hpp"
#include "rendermatch/matchmaker.hpp"
#include "rendermatch/registry.hpp"
#include "rendermatch/text.hpp"

namespace rendermatch::eval {

// Empty retrieved set scores 0.
inline double precision(const std::vector<std::string>& retrieved, const std::set<std::string>& relevant) {
  if (retrieved.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& id : retrieved) hits += relevant.count(id);
  return static_cast<double>(hits) / static_cast<double>(retrieved.size());
}

inline double recall(const std::vector<std::string>& retrieved, const std::set<std::string>& relevant) {
  if (relevant.empty()) throw std::invalid_argument("recall needs a non-empty relevant set");
  const std::set<std::string> unique(retrieved.begin(), retrieved.end());
  std::size_t hits = 0;
  for (const auto& id : unique) hits += relevant.count(id);
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

inline double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

struct BaselineResult {
  std::string service_id;
  double score = 0;
};

// Fraction of requirement entries the service matches verbatim: identical
// canonical concept string (version label included) or identical number.
inline double keyword_score(const ServiceProfile& profile, const RequirementSet& req) {
  std::size_t matched = 0;
  for (const auto& [key, required] : req.entries) {
    auto it = profile.attributes.find(key);
    if (it == profile.attributes.end() || type_of(it->second) != type_of(required)) continue;
    if (const auto* n = std::get_if<NumericValue>(&required))
      matched += std::get<NumericValue>(it->second).value == n->value;
    else
      matched += to_string(it->second) == to_string(required);
  }
  return static_cast<double>(matched) / static_cast<double>(req.entries.size());
}

inline std::vector<BaselineResult> baseline_keyword_rank(const RegistrySnapshot& registry, const RequirementSet& req) {
  std::vector<BaselineResult> out;
  out.reserve(registry.size());
  for (const auto& [id, p] : registry.profiles) out.push_back({id, keyword_score(p, req)});
  std::sort(out.begin(), out.end(), [](const BaselineResult& a, const BaselineResult& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.service_id < b.service_id;
  });
  return out;
}

using GoldJudgments = std::map<std::string, std::set<std::string>>;

// Lines of the form `relevant <query-id> <service-id>`; `#` comments allowed.
inline GoldJudgments parse_gold(std::string_view document) {
  GoldJudgments gold;
  const auto doc_lines = text::lines(document);
  for (std::size_t i = 0; i < doc_lines.size(); ++i) {
    const auto line = text::trim(doc_lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto tok = text::split_ws(line);
    if (tok.size() != 3 || tok[0] != "relevant") throw ParseError(i + 1, "expected 'relevant <query-id> <service-id>'");
    gold[text::normalize(tok[1])].insert(text::normalize(tok[2]));
  }
  return gold;
}

inline std::string serialize_gold(const GoldJudgments& gold) {
  std::string out;
  for (const auto& [q, ids] : gold)
    for (const auto& id : ids) out += "relevant " + q + " " + id + "\n";
  return out;
}

enum class Approach { kOntology, kBaseline };
// kTopK: first k of the full ranking. kStrict: only services passing every
// requirement (threshold for the ontology, verbatim for the baseline), then
// the first k of those.
enum class Mode { kTopK, kStrict };

inline std::string_view to_string(Approach a) { return a == Approach::kOntology ? "ontology" : "no-ontology-baseline"; }
inline std::string_view to_string(Mode m) { return m == Mode::kTopK ? "top-k" : "strict"; }

struct QueryMetrics {
  std::string query_id;
  std::size_t retrieved = 0;
  std::size_t relevant = 0;
  std::size_t hits = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct ApproachReport {
  Approach approach = Approach::kOntology;
  Mode mode = Mode::kTopK;
  std::size_t k = 0;
  std::vector<QueryMetrics> per_query;
  QueryMetrics macro;  // mean P and R over queries; f1 is their harmonic mean
};

struct EvalReport {
  std::vector<ApproachReport> runs;

  const ApproachReport& get(Approach a, Mode m) const {
    for (const auto& r : runs)
      if (r.approach == a && r.mode == m) return r;
    throw std::out_of_range("no such run");
  }
};

struct EvalOptions {
  std::size_t k = 10;
  ReasonerConfig reasoner;
  SpanOverrides spans;
};

inline std::vector<std::string> retrieve(const ConceptGraph& graph, const RegistrySnapshot& registry,
                                         const RequirementSet& query, Approach approach, Mode mode,
                                         const EvalOptions& opts) {
  std::vector<std::string> out;
  if (approach == Approach::kOntology) {
    MatchOptions mo{opts.reasoner, mode == Mode::kStrict, opts.spans, opts.k};
    for (const auto& r : rank_services(graph, registry, query, mo)) out.push_back(r.service_id);
  } else {
    for (const auto& r : baseline_keyword_rank(registry, query)) {
      if (out.size() == opts.k) break;
      if (mode == Mode::kStrict && r.score < 1.0) break;
      out.push_back(r.service_id);
    }
  }
  return out;
}

inline EvalReport run_eval(const ConceptGraph& graph, const RegistrySnapshot& registry,
                           const std::vector<RequirementSet>& queries, const GoldJudgments& gold,
                           const EvalOptions& opts = {}) {
  if (opts.k < 1) throw ConfigError("cutoff k must be at least 1");
  if (queries.empty()) throw SemanticError("no queries to evaluate");
  for (const auto& q : queries) {
    auto it = gold.find(q.query_id);
    if (it == gold.end() || it->second.empty())
      throw SemanticError("gold judgments missing query '" + q.query_id + "'");
    for (const auto& id : it->second)
      if (!registry.profiles.count(id))
        throw SemanticError("gold lists unknown service '" + id + "' for query '" + q.query_id + "'");
  }

  EvalReport report;
  for (auto approach : {Approach::kOntology, Approach::kBaseline}) {
    for (auto mode : {Mode::kTopK, Mode::kStrict}) {
      ApproachReport run{approach, mode, opts.k, {}, {"macro"}};
      for (const auto& q : queries) {
        const auto& relevant = gold.at(q.query_id);
        const auto got = retrieve(graph, registry, q, approach, mode, opts);
        QueryMetrics m{q.query_id, got.size(), relevant.size()};
        for (const auto& id : got) m.hits += relevant.count(id);
        m.precision = precision(got, relevant);
        m.recall = recall(got, relevant);
        m.f1 = f1(m.precision, m.recall);
        run.macro.precision += m.precision;
        run.macro.recall += m.recall;
        run.macro.retrieved += m.retrieved;
        run.macro.relevant += m.relevant;
        run.macro.hits += m.hits;
        run.per_query.push_back(std::move(m));
      }
      const auto n = static_cast<double>(queries.size());
      run.macro.precision /= n;
      run.macro.recall /= n;
      run.macro.f1 = f1(run.macro.precision, run.macro.recall);
      report.runs.push_back(std::move(run));
    }
  }
  return report;
}

inline nlohmann::json to_json(const QueryMetrics& m) {
  return {{"query", m.query_id}, {"retrieved", m.retrieved}, {"relevant", m.relevant}, {"hits", m.hits},
          {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

inline nlohmann::json to_json(const EvalReport& report) {
  auto runs = nlohmann::json::array();
  for (const auto& r : report.runs) {
    auto rows = nlohmann::json::array();
    for (const auto& m : r.per_query) rows.push_back(to_json(m));
    runs.push_back({{"approach", to_string(r.approach)},
                    {"mode", to_string(r.mode)},
                    {"k", r.k},
                    {"per_query", std::move(rows)},
                    {"macro", to_json(r.macro)}});
  }
  return {{"runs", std::move(runs)}};
}

// Macro rows of every run side by side.
inline std::string comparison_table(const EvalReport& report) {
  std::ostringstream os;
  os << "approach              mode    k    precision  recall  f1\n";
  for (const auto& r : report.runs) {
    std::string approach(to_string(r.approach));
    std::string mode(to_string(r.mode));
    approach.resize(22, ' ');
    mode.resize(8, ' ');
    std::string k = std::to_string(r.k);
    k.resize(5, ' ');
    os << approach << mode << k << text::format_fixed(r.macro.precision) << "     "
       << text::format_fixed(r.macro.recall) << "  " << text::format_fixed(r.macro.f1) << '\n';
  }
  return os.str();
}

}  // namespace rendermatch::eval
