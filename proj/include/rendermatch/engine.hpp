#pragma once

// Engine state shared by the CLI and the HTTP service: the loaded ontology,
// the registry, and the reasoner settings. Output documents are built here so
// both front ends print identical fields.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>

#include <nlohmann/json.hpp>

#include "rendermatch/errors.hpp"
#include "rendermatch/matchmaker.hpp"
#include "rendermatch/ontology.hpp"
#include "rendermatch/registry.hpp"
#include "rendermatch/similarity.hpp"
#include "rendermatch/text.hpp"

namespace rendermatch {

struct EngineConfig {
  std::filesystem::path ontology_path;
  std::filesystem::path registry_path;  // empty: in-memory registry
  ReasonerConfig reasoner;
  std::size_t default_k = 10;
  SpanOverrides spans;
  std::string host = "127.0.0.1";
  int port = 8080;

  void validate() const {
    if (ontology_path.empty()) throw ConfigError("no ontology path configured");
    if (!std::filesystem::exists(ontology_path))
      throw ConfigError("ontology file '" + ontology_path.string() + "' does not exist");
    reasoner.validate();
    if (default_k < 1) throw ConfigError("k must be at least 1");
    if (port < 0 || port > 65535) throw ConfigError("port out of range");
    for (const auto& [key, span] : spans) {
      const auto* spec = find_attribute(key);
      if (!spec || spec->type != ValueType::kNumeric) throw ConfigError("span given for non-numeric attribute '" + key + "'");
      if (!(span.min <= span.max)) throw ConfigError("span for '" + key + "' has min > max");
    }
  }

  // JSON config file; relative paths resolve against `base_dir`.
  //   {"ontology": "...", "registry": "...", "rho": 0.5, "threshold": 0.5,
  //    "k": 10, "spans": {"render_node_cost": [1.0, 6.0]}, "host": "...", "port": 8080}
  static EngineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    EngineConfig cfg;
    try {
      auto path = [&](const char* key) {
        std::filesystem::path p = j.at(key).get<std::string>();
        return p.is_relative() ? base_dir / p : p;
      };
      if (j.contains("ontology")) cfg.ontology_path = path("ontology");
      if (j.contains("registry")) cfg.registry_path = path("registry");
      cfg.reasoner.rho = j.value("rho", cfg.reasoner.rho);
      cfg.reasoner.threshold = j.value("threshold", cfg.reasoner.threshold);
      cfg.default_k = j.value("k", cfg.default_k);
      cfg.host = j.value("host", cfg.host);
      cfg.port = j.value("port", cfg.port);
      if (j.contains("spans"))
        for (const auto& [key, v] : j.at("spans").items())
          cfg.spans[key] = NumericSpan{key, v.at(0).get<double>(), v.at(1).get<double>()};
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bad config: ") + e.what());
    }
    return cfg;
  }

  static EngineConfig from_file(const std::filesystem::path& file) {
    try {
      return from_json(nlohmann::json::parse(read_file(file)), file.parent_path());
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("cannot parse config '" + file.string() + "': " + e.what());
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
  }
};

// "<attr>=<min>:<max>"
inline NumericSpan parse_span_override(std::string_view spec) {
  const auto eq = spec.find('=');
  const auto colon = spec.find(':', eq == std::string_view::npos ? 0 : eq);
  if (eq == std::string_view::npos || colon == std::string_view::npos)
    throw ConfigError("span must look like <attr>=<min>:<max>, got '" + std::string(spec) + "'");
  const auto lo = text::parse_double(spec.substr(eq + 1, colon - eq - 1));
  const auto hi = text::parse_double(spec.substr(colon + 1));
  if (!lo || !hi) throw ConfigError("span bounds must be numbers in '" + std::string(spec) + "'");
  return {std::string(spec.substr(0, eq)), *lo, *hi};
}

// "<attr>=<w>"
inline std::pair<std::string, double> parse_weight_override(std::string_view spec) {
  const auto eq = spec.find('=');
  if (eq == std::string_view::npos) throw ConfigError("weight must look like <attr>=<w>, got '" + std::string(spec) + "'");
  const auto w = text::parse_double(spec.substr(eq + 1));
  if (!w) throw ConfigError("weight must be a number in '" + std::string(spec) + "'");
  return {std::string(spec.substr(0, eq)), *w};
}

struct SearchOptions {
  std::optional<std::size_t> k;  // falls back to the engine default
  bool strict = false;
  std::map<std::string, double> weights;
};

// Parses a term such as "maya@7", "Maya 3.0" or "3ds max" to a node id,
// selecting the version child when a label is given.
inline std::string resolve_node(const ConceptGraph& graph, std::string_view term) {
  std::optional<int> label;
  if (const auto at = term.rfind('@'); at != std::string_view::npos) {
    const auto parsed = text::parse_int(text::trim(term.substr(at + 1)));
    if (!parsed || *parsed < 1) throw ParseError(0, "bad version label in '" + std::string(term) + "'");
    label = static_cast<int>(*parsed);
    term = term.substr(0, at);
  }
  auto id = resolve(graph, term);
  if (!label) return id;
  auto v = version_child(graph, id, *label);
  if (!v) throw NotFoundError(id + "@" + std::to_string(*label));
  return *v;
}

class Engine {
 public:
  explicit Engine(EngineConfig cfg) : cfg_(std::move(cfg)), graph_(load_graph(cfg_)), registry_(open_registry()) {}

  const EngineConfig& config() const noexcept { return cfg_; }
  const ConceptGraph& graph() const noexcept { return graph_; }
  ServiceRegistry& registry() noexcept { return registry_; }
  SnapshotPtr snapshot() const { return registry_.snapshot(); }

  std::vector<MatchResult> search(RequirementSet req, const SearchOptions& opts, const RegistrySnapshot& snap) const {
    apply_weights(req, opts.weights);
    MatchOptions mo{cfg_.reasoner, opts.strict, cfg_.spans, opts.k.value_or(cfg_.default_k)};
    return rank_services(graph_, snap, req, mo);
  }

  nlohmann::json search_json(std::string_view requirements_doc, const SearchOptions& opts) const {
    const auto req = parse_requirements(requirements_doc, graph_);
    const auto snap = snapshot();
    const auto results = search(req, opts, *snap);
    auto rows = nlohmann::json::array();
    for (const auto& r : results) {
      nlohmann::json attrs = nlohmann::json::object();
      for (const auto& [key, s] : r.per_attribute)
        attrs[key] = {{"score", s.reported}, {"raw", s.raw}, {"reasoner", to_string(s.reasoner)}};
      rows.push_back({{"rank", r.rank},
                      {"service", r.service_id},
                      {"name", snap->profiles.at(r.service_id).display_name},
                      {"aggregate", r.aggregate},
                      {"aggregate_display", text::format_fixed(r.aggregate)},
                      {"attributes", std::move(attrs)}});
    }
    return {{"query", req.query_id},
            {"revision", snap->revision},
            {"strict", opts.strict},
            {"k", opts.k.value_or(cfg_.default_k)},
            {"results", std::move(rows)}};
  }

  // Concept similarity of two terms, plus the version-adjusted value when both
  // are versions of the same concept. "similarity" is the final value.
  nlohmann::json sim_json(std::string_view x_term, std::string_view y_term) const {
    const auto x = resolve_node(graph_, x_term);
    const auto y = resolve_node(graph_, y_term);
    const double base = concept_sim(graph_, x, y, cfg_.reasoner);
    double final = base;
    nlohmann::json out{{"x", x}, {"y", y}, {"concept", base}};
    const auto& nx = graph_.node(x);
    const auto& ny = graph_.node(y);
    if (nx.is_version() && ny.is_version() && graph_.parent(x) == graph_.parent(y)) {
      final = equivalent_sim(base, *nx.version_label, *ny.version_label, cfg_.reasoner);
      out["equivalent"] = final;
    }
    out["similarity"] = final;
    out["similarity_display"] = text::format_fixed(final);
    out["passes_threshold"] = passes_threshold(final, cfg_.reasoner);
    return out;
  }

 private:
  static ConceptGraph load_graph(const EngineConfig& cfg) {
    cfg.validate();
    return load_ontology(read_file(cfg.ontology_path));
  }

  ServiceRegistry open_registry() const {
    if (cfg_.registry_path.empty()) return ServiceRegistry();
    return ServiceRegistry::open(cfg_.registry_path, graph_);
  }

  EngineConfig cfg_;
  ConceptGraph graph_;
  ServiceRegistry registry_;
};

// Text rendering of a search document: one row per service, then its
// per-attribute scores.
inline std::string format_search_table(const nlohmann::json& doc) {
  std::ostringstream os;
  os << "query " << doc.at("query").get<std::string>() << " (revision " << doc.at("revision").get<std::uint64_t>()
     << ", " << doc.at("results").size() << " result" << (doc.at("results").size() == 1 ? "" : "s") << ")\n";
  for (const auto& row : doc.at("results")) {
    os << row.at("rank").get<std::size_t>() << "\t" << row.at("service").get<std::string>() << "\t"
       << row.at("aggregate_display").get<std::string>() << "\n";
    for (const auto& [key, s] : row.at("attributes").items())
      os << "\t  " << key << " = " << text::format_fixed(s.at("score").get<double>()) << " ("
         << s.at("reasoner").get<std::string>() << ")\n";
  }
  return os.str();
}

}  // namespace rendermatch
