#pragma once

// Service profiles and requirement sets: parsing, canonical serialization,
// and the snapshot-isolated registry with atomic file persistence.
//
// Profile document:            Requirements document:
//   service <id>                 query <id>
//   name <display text>          attr ...
//   attr <key> concept <term>[@<label>]
//   attr <key> numeric <value> <unit>
//   end                          weight <key> <w>
//                                end

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "rendermatch/errors.hpp"
#include "rendermatch/ontology.hpp"
#include "rendermatch/schema.hpp"
#include "rendermatch/text.hpp"

namespace rendermatch {

struct ServiceProfile {
  std::string service_id;
  std::string display_name;
  std::map<std::string, AttributeValue> attributes;
  friend bool operator==(const ServiceProfile&, const ServiceProfile&) = default;
};

struct RequirementSet {
  std::string query_id;
  std::map<std::string, AttributeValue> entries;
  std::map<std::string, double> weights;  // explicit weights only; others are 1

  double weight(const std::string& key) const {
    auto it = weights.find(key);
    return it == weights.end() ? 1.0 : it->second;
  }
  friend bool operator==(const RequirementSet&, const RequirementSet&) = default;
};

namespace detail {

// Resolves the value part of an `attr` line (tokens after the key).
inline AttributeValue parse_value(const ConceptGraph& graph, std::string_view line, std::size_t lineno,
                                  const std::vector<std::string_view>& tok, const AttributeSpec& spec) {
  if (tok.size() < 4) throw ParseError(lineno, "expected 'attr <key> concept|numeric <value...>'");
  const auto kind = tok[2];
  if (kind == "numeric") {
    if (spec.type != ValueType::kNumeric)
      throw ParseError(lineno, "attribute '" + std::string(spec.key) + "' takes a concept value");
    if (tok.size() != 5) throw ParseError(lineno, "expected 'attr <key> numeric <value> <unit>'");
    const auto v = text::parse_double(tok[3]);
    if (!v || !std::isfinite(*v)) throw ParseError(lineno, "invalid number '" + std::string(tok[3]) + "'");
    return NumericValue{*v, std::string(tok[4])};
  }
  if (kind != "concept") throw ParseError(lineno, "value kind must be 'concept' or 'numeric'");
  if (spec.type != ValueType::kConcept)
    throw ParseError(lineno, "attribute '" + std::string(spec.key) + "' takes a numeric value");

  std::string_view term = text::rest_after(line, 3);
  std::optional<int> label;
  if (const auto at = term.rfind('@'); at != std::string_view::npos) {
    const auto parsed = text::parse_int(text::trim(term.substr(at + 1)));
    if (!parsed || *parsed < 1 || *parsed > std::numeric_limits<int>::max())
      throw ParseError(lineno, "version label must be a positive integer in '" + std::string(term) + "'");
    label = static_cast<int>(*parsed);
    term = text::trim(term.substr(0, at));
  }
  auto id = resolve(graph, term);
  const auto& node = graph.node(id);
  if (node.is_version()) {
    if (label) throw ParseError(lineno, "'" + id + "' is already a version; drop the @label");
    return ConceptRef{*graph.parent(id), node.version_label};
  }
  if (label && !version_child(graph, id, *label)) throw NotFoundError(id + "@" + std::to_string(*label));
  return ConceptRef{std::move(id), label};
}

inline const AttributeSpec& schema_key(std::string_view raw, std::size_t lineno) {
  const auto* spec = find_attribute(raw);
  if (!spec) throw ParseError(lineno, "unknown attribute key '" + std::string(raw) + "'");
  return *spec;
}

enum class DocKind { kProfile, kRequirements };

struct ParsedDoc {
  std::size_t header_line = 0;
  ServiceProfile profile;
  RequirementSet req;
  std::map<std::string, std::size_t> weight_lines;
};

inline std::vector<ParsedDoc> parse_documents(std::string_view document, const ConceptGraph& graph, DocKind kind) {
  const std::string_view opener = kind == DocKind::kProfile ? "service" : "query";
  std::vector<ParsedDoc> docs;
  std::optional<ParsedDoc> cur;
  std::size_t last_content_line = 0;

  const auto doc_lines = text::lines(document);
  for (std::size_t i = 0; i < doc_lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    const auto line = text::trim(doc_lines[i]);
    if (line.empty() || line.front() == '#') continue;
    last_content_line = lineno;
    const auto tok = text::split_ws(line);
    const auto& directive = tok[0];

    if (directive == opener) {
      if (cur) throw ParseError(lineno, "'" + std::string(opener) + "' before 'end' of the previous block");
      if (tok.size() != 2) throw ParseError(lineno, "expected '" + std::string(opener) + " <id>'");
      auto id = text::normalize(tok[1]);
      if (id.empty()) throw ParseError(lineno, "id is empty after normalization");
      cur.emplace();
      cur->header_line = lineno;
      if (kind == DocKind::kProfile) {
        cur->profile.service_id = id;
        cur->profile.display_name = id;
      } else {
        cur->req.query_id = id;
      }
      continue;
    }
    if (!cur) throw ParseError(lineno, "expected '" + std::string(opener) + " <id>'");

    if (directive == "end") {
      if (tok.size() != 1) throw ParseError(lineno, "unexpected text after 'end'");
      if (kind == DocKind::kRequirements) {
        if (cur->req.entries.empty()) throw ParseError(lineno, "query '" + cur->req.query_id + "' has no attr lines");
        for (const auto& [key, wl] : cur->weight_lines)
          if (!cur->req.entries.count(key))
            throw ParseError(wl, "weight for '" + key + "' which the query does not request");
        bool any_positive = false;
        for (const auto& [key, v] : cur->req.entries) any_positive |= cur->req.weight(key) > 0.0;
        if (!any_positive) throw SemanticError("line " + std::to_string(lineno) + ": all weights are zero");
      }
      docs.push_back(std::move(*cur));
      cur.reset();
    } else if (directive == "name" && kind == DocKind::kProfile) {
      const auto name = text::rest_after(line, 1);
      if (name.empty()) throw ParseError(lineno, "empty name");
      cur->profile.display_name = std::string(name);
    } else if (directive == "attr") {
      if (tok.size() < 2) throw ParseError(lineno, "expected 'attr <key> ...'");
      const auto& spec = schema_key(tok[1], lineno);
      auto value = parse_value(graph, line, lineno, tok, spec);
      auto& target = kind == DocKind::kProfile ? cur->profile.attributes : cur->req.entries;
      if (!target.emplace(std::string(spec.key), std::move(value)).second)
        throw ParseError(lineno, "duplicate attribute '" + std::string(spec.key) + "'");
    } else if (directive == "weight" && kind == DocKind::kRequirements) {
      if (tok.size() != 3) throw ParseError(lineno, "expected 'weight <key> <w>'");
      const auto& spec = schema_key(tok[1], lineno);
      const auto w = text::parse_double(tok[2]);
      if (!w || !std::isfinite(*w) || *w < 0.0)
        throw ParseError(lineno, "weight must be a non-negative number, got '" + std::string(tok[2]) + "'");
      const std::string key(spec.key);
      if (!cur->req.weights.emplace(key, *w).second) throw ParseError(lineno, "duplicate weight for '" + key + "'");
      cur->weight_lines.emplace(key, lineno);
    } else {
      throw ParseError(lineno, "unknown directive '" + std::string(directive) + "'");
    }
  }
  if (cur) throw ParseError(last_content_line, "missing 'end' for block opened on line " + std::to_string(cur->header_line));
  return docs;
}

}  // namespace detail

inline std::vector<ServiceProfile> parse_profiles(std::string_view document, const ConceptGraph& graph) {
  std::vector<ServiceProfile> out;
  for (auto& d : detail::parse_documents(document, graph, detail::DocKind::kProfile))
    out.push_back(std::move(d.profile));
  return out;
}

inline ServiceProfile parse_profile(std::string_view document, const ConceptGraph& graph) {
  auto all = parse_profiles(document, graph);
  if (all.size() != 1)
    throw ParseError(0, "expected exactly one service block, found " + std::to_string(all.size()));
  return std::move(all.front());
}

inline std::vector<RequirementSet> parse_requirement_sets(std::string_view document, const ConceptGraph& graph) {
  std::vector<RequirementSet> out;
  for (auto& d : detail::parse_documents(document, graph, detail::DocKind::kRequirements))
    out.push_back(std::move(d.req));
  return out;
}

inline RequirementSet parse_requirements(std::string_view document, const ConceptGraph& graph) {
  auto all = parse_requirement_sets(document, graph);
  if (all.size() != 1)
    throw ParseError(0, "expected exactly one query block, found " + std::to_string(all.size()));
  return std::move(all.front());
}

namespace detail {
inline void write_attr(std::ostream& os, const std::string& key, const AttributeValue& v) {
  os << "attr " << key << (type_of(v) == ValueType::kConcept ? " concept " : " numeric ") << to_string(v) << '\n';
}
}  // namespace detail

// Canonical form: attributes in key order, name always present.
inline std::string serialize_profile(const ServiceProfile& p) {
  std::ostringstream os;
  os << "service " << p.service_id << '\n' << "name " << p.display_name << '\n';
  for (const auto& [key, v] : p.attributes) detail::write_attr(os, key, v);
  os << "end\n";
  return os.str();
}

inline std::string serialize_requirements(const RequirementSet& r) {
  std::ostringstream os;
  os << "query " << r.query_id << '\n';
  for (const auto& [key, v] : r.entries) detail::write_attr(os, key, v);
  for (const auto& [key, w] : r.weights) os << "weight " << key << ' ' << text::format_double(w) << '\n';
  os << "end\n";
  return os.str();
}

struct RegistrySnapshot {
  std::map<std::string, ServiceProfile> profiles;
  std::uint64_t revision = 0;

  std::size_t size() const noexcept { return profiles.size(); }
  bool empty() const noexcept { return profiles.empty(); }
};

using SnapshotPtr = std::shared_ptr<const RegistrySnapshot>;

inline constexpr std::string_view kRevisionHeader = "# revision ";

// Store file layout: a revision comment, then every profile in id order.
inline std::string serialize_registry(const RegistrySnapshot& snap) {
  std::string out(kRevisionHeader);
  out += std::to_string(snap.revision);
  out += '\n';
  for (const auto& [id, p] : snap.profiles) out += serialize_profile(p);
  return out;
}

inline RegistrySnapshot parse_registry(std::string_view document, const ConceptGraph& graph) {
  RegistrySnapshot snap;
  for (auto& p : parse_profiles(document, graph)) {
    const auto id = p.service_id;
    if (!snap.profiles.emplace(id, std::move(p)).second)
      throw SemanticError("registry store lists service '" + id + "' twice");
  }
  snap.revision = snap.profiles.size();
  const auto first = text::trim(text::lines(document).front());
  if (first.substr(0, kRevisionHeader.size()) == kRevisionHeader) {
    const auto rev = text::parse_int(text::trim(first.substr(kRevisionHeader.size())));
    if (!rev || *rev < 0) throw ParseError(1, "malformed revision header");
    snap.revision = static_cast<std::uint64_t>(*rev);
  }
  return snap;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to a sibling temp file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("short write to '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot replace '" + path.string() + "': " + ec.message());
  }
}

struct RegisterOutcome {
  std::uint64_t revision = 0;
  bool created = false;
};

// Single writer, many readers. Readers take immutable snapshots; a mutation
// builds a new snapshot, persists it (if a store is configured), then
// publishes it. A failed write leaves the published state untouched.
class ServiceRegistry {
 public:
  ServiceRegistry() : state_(std::make_shared<RegistrySnapshot>()) {}

  explicit ServiceRegistry(std::filesystem::path store)
      : state_(std::make_shared<RegistrySnapshot>()), store_(std::move(store)) {}

  // Loads `store` if it exists; later mutations are written back to it.
  static ServiceRegistry open(const std::filesystem::path& store, const ConceptGraph& graph) {
    ServiceRegistry reg(store);
    if (std::filesystem::exists(store))
      reg.state_ = std::make_shared<RegistrySnapshot>(parse_registry(read_file(store), graph));
    return reg;
  }

  ServiceRegistry(ServiceRegistry&& other) noexcept
      : state_(std::move(other.state_)), store_(std::move(other.store_)) {}

  RegisterOutcome register_profile(ServiceProfile profile) {
    std::lock_guard writer(write_mu_);
    auto next = std::make_shared<RegistrySnapshot>(*snapshot());
    auto id = profile.service_id;
    const bool created = next->profiles.insert_or_assign(std::move(id), std::move(profile)).second;
    next->revision += 1;
    if (store_) write_file_atomic(*store_, serialize_registry(*next));
    publish(next);
    return {next->revision, created};
  }

  SnapshotPtr snapshot() const {
    std::lock_guard lock(read_mu_);
    return state_;
  }

  const std::optional<std::filesystem::path>& store() const noexcept { return store_; }

 private:
  void publish(SnapshotPtr next) {
    std::lock_guard lock(read_mu_);
    state_ = std::move(next);
  }

  mutable std::mutex read_mu_;
  std::mutex write_mu_;
  SnapshotPtr state_;
  std::optional<std::filesystem::path> store_;
};

}  // namespace rendermatch
