// rendermatch: ontology-backed matchmaking for render-farm services.
//
//   rendermatch sim <x> <y>
//   rendermatch query <requirements-file> [--strict] [--top-k N] [--span a=min:max] [--weight a=w] [--json]
//   rendermatch register <profile-file>...
//   rendermatch list
//   rendermatch eval --queries <file> --gold <file> [--k N] [--json]
//   rendermatch eval --synthetic <seed> [--k N] [--json]
//   rendermatch serve [--host H] [--port P]
//
// Configuration comes from --config / $RENDERMATCH_CONFIG (JSON), then the
// individual flags below, which also read $RENDERMATCH_ONTOLOGY and
// $RENDERMATCH_REGISTRY.

#include <csignal>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "rendermatch/corpus.hpp"
#include "rendermatch/engine.hpp"
#include "rendermatch/eval.hpp"
#include "rendermatch/server.hpp"

namespace {

using namespace rendermatch;

struct GlobalFlags {
  std::string config;
  std::string ontology;
  std::string registry;
  std::optional<double> rho;
  std::optional<double> threshold;
  std::vector<std::string> spans;
};

EngineConfig build_config(const GlobalFlags& f) {
  EngineConfig cfg = f.config.empty() ? EngineConfig{} : EngineConfig::from_file(f.config);
  if (!f.ontology.empty()) cfg.ontology_path = f.ontology;
  if (!f.registry.empty()) cfg.registry_path = f.registry;
  if (f.rho) cfg.reasoner.rho = *f.rho;
  if (f.threshold) cfg.reasoner.threshold = *f.threshold;
  for (const auto& s : f.spans) {
    auto span = parse_span_override(s);
    cfg.spans[span.attribute] = span;
  }
  cfg.validate();
  return cfg;
}

SearchServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ontology-backed render-farm service matchmaking"};
  app.require_subcommand(1);

  GlobalFlags flags;
  app.add_option("--config", flags.config, "JSON engine config")->envname("RENDERMATCH_CONFIG");
  app.add_option("--ontology", flags.ontology, "RFO v1 ontology file")->envname("RENDERMATCH_ONTOLOGY");
  app.add_option("--registry", flags.registry, "Registry store file")->envname("RENDERMATCH_REGISTRY");
  app.add_option("--rho", flags.rho, "Generalization weight in [0, 1] (default 0.5)");
  app.add_option("--threshold", flags.threshold, "Similarity threshold (default 0.5)");
  app.add_option("--span", flags.spans, "Numeric span override <attr>=<min>:<max>");

  auto* sim = app.add_subcommand("sim", "Similarity between two ontology terms");
  std::string sim_x, sim_y;
  bool sim_json = false;
  sim->add_option("x", sim_x)->required();
  sim->add_option("y", sim_y)->required();
  sim->add_flag("--json", sim_json);

  auto* query = app.add_subcommand("query", "Rank registered services against a requirements file");
  std::string query_file;
  bool strict = false, query_json = false;
  std::optional<std::size_t> top_k;
  std::vector<std::string> weights;
  query->add_option("requirements", query_file)->required();
  query->add_flag("--strict", strict, "Drop services failing any requirement");
  query->add_option("--top-k", top_k, "Truncate after ranking");
  query->add_option("--weight", weights, "Attribute weight <attr>=<w>");
  query->add_flag("--json", query_json);

  auto* reg = app.add_subcommand("register", "Add or replace service profiles");
  std::vector<std::string> profile_files;
  reg->add_option("profiles", profile_files)->required();

  auto* list = app.add_subcommand("list", "Print the canonical registry listing");

  auto* ev = app.add_subcommand("eval", "Precision/recall/F1 of the ontology ranker and the keyword baseline");
  std::string queries_file, gold_file;
  std::optional<std::uint64_t> synthetic_seed;
  std::size_t eval_k = 10;
  bool eval_json = false;
  auto* qopt = ev->add_option("--queries", queries_file, "Requirements documents, one block per query");
  auto* gopt = ev->add_option("--gold", gold_file, "Lines 'relevant <query-id> <service-id>'");
  auto* sopt = ev->add_option("--synthetic", synthetic_seed, "Evaluate on a generated corpus with this seed");
  qopt->needs(gopt);
  gopt->needs(qopt);
  sopt->excludes(qopt)->excludes(gopt);
  ev->add_option("--k", eval_k, "Retrieval cutoff")->check(CLI::PositiveNumber);
  ev->add_flag("--json", eval_json);

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::optional<std::string> host;
  std::optional<int> port;
  serve->add_option("--host", host);
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = build_config(flags);

    if (*serve) {
      if (host) cfg.host = *host;
      if (port) cfg.port = *port;
      SearchServer server;
      g_server = &server;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      int status = 0;
      std::thread loader([&] {
        try {
          server.attach(std::make_shared<Engine>(cfg));
          std::cerr << "rendermatch: ontology loaded, serving on " << cfg.host << ":" << cfg.port << "\n";
        } catch (const Error& e) {
          std::cerr << "rendermatch: " << e.what() << "\n";
          status = static_cast<int>(e.exit_code());
          server.wait_until_ready();
          server.stop();
        }
      });
      const bool ok = server.listen(cfg.host, cfg.port);
      loader.join();
      g_server = nullptr;
      if (status) return status;
      if (!ok) {
        std::cerr << "rendermatch: cannot listen on " << cfg.host << ":" << cfg.port << "\n";
        return static_cast<int>(ExitCode::kIo);
      }
      return 0;
    }

    if (*ev && synthetic_seed) {
      const auto graph = load_ontology(read_file(cfg.ontology_path));
      const auto corpus = eval::make_synthetic_corpus(graph, *synthetic_seed);
      const auto report =
          eval::run_eval(graph, corpus.registry, corpus.queries, corpus.gold, {eval_k, cfg.reasoner, cfg.spans});
      if (eval_json)
        std::cout << eval::to_json(report).dump(2) << "\n";
      else
        std::cout << eval::comparison_table(report);
      return 0;
    }
    if (*ev && queries_file.empty()) throw ConfigError("eval needs --queries and --gold, or --synthetic <seed>");

    Engine engine(cfg);

    if (*sim) {
      const auto doc = engine.sim_json(sim_x, sim_y);
      if (sim_json) {
        std::cout << doc.dump(2) << "\n";
      } else {
        std::cout << "concept\t" << text::format_fixed(doc.at("concept").get<double>()) << "\n";
        if (doc.contains("equivalent"))
          std::cout << "equivalent\t" << text::format_fixed(doc.at("equivalent").get<double>()) << "\n";
      }
    } else if (*query) {
      SearchOptions opts{top_k, strict, {}};
      for (const auto& w : weights) opts.weights.insert(parse_weight_override(w));
      const auto doc = engine.search_json(read_file(query_file), opts);
      if (query_json)
        std::cout << doc.dump(2) << "\n";
      else
        std::cout << format_search_table(doc);
    } else if (*reg) {
      if (cfg.registry_path.empty()) throw ConfigError("register needs --registry");
      for (const auto& file : profile_files) {
        for (auto& p : parse_profiles(read_file(file), engine.graph())) {
          const auto id = p.service_id;
          const auto out = engine.registry().register_profile(std::move(p));
          std::cout << (out.created ? "created " : "updated ") << id << " (revision " << out.revision << ")\n";
        }
      }
    } else if (*list) {
      std::cout << serialize_registry(*engine.snapshot());
    } else if (*ev) {
      const auto snap = engine.snapshot();
      const auto queries = parse_requirement_sets(read_file(queries_file), engine.graph());
      const auto gold = eval::parse_gold(read_file(gold_file));
      const auto report = eval::run_eval(engine.graph(), *snap, queries, gold, {eval_k, cfg.reasoner, cfg.spans});
      if (eval_json)
        std::cout << eval::to_json(report).dump(2) << "\n";
      else
        std::cout << eval::comparison_table(report);
    }
  } catch (const Error& e) {
    std::cerr << "rendermatch: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "rendermatch: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kFailure);
  }
  return 0;
}
