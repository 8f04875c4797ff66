#pragma once

// HTTP front end. Handlers answer 503 until an Engine is attached, so the
// listener can come up while the ontology and registry are still loading.

#include <atomic>
#include <memory>
#include <mutex>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rendermatch/engine.hpp"
#include "rendermatch/errors.hpp"

namespace rendermatch {

class SearchServer {
 public:
  SearchServer() { routes(); }

  void attach(std::shared_ptr<Engine> engine) {
    std::lock_guard lock(mu_);
    engine_ = std::move(engine);
  }

  // Blocks until stop().
  bool listen(const std::string& host, int port) { return http_.listen(host, port); }
  int bind_to_any_port(const std::string& host) { return http_.bind_to_any_port(host); }
  bool listen_after_bind() { return http_.listen_after_bind(); }
  void wait_until_ready() const { http_.wait_until_ready(); }
  void stop() { http_.stop(); }

 private:
  std::shared_ptr<Engine> engine() const {
    std::lock_guard lock(mu_);
    return engine_;
  }

  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(2) + "\n", "application/json");
  }

  static void reply_error(httplib::Response& res, int status, const std::string& message) {
    reply(res, status, {{"error", message}});
  }

  // Runs `fn` with a loaded engine, mapping library errors to status codes.
  template <typename Fn>
  void with_engine(httplib::Response& res, Fn&& fn) const {
    auto e = engine();
    if (!e) return reply_error(res, 503, "ontology is still loading");
    try {
      fn(*e);
    } catch (const ParseError& err) {
      nlohmann::json body{{"error", err.what()}};
      if (err.line()) body["line"] = err.line();
      reply(res, 400, body);
    } catch (const NotFoundError& err) {
      reply(res, 400, {{"error", err.what()}, {"term", err.term()}});
    } catch (const SemanticError& err) {
      reply_error(res, 400, err.what());
    } catch (const ConfigError& err) {
      reply_error(res, 400, err.what());
    } catch (const std::invalid_argument& err) {
      reply_error(res, 400, err.what());
    } catch (const std::exception& err) {
      reply_error(res, 500, err.what());
    }
  }

  void routes() {
    http_.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      with_engine(res, [&](Engine& e) {
        reply(res, 200, {{"status", "ok"}, {"revision", e.snapshot()->revision}, {"nodes", e.graph().size()}});
      });
    });

    http_.Get("/services", [this](const httplib::Request&, httplib::Response& res) {
      with_engine(res, [&](Engine& e) { res.set_content(serialize_registry(*e.snapshot()), "text/plain"); });
    });

    http_.Post("/services", [this](const httplib::Request& req, httplib::Response& res) {
      with_engine(res, [&](Engine& e) {
        auto profile = parse_profile(req.body, e.graph());
        const auto id = profile.service_id;
        const auto outcome = e.registry().register_profile(std::move(profile));
        reply(res, outcome.created ? 201 : 200,
              {{"service", id}, {"revision", outcome.revision}, {"created", outcome.created}});
      });
    });

    http_.Post("/search", [this](const httplib::Request& req, httplib::Response& res) {
      with_engine(res, [&](Engine& e) {
        SearchOptions opts;
        if (req.has_param("k")) {
          const auto k = text::parse_int(req.get_param_value("k"));
          if (!k || *k < 1) throw ConfigError("k must be a positive integer");
          opts.k = static_cast<std::size_t>(*k);
        }
        if (req.has_param("strict")) {
          const auto v = req.get_param_value("strict");
          opts.strict = v == "1" || v == "true" || v.empty();
        }
        reply(res, 200, e.search_json(req.body, opts));
      });
    });

    http_.Get("/sim", [this](const httplib::Request& req, httplib::Response& res) {
      with_engine(res, [&](Engine& e) {
        if (!req.has_param("x") || !req.has_param("y")) throw ConfigError("both x and y are required");
        reply(res, 200, e.sim_json(req.get_param_value("x"), req.get_param_value("y")));
      });
    });

    http_.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (res.status == 404 && res.body.empty()) reply_error(res, 404, "no route for " + req.method + " " + req.path);
    });
  }

  mutable std::mutex mu_;
  std::shared_ptr<Engine> engine_;
  httplib::Server http_;
};

}  // namespace rendermatch
