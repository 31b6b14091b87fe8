#include "taskroute/service.hpp"

#include <cmath>

#include <httplib.h>
#include <json.hpp>

namespace taskroute {

using nlohmann::json;

namespace {

void reply_error(httplib::Response& res, int status, const std::string& reason) {
  json body;
  body["error"] = reason;
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

RoutingService::RoutingService(std::shared_ptr<const ServingState> state,
                               std::map<std::string, std::string> artifact_checksums)
    : state_(std::move(state)), checksums_(std::move(artifact_checksums)) {
  if (!state_) throw Error("routing service: null serving state");
}

void RoutingService::attach(httplib::Server& server) const {
  const auto state = state_;
  const auto checksums = checksums_;

  server.Get("/healthz", [state, checksums](const httplib::Request&,
                                            httplib::Response& res) {
    json body;
    body["status"] = "ok";
    body["pool_size"] = state->pool.size();
    body["cluster_count"] = state->discovery.cluster_count();
    json artifacts = json::object();
    for (const auto& [name, crc] : checksums) artifacts[name] = crc;
    body["artifacts"] = artifacts;
    res.set_content(body.dump(), "application/json");
  });

  server.Post("/route", [state](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object())
      return reply_error(res, 400, "request body is not a JSON object");
    if (!body.contains("embedding") || !body["embedding"].is_array())
      return reply_error(res, 400, "missing array field 'embedding'");

    Eigen::VectorXd embedding(static_cast<Eigen::Index>(body["embedding"].size()));
    Eigen::Index i = 0;
    for (const auto& x : body["embedding"]) {
      if (!x.is_number())
        return reply_error(res, 400, "'embedding' must contain only numbers");
      const double v = x.get<double>();
      if (!std::isfinite(v))
        return reply_error(res, 400, "'embedding' must contain finite numbers");
      embedding[i++] = v;
    }

    double tolerance = 0.0;
    if (body.contains("tolerance")) {
      if (!body["tolerance"].is_number())
        return reply_error(res, 400, "'tolerance' must be a number");
      tolerance = body["tolerance"].get<double>();
      if (tolerance < 0.0 || tolerance > 1.0)
        return reply_error(res, 400, "'tolerance' must lie in [0,1]");
    }

    const auto expected = state->classifier.prompt_dim();
    if (embedding.size() != expected)
      return reply_error(res, 422,
                         "embedding has dimension " + std::to_string(embedding.size()) +
                             ", expected " + std::to_string(expected));

    const RoutingDecision d = route_with_tolerance(*state, embedding, tolerance);
    json out;
    out["model_id"] = state->pool[static_cast<std::size_t>(d.chosen_model)].model_id;
    if (d.task_id >= 0)
      out["task_id"] = d.task_id;
    else
      out["task_id"] = nullptr;
    out["final_scores"] = std::vector<double>(
        d.final_scores.data(), d.final_scores.data() + d.final_scores.size());
    out["cost"] = d.cost;
    res.set_content(out.dump(), "application/json");
  });
}

int RoutingService::run(const std::string& host, int port) const {
  httplib::Server server;
  attach(server);
  if (!server.bind_to_port(host, port)) return 2;
  server.listen_after_bind();
  return 0;
}

}  // namespace taskroute
