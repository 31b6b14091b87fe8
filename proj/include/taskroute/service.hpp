#pragma once

#include <map>
#include <memory>
#include <string>

#include "taskroute/inference.hpp"

namespace httplib {
class Server;
}

namespace taskroute {

// Stateless request handling over an immutable ServingState. POST /route
// answers routing decisions; GET /healthz reports pool size, cluster count,
// and the checksums of the loaded artifact files.
class RoutingService {
 public:
  RoutingService(std::shared_ptr<const ServingState> state,
                 std::map<std::string, std::string> artifact_checksums);

  // Registers the handlers; usable against an in-process server in tests.
  void attach(httplib::Server& server) const;

  // Blocks serving requests. Returns 2 if the address cannot be bound.
  int run(const std::string& host, int port) const;

 private:
  std::shared_ptr<const ServingState> state_;
  std::map<std::string, std::string> checksums_;
};

}  // namespace taskroute
