#include "vce/service.hpp"

#include <httplib.h>

#include <iostream>

namespace vce::service {

void Service::install(httplib::Server& server) {
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    const Response r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get(".*", forward);
  server.Post(".*", forward);
  server.Delete(".*", forward);
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
}

int serve(Service& service, const std::string& host, int port) {
  httplib::Server server;
  service.install(server);
  std::cerr << "listening on " << host << ":" << port << "\n";
  if (!server.listen(host, port)) {
    std::cerr << "could not bind " << host << ":" << port << "\n";
    return 2;
  }
  return 0;
}

}  // namespace vce::service
