#include "therif/service/http.hpp"

#include <httplib.h>

namespace therif::service {

struct HttpServer::Impl {
  explicit Impl(Service& s) : service(s) {}
  Service& service;
  httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const auto r = impl_->service.handle(req.method, req.path, req.body, req.get_header_value("X-Admin-Token"));
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto& s = impl_->server;
  s.Get(R"(/.*)", route);
  s.Post(R"(/.*)", route);
  s.set_payload_max_length(1 << 20);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace therif::service
