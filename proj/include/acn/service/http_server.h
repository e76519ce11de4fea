#pragma once

#include <memory>
#include <string>

#include "acn/core/error.h"
#include "acn/service/engine.h"

namespace acn::service {

/// HTTP status for an error surfaced by the engine.
int http_status(ErrorCode code);

/// JSON/HTTP front end over an Engine.
class HttpService {
 public:
  explicit HttpService(Engine& engine);
  ~HttpService();

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  void serve();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace acn::service
