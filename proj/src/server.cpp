#include "boxlab/server.hpp"

#include <mutex>

#include "httplib.h"
#include "json.hpp"

namespace boxlab {

namespace {

Matrix parse_inputs(const nlohmann::json& body, std::size_t expect_dim) {
  if (!body.contains("inputs") || !body["inputs"].is_array())
    throw std::invalid_argument("body must contain an 'inputs' array");
  const auto& rows = body["inputs"];
  Matrix m(rows.size(), expect_dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != expect_dim)
      throw std::invalid_argument("input row " + std::to_string(i) + " must have " +
                                  std::to_string(expect_dim) + " values");
    for (std::size_t j = 0; j < expect_dim; ++j) {
      if (!rows[i][j].is_number()) throw std::invalid_argument("inputs must be numeric");
      m.at(i, j) = rows[i][j].get<double>();
    }
  }
  return m;
}

void reply_error(httplib::Response& res, int code, const std::string& msg) {
  res.status = code;
  res.set_content(nlohmann::json{{"error", msg}}.dump(), "application/json");
}

nlohmann::json matrix_rows(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    rows.push_back(std::vector<double>(m.row(i), m.row(i) + m.cols));
  }
  return rows;
}

// One GET/POST with retries; throws TransportError once the budget is spent.
nlohmann::json request_json(httplib::Client& client, int max_retries, const std::string& path,
                            const std::string* post_body) {
  int attempts = 0;
  for (;;) {
    httplib::Result r = post_body ? client.Post(path, *post_body, "application/json")
                                  : client.Get(path);
    ++attempts;
    if (r && r->status >= 200 && r->status < 300) {
      return nlohmann::json::parse(r->body);
    }
    if (attempts > max_retries) {
      const std::string why =
          r ? ("status " + std::to_string(r->status) + ", body: " + r->body) : "connection failed";
      throw TransportError(
          "remote " + path + ": " + why + " after " + std::to_string(attempts) + " attempts",
          attempts - 1);
    }
  }
}

}  // namespace

struct TargetServer::Impl {
  std::shared_ptr<Target> target;
  httplib::Server server;
};

TargetServer::TargetServer(std::shared_ptr<Target> target) : impl_(new Impl) {
  impl_->target = std::move(target);
  auto* t = impl_->target.get();

  impl_->server.Get("/v1/meta", [t](const httplib::Request&, httplib::Response& res) {
    nlohmann::json j{{"classes", t->classes()},
                     {"dim", t->dim()},
                     {"mode", t->mode() == QueryMode::kConfidence ? "confidence" : "label"}};
    res.set_content(j.dump(), "application/json");
  });

  impl_->server.Get("/v1/stats", [t](const httplib::Request&, httplib::Response& res) {
    res.set_content(nlohmann::json{{"query_count", t->query_count()}}.dump(), "application/json");
  });

  impl_->server.Post("/v1/query", [t](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto body = nlohmann::json::parse(req.body);
      const Matrix batch = parse_inputs(body, t->dim());
      nlohmann::json j;
      if (t->mode() == QueryMode::kConfidence) {
        j["outputs"] = matrix_rows(t->query_confidence(batch));
      } else {
        j["labels"] = t->query_label(batch);
      }
      res.set_content(j.dump(), "application/json");
    } catch (const nlohmann::json::exception& e) {
      reply_error(res, 400, std::string("malformed body: ") + e.what());
    } catch (const std::invalid_argument& e) {
      reply_error(res, 400, e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
    }
  });
}

TargetServer::~TargetServer() { stop(); }

void TargetServer::start(const std::string& host, int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
    if (port_ <= 0) throw std::runtime_error("cannot bind " + host);
  } else {
    if (!impl_->server.bind_to_port(host, port))
      throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
  }
  thread_ = std::thread([this]() { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void TargetServer::run(const std::string& host, int port) {
  port_ = port;
  if (!impl_->server.listen(host, port))
    throw std::runtime_error("server stopped: cannot listen on " + host + ":" +
                             std::to_string(port));
}

void TargetServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

struct RemoteTarget::Impl {
  httplib::Client client;
  std::mutex mutex;
  Impl(const std::string& host, int port) : client(host, port) {}
};

RemoteTarget::RemoteTarget(const std::string& host, int port, int max_retries)
    : Target(QueryMode::kConfidence), impl_(new Impl(host, port)), max_retries_(max_retries) {
  const auto meta = request_json(impl_->client, max_retries_, "/v1/meta", nullptr);
  classes_ = meta.at("classes").get<int>();
  dim_ = meta.at("dim").get<std::size_t>();
  if (meta.at("mode").get<std::string>() == "label") set_mode(QueryMode::kLabelOnly);
}

RemoteTarget::~RemoteTarget() = default;

Matrix RemoteTarget::raw_scores(const Matrix& batch) {
  nlohmann::json body;
  body["inputs"] = matrix_rows(batch);
  const std::string payload = body.dump();

  std::lock_guard<std::mutex> lock(impl_->mutex);
  const auto j = request_json(impl_->client, max_retries_, "/v1/query", &payload);
  if (j.contains("outputs")) {
    const auto& out = j["outputs"];
    Matrix m(out.size(), classes_);
    for (std::size_t i = 0; i < out.size(); ++i)
      for (int c = 0; c < classes_; ++c) m.at(i, c) = out[i][c].get<double>();
    return m;
  }
  // Label-mode server: surface labels as one-hot rows so argmax recovers them.
  const auto labels = j.at("labels").get<std::vector<int>>();
  Matrix m(labels.size(), classes_);
  for (std::size_t i = 0; i < labels.size(); ++i) m.at(i, labels[i]) = 1.0;
  return m;
}

struct GeneratorServer::Impl {
  std::shared_ptr<Generator> generator;
  httplib::Server server;
  std::mutex mutex;  // Generator::generate mutates per-class call counters
};

GeneratorServer::GeneratorServer(std::shared_ptr<Generator> generator) : impl_(new Impl) {
  impl_->generator = std::move(generator);
  auto* imp = impl_.get();

  impl_->server.Get("/v1/meta", [imp](const httplib::Request&, httplib::Response& res) {
    nlohmann::json j{{"classes", imp->generator->classes()},
                     {"dim", imp->generator->dim()},
                     {"kind", imp->generator->kind()}};
    res.set_content(j.dump(), "application/json");
  });

  impl_->server.Post("/v1/generate", [imp](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto body = nlohmann::json::parse(req.body);
      const int class_id = body.at("class").get<int>();
      const std::size_t count = body.at("count").get<std::size_t>();
      std::lock_guard<std::mutex> lock(imp->mutex);
      const Dataset d = imp->generator->generate(class_id, count);
      res.set_content(nlohmann::json{{"samples", matrix_rows(d.to_matrix())}}.dump(),
                      "application/json");
    } catch (const nlohmann::json::exception& e) {
      reply_error(res, 400, std::string("malformed body: ") + e.what());
    } catch (const std::invalid_argument& e) {
      reply_error(res, 400, e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
    }
  });
}

GeneratorServer::~GeneratorServer() { stop(); }

void GeneratorServer::start(const std::string& host, int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
    if (port_ <= 0) throw std::runtime_error("cannot bind " + host);
  } else {
    if (!impl_->server.bind_to_port(host, port))
      throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
  }
  thread_ = std::thread([this]() { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void GeneratorServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

struct RemoteGenerator::Impl {
  httplib::Client client;
  std::mutex mutex;
  Impl(const std::string& host, int port) : client(host, port) {}
};

RemoteGenerator::RemoteGenerator(const std::string& host, int port, std::size_t dim, int classes,
                                 int max_retries)
    : Generator(0, classes),
      impl_(new Impl(host, port)),
      dim_(dim),
      classes_(classes),
      max_retries_(max_retries) {}

RemoteGenerator::~RemoteGenerator() = default;

Dataset RemoteGenerator::generate(int class_id, std::size_t n) {
  if (class_id < 0 || class_id >= classes_)
    throw std::invalid_argument("generate: unknown class " + std::to_string(class_id));
  const std::string payload = nlohmann::json{{"class", class_id}, {"count", n}}.dump();
  std::lock_guard<std::mutex> lock(impl_->mutex);
  const auto j = request_json(impl_->client, max_retries_, "/v1/generate", &payload);
  Dataset out;
  out.dim = dim_;
  out.class_count = classes_;
  for (const auto& row : j.at("samples")) {
    out.add(row.get<std::vector<double>>(), class_id);
  }
  return out;
}

}  // namespace boxlab
