#pragma once

#include <memory>
#include <string>
#include <thread>

#include "boxlab/generator.hpp"
#include "boxlab/target.hpp"

namespace boxlab {

// Serves a target over the wire protocol:
//   GET  /v1/meta   -> {"classes": C, "dim": d, "mode": "confidence"|"label"}
//   POST /v1/query  {"inputs": [[...],...]}
//                   -> {"outputs": [[...],...]} (confidence mode)
//                   -> {"labels": [...]}        (label mode)
//   GET  /v1/stats  -> {"query_count": n}
// Malformed bodies get a 400 with {"error": "..."}.
class TargetServer {
 public:
  explicit TargetServer(std::shared_ptr<Target> target);
  ~TargetServer();

  TargetServer(const TargetServer&) = delete;
  TargetServer& operator=(const TargetServer&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port.
  void start(const std::string& host, int port);
  // Serves on the calling thread until stop() is called from elsewhere.
  void run(const std::string& host, int port);
  void stop();

  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  int port_ = 0;
};

// Client side of the wire protocol; behaves like any other Target. Label
// queries against a confidence-mode server take the argmax locally, which is
// exact because the wire format round-trips doubles. Requests are retried
// and serialized; parallel pipelines treat this handle as stateful.
class RemoteTarget : public Target {
 public:
  RemoteTarget(const std::string& host, int port, int max_retries = 3);
  ~RemoteTarget() override;

  int classes() const override { return classes_; }
  std::size_t dim() const override { return dim_; }
  bool stateless_queries() const override { return false; }

 protected:
  Matrix raw_scores(const Matrix& batch) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int classes_ = 0;
  std::size_t dim_ = 0;
  int max_retries_ = 3;
};

// Remote generator mirror: POST /v1/generate {"class": c, "count": n}
// -> {"samples": [[...],...]}.
class GeneratorServer {
 public:
  explicit GeneratorServer(std::shared_ptr<Generator> generator);
  ~GeneratorServer();

  void start(const std::string& host, int port);
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  int port_ = 0;
};

class RemoteGenerator : public Generator {
 public:
  RemoteGenerator(const std::string& host, int port, std::size_t dim, int classes,
                  int max_retries = 3);
  ~RemoteGenerator() override;

  std::size_t dim() const override { return dim_; }
  int classes() const override { return classes_; }
  std::string kind() const override { return "remote"; }

  Dataset generate(int class_id, std::size_t n) override;

 protected:
  // Unused: generation happens on the remote side.
  void fill_sample(int, Rng&, std::vector<double>&) override {}

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t dim_;
  int classes_;
  int max_retries_;
};

}  // namespace boxlab
