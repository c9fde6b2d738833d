#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

#include "belief_tuner/error.hpp"
#include "belief_tuner/network.hpp"

namespace httplib {
class Server;
}

namespace belief_tuner {

// Unknown session id, or a version that was never stored or was evicted.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

struct ServiceOptions {
  std::size_t max_versions = 100;  // per session; oldest evicted first
  std::size_t max_watches = 8;     // per session
  std::size_t max_body_bytes = 1 << 20;
  /// Where POST /networks/{id}/export writes snapshots.  Without it the
  /// documents are returned in the response body.
  std::optional<std::filesystem::path> export_dir;
};

/// A posterior the service recomputes after every apply.
struct WatchQuery {
  Event target;
  Evidence evidence;
};

/// Versioned in-memory networks, one append-only history per session.
/// Readers share a session lock; apply and revert take it exclusively, so
/// a reader always sees one complete stored version.
class ModelStore {
 public:
  explicit ModelStore(std::size_t max_versions = 100, std::size_t max_watches = 8);

  /// Stores `n` as version 0 of a new session and returns its id.
  std::string create(Network n);

  /// A stored version, the latest when `version` is empty.
  std::shared_ptr<const Network> get(const std::string& id,
                                     std::optional<std::size_t> version = std::nullopt) const;

  /// Builds the next version from the latest one under the session's write
  /// lock.  `next` must return a network stamped latest.version() + 1.
  /// Returns the previous latest and the appended version.
  std::pair<std::shared_ptr<const Network>, std::shared_ptr<const Network>> append(
      const std::string& id, const std::function<Network(const Network&)>& next);

  /// Appends a copy of `version` as a new latest version.
  std::shared_ptr<const Network> revert(const std::string& id, std::size_t version);

  /// Stored version numbers, oldest first.
  std::vector<std::size_t> versions(const std::string& id) const;

  /// Throws DomainError once the session holds max_watches queries.
  std::size_t add_watch(const std::string& id, WatchQuery w);
  std::vector<WatchQuery> watches(const std::string& id) const;

  std::size_t max_versions() const { return max_versions_; }

 private:
  struct Session {
    mutable std::shared_mutex mutex;
    std::deque<std::shared_ptr<const Network>> history;
    std::vector<WatchQuery> watches;
  };

  std::shared_ptr<Session> session(const std::string& id) const;
  void push(Session& s, std::shared_ptr<const Network> n);
  std::string fresh_id();

  std::size_t max_versions_;
  std::size_t max_watches_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
};

/// HTTP front end.  All routes live under /api/v1/.
class Service {
 public:
  explicit Service(ServiceOptions options = {});

  /// Registers every route on `server` and sets its payload limit.  The
  /// service must outlive the server.
  void mount(httplib::Server& server);

  ModelStore& store() { return store_; }
  const ServiceOptions& options() const { return options_; }

 private:
  ServiceOptions options_;
  ModelStore store_;
};

/// Blocks serving on host:port until the process is stopped.  Returns
/// false when the socket cannot be bound.
bool serve(const std::string& host, int port, const ServiceOptions& options, std::ostream& log);

}  // namespace belief_tuner
