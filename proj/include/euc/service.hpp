#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>

#include "euc/changes.hpp"
#include "euc/inventory.hpp"
#include "euc/standards.hpp"

namespace euc::service {

struct ServiceOptions {
  std::filesystem::path data_dir;
  inventory::Inventory::Clock clock = now_utc;
  std::string host = "127.0.0.1";
  std::size_t max_upload_bytes = std::size_t{64} << 20;
  bool log_requests = false;
};

/// HTTP status for an error code; 500 for codes it does not know.
int http_status_for(const std::string& code);

/// The inventory and change-control HTTP/JSON API over one data directory:
///   inventory.jsonl, inventory.snapshot.json   registry
///   changes/                                    snapshots and change events
///   rules.json, alert_rules.json                optional configuration
///   eucctl.lock                                 held while the service runs
/// Mutating requests need an X-EUC-Principal header naming the caller.
class Service {
 public:
  /// Errors: data-dir-locked, storage-failure, invalid-config.
  explicit Service(ServiceOptions options);
  ~Service();

  inventory::Inventory& inventory();
  changes::ChangeStore& changes();

  /// Binds the listening socket; port 0 picks a free one. Returns the port.
  /// Errors: port-in-use.
  int bind(int port);
  /// Serves until stop(). bind() first.
  void run();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

inline constexpr const char* kPrincipalHeader = "X-EUC-Principal";

}  // namespace euc::service
