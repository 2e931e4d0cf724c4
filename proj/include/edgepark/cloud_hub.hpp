#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "edgepark/clock.hpp"
#include "edgepark/transport.hpp"
#include "edgepark/wire.hpp"

namespace edgepark {

struct StoredRollup {
  std::string idempotency_key;
  std::string lot_id;
  EpochMs window_start = 0;
  EpochMs window_end = 0;
  std::vector<RollupRecord> records;
  EpochMs received_at = 0;

  friend bool operator==(const StoredRollup&, const StoredRollup&) = default;
};

/// Schema checks applied before anything is stored. Throws ProtocolError.
void validate_envelope(const UploadEnvelope& envelope);

/// Durable roll-up store: one append-only JSON-lines file per lot with an
/// in-memory key index rebuilt on open. Writes are flushed and fsynced before
/// put() returns.
class HubStore {
 public:
  enum class PutResult { stored, duplicate };

  /// Opens (creating) the directory and loads every lot file.
  explicit HubStore(std::filesystem::path dir);

  PutResult put(const UploadEnvelope& envelope, EpochMs received_at);
  std::optional<StoredRollup> find(const std::string& lot_id, EpochMs window_start) const;
  /// Stored roll-ups for a lot ordered by window start.
  std::vector<StoredRollup> list(const std::string& lot_id) const;
  std::vector<std::string> lots() const;
  std::size_t size() const { return by_key_.size(); }
  const std::filesystem::path& dir() const { return dir_; }

  static std::filesystem::path lot_file(const std::filesystem::path& dir, const std::string& lot_id);

 private:
  std::filesystem::path dir_;
  std::map<std::string, StoredRollup> by_key_;
};

std::string encode_stored(const StoredRollup& stored);
/// Throws ProtocolError.
StoredRollup decode_stored(std::string_view line);

/// Daily view for (lot, window start), or nullopt.
std::optional<std::vector<RollupRecord>> query_daily(const HubStore& store, const std::string& lot_id,
                                                     EpochMs window_start);

/// Seven days from week_start. A day counts if a roll-up is stored whose
/// window starts exactly at week_start + d * 24 h. nullopt if none does.
std::optional<WeeklyReport> weekly_report(const HubStore& store, const std::string& lot_id,
                                          EpochMs week_start);

/// Optional misbehaviour for exercising the uploader. Off by default.
struct HubFaults {
  /// The first N roll-up messages are swallowed: nothing stored, no reply.
  int drop_rollups = 0;
  /// The first N acknowledgements are never sent; the roll-ups are still stored.
  int lose_acks = 0;
};

/// Wire front end for a HubStore.
class HubService {
 public:
  struct Stats {
    std::int64_t rollups_received = 0;
    std::int64_t stored = 0;
    std::int64_t duplicates = 0;
    std::int64_t acks_sent = 0;
    std::int64_t errors_sent = 0;
    std::int64_t queries = 0;
  };

  HubService(HubStore& store, const Clock& clock, HubFaults faults = {});

  void attach(std::unique_ptr<Connection> connection);
  void poll();
  /// Handles one request line; nullopt means no reply is sent.
  std::optional<std::string> handle_line(std::string_view line);
  void drop_sessions();

  std::size_t session_count() const { return sessions_.size(); }
  const Stats& stats() const { return stats_; }

 private:
  HubStore& store_;
  const Clock& clock_;
  HubFaults faults_;
  std::vector<std::unique_ptr<Connection>> sessions_;
  Stats stats_;
};

}  // namespace edgepark
