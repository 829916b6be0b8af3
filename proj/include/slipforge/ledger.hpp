#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace slipforge {

enum class Verdict { confirmed, rejected };
std::string_view to_string(Verdict v) noexcept;
Verdict parse_verdict(std::string_view s);  // throws InputError

/// One human decision about a (target, candidate) pairing. Records are never
/// edited; a correction is a new record.
struct MatchRecord {
  std::uint64_t record_id = 0;
  std::string target_id;
  std::string candidate_id;
  Verdict verdict = Verdict::confirmed;
  std::string method;
  std::optional<std::size_t> rank_shown;
  std::optional<double> confidence_shown;
  std::string note;
  std::string timestamp;  // RFC 3339, UTC

  friend bool operator==(const MatchRecord&, const MatchRecord&) = default;
};

nlohmann::json record_to_json(const MatchRecord& r);
MatchRecord record_from_json(const nlohmann::json& j);  // throws ParseError

struct MatchFilter {
  std::optional<std::string> target_id;
  std::optional<std::string> candidate_id;
  std::optional<Verdict> verdict;

  bool accepts(const MatchRecord& r) const;
};

struct LedgerListing {
  std::vector<MatchRecord> records;   // file order
  std::vector<std::string> warnings;  // one per quarantined line
};

std::string utc_timestamp_now();

/// Append-only JSON-lines ledger. Appends hold an exclusive advisory lock on
/// the file (and a process-local mutex), are fsync'ed before returning, and
/// never rewrite earlier bytes. Listing reads a snapshot without locking.
class MatchLedger {
public:
  explicit MatchLedger(std::filesystem::path path) : path_(std::move(path)) {}

  const std::filesystem::path& path() const noexcept { return path_; }

  /// Assigns record_id (one past the largest stored id) and, if empty, the
  /// timestamp. Throws InputError for an invalid record, StorageError on I/O failure.
  MatchRecord append(MatchRecord record);

  LedgerListing list(const MatchFilter& filter = {}) const;

private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

std::uint64_t append_match(const std::filesystem::path& ledger, MatchRecord record);
LedgerListing list_matches(const std::filesystem::path& ledger, const MatchFilter& filter = {});

}  // namespace slipforge
