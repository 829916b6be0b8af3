#include "slipforge/ledger.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include "slipforge/error.hpp"

namespace slipforge {

using nlohmann::json;

std::string_view to_string(Verdict v) noexcept { return v == Verdict::confirmed ? "confirmed" : "rejected"; }

Verdict parse_verdict(std::string_view s) {
  if (s == "confirmed") return Verdict::confirmed;
  if (s == "rejected") return Verdict::rejected;
  throw InputError("verdict must be confirmed or rejected, got '" + std::string(s) + "'");
}

json record_to_json(const MatchRecord& r) {
  return json{{"record_id", r.record_id},
              {"target_id", r.target_id},
              {"candidate_id", r.candidate_id},
              {"verdict", to_string(r.verdict)},
              {"method", r.method},
              {"rank_shown", r.rank_shown ? json(*r.rank_shown) : json(nullptr)},
              {"confidence_shown", r.confidence_shown ? json(*r.confidence_shown) : json(nullptr)},
              {"note", r.note},
              {"timestamp", r.timestamp}};
}

MatchRecord record_from_json(const json& j) {
  try {
    MatchRecord r;
    r.record_id = j.at("record_id").get<std::uint64_t>();
    r.target_id = j.at("target_id").get<std::string>();
    r.candidate_id = j.at("candidate_id").get<std::string>();
    r.verdict = parse_verdict(j.at("verdict").get<std::string>());
    r.method = j.value("method", "");
    if (j.contains("rank_shown") && !j["rank_shown"].is_null()) r.rank_shown = j["rank_shown"].get<std::size_t>();
    if (j.contains("confidence_shown") && !j["confidence_shown"].is_null())
      r.confidence_shown = j["confidence_shown"].get<double>();
    r.note = j.value("note", "");
    r.timestamp = j.at("timestamp").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  } catch (const InputError& e) {
    throw ParseError(e.what());
  }
}

bool MatchFilter::accepts(const MatchRecord& r) const {
  return (!target_id || r.target_id == *target_id) && (!candidate_id || r.candidate_id == *candidate_id) &&
         (!verdict || r.verdict == *verdict);
}

std::string utc_timestamp_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

// Parses ledger text; lines that fail to parse are reported, not dropped silently.
LedgerListing replay(const std::string& text, const MatchFilter& filter) {
  LedgerListing out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      MatchRecord r = record_from_json(json::parse(line));
      if (filter.accepts(r)) out.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      out.warnings.push_back("line " + std::to_string(number) + " quarantined: " + e.what());
    }
  }
  return out;
}

class FileLock {
public:
  explicit FileLock(int fd) : fd_(fd) {
    while (::flock(fd_, LOCK_EX) != 0) {
      if (errno != EINTR) throw StorageError(std::string("flock: ") + std::strerror(errno));
    }
  }
  ~FileLock() { ::flock(fd_, LOCK_UN); }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

private:
  int fd_;
};

class Fd {
public:
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }

private:
  int fd_;
};

std::string read_all(int fd) {
  std::string text;
  char buf[1 << 14];
  off_t offset = 0;
  for (;;) {
    const ssize_t n = ::pread(fd, buf, sizeof buf, offset);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw StorageError(std::string("read: ") + std::strerror(errno));
    }
    if (n == 0) break;
    text.append(buf, static_cast<std::size_t>(n));
    offset += n;
  }
  return text;
}

void write_all(int fd, const std::string& data) {
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw StorageError(std::string("write: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

}  // namespace

MatchRecord MatchLedger::append(MatchRecord record) {
  if (record.target_id.empty() || record.candidate_id.empty())
    throw InputError("match record needs target_id and candidate_id");
  if (record.timestamp.empty()) record.timestamp = utc_timestamp_now();

  std::lock_guard<std::mutex> guard(mutex_);
  Fd fd(::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644));
  if (fd.get() < 0) throw StorageError("cannot open ledger " + path_.string() + ": " + std::strerror(errno));
  FileLock lock(fd.get());

  const std::string existing = read_all(fd.get());
  std::uint64_t last_id = 0;
  for (const auto& r : replay(existing, {}).records) last_id = std::max(last_id, r.record_id);
  record.record_id = last_id + 1;

  std::string line;
  // A torn final line from an earlier crash stays in place (quarantined on
  // read); start on a fresh line so this record is not merged into it.
  if (!existing.empty() && existing.back() != '\n') line += '\n';
  line += record_to_json(record).dump();
  line += '\n';
  write_all(fd.get(), line);
  if (::fsync(fd.get()) != 0) throw StorageError(std::string("fsync: ") + std::strerror(errno));
  return record;
}

LedgerListing MatchLedger::list(const MatchFilter& filter) const {
  Fd fd(::open(path_.c_str(), O_RDONLY | O_CLOEXEC));
  if (fd.get() < 0) {
    if (errno == ENOENT) return {};
    throw StorageError("cannot open ledger " + path_.string() + ": " + std::strerror(errno));
  }
  return replay(read_all(fd.get()), filter);
}

std::uint64_t append_match(const std::filesystem::path& ledger, MatchRecord record) {
  MatchLedger l(ledger);
  return l.append(std::move(record)).record_id;
}

LedgerListing list_matches(const std::filesystem::path& ledger, const MatchFilter& filter) {
  return MatchLedger(ledger).list(filter);
}

}  // namespace slipforge
