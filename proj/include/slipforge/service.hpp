#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "slipforge/dataset.hpp"
#include "slipforge/ledger.hpp"
#include "slipforge/matcher.hpp"
#include "slipforge/scorer.hpp"

namespace slipforge {

inline constexpr const char* kServiceVersion = "0.1.0";

/// Request handling for the review API, independent of the HTTP transport.
/// Everything except the ledger is read-only after construction, so handlers
/// may run concurrently.
class ReviewService {
public:
  struct Response {
    int status = 200;
    nlohmann::json body;
  };

  ReviewService(DatasetManifest dataset, std::shared_ptr<const EmbeddingModel> model,
                std::filesystem::path ledger_path, std::string dataset_label = "dataset",
                std::string model_label = "model");

  /// Adds or replaces a ranking method; prepared against the dataset here.
  void register_scorer(std::unique_ptr<Scorer> scorer);

  Response health() const;
  Response list_fragments(const std::optional<std::string>& group) const;
  Response get_fragment(const std::string& id) const;
  Response candidates(const std::string& id, const std::optional<std::string>& k,
                      const std::optional<std::string>& method) const;
  Response post_match(const std::string& body);
  Response list_matches(const std::optional<std::string>& target_id) const;

  const DatasetManifest& dataset() const noexcept { return dataset_; }

private:
  DatasetManifest dataset_;
  DatasetIndex index_;
  std::shared_ptr<const EmbeddingModel> model_;
  std::string dataset_label_;
  std::string model_label_;
  std::map<std::string, std::unique_ptr<Scorer>> scorers_;
  std::map<Group, std::vector<const Fragment*>> groups_;
  MatchLedger ledger_;
};

/// Maps an exception to {status, {"error": code, "message": ...}}.
ReviewService::Response error_response(const std::exception& e);

/// cpp-httplib transport for ReviewService, plus static files from ui_dir at "/".
class HttpFrontend {
public:
  HttpFrontend(ReviewService& service, std::optional<std::filesystem::path> ui_dir = std::nullopt);
  ~HttpFrontend();
  HttpFrontend(const HttpFrontend&) = delete;
  HttpFrontend& operator=(const HttpFrontend&) = delete;

  /// Returns the bound port; throws StorageError if binding fails. port 0 picks a free port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Splits "host:port". Throws InputError.
std::pair<std::string, int> parse_address(const std::string& addr);

}  // namespace slipforge
