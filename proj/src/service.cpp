#include "slipforge/service.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include <httplib.h>

#include "slipforge/datastore.hpp"
#include "slipforge/error.hpp"
#include "slipforge/evaluation.hpp"

namespace slipforge {

using nlohmann::json;

namespace {

int status_for(const std::string& code) {
  if (code == "not_found") return 404;
  if (code == "group_protocol") return 409;
  if (code == "invalid_input" || code == "parse_failure" || code == "parameter_domain") return 400;
  return 500;
}

ReviewService::Response fail(int status, const std::string& code, const std::string& message) {
  return {status, json{{"error", code}, {"message", message}}};
}

std::string digest_label(const std::string& label, const std::string& content) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : content) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return label + "@" + buf;
}

}  // namespace

ReviewService::Response error_response(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return fail(status_for(err->code()), err->code(), err->what());
  return fail(500, "internal", e.what());
}

ReviewService::ReviewService(DatasetManifest dataset, std::shared_ptr<const EmbeddingModel> model,
                             std::filesystem::path ledger_path, std::string dataset_label, std::string model_label)
    : dataset_(std::move(dataset)),
      index_(dataset_),
      model_(std::move(model)),
      dataset_label_(digest_label(dataset_label, serialize_manifest(dataset_))),
      model_label_(model_ ? digest_label(model_label, serialize_model(*model_)) : "none"),
      ledger_(std::move(ledger_path)) {
  dataset_.validate();
  for (const auto& f : dataset_.fragments) groups_[f.group].push_back(&f);
  for (auto& [g, members] : groups_) {
    std::sort(members.begin(), members.end(), [](const Fragment* a, const Fragment* b) { return a->id < b->id; });
  }
  if (model_) register_scorer(std::make_unique<EmbeddingScorer>(model_));
  register_scorer(std::make_unique<DtwScorer>());
  register_scorer(std::make_unique<CosineScorer>());
}

void ReviewService::register_scorer(std::unique_ptr<Scorer> scorer) {
  scorer->prepare(dataset_);
  const std::string name = scorer->name();
  scorers_[name] = std::move(scorer);
}

ReviewService::Response ReviewService::health() const {
  json methods = json::array();
  for (const auto& [name, _] : scorers_) methods.push_back(name);
  return {200, json{{"status", "ok"},
                    {"version", kServiceVersion},
                    {"dataset", dataset_label_},
                    {"model", model_label_},
                    {"fragments", dataset_.fragments.size()},
                    {"methods", methods}}};
}

ReviewService::Response ReviewService::list_fragments(const std::optional<std::string>& group) const {
  try {
    std::vector<const Fragment*> out;
    if (group) {
      const Group g = parse_group(*group);
      if (auto it = groups_.find(g); it != groups_.end()) out = it->second;
    } else {
      for (const auto& f : dataset_.fragments) out.push_back(&f);
      std::sort(out.begin(), out.end(), [](const Fragment* a, const Fragment* b) { return a->id < b->id; });
    }
    json list = json::array();
    for (const Fragment* f : out) list.push_back({{"id", f->id}, {"group", to_string(f->group)}, {"samples", f->edge.size()}});
    return {200, json{{"fragments", list}}};
  } catch (const std::exception& e) {
    return error_response(e);
  }
}

ReviewService::Response ReviewService::get_fragment(const std::string& id) const {
  const Fragment* f = index_.find(id);
  if (!f) return fail(404, "not_found", "unknown fragment id " + id);
  return {200, json{{"id", f->id}, {"group", to_string(f->group)}, {"edge", f->edge}}};
}

ReviewService::Response ReviewService::candidates(const std::string& id, const std::optional<std::string>& k_text,
                                                  const std::optional<std::string>& method) const {
  try {
    const Fragment* target = index_.find(id);
    if (!target) return fail(404, "not_found", "unknown fragment id " + id);
    std::size_t k = 50;
    if (k_text) {
      const auto* first = k_text->data();
      const auto* last = first + k_text->size();
      const auto [ptr, ec] = std::from_chars(first, last, k);
      if (ec != std::errc{} || ptr != last || k == 0) return fail(400, "invalid_input", "k must be a positive integer");
    }
    const std::string name = method.value_or("wisepanda");
    const auto it = scorers_.find(name);
    if (it == scorers_.end()) return fail(400, "invalid_input", "unknown method '" + name + "'");

    const auto pool_it = groups_.find(opposite(target->group));
    if (pool_it == groups_.end() || pool_it->second.empty())
      return fail(400, "invalid_input", "no candidates in the opposite group");
    const RankedList ranked = rank_candidates(*target, pool_it->second, *it->second);

    json list = json::array();
    const std::size_t n = std::min(k, ranked.entries.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto& e = ranked.entries[i];
      list.push_back({{"rank", i + 1}, {"candidate_id", e.candidate_id}, {"score", e.score}, {"confidence", e.confidence}});
    }
    return {200, json{{"target_id", target->id},
                      {"method", name},
                      {"k", k},
                      {"pool_size", ranked.entries.size()},
                      {"candidates", list}}};
  } catch (const std::exception& e) {
    return error_response(e);
  }
}

ReviewService::Response ReviewService::post_match(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    return fail(400, "invalid_input", std::string("malformed JSON: ") + e.what());
  }
  try {
    if (!doc.is_object()) return fail(400, "invalid_input", "body must be a JSON object");
    MatchRecord r;
    if (!doc.contains("target_id") || !doc["target_id"].is_string() || !doc.contains("candidate_id") ||
        !doc["candidate_id"].is_string() || !doc.contains("verdict") || !doc["verdict"].is_string())
      return fail(400, "invalid_input", "target_id, candidate_id and verdict are required strings");
    r.target_id = doc["target_id"].get<std::string>();
    r.candidate_id = doc["candidate_id"].get<std::string>();
    r.verdict = parse_verdict(doc["verdict"].get<std::string>());
    r.note = doc.value("note", "");
    r.method = doc.value("method", "");
    if (doc.contains("rank") && !doc["rank"].is_null()) r.rank_shown = doc["rank"].get<std::size_t>();
    if (doc.contains("confidence") && !doc["confidence"].is_null()) r.confidence_shown = doc["confidence"].get<double>();

    const Fragment* t = index_.find(r.target_id);
    if (!t) return fail(404, "not_found", "unknown target_id " + r.target_id);
    const Fragment* c = index_.find(r.candidate_id);
    if (!c) return fail(404, "not_found", "unknown candidate_id " + r.candidate_id);
    if (t->group == c->group) return fail(409, "group_protocol", "target and candidate are in the same group");

    return {200, record_to_json(ledger_.append(std::move(r)))};
  } catch (const json::exception& e) {
    return fail(400, "invalid_input", e.what());
  } catch (const std::exception& e) {
    return error_response(e);
  }
}

ReviewService::Response ReviewService::list_matches(const std::optional<std::string>& target_id) const {
  try {
    MatchFilter filter;
    filter.target_id = target_id;
    const LedgerListing listing = ledger_.list(filter);
    json records = json::array();
    for (const auto& r : listing.records) records.push_back(record_to_json(r));
    return {200, json{{"records", records}, {"warnings", listing.warnings}}};
  } catch (const std::exception& e) {
    return error_response(e);
  }
}

std::pair<std::string, int> parse_address(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0) throw InputError("address must be HOST:PORT, got '" + addr + "'");
  int port = -1;
  const std::string p = addr.substr(colon + 1);
  const auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), port);
  if (ec != std::errc{} || ptr != p.data() + p.size() || port < 0 || port > 65535)
    throw InputError("invalid port in '" + addr + "'");
  return {addr.substr(0, colon), port};
}

struct HttpFrontend::Impl {
  httplib::Server server;
};

namespace {

void reply(httplib::Response& res, const ReviewService::Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

}  // namespace

HttpFrontend::HttpFrontend(ReviewService& service, std::optional<std::filesystem::path> ui_dir)
    : impl_(std::make_unique<Impl>()) {
  auto& s = impl_->server;
  s.Get("/api/health", [&service](const httplib::Request&, httplib::Response& res) { reply(res, service.health()); });
  s.Get("/api/fragments", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.list_fragments(param(req, "group")));
  });
  s.Get(R"(/api/fragments/([^/]+)/candidates)", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.candidates(req.matches[1], param(req, "k"), param(req, "method")));
  });
  s.Get(R"(/api/fragments/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.get_fragment(req.matches[1]));
  });
  s.Post("/api/matches", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.post_match(req.body));
  });
  s.Get("/api/matches", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.list_matches(param(req, "target_id")));
  });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      reply(res, error_response(e));
    } catch (...) {
      reply(res, fail(500, "internal", "unknown error"));
    }
  });
  if (ui_dir && std::filesystem::is_directory(*ui_dir)) s.set_mount_point("/", ui_dir->string());
}

HttpFrontend::~HttpFrontend() = default;

int HttpFrontend::bind(const std::string& host, int port) {
  auto& s = impl_->server;
  if (port == 0) {
    const int bound = s.bind_to_any_port(host.c_str());
    if (bound < 0) throw StorageError("cannot bind " + host);
    return bound;
  }
  if (!s.bind_to_port(host.c_str(), port)) throw StorageError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpFrontend::listen() { impl_->server.listen_after_bind(); }

void HttpFrontend::stop() { impl_->server.stop(); }

}  // namespace slipforge
