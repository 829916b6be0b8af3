#include <doctest.h>

#include <httplib.h>

#include <thread>

#include "slipforge/service.hpp"
#include "test_support.hpp"

using namespace slipforge;
using nlohmann::json;

namespace {

PhysicsParams uncorroded() {
  PhysicsParams p;
  p.base_rate = 0.0;
  p.exposure_rate = 0.0;
  return p;
}

std::shared_ptr<const EmbeddingModel> fresh_model() {
  return std::make_shared<const EmbeddingModel>(EmbeddingModel::initialize(0));
}

}  // namespace

TEST_CASE("review service handlers") {
  TempDir dir;
  const auto data = generate_dataset(uncorroded(), 10, 4, 3);
  ReviewService svc(data, fresh_model(), dir / "ledger.jsonl", "toy");
  const auto& gt = data.ground_truth[2];

  SUBCASE("health") {
    const auto r = svc.health();
    CHECK(r.status == 200);
    CHECK(r.body["status"] == "ok");
    CHECK(r.body["fragments"] == 24);
    CHECK(r.body["dataset"].get<std::string>().rfind("toy@", 0) == 0);
    CHECK(r.body["methods"].size() == 3);
  }
  SUBCASE("fragments") {
    const auto all = svc.list_fragments(std::nullopt);
    CHECK(all.body["fragments"].size() == 24);
    const auto uppers = svc.list_fragments(std::string("upper"));
    REQUIRE(uppers.body["fragments"].size() == 12);
    for (const auto& f : uppers.body["fragments"]) CHECK(f["group"] == "upper");
    CHECK(svc.list_fragments(std::string("sideways")).status == 400);
    const auto one = svc.get_fragment(gt.lower_id);
    CHECK(one.status == 200);
    CHECK(one.body["edge"].get<std::vector<double>>() == DatasetIndex(data).at(gt.lower_id).edge);
    CHECK(svc.get_fragment("nope").status == 404);
  }
  SUBCASE("candidates put the uncorroded partner first") {
    for (const std::string method : {"wisepanda", "dtw", "cosine"}) {
      CAPTURE(method);
      const auto r = svc.candidates(gt.upper_id, std::string("5"), method);
      REQUIRE(r.status == 200);
      CHECK(r.body["pool_size"] == 12);
      REQUIRE(r.body["candidates"].size() == 5);
      const auto& top = r.body["candidates"][0];
      CHECK(top["rank"] == 1);
      CHECK(top["candidate_id"] == gt.lower_id);
      CHECK(top["confidence"].get<double>() == doctest::Approx(1.0));
    }
  }
  SUBCASE("candidate errors") {
    CHECK(svc.candidates("nope", std::nullopt, std::nullopt).status == 404);
    CHECK(svc.candidates(gt.upper_id, std::string("0"), std::nullopt).status == 400);
    CHECK(svc.candidates(gt.upper_id, std::string("ten"), std::nullopt).status == 400);
    CHECK(svc.candidates(gt.upper_id, std::nullopt, std::string("fmm")).status == 400);
    // k beyond the pool returns the whole pool
    CHECK(svc.candidates(gt.upper_id, std::string("500"), std::nullopt).body["candidates"].size() == 12);
  }
  SUBCASE("posting matches") {
    const json ok{{"target_id", gt.upper_id}, {"candidate_id", gt.lower_id}, {"verdict", "confirmed"},
                  {"rank", 1}, {"confidence", 0.99}, {"method", "wisepanda"}};
    const auto r = svc.post_match(ok.dump());
    REQUIRE(r.status == 200);
    CHECK(r.body["record_id"] == 1);

    json unknown = ok;
    unknown["candidate_id"] = "ghost";
    CHECK(svc.post_match(unknown.dump()).status == 404);
    json same = ok;
    same["candidate_id"] = data.ground_truth[3].upper_id;
    CHECK(svc.post_match(same.dump()).status == 409);
    json bad_verdict = ok;
    bad_verdict["verdict"] = "maybe";
    CHECK(svc.post_match(bad_verdict.dump()).status == 400);
    CHECK(svc.post_match("{oops").status == 400);
    CHECK(svc.post_match("[]").status == 400);
    CHECK(svc.post_match(R"({"target_id":"x"})").status == 400);

    json other = ok;
    other["target_id"] = data.ground_truth[0].lower_id;
    other["candidate_id"] = data.ground_truth[0].upper_id;
    other["verdict"] = "rejected";
    CHECK(svc.post_match(other.dump()).status == 200);

    CHECK(svc.list_matches(std::nullopt).body["records"].size() == 2);
    const auto mine = svc.list_matches(gt.upper_id);
    REQUIRE(mine.body["records"].size() == 1);
    CHECK(mine.body["records"][0]["candidate_id"] == gt.lower_id);
  }
}

TEST_CASE("k=50 over a pool with interference") {
  TempDir dir;
  const auto data = generate_dataset(PhysicsParams{}, 118, 1114, 9);
  TrainConfig cfg;
  cfg.epochs = 1;
  const auto model = std::make_shared<const EmbeddingModel>(train(EmbeddingModel::initialize(0), data, cfg));
  ReviewService svc(data, model, dir / "ledger.jsonl");
  const auto r = svc.candidates(data.ground_truth[0].lower_id, std::nullopt, std::nullopt);
  REQUIRE(r.status == 200);
  CHECK(r.body["k"] == 50);
  CHECK(r.body["pool_size"] == 675);
  const auto& c = r.body["candidates"];
  REQUIRE(c.size() == 50);
  for (std::size_t i = 1; i < c.size(); ++i) {
    CHECK(c[i]["score"].get<double>() <= c[i - 1]["score"].get<double>());
    CHECK(c[i]["rank"] == i + 1);
  }
}

TEST_CASE("http frontend") {
  TempDir dir;
  const auto data = generate_dataset(uncorroded(), 6, 0, 1);
  ReviewService svc(data, fresh_model(), dir / "ledger.jsonl");
  std::filesystem::create_directories(dir / "ui");
  {
    std::ofstream(dir / "ui" / "index.html") << "<html>review</html>";
  }
  HttpFrontend http(svc, dir / "ui");
  const int port = http.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread server([&] { http.listen(); });

  httplib::Client cli("127.0.0.1", port);
  const auto& gt = data.ground_truth[1];

  auto health = cli.Get("/api/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body)["version"] == kServiceVersion);

  auto frags = cli.Get("/api/fragments?group=lower");
  REQUIRE(frags);
  CHECK(json::parse(frags->body)["fragments"].size() == 6);

  auto cands = cli.Get("/api/fragments/" + gt.upper_id + "/candidates?k=3&method=dtw");
  REQUIRE(cands);
  CHECK(cands->status == 200);
  CHECK(json::parse(cands->body)["candidates"][0]["candidate_id"] == gt.lower_id);

  auto missing = cli.Get("/api/fragments/ghost");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(json::parse(missing->body)["error"] == "not_found");

  const json body{{"target_id", gt.upper_id}, {"candidate_id", gt.lower_id}, {"verdict", "confirmed"}};
  auto post = cli.Post("/api/matches", body.dump(), "application/json");
  REQUIRE(post);
  CHECK(post->status == 200);
  auto conflict = cli.Post("/api/matches",
                           json{{"target_id", gt.upper_id}, {"candidate_id", gt.upper_id}, {"verdict", "confirmed"}}.dump(),
                           "application/json");
  REQUIRE(conflict);
  CHECK(conflict->status == 409);

  auto listed = cli.Get("/api/matches?target_id=" + gt.upper_id);
  REQUIRE(listed);
  CHECK(json::parse(listed->body)["records"].size() == 1);

  auto page = cli.Get("/index.html");
  REQUIRE(page);
  CHECK(page->body == "<html>review</html>");

  http.stop();
  server.join();
}

TEST_CASE("address parsing") {
  CHECK(parse_address("127.0.0.1:8080") == std::pair<std::string, int>{"127.0.0.1", 8080});
  CHECK(parse_address("localhost:0").second == 0);
  CHECK_THROWS(parse_address("8080"));
  CHECK_THROWS(parse_address("host:99999"));
  CHECK_THROWS(parse_address("host:x"));
}
