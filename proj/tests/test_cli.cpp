#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <json.hpp>

#include "slipforge/datastore.hpp"
#include "test_support.hpp"

using namespace slipforge;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into stdout.
Run run(const std::string& args) {
  const std::string cmd = std::string(SLIPFORGE_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("generate writes a manifest") {
  const auto r = run("generate --pairs 1 --seed 4");
  REQUIRE(r.code == 0);
  const auto m = parse_manifest(r.out);
  CHECK(m.fragments.size() == 2);
  CHECK(m.ground_truth.size() == 1);
  CHECK(m == generate_dataset(PhysicsParams{}, 1, 0, 4));

  TempDir dir;
  save_params(dir / "p.json", [] {
    PhysicsParams p;
    p.corrosion_steps = 3;
    return p;
  }());
  REQUIRE(run("generate --pairs 3 --interference 2 --seed 1 --params " + q(dir / "p.json") + " --out " +
              q(dir / "m.jsonl")).code == 0);
  const auto m2 = load_manifest(dir / "m.jsonl");
  CHECK(m2.fragments.size() == 8);
  CHECK(m2.params->corrosion_steps == 3);
}

TEST_CASE("exit codes and error lines") {
  TempDir dir;
  const auto usage = run("generate --bogus");
  CHECK(usage.code == 2);
  CHECK(run("").code == 2);
  CHECK(run("generate --pairs 0").code == 2);

  const auto missing = run("eval --dataset " + q(dir / "none.jsonl") + " --methods random");
  CHECK(missing.code == 3);
  const auto err = nlohmann::json::parse(missing.out.substr(missing.out.rfind('{')));
  CHECK(err["error"] == "storage");

  write_file(dir / "bad.jsonl", "garbage\n");
  CHECK(run("eval --dataset " + q(dir / "bad.jsonl") + " --methods random").code == 4);

  save_manifest(dir / "m.jsonl", generate_dataset(PhysicsParams{}, 5, 0, 1));
  CHECK(run("eval --dataset " + q(dir / "m.jsonl") + " --methods fmm").code == 5);
  CHECK(run("eval --dataset " + q(dir / "m.jsonl") + " --methods wisepanda").code == 5);
  CHECK(run("eval --dataset " + q(dir / "m.jsonl") + " --methods random --ks 0").code == 5);
}

TEST_CASE("train with zero epochs saves the initialization") {
  TempDir dir;
  save_manifest(dir / "m.jsonl", generate_dataset(PhysicsParams{}, 20, 0, 1));
  REQUIRE(run("train --dataset " + q(dir / "m.jsonl") + " --epochs 0 --seed 7 --out " + q(dir / "model.jsonl")).code == 0);
  CHECK(load_model(dir / "model.jsonl") == EmbeddingModel::initialize(7));
}

TEST_CASE("train, eval and matrix pipeline") {
  TempDir dir;
  save_manifest(dir / "train.jsonl", generate_dataset(PhysicsParams{}, 200, 0, 1));
  save_manifest(dir / "test.jsonl", generate_dataset(PhysicsParams{}, 118, 0, 2));
  REQUIRE(run("train --dataset " + q(dir / "train.jsonl") + " --epochs 2 --out " + q(dir / "model.jsonl")).code == 0);

  const auto ev = run("eval --dataset " + q(dir / "test.jsonl") + " --model " + q(dir / "model.jsonl") +
                      " --methods wisepanda,random --ks 1,10,50 --seed 3 --out " + q(dir / "r.jsonl"));
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("wisepanda") != std::string::npos);
  const auto reports = load_reports(dir / "r.jsonl");
  REQUIRE(reports.size() == 2);
  CHECK(reports[1].method == "random");
  CHECK(reports[1].at(50) == doctest::Approx(42.4).epsilon(0.25));

  const auto mx = run("matrix --dataset " + q(dir / "test.jsonl") + " --method cosine --out " + q(dir / "mx.json"));
  REQUIRE(mx.code == 0);
  const auto j = nlohmann::json::parse(read_file(dir / "mx.json"));
  CHECK(j["values"].size() == 118);
}

TEST_CASE("calibrate writes a params document") {
  TempDir dir;
  save_manifest(dir / "ref.jsonl", generate_dataset(PhysicsParams{}, 20, 0, 5));
  REQUIRE(run("calibrate --reference " + q(dir / "ref.jsonl") + " --generations 2 --pop 6 --samples 20 --out " +
              q(dir / "p.json")).code == 0);
  CHECK(encode(load_params(dir / "p.json")).within_bounds());
}
