// slipforge: command-line entry points for dataset generation, calibration,
// training, evaluation and the review service.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "slipforge/calibration.hpp"
#include "slipforge/datastore.hpp"
#include "slipforge/error.hpp"
#include "slipforge/evaluation.hpp"
#include "slipforge/matcher.hpp"
#include "slipforge/scorer.hpp"
#include "slipforge/service.hpp"

namespace {

using namespace slipforge;

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kMissingFile = 3,
  kInvalidData = 4,
  kInvalidArgument = 5,
};

int exit_code_for(const std::string& code) {
  if (code == "storage") return kMissingFile;
  if (code == "parse_failure" || code == "version_mismatch" || code == "invariant_violation" ||
      code == "integrity" || code == "shape_mismatch")
    return kInvalidData;
  if (code == "parameter_domain" || code == "invalid_input" || code == "degenerate_input" ||
      code == "group_protocol" || code == "model_shape" || code == "not_found")
    return kInvalidArgument;
  return kInternal;
}

void print_error(const std::string& code, const std::string& message) {
  std::cerr << nlohmann::json{{"error", code}, {"message", message}}.dump() << std::endl;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_ks(const std::string& s) {
  std::vector<int> ks;
  for (const auto& item : split_csv(s)) {
    try {
      std::size_t used = 0;
      const int k = std::stoi(item, &used);
      if (used != item.size() || k < 1) throw std::invalid_argument(item);
      ks.push_back(k);
    } catch (const std::exception&) {
      throw InputError("invalid k '" + item + "'");
    }
  }
  if (ks.empty()) throw InputError("--ks is empty");
  return ks;
}

HttpFrontend* g_frontend = nullptr;

void on_signal(int) {
  if (g_frontend) g_frontend->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slipforge: synthetic fracture pairs, triplet matcher and review service"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Synthesize a dataset manifest");
  std::size_t pairs = 118, interference = 0;
  std::uint64_t gen_seed = 0;
  std::string params_path, gen_out;
  gen->add_option("--pairs", pairs, "Number of complementary pairs")->check(CLI::PositiveNumber);
  gen->add_option("--interference", interference, "Number of unpaired fragments");
  gen->add_option("--seed", gen_seed, "Seed");
  gen->add_option("--params", params_path, "Params document (defaults if omitted)");
  gen->add_option("--out", gen_out, "Output manifest (stdout if omitted)");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Fit physics parameters to a reference manifest");
  std::string reference_path, cal_out;
  GaConfig ga;
  cal->add_option("--reference", reference_path, "Reference manifest")->required();
  cal->add_option("--generations", ga.generations, "GA generations");
  cal->add_option("--pop", ga.pop_size, "Population size");
  cal->add_option("--seed", ga.seed, "Seed");
  cal->add_option("--samples", ga.m_samples, "Generated edges per fitness evaluation (0: reference size)");
  cal->add_option("--out", cal_out, "Output params document")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train the triplet matcher");
  std::string train_dataset, train_out;
  TrainConfig tc;
  tr->add_option("--dataset", train_dataset, "Training manifest")->required();
  tr->add_option("--epochs", tc.epochs, "Epochs");
  tr->add_option("--lr", tc.learning_rate, "Adam learning rate");
  tr->add_option("--batch", tc.batch_size, "Mini-batch size");
  tr->add_option("--seed", tc.seed, "Seed (initialization and sampling)");
  tr->add_option("--out", train_out, "Output model")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "Top-k evaluation");
  std::string eval_dataset, eval_model, methods = "wisepanda,dtw,cosine,random", ks_text = "1,5,10,20,50,100", eval_out;
  std::uint64_t eval_seed = 0;
  ev->add_option("--dataset", eval_dataset, "Test manifest")->required();
  ev->add_option("--model", eval_model, "Model (needed for wisepanda)");
  ev->add_option("--methods", methods, "Comma-separated methods");
  ev->add_option("--ks", ks_text, "Comma-separated k values");
  ev->add_option("--seed", eval_seed, "Seed for the random method");
  ev->add_option("--out", eval_out, "Report file");

  // matrix
  auto* mx = app.add_subcommand("matrix", "Similarity matrix over ground-truth pairs");
  std::string mx_dataset, mx_model, mx_out, mx_method = "wisepanda";
  mx->add_option("--dataset", mx_dataset, "Manifest")->required();
  mx->add_option("--model", mx_model, "Model (needed for wisepanda)");
  mx->add_option("--method", mx_method, "Scoring method");
  mx->add_option("--out", mx_out, "Output file")->required();

  // serve
  auto* sv = app.add_subcommand("serve", "Run the review HTTP service");
  std::string sv_dataset, sv_model, sv_ledger, sv_addr = "127.0.0.1:8080", sv_ui;
  sv->add_option("--dataset", sv_dataset, "Manifest")->envname("SLIPFORGE_DATASET")->required();
  sv->add_option("--model", sv_model, "Model")->envname("SLIPFORGE_MODEL")->required();
  sv->add_option("--ledger", sv_ledger, "Match ledger")->envname("SLIPFORGE_LEDGER")->required();
  sv->add_option("--addr", sv_addr, "HOST:PORT")->envname("SLIPFORGE_ADDR");
  sv->add_option("--ui", sv_ui, "Directory of built review UI assets")->envname("SLIPFORGE_UI");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return kUsage;
  }

  try {
    if (*gen) {
      const PhysicsParams params = params_path.empty() ? PhysicsParams{} : load_params(params_path);
      const DatasetManifest m = generate_dataset(params, pairs, interference, gen_seed);
      if (gen_out.empty()) {
        std::cout << serialize_manifest(m);
      } else {
        save_manifest(gen_out, m);
      }
    } else if (*cal) {
      const ReferenceSet reference = reference_from_manifest(load_manifest(reference_path));
      const CalibrationResult result = calibrate(reference, ga);
      const PhysicsParams best = decode(result.best, ga.base);
      save_params(cal_out, best, &result);
      std::printf("best |silhouette| %.4f after %zu evaluations\n", result.best_fitness, result.evaluations);
    } else if (*tr) {
      const DatasetManifest data = load_manifest(train_dataset);
      EmbeddingModel model = train(EmbeddingModel::initialize(tc.seed), data, tc);
      save_model(train_out, model);
      if (!model.training_meta.loss_history.empty())
        std::printf("final epoch loss %.6f\n", model.training_meta.loss_history.back());
    } else if (*ev) {
      const DatasetManifest data = load_manifest(eval_dataset);
      std::shared_ptr<const EmbeddingModel> model;
      if (!eval_model.empty()) model = std::make_shared<EmbeddingModel>(load_model(eval_model));
      const auto ks = parse_ks(ks_text);
      std::vector<TopKReport> reports;
      for (const auto& method : split_csv(methods)) {
        auto scorer = make_scorer(method, model, eval_seed);
        reports.push_back(evaluate_topk(data, *scorer, ks, std::filesystem::path(eval_dataset).stem().string()));
      }
      std::cout << format_table(reports);
      if (!eval_out.empty()) save_reports(eval_out, reports);
    } else if (*mx) {
      const DatasetManifest data = load_manifest(mx_dataset);
      std::shared_ptr<const EmbeddingModel> model;
      if (!mx_model.empty()) model = std::make_shared<EmbeddingModel>(load_model(mx_model));
      auto scorer = make_scorer(mx_method, model);
      const SimilarityMatrix m = similarity_matrix(data, *scorer);
      save_matrix(mx_out, m);
      if (m.size() >= 2) std::printf("contrast %.4f\n", m.contrast());
    } else if (*sv) {
      const auto [host, port] = parse_address(sv_addr);
      auto model = std::make_shared<EmbeddingModel>(load_model(sv_model));
      ReviewService service(load_manifest(sv_dataset), model, sv_ledger, sv_dataset, sv_model);
      HttpFrontend frontend(service, sv_ui.empty() ? std::nullopt : std::optional<std::filesystem::path>(sv_ui));
      const int bound = frontend.bind(host, port);
      g_frontend = &frontend;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::printf("listening on %s:%d\n", host.c_str(), bound);
      std::fflush(stdout);
      frontend.listen();
      g_frontend = nullptr;
    }
  } catch (const slipforge::Error& e) {
    print_error(e.code(), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kInternal;
  }
  return kOk;
}
