#include "slipforge/datastore.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "slipforge/error.hpp"

namespace slipforge {

using nlohmann::json;

namespace {

constexpr const char* kManifestFormat = "slipforge.manifest";
constexpr const char* kModelFormat = "slipforge.model";
constexpr const char* kParamsFormat = "slipforge.params";
constexpr const char* kReportFormat = "slipforge.report";

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

template <class E>
json parse_line(const std::string& line, std::size_t number) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw E("line " + std::to_string(number) + ": " + e.what());
  }
}

// Throws VersionError unless the header names the expected format/version.
template <class E>
void check_header(const json& header, const char* format, int version) {
  if (!header.is_object() || !header.contains("format") || header["format"] != format)
    throw E(std::string("not a ") + format + " document");
  if (!header.contains("format_version") || !header["format_version"].is_number_integer())
    throw E("missing format_version");
  const int v = header["format_version"].get<int>();
  if (v != version)
    throw VersionError(std::string(format) + " version " + std::to_string(v) + " is not supported (expected " +
                       std::to_string(version) + ")");
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw StorageError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw StorageError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

// ---- params ----------------------------------------------------------------

json params_to_json(const PhysicsParams& p) {
  return json{{"n_fibers", p.n_fibers},
              {"fiber_width", p.fiber_width},
              {"theta_max", p.theta_max},
              {"sigma_theta", p.sigma_theta},
              {"rho", p.rho},
              {"beta", p.beta},
              {"base_rate", p.base_rate},
              {"exposure_rate", p.exposure_rate},
              {"corrosion_steps", p.corrosion_steps},
              {"seed", p.seed}};
}

PhysicsParams params_from_json(const json& j) {
  PhysicsParams p;
  try {
    // Missing keys keep their defaults so hand-written files can be partial.
    p.n_fibers = j.value("n_fibers", p.n_fibers);
    p.fiber_width = j.value("fiber_width", p.fiber_width);
    p.theta_max = j.value("theta_max", p.theta_max);
    p.sigma_theta = j.value("sigma_theta", p.sigma_theta);
    p.rho = j.value("rho", p.rho);
    p.beta = j.value("beta", p.beta);
    p.base_rate = j.value("base_rate", p.base_rate);
    p.exposure_rate = j.value("exposure_rate", p.exposure_rate);
    p.corrosion_steps = j.value("corrosion_steps", p.corrosion_steps);
    p.seed = j.value("seed", p.seed);
  } catch (const json::exception& e) {
    throw ParseError(std::string("params: ") + e.what());
  }
  p.validate();
  return p;
}

std::string serialize_params(const PhysicsParams& p, const CalibrationResult* calibration) {
  json doc{{"format", kParamsFormat}, {"format_version", kParamsVersion}, {"params", params_to_json(p)}};
  if (calibration) {
    doc["calibration"] = {{"genome", calibration->best.genes},
                          {"fitness", calibration->best_fitness},
                          {"history", calibration->history},
                          {"evaluations", calibration->evaluations}};
  }
  return doc.dump() + "\n";
}

PhysicsParams parse_params(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError("empty params document");
  const json doc = parse_line<ParseError>(lines.front(), 1);
  check_header<ParseError>(doc, kParamsFormat, kParamsVersion);
  if (!doc.contains("params")) throw ParseError("params document has no params");
  return params_from_json(doc["params"]);
}

void save_params(const std::filesystem::path& path, const PhysicsParams& p, const CalibrationResult* calibration) {
  write_file(path, serialize_params(p, calibration));
}

PhysicsParams load_params(const std::filesystem::path& path) { return parse_params(read_file(path)); }

// ---- manifest --------------------------------------------------------------

std::string serialize_manifest(const DatasetManifest& m) {
  std::string out;
  json header{{"format", kManifestFormat},
              {"format_version", m.format_version},
              {"fragments", m.fragments.size()},
              {"pairs", m.ground_truth.size()},
              {"params", m.params ? params_to_json(*m.params) : json(nullptr)},
              {"seed", m.seed ? json(*m.seed) : json(nullptr)}};
  out += header.dump();
  out += '\n';
  for (const auto& f : m.fragments) {
    json line{{"kind", "fragment"}, {"id", f.id}, {"group", to_string(f.group)}, {"edge", f.edge}};
    if (f.provenance) line["provenance"] = {{"pair_id", f.provenance->pair_id}, {"seed", f.provenance->seed}};
    out += line.dump();
    out += '\n';
  }
  for (const auto& gt : m.ground_truth) {
    out += json{{"kind", "pair"}, {"upper", gt.upper_id}, {"lower", gt.lower_id}}.dump();
    out += '\n';
  }
  return out;
}

DatasetManifest parse_manifest(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError("empty manifest");
  const json header = parse_line<ParseError>(lines.front(), 1);
  check_header<ParseError>(header, kManifestFormat, kManifestVersion);

  DatasetManifest m;
  try {
    m.format_version = header["format_version"].get<int>();
    if (header.contains("params") && !header["params"].is_null()) m.params = params_from_json(header["params"]);
    if (header.contains("seed") && !header["seed"].is_null()) m.seed = header["seed"].get<std::uint64_t>();
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const json line = parse_line<ParseError>(lines[i], i + 1);
      const std::string kind = line.at("kind").get<std::string>();
      if (kind == "fragment") {
        Fragment f;
        f.id = line.at("id").get<std::string>();
        f.group = parse_group(line.at("group").get<std::string>());
        f.edge = line.at("edge").get<std::vector<double>>();
        if (line.contains("provenance"))
          f.provenance = FragmentProvenance{line["provenance"].at("pair_id").get<std::string>(),
                                            line["provenance"].at("seed").get<std::uint64_t>()};
        m.fragments.push_back(std::move(f));
      } else if (kind == "pair") {
        m.ground_truth.push_back({line.at("upper").get<std::string>(), line.at("lower").get<std::string>()});
      } else {
        throw ParseError("line " + std::to_string(i + 1) + ": unknown kind '" + kind + "'");
      }
    }
    if (header.contains("fragments") && header["fragments"].get<std::size_t>() != m.fragments.size())
      throw ParseError("manifest is incomplete: header lists " + header["fragments"].dump() + " fragments");
    if (header.contains("pairs") && header["pairs"].get<std::size_t>() != m.ground_truth.size())
      throw ParseError("manifest is incomplete: header lists " + header["pairs"].dump() + " pairs");
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  } catch (const InputError& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  m.validate();
  return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  m.validate();
  write_file(path, serialize_manifest(m));
}

DatasetManifest load_manifest(const std::filesystem::path& path) { return parse_manifest(read_file(path)); }

// ---- model -----------------------------------------------------------------

std::string serialize_model(const EmbeddingModel& m) {
  m.validate();
  std::string body;
  const auto& t = m.training_meta;
  json header{{"format", kModelFormat},
              {"format_version", kModelVersion},
              {"layer_dims", m.layer_dims},
              {"margin", m.margin},
              {"training",
               {{"epochs", t.epochs},
                {"learning_rate", t.learning_rate},
                {"batch_size", t.batch_size},
                {"seed", t.seed},
                {"loss_history", t.loss_history}}}};
  body += header.dump();
  body += '\n';
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& layer = m.layers[l];
    body += json{{"kind", "layer"},
                 {"index", l},
                 {"in", layer.in},
                 {"out", layer.out},
                 {"weights", layer.weights},
                 {"bias", layer.bias}}
                .dump();
    body += '\n';
  }
  body += json{{"kind", "end"}, {"layers", m.layers.size()}, {"digest", hex64(fnv1a(body))}}.dump();
  body += '\n';
  return body;
}

EmbeddingModel parse_model(const std::string& text) {
  // The trailer is the last line; its digest covers every byte before it.
  if (text.empty() || text.back() != '\n') throw IntegrityError("model file is truncated");
  const auto cut = text.rfind('\n', text.size() - 2);
  const std::size_t end_pos = cut == std::string::npos ? 0 : cut + 1;
  const json trailer = parse_line<IntegrityError>(text.substr(end_pos, text.size() - end_pos - 1), 0);
  if (!trailer.is_object() || trailer.value("kind", "") != "end" || !trailer.contains("digest"))
    throw IntegrityError("model file is truncated (no trailer)");
  const std::string body = text.substr(0, end_pos);

  const auto lines = split_lines(body);
  if (lines.empty()) throw IntegrityError("model file has no header");
  const json header = parse_line<IntegrityError>(lines.front(), 1);
  check_header<IntegrityError>(header, kModelFormat, kModelVersion);

  EmbeddingModel m;
  try {
    m.layer_dims = header.at("layer_dims").get<std::vector<std::size_t>>();
    m.margin = header.at("margin").get<double>();
    const json& t = header.at("training");
    m.training_meta.epochs = t.at("epochs").get<int>();
    m.training_meta.learning_rate = t.at("learning_rate").get<double>();
    m.training_meta.batch_size = t.at("batch_size").get<int>();
    m.training_meta.seed = t.at("seed").get<std::uint64_t>();
    m.training_meta.loss_history = t.at("loss_history").get<std::vector<double>>();
    if (m.layer_dims.size() < 2) throw ShapeError("layer_dims needs at least two entries");
    if (trailer.at("layers").get<std::size_t>() != lines.size() - 1)
      throw IntegrityError("trailer layer count does not match body");
    if (lines.size() - 1 != m.layer_dims.size() - 1)
      throw ShapeError("header declares " + std::to_string(m.layer_dims.size() - 1) + " layers, file has " +
                       std::to_string(lines.size() - 1));
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const json line = parse_line<IntegrityError>(lines[i], i + 1);
      DenseLayer layer;
      layer.in = line.at("in").get<std::size_t>();
      layer.out = line.at("out").get<std::size_t>();
      layer.weights = line.at("weights").get<std::vector<double>>();
      layer.bias = line.at("bias").get<std::vector<double>>();
      const std::size_t l = i - 1;
      if (layer.in != m.layer_dims[l] || layer.out != m.layer_dims[l + 1] ||
          layer.weights.size() != layer.in * layer.out || layer.bias.size() != layer.out)
        throw ShapeError("layer " + std::to_string(l) + " does not match header layer_dims");
      m.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("model: ") + e.what());
  }
  // Checked last so a consistent-but-wrong header reports as a shape problem.
  if (trailer["digest"] != hex64(fnv1a(body))) throw IntegrityError("model digest mismatch");
  return m;
}

void save_model(const std::filesystem::path& path, const EmbeddingModel& m) { write_file(path, serialize_model(m)); }

EmbeddingModel load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

// ---- reports ---------------------------------------------------------------

json report_to_json(const TopKReport& r) {
  return json{{"method", r.method},
              {"dataset", r.dataset},
              {"ks", r.ks},
              {"accuracy", r.accuracy},
              {"pool_upper_to_lower", r.pool_upper_to_lower},
              {"pool_lower_to_upper", r.pool_lower_to_upper},
              {"queries", r.queries},
              {"interference", r.interference},
              {"ranks", r.ranks}};
}

TopKReport report_from_json(const json& j) {
  try {
    TopKReport r;
    r.method = j.at("method").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.ks = j.at("ks").get<std::vector<int>>();
    r.accuracy = j.at("accuracy").get<std::vector<double>>();
    r.pool_upper_to_lower = j.at("pool_upper_to_lower").get<std::size_t>();
    r.pool_lower_to_upper = j.at("pool_lower_to_upper").get<std::size_t>();
    r.queries = j.at("queries").get<std::size_t>();
    r.interference = j.value("interference", std::size_t{0});
    r.ranks = j.value("ranks", std::vector<std::size_t>{});
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
}

void save_reports(const std::filesystem::path& path, std::span<const TopKReport> reports) {
  std::string out = json{{"format", kReportFormat}, {"format_version", kReportVersion}}.dump() + "\n";
  for (const auto& r : reports) out += report_to_json(r).dump() + "\n";
  write_file(path, out);
}

std::vector<TopKReport> load_reports(const std::filesystem::path& path) {
  const auto lines = split_lines(read_file(path));
  if (lines.empty()) throw ParseError("empty report");
  check_header<ParseError>(parse_line<ParseError>(lines.front(), 1), kReportFormat, kReportVersion);
  std::vector<TopKReport> out;
  for (std::size_t i = 1; i < lines.size(); ++i) out.push_back(report_from_json(parse_line<ParseError>(lines[i], i + 1)));
  return out;
}

json matrix_to_json(const SimilarityMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    rows.push_back(std::vector<double>(m.values.begin() + static_cast<long>(i * m.col_ids.size()),
                                       m.values.begin() + static_cast<long>((i + 1) * m.col_ids.size())));
  }
  return json{{"format", "slipforge.matrix"},
              {"format_version", 1},
              {"row_ids", m.row_ids},
              {"col_ids", m.col_ids},
              {"values", rows},
              {"contrast", m.size() >= 2 ? json(m.contrast()) : json(nullptr)}};
}

void save_matrix(const std::filesystem::path& path, const SimilarityMatrix& m) {
  write_file(path, matrix_to_json(m).dump() + "\n");
}

}  // namespace slipforge
