#include "slipforge/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "slipforge/error.hpp"
#include "slipforge/rng.hpp"

namespace slipforge {

EmbeddingModel EmbeddingModel::initialize(std::uint64_t seed, std::vector<std::size_t> dims,
                                          double margin) {
  if (dims.size() < 2) throw ModelError("need at least an input and an output dimension");
  EmbeddingModel m;
  m.layer_dims = std::move(dims);
  m.margin = margin;
  m.training_meta.seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
    DenseLayer layer;
    layer.in = m.layer_dims[l];
    layer.out = m.layer_dims[l + 1];
    if (layer.in == 0 || layer.out == 0) throw ModelError("zero-width layer");
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    layer.weights.resize(layer.in * layer.out);
    for (auto& w : layer.weights) w = uniform(rng);
    layer.bias.assign(layer.out, 0.0);
    m.layers.push_back(std::move(layer));
  }
  return m;
}

void EmbeddingModel::validate() const {
  if (layer_dims.size() < 2) throw ModelError("layer_dims needs at least two entries");
  if (layers.size() != layer_dims.size() - 1)
    throw ModelError("expected " + std::to_string(layer_dims.size() - 1) + " layers, found " +
                     std::to_string(layers.size()));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.in != layer_dims[l] || layer.out != layer_dims[l + 1] ||
        layer.weights.size() != layer.in * layer.out || layer.bias.size() != layer.out)
      throw ModelError("layer " + std::to_string(l) + " does not match layer_dims");
  }
  if (!(margin >= 0)) throw ModelError("margin must be >= 0");
}

std::size_t EmbeddingModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

double& EmbeddingModel::parameter(std::size_t flat) {
  for (auto& l : layers) {
    if (flat < l.weights.size()) return l.weights[flat];
    flat -= l.weights.size();
    if (flat < l.bias.size()) return l.bias[flat];
    flat -= l.bias.size();
  }
  throw ModelError("parameter index out of range");
}

double EmbeddingModel::parameter(std::size_t flat) const {
  return const_cast<EmbeddingModel&>(*this).parameter(flat);
}

namespace {

// Activations of every layer for one input; acts[0] is the input, acts.back()
// the raw (pre-normalization) output.
template <class Real>
struct Trace {
  std::vector<std::vector<Real>> acts;
  std::vector<Real> out;
  Real norm = 0;
};

template <class Real>
void forward(const EmbeddingModel& model, std::span<const double> input, Trace<Real>& t) {
  const std::size_t n_layers = model.layers.size();
  t.acts.resize(n_layers + 1);
  t.acts[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = model.layers[l];
    const auto& a = t.acts[l];
    auto& z = t.acts[l + 1];
    z.resize(layer.out);
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double* row = &layer.weights[r * layer.in];
      Real sum = layer.bias[r];
      for (std::size_t c = 0; c < layer.in; ++c) sum += static_cast<Real>(row[c]) * a[c];
      z[r] = l + 1 < n_layers ? std::tanh(sum) : sum;
    }
  }
  const auto& raw = t.acts.back();
  Real sq = 0;
  for (Real v : raw) sq += v * v;
  t.norm = std::sqrt(sq);
  t.out.resize(raw.size());
  if (t.norm > 0) {
    for (std::size_t i = 0; i < raw.size(); ++i) t.out[i] = raw[i] / t.norm;
  } else {
    // A zero output has no direction; pin it to the first axis.
    std::fill(t.out.begin(), t.out.end(), Real(0));
    t.out[0] = 1;
  }
}

void check_input(const EmbeddingModel& model, std::span<const double> input) {
  if (input.size() != model.input_dim())
    throw ModelError("input has " + std::to_string(input.size()) + " components, model expects " +
                     std::to_string(model.input_dim()));
}

// Accumulates scale * dL/dparams given dL/d(normalized output).
void backward(const EmbeddingModel& model, const Trace<double>& t, std::span<const double> grad_out,
              std::vector<double>& grad) {
  const std::size_t n_layers = model.layers.size();
  std::vector<double> delta(t.out.size());
  double dot = 0.0;
  for (std::size_t i = 0; i < t.out.size(); ++i) dot += t.out[i] * grad_out[i];
  if (t.norm > 0) {
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = (grad_out[i] - t.out[i] * dot) / t.norm;
  }

  // Offsets of each layer's block in the flat parameter vector.
  std::vector<std::size_t> offset(n_layers);
  std::size_t acc = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    offset[l] = acc;
    acc += model.layers[l].weights.size() + model.layers[l].bias.size();
  }

  std::vector<double> below;
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& layer = model.layers[l];
    const auto& a = t.acts[l];
    double* gw = &grad[offset[l]];
    double* gb = gw + layer.weights.size();
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      double* grow = gw + r * layer.in;
      for (std::size_t c = 0; c < layer.in; ++c) grow[c] += d * a[c];
      gb[r] += d;
    }
    if (l == 0) break;
    below.assign(layer.in, 0.0);
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const double* row = &layer.weights[r * layer.in];
      for (std::size_t c = 0; c < layer.in; ++c) below[c] += row[c] * d;
    }
    for (std::size_t c = 0; c < layer.in; ++c) below[c] *= 1.0 - a[c] * a[c];
    delta.swap(below);
  }
}

template <class Real>
Real squared_distance(const std::vector<Real>& a, const std::vector<Real>& b) {
  Real s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Real d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

template <class Real>
Real hinge_argument(const EmbeddingModel& model, const EdgeVector& a, const EdgeVector& p,
                    const EdgeVector& n, Trace<Real>& ta, Trace<Real>& tp, Trace<Real>& tn) {
  forward(model, a.view(), ta);
  forward(model, p.view(), tp);
  forward(model, n.view(), tn);
  return squared_distance(ta.out, tp.out) - squared_distance(ta.out, tn.out) + Real(model.margin);
}

template <class Real>
Real loss_impl(const EmbeddingModel& model, const TripletBatch& batch) {
  model.validate();
  batch.validate();
  Trace<Real> ta, tp, tn;
  Real total = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    check_input(model, batch.anchors[i].view());
    const Real h = hinge_argument(model, batch.anchors[i], batch.positives[i], batch.negatives[i], ta, tp, tn);
    if (h > 0) total += h;
  }
  return total / static_cast<Real>(batch.size());
}

}  // namespace

Embedding embed(const EmbeddingModel& model, std::span<const double> input) {
  model.validate();
  check_input(model, input);
  Trace<double> t;
  forward(model, input, t);
  return t.out;
}

void TripletBatch::validate() const {
  if (anchors.empty()) throw InputError("empty triplet batch");
  if (positives.size() != anchors.size() || negatives.size() != anchors.size())
    throw InputError("triplet batch lists differ in length");
}

double triplet_loss(const EmbeddingModel& model, const TripletBatch& batch) {
  return loss_impl<double>(model, batch);
}

long double triplet_loss_extended(const EmbeddingModel& model, const TripletBatch& batch) {
  return loss_impl<long double>(model, batch);
}

double triplet_loss_gradient(const EmbeddingModel& model, const TripletBatch& batch,
                             std::vector<double>& gradient) {
  model.validate();
  batch.validate();
  gradient.assign(model.parameter_count(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  const std::size_t dim = model.embedding_dim();
  Trace<double> ta, tp, tn;
  std::vector<double> ga(dim), gp(dim), gn(dim);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    check_input(model, batch.anchors[i].view());
    const double h = hinge_argument(model, batch.anchors[i], batch.positives[i], batch.negatives[i], ta, tp, tn);
    if (h <= 0.0) continue;
    total += h;
    for (std::size_t k = 0; k < dim; ++k) {
      ga[k] = 2.0 * scale * (tn.out[k] - tp.out[k]);
      gp[k] = -2.0 * scale * (ta.out[k] - tp.out[k]);
      gn[k] = 2.0 * scale * (ta.out[k] - tn.out[k]);
    }
    backward(model, ta, ga, gradient);
    backward(model, tp, gp, gradient);
    backward(model, tn, gn, gradient);
  }
  return total * scale;
}

EmbeddingModel train(EmbeddingModel model, const DatasetManifest& dataset, const TrainConfig& config) {
  model.validate();
  if (config.epochs < 0) throw InputError("epochs must be >= 0");
  if (config.batch_size < 1) throw InputError("batch_size must be >= 1");
  if (!(config.learning_rate > 0)) throw InputError("learning rate must be > 0");
  if (dataset.ground_truth.empty()) throw InputError("dataset has no ground-truth pairs to train on");
  if (config.epochs == 0) return model;

  const DatasetIndex index(dataset);
  std::vector<EdgeVector> vectors;
  vectors.reserve(dataset.fragments.size());
  for (const auto& f : dataset.fragments) {
    vectors.push_back(extract_edge_vector(
        f.edge, f.group == Group::upper ? EdgeRole::upper_bottom : EdgeRole::lower_top, f.id));
  }
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < dataset.fragments.size(); ++i) position.emplace(dataset.fragments[i].id, i);

  struct PairIdx {
    std::size_t upper, lower;
  };
  std::vector<PairIdx> pairs;
  for (const auto& gt : dataset.ground_truth) pairs.push_back({position.at(gt.upper_id), position.at(gt.lower_id)});
  const auto& uppers = index.members(Group::upper);
  const auto& lowers = index.members(Group::lower);
  if (uppers.size() < 2 || lowers.size() < 2)
    throw InputError("need at least two fragments per group to draw negatives");

  const std::size_t n_params = model.parameter_count();
  std::vector<double> m1(n_params, 0.0), m2(n_params, 0.0), grad;
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long long step = 0;

  Rng rng(config.seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  TripletBatch batch;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.anchors.clear();
      batch.positives.clear();
      batch.negatives.clear();
      for (std::size_t k = start; k < end; ++k) {
        const PairIdx& p = pairs[order[k]];
        const bool upper_anchor = (rng() & 1U) != 0;
        const std::size_t anchor = upper_anchor ? p.upper : p.lower;
        const std::size_t positive = upper_anchor ? p.lower : p.upper;
        const auto& pool = upper_anchor ? lowers : uppers;
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        std::size_t negative = pool[pick(rng)];
        while (negative == positive) negative = pool[pick(rng)];
        batch.anchors.push_back(vectors[anchor]);
        batch.positives.push_back(vectors[positive]);
        batch.negatives.push_back(vectors[negative]);
      }
      const double loss = triplet_loss_gradient(model, batch, grad);
      epoch_loss += loss * static_cast<double>(batch.size());

      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < n_params; ++i) {
        m1[i] = beta1 * m1[i] + (1.0 - beta1) * grad[i];
        m2[i] = beta2 * m2[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double update = config.learning_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + eps);
        model.parameter(i) -= update;
      }
    }
    model.training_meta.loss_history.push_back(epoch_loss / static_cast<double>(pairs.size()));
  }
  model.training_meta.epochs += config.epochs;
  model.training_meta.learning_rate = config.learning_rate;
  model.training_meta.batch_size = config.batch_size;
  model.training_meta.seed = config.seed;
  return model;
}

double embedding_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double confidence_from_distance(double distance) { return std::exp(-distance); }

double score_pair(const EmbeddingModel& model, const EdgeVector& a, const EdgeVector& b) {
  const auto ea = embed(model, a);
  const auto eb = embed(model, b);
  return confidence_from_distance(embedding_distance(ea, eb));
}

GradientCheckResult gradient_check(const EmbeddingModel& model, const TripletBatch& batch,
                                   double step, double kink_tolerance) {
  model.validate();
  batch.validate();
  GradientCheckResult result;

  TripletBatch smooth;
  {
    Trace<double> ta, tp, tn;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const double h = hinge_argument(model, batch.anchors[i], batch.positives[i], batch.negatives[i], ta, tp, tn);
      if (std::abs(h) < kink_tolerance) {
        ++result.triplets_excluded;
        continue;
      }
      smooth.anchors.push_back(batch.anchors[i]);
      smooth.positives.push_back(batch.positives[i]);
      smooth.negatives.push_back(batch.negatives[i]);
    }
  }
  if (smooth.anchors.empty()) return result;

  std::vector<double> analytic;
  triplet_loss_gradient(model, smooth, analytic);
  const long long n_params = static_cast<long long>(analytic.size());
  double max_error = 0.0;
  long long checked = 0;

#pragma omp parallel reduction(max : max_error) reduction(+ : checked)
  {
    EmbeddingModel local = model;
#pragma omp for schedule(dynamic, 64)
    for (long long i = 0; i < n_params; ++i) {
      double& p = local.parameter(static_cast<std::size_t>(i));
      const double original = p;
      const double plus = original + step;
      const double minus = original - step;
      p = plus;
      const long double f_plus = triplet_loss_extended(local, smooth);
      p = minus;
      const long double f_minus = triplet_loss_extended(local, smooth);
      p = original;
      const double numeric = static_cast<double>((f_plus - f_minus) /
                                                 (static_cast<long double>(plus) - static_cast<long double>(minus)));
      const double a = analytic[static_cast<std::size_t>(i)];
      if (std::abs(a) + std::abs(numeric) <= 1e-8) continue;
      const double rel = std::abs(a - numeric) / std::max(std::abs(a), std::abs(numeric));
      max_error = std::max(max_error, rel);
      ++checked;
    }
  }
  result.max_relative_error = max_error;
  result.parameters_checked = static_cast<std::size_t>(checked);
  return result;
}

}  // namespace slipforge
