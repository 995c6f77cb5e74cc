#include "fedcs/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedcs/error.hpp"

namespace fedcs::learning {

Partition partition_dataset(const Dataset& data, std::span<const ClientProfile> profiles,
                            PartitionMode mode, int classes_per_client, RngStream& rng) {
  if (data.size() == 0) throw ParameterError("cannot partition an empty dataset");
  Partition part;
  part.mode = mode;
  part.classes_per_client = classes_per_client;
  part.assignment.resize(profiles.size());

  if (mode == PartitionMode::Iid) {
    const auto last = static_cast<std::int64_t>(data.size() - 1);
    for (std::size_t k = 0; k < profiles.size(); ++k) {
      const auto n = static_cast<std::size_t>(profiles[k].data_count.value());
      auto& shard = part.assignment[k];
      shard.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        shard.push_back(static_cast<std::size_t>(rng.uniform_int(0, last)));
      }
    }
    return part;
  }

  if (classes_per_client < 1 || static_cast<std::size_t>(classes_per_client) > data.n_classes) {
    throw ParameterError("non-IID partition needs 1 <= classes_per_client <= n_classes (" +
                         std::to_string(data.n_classes) + "), got " +
                         std::to_string(classes_per_client));
  }
  std::vector<std::vector<std::size_t>> pools(data.n_classes);
  for (std::size_t i = 0; i < data.size(); ++i) {
    pools[static_cast<std::size_t>(data.labels[i])].push_back(i);
  }

  part.client_classes.resize(profiles.size());
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    const auto picked =
        rng.sample_without_replacement(data.n_classes, static_cast<std::size_t>(classes_per_client));
    std::vector<std::size_t> pool;
    for (const auto c : picked) {
      if (pools[c].empty()) throw ParameterError("class " + std::to_string(c) + " has no samples");
      part.client_classes[k].push_back(static_cast<int>(c));
      pool.insert(pool.end(), pools[c].begin(), pools[c].end());
    }
    const auto n = static_cast<std::size_t>(profiles[k].data_count.value());
    const auto last = static_cast<std::int64_t>(pool.size() - 1);
    auto& shard = part.assignment[k];
    shard.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      shard.push_back(pool[static_cast<std::size_t>(rng.uniform_int(0, last))]);
    }
  }
  return part;
}

std::size_t ModelShape::param_count() const noexcept {
  if (hidden == 0) return n_classes * (n_features + 1);
  return hidden * (n_features + 1) + n_classes * (hidden + 1);
}

namespace {

void check_params(std::span<const double> params, const ModelShape& shape) {
  if (params.size() != shape.param_count()) {
    throw ModelError("model has " + std::to_string(params.size()) + " parameters, shape needs " +
                     std::to_string(shape.param_count()));
  }
}

void check_data(const ModelShape& shape, const Dataset& data) {
  if (data.n_features != shape.n_features || data.n_classes != shape.n_classes) {
    throw ModelError("dataset dimensions do not match the model shape");
  }
}

// out = W x + b, with W stored row-major (rows x cols) followed by b (rows).
void affine(const double* weights, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::vector<double>& out) {
  out.assign(rows, 0.0);
  const double* bias = weights + rows * cols;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = weights + r * cols;
    double acc = bias[r];
    for (std::size_t c = 0; c < cols; ++c) acc += w[c] * x[c];
    out[r] = acc;
  }
}

// Forward pass scratch space for one sample.
struct Activations {
  std::vector<double> hidden_pre;
  std::vector<double> hidden;
  std::vector<double> logits;
};

void forward(std::span<const double> params, const ModelShape& shape,
             std::span<const double> x, Activations& act) {
  if (shape.hidden == 0) {
    affine(params.data(), shape.n_classes, shape.n_features, x, act.logits);
    return;
  }
  affine(params.data(), shape.hidden, shape.n_features, x, act.hidden_pre);
  act.hidden.resize(shape.hidden);
  for (std::size_t j = 0; j < shape.hidden; ++j) act.hidden[j] = std::max(0.0, act.hidden_pre[j]);
  const double* second = params.data() + shape.hidden * (shape.n_features + 1);
  affine(second, shape.n_classes, shape.hidden, act.hidden, act.logits);
}

// Turns logits into probabilities in place; returns log-sum-exp.
double softmax_in_place(std::vector<double>& logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (auto& v : logits) {
    v = std::exp(v - peak);
    total += v;
  }
  for (auto& v : logits) v /= total;
  return peak + std::log(total);
}

}  // namespace

GlobalModel init_model(const ModelShape& shape, RngStream& rng) {
  if (shape.n_features == 0 || shape.n_classes < 2) {
    throw ParameterError("model shape needs >= 1 feature and >= 2 classes");
  }
  GlobalModel m;
  m.params.assign(shape.param_count(), 0.0);
  auto fill = [&](std::size_t offset, std::size_t rows, std::size_t cols) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    for (std::size_t i = 0; i < rows * cols; ++i) {
      m.params[offset + i] = rng.uniform(-scale, scale);
    }
  };
  if (shape.hidden == 0) {
    fill(0, shape.n_classes, shape.n_features);
  } else {
    fill(0, shape.hidden, shape.n_features);
    fill(shape.hidden * (shape.n_features + 1), shape.n_classes, shape.hidden);
  }
  return m;
}

double loss(std::span<const double> params, const ModelShape& shape, const Dataset& data,
            std::span<const std::size_t> rows) {
  check_params(params, shape);
  check_data(shape, data);
  if (rows.empty()) throw ParameterError("loss over zero rows");
  Activations act;
  double total = 0.0;
  for (const auto i : rows) {
    forward(params, shape, data.row(i), act);
    const double label_logit = act.logits[static_cast<std::size_t>(data.labels[i])];
    total += softmax_in_place(act.logits) - label_logit;
  }
  return total / static_cast<double>(rows.size());
}

void loss_gradient(std::span<const double> params, const ModelShape& shape, const Dataset& data,
                   std::span<const std::size_t> rows, std::span<double> grad) {
  check_params(params, shape);
  check_data(shape, data);
  if (grad.size() != params.size()) throw ModelError("gradient buffer size mismatch");
  if (rows.empty()) throw ParameterError("gradient over zero rows");
  std::fill(grad.begin(), grad.end(), 0.0);

  const double inv_n = 1.0 / static_cast<double>(rows.size());
  Activations act;
  std::vector<double> d_hidden;
  for (const auto i : rows) {
    const auto x = data.row(i);
    forward(params, shape, x, act);
    softmax_in_place(act.logits);
    auto& d_logits = act.logits;
    d_logits[static_cast<std::size_t>(data.labels[i])] -= 1.0;

    const bool deep = shape.hidden > 0;
    const std::span<const double> top_in = deep ? std::span<const double>(act.hidden) : x;
    const std::size_t top_cols = deep ? shape.hidden : shape.n_features;
    const std::size_t top_offset = deep ? shape.hidden * (shape.n_features + 1) : 0;
    double* g_top = grad.data() + top_offset;
    for (std::size_t c = 0; c < shape.n_classes; ++c) {
      const double d = d_logits[c] * inv_n;
      for (std::size_t j = 0; j < top_cols; ++j) g_top[c * top_cols + j] += d * top_in[j];
      g_top[shape.n_classes * top_cols + c] += d;
    }
    if (!deep) continue;

    const double* w_top = params.data() + top_offset;
    d_hidden.assign(shape.hidden, 0.0);
    for (std::size_t c = 0; c < shape.n_classes; ++c) {
      for (std::size_t j = 0; j < shape.hidden; ++j) {
        d_hidden[j] += w_top[c * shape.hidden + j] * d_logits[c];
      }
    }
    double* g_low = grad.data();
    for (std::size_t j = 0; j < shape.hidden; ++j) {
      if (act.hidden_pre[j] <= 0.0) continue;
      const double d = d_hidden[j] * inv_n;
      for (std::size_t f = 0; f < shape.n_features; ++f) g_low[j * shape.n_features + f] += d * x[f];
      g_low[shape.hidden * shape.n_features + j] += d;
    }
  }
}

int predict(std::span<const double> params, const ModelShape& shape,
            std::span<const double> features) {
  check_params(params, shape);
  Activations act;
  forward(params, shape, features, act);
  return static_cast<int>(std::max_element(act.logits.begin(), act.logits.end()) -
                          act.logits.begin());
}

double accuracy(std::span<const double> params, const ModelShape& shape, const Dataset& data) {
  check_data(shape, data);
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict(params, shape, data.row(i)) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void TrainerHyper::validate() const {
  if (batch < 1) throw ParameterError("batch must be >= 1");
  if (epochs < 1) throw ParameterError("epochs must be >= 1");
  if (!std::isfinite(lr0) || lr0 < 0.0) throw ParameterError("lr0 must be non-negative");
  if (!std::isfinite(lr_decay) || lr_decay <= 0.0) throw ParameterError("lr_decay must be positive");
}

GlobalModel local_update(const GlobalModel& model, const ModelShape& shape, const Dataset& data,
                         std::span<const std::size_t> shard, const TrainerHyper& hyper,
                         RngStream& rng) {
  hyper.validate();
  check_params(model.params, shape);
  check_data(shape, data);
  if (shard.empty()) throw ParameterError("local_update needs a non-empty shard");

  GlobalModel out = model;
  const double lr = hyper.lr0 * std::pow(hyper.lr_decay, model.round);
  std::vector<std::size_t> order(shard.begin(), shard.end());
  std::vector<double> grad(out.params.size());
  const auto batch = static_cast<std::size_t>(hyper.batch);

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      loss_gradient(out.params, shape, data, std::span(order).subspan(start, len), grad);
      for (std::size_t p = 0; p < grad.size(); ++p) out.params[p] -= lr * grad[p];
    }
  }
  return out;
}

GlobalModel aggregate(std::span<const WeightedUpdate> updates, Weighting weighting) {
  if (updates.empty()) throw ParameterError("aggregate needs at least one update");
  const std::size_t dim = updates.front().model.param_count();
  int max_round = updates.front().model.round;
  for (const auto& u : updates) {
    if (u.model.param_count() != dim) throw ModelError("aggregate: parameter count mismatch");
    max_round = std::max(max_round, u.model.round);
  }

  std::vector<std::size_t> order(updates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ua = updates[a];
    const auto& ub = updates[b];
    if (weighting == Weighting::DataSize && ua.weight != ub.weight) return ua.weight < ub.weight;
    return ua.model.params < ub.model.params;
  });

  auto weight_of = [&](const WeightedUpdate& u) {
    return weighting == Weighting::DataSize ? u.weight.value() : 1.0;
  };
  double total_weight = 0.0;
  for (const auto i : order) total_weight += weight_of(updates[i]);
  if (!(total_weight > 0.0)) throw ParameterError("aggregate: total weight must be positive");

  const auto& ref = updates[order.front()].model.params;
  GlobalModel out;
  out.round = max_round + 1;
  out.params.resize(dim);
  for (std::size_t p = 0; p < dim; ++p) {
    double offset = 0.0;
    for (const auto i : order) {
      offset += weight_of(updates[i]) * (updates[i].model.params[p] - ref[p]);
    }
    out.params[p] = ref[p] + offset / total_weight;
  }
  return out;
}

void SurrogateCurve::validate() const {
  if (!(a_max > 0.0 && a_max <= 1.0)) throw ParameterError("surrogate a_max must be in (0, 1]");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ParameterError("surrogate tau must be positive");
}

double surrogate_accuracy(const SurrogateCurve& curve, const TrainingProgress& progress) {
  return curve.a_max * -std::expm1(-static_cast<double>(progress.updates) / curve.tau);
}

NativeTrainer::NativeTrainer(Dataset train, Dataset test, Partition partition, ModelShape shape,
                             TrainerHyper hyper)
    : train_(std::move(train)),
      test_(std::move(test)),
      partition_(std::move(partition)),
      shape_(shape),
      hyper_(hyper) {
  hyper_.validate();
  check_data(shape_, train_);
  check_data(shape_, test_);
}

GlobalModel NativeTrainer::initial_model(RngStream& rng) const { return init_model(shape_, rng); }

GlobalModel NativeTrainer::local_update(const GlobalModel& model, ClientId client,
                                        RngStream& rng) const {
  return learning::local_update(model, shape_, train_, partition_.shard(client), hyper_, rng);
}

double NativeTrainer::evaluate(const GlobalModel& model, const TrainingProgress&) const {
  return accuracy(model.params, shape_, test_);
}

SurrogateTrainer::SurrogateTrainer(SurrogateCurve curve) : curve_(curve) { curve_.validate(); }

GlobalModel SurrogateTrainer::initial_model(RngStream&) const { return GlobalModel{{0.0}, 0}; }

GlobalModel SurrogateTrainer::local_update(const GlobalModel& model, ClientId,
                                           RngStream&) const {
  return model;
}

double SurrogateTrainer::evaluate(const GlobalModel&, const TrainingProgress& progress) const {
  return surrogate_accuracy(curve_, progress);
}

}  // namespace fedcs::learning
