#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fedcs/dataset.hpp"
#include "fedcs/random.hpp"
#include "fedcs/resources.hpp"

namespace fedcs::learning {

enum class PartitionMode { Iid, NonIid };

/// Which samples each client owns. Clients are indexed by ClientId - 1.
struct Partition {
  PartitionMode mode = PartitionMode::Iid;
  int classes_per_client = 2;
  std::vector<std::vector<std::size_t>> assignment;
  std::vector<std::vector<int>> client_classes;  // empty for IID

  std::span<const std::size_t> shard(ClientId id) const {
    return assignment.at(static_cast<std::size_t>(id.value - 1));
  }
};

/// Splits `data` over the clients, each receiving its profile's data_count indices sampled
/// with replacement. IID draws from the whole set; NonIid first picks `classes_per_client`
/// distinct classes per client, then draws only from those classes' pool.
Partition partition_dataset(const Dataset& data, std::span<const ClientProfile> profiles,
                            PartitionMode mode, int classes_per_client, RngStream& rng);

/// Fully connected softmax classifier. hidden == 0 is multinomial logistic regression;
/// otherwise one ReLU hidden layer of that width.
struct ModelShape {
  std::size_t n_features = 0;
  std::size_t hidden = 0;
  std::size_t n_classes = 0;

  std::size_t param_count() const noexcept;
};

struct GlobalModel {
  std::vector<double> params;
  int round = 0;

  std::size_t param_count() const noexcept { return params.size(); }
};

/// Small random initial weights (uniform in +-1/sqrt(fan_in)), zero biases.
GlobalModel init_model(const ModelShape& shape, RngStream& rng);

/// Mean cross-entropy over the selected rows.
double loss(std::span<const double> params, const ModelShape& shape, const Dataset& data,
            std::span<const std::size_t> rows);

/// Gradient of loss() with respect to params, written into `grad` (same size as params).
void loss_gradient(std::span<const double> params, const ModelShape& shape, const Dataset& data,
                   std::span<const std::size_t> rows, std::span<double> grad);

int predict(std::span<const double> params, const ModelShape& shape,
            std::span<const double> features);

/// Fraction of `data` classified correctly.
double accuracy(std::span<const double> params, const ModelShape& shape, const Dataset& data);

struct TrainerHyper {
  int batch = 50;
  int epochs = 5;
  double lr0 = 0.25;
  double lr_decay = 0.99;

  void validate() const;
};

/// Local SGD on one client's shard: `epochs` passes, each a fresh shuffle split into
/// ceil(n / batch) minibatches, at learning rate lr0 * lr_decay^round. Only parameters leave
/// this function; the shard and dataset are read-only.
GlobalModel local_update(const GlobalModel& model, const ModelShape& shape, const Dataset& data,
                         std::span<const std::size_t> shard, const TrainerHyper& hyper,
                         RngStream& rng);

enum class Weighting { Unweighted, DataSize };

struct WeightedUpdate {
  GlobalModel model;
  Samples weight;
};

/// Averages the updates and bumps the round counter.
///
/// The sum runs in a canonical order (by weight, then parameters) and is taken as offsets
/// from the first update in that order, so the result does not depend on list order, and
/// averaging identical models reproduces the model bit-for-bit.
GlobalModel aggregate(std::span<const WeightedUpdate> updates, Weighting weighting);

/// Saturating accuracy stand-in: a_max * (1 - exp(-updates / tau)).
struct SurrogateCurve {
  double a_max = 0.8;
  double tau = 150.0;

  void validate() const;
};

/// Cumulative training statistics the protocol hands to a trainer for evaluation.
struct TrainingProgress {
  std::int64_t updates = 0;  // distinct (client, round) updates aggregated so far
  std::int64_t aggregated_samples = 0;
};

double surrogate_accuracy(const SurrogateCurve& curve, const TrainingProgress& progress);

/// What the protocol engine needs from a learner.
class Trainer {
 public:
  virtual ~Trainer() = default;

  virtual GlobalModel initial_model(RngStream& rng) const = 0;
  virtual GlobalModel local_update(const GlobalModel& model, ClientId client,
                                   RngStream& rng) const = 0;
  virtual double evaluate(const GlobalModel& model, const TrainingProgress& progress) const = 0;
};

/// Real SGD on a native softmax model over a partitioned dataset.
class NativeTrainer final : public Trainer {
 public:
  NativeTrainer(Dataset train, Dataset test, Partition partition, ModelShape shape,
                TrainerHyper hyper);

  GlobalModel initial_model(RngStream& rng) const override;
  GlobalModel local_update(const GlobalModel& model, ClientId client,
                           RngStream& rng) const override;
  double evaluate(const GlobalModel& model, const TrainingProgress& progress) const override;

  const Dataset& train() const noexcept { return train_; }
  const Partition& partition() const noexcept { return partition_; }

 private:
  Dataset train_;
  Dataset test_;
  Partition partition_;
  ModelShape shape_;
  TrainerHyper hyper_;
};

/// Leaves parameters untouched; accuracy follows the surrogate curve.
class SurrogateTrainer final : public Trainer {
 public:
  explicit SurrogateTrainer(SurrogateCurve curve);

  GlobalModel initial_model(RngStream& rng) const override;
  GlobalModel local_update(const GlobalModel& model, ClientId client,
                           RngStream& rng) const override;
  double evaluate(const GlobalModel& model, const TrainingProgress& progress) const override;

 private:
  SurrogateCurve curve_;
};

}  // namespace fedcs::learning
