#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "fedcs/dataset.hpp"
#include "fedcs/error.hpp"
#include "fedcs/learning.hpp"

using namespace fedcs;
using namespace fedcs::learning;

namespace {

std::vector<ClientProfile> uniform_profiles(int count, double n) {
  std::vector<ClientProfile> out;
  for (int i = 1; i <= count; ++i) {
    out.push_back({ClientId{i}, Samples(n), SamplesPerSecond(50), MegabitsPerSecond(1.4), {}});
  }
  return out;
}

Dataset blobs(std::size_t n, std::size_t f, std::size_t c, double sep, std::uint64_t seed) {
  RngStream rng(seed, "dataset");
  return make_gaussian_blobs(n, f, c, sep, rng);
}

std::vector<std::size_t> all_rows(const Dataset& d) {
  std::vector<std::size_t> rows(d.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

double max_fd_error(const ModelShape& shape, const Dataset& data, std::uint64_t seed) {
  RngStream rng(seed, "init");
  auto params = init_model(shape, rng).params;
  // Move biases off zero so they are exercised too.
  for (auto& p : params) p += 0.05 * rng.standard_normal();
  const auto rows = all_rows(data);
  std::vector<double> grad(params.size());
  loss_gradient(params, shape, data, rows, grad);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto plus = params;
    auto minus = params;
    plus[i] += h;
    minus[i] -= h;
    const double fd = (loss(plus, shape, data, rows) - loss(minus, shape, data, rows)) / (2 * h);
    worst = std::max(worst, std::abs(fd - grad[i]));
  }
  return worst;
}

GlobalModel model_of(std::vector<double> p, int round = 0) { return {std::move(p), round}; }

}  // namespace

TEST_CASE("synthetic blobs are balanced and labelled in [0, C)") {
  const auto d = blobs(1000, 8, 10, 1.0, 1);
  CHECK(d.size() == 1000);
  CHECK(d.features.size() == 8000);
  std::vector<int> hist(10, 0);
  for (const int l : d.labels) ++hist[static_cast<std::size_t>(l)];
  for (const int h : hist) CHECK(h == 100);
}

TEST_CASE("blob split shares class centres") {
  RngStream rng(2, "dataset");
  const auto split = make_gaussian_blob_split(2000, 500, 16, 10, 1.5, rng);
  CHECK(split.train.size() == 2000);
  CHECK(split.test.size() == 500);
  // A nearest-centroid rule fit on train transfers to test.
  std::vector<std::vector<double>> centroid(10, std::vector<double>(16, 0.0));
  std::vector<int> count(10, 0);
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    const auto l = static_cast<std::size_t>(split.train.labels[i]);
    ++count[l];
    for (std::size_t f = 0; f < 16; ++f) centroid[l][f] += split.train.row(i)[f];
  }
  for (std::size_t c = 0; c < 10; ++c) {
    for (auto& v : centroid[c]) v /= count[c];
  }
  int correct = 0;
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t c = 0; c < 10; ++c) {
      double dist = 0.0;
      for (std::size_t f = 0; f < 16; ++f) {
        dist += std::pow(split.test.row(i)[f] - centroid[c][f], 2);
      }
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    correct += static_cast<int>(best) == split.test.labels[i];
  }
  CHECK(correct > 250);  // chance is 50
}

TEST_CASE("IID partition gives each client its data count and a flat class histogram") {
  const auto data = blobs(10000, 2, 10, 1.0, 3);
  const auto profiles = uniform_profiles(10000, 100);
  RngStream rng(0, "partition");
  const auto part = partition_dataset(data, profiles, PartitionMode::Iid, 2, rng);
  std::vector<double> mean_hist(10, 0.0);
  for (const auto& p : profiles) {
    const auto shard = part.shard(p.id);
    REQUIRE(shard.size() == 100);
    for (const auto i : shard) mean_hist[static_cast<std::size_t>(data.labels[i])] += 1.0;
  }
  // Per class: mean of 10^4 Binomial(100, 0.1) counts; sigma of the mean is 0.03.
  for (auto& h : mean_hist) {
    h /= 10000.0;
    CHECK(std::abs(h - 10.0) <= 3 * 3.0 / 100.0);
  }
}

TEST_CASE("non-IID partition confines each client to two labels") {
  const auto data = blobs(5000, 2, 10, 1.0, 4);
  RngStream rng(0, "partition");
  std::vector<ClientProfile> profiles;
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> n(100, 1000);
  for (int i = 1; i <= 300; ++i) {
    profiles.push_back({ClientId{i}, Samples(n(gen)), SamplesPerSecond(50), MegabitsPerSecond(1), {}});
  }
  const auto part = partition_dataset(data, profiles, PartitionMode::NonIid, 2, rng);
  for (const auto& p : profiles) {
    const auto shard = part.shard(p.id);
    REQUIRE(shard.size() == static_cast<std::size_t>(p.data_count.value()));
    std::set<int> labels;
    for (const auto i : shard) labels.insert(data.labels[i]);
    REQUIRE(labels.size() <= 2);
    const auto& chosen = part.client_classes[static_cast<std::size_t>(p.id.value - 1)];
    REQUIRE(std::set<int>(chosen.begin(), chosen.end()).size() == 2);
    for (const int l : labels) REQUIRE(std::count(chosen.begin(), chosen.end(), l) == 1);
  }
}

TEST_CASE("partition is deterministic per seed") {
  const auto data = blobs(1000, 2, 10, 1.0, 5);
  const auto profiles = uniform_profiles(50, 200);
  for (const auto mode : {PartitionMode::Iid, PartitionMode::NonIid}) {
    RngStream a(9, "partition");
    RngStream b(9, "partition");
    CHECK(partition_dataset(data, profiles, mode, 2, a).assignment ==
          partition_dataset(data, profiles, mode, 2, b).assignment);
  }
}

TEST_CASE("non-IID partition rejects more classes than exist") {
  const auto data = blobs(100, 2, 3, 1.0, 6);
  RngStream rng(0, "partition");
  CHECK_THROWS_AS(partition_dataset(data, uniform_profiles(2, 10), PartitionMode::NonIid, 4, rng),
                  ParameterError);
  CHECK_THROWS_AS(partition_dataset(data, uniform_profiles(2, 10), PartitionMode::NonIid, 0, rng),
                  ParameterError);
}

TEST_CASE("analytic gradient matches central differences") {
  SUBCASE("softmax regression, 20 parameters") {
    const ModelShape shape{4, 0, 4};
    REQUIRE(shape.param_count() == 20);
    CHECK(max_fd_error(shape, blobs(40, 4, 4, 1.0, 7), 1) < 1e-5);
  }
  SUBCASE("one hidden layer") {
    const ModelShape shape{3, 4, 3};
    REQUIRE(shape.param_count() == 4 * 4 + 3 * 5);
    CHECK(max_fd_error(shape, blobs(30, 3, 3, 1.0, 8), 2) < 1e-5);
  }
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  const auto data = blobs(200, 4, 3, 1.0, 9);
  const ModelShape shape{4, 0, 3};
  RngStream init(1, "init");
  const auto model = init_model(shape, init);
  const auto rows = all_rows(data);
  RngStream rng(1, "train");
  const auto out = local_update(model, shape, data, rows, TrainerHyper{10, 3, 0.0, 0.99}, rng);
  CHECK(out.params == model.params);
}

TEST_CASE("one SGD step reduces loss on a separable pair") {
  Dataset d;
  d.n_features = 2;
  d.n_classes = 2;
  d.features = {1.0, 0.0, -1.0, 0.0};
  d.labels = {0, 1};
  const ModelShape shape{2, 0, 2};
  const GlobalModel model = model_of(std::vector<double>(shape.param_count(), 0.0));
  const std::vector<std::size_t> rows{0, 1};
  RngStream rng(0, "train");
  const auto out = local_update(model, shape, d, rows, TrainerHyper{2, 1, 0.5, 1.0}, rng);
  CHECK(loss(out.params, shape, d, rows) < loss(model.params, shape, d, rows));
}

TEST_CASE("local update does not touch the dataset and keeps the round") {
  const auto data = blobs(300, 4, 3, 1.0, 10);
  const auto copy = data;
  const ModelShape shape{4, 5, 3};
  RngStream init(2, "init");
  auto model = init_model(shape, init);
  model.round = 7;
  const std::vector<std::size_t> shard{1, 5, 9, 11, 200};
  RngStream rng(2, "train");
  const auto out = local_update(model, shape, data, shard, TrainerHyper{}, rng);
  CHECK(data.features == copy.features);
  CHECK(data.labels == copy.labels);
  CHECK(out.round == 7);
  CHECK(out.param_count() == model.param_count());
  for (const double p : out.params) REQUIRE(std::isfinite(p));
}

TEST_CASE("local update errors") {
  const auto data = blobs(30, 4, 3, 1.0, 11);
  const ModelShape shape{4, 0, 3};
  RngStream rng(0, "train");
  const auto model = model_of(std::vector<double>(shape.param_count(), 0.0));
  CHECK_THROWS_AS(local_update(model, shape, data, {}, TrainerHyper{}, rng), ParameterError);
  const std::vector<std::size_t> rows{0};
  CHECK_THROWS_AS(local_update(model_of({1.0, 2.0}), shape, data, rows, TrainerHyper{}, rng),
                  ModelError);
  CHECK_THROWS_AS(local_update(model, ModelShape{5, 0, 3}, data, rows, TrainerHyper{}, rng),
                  ModelError);
}

TEST_CASE("training on blobs beats chance") {
  RngStream rng(3, "dataset");
  const auto split = make_gaussian_blob_split(3000, 1000, 8, 5, 1.0, rng);
  const ModelShape shape{8, 0, 5};
  RngStream init(3, "init");
  auto model = init_model(shape, init);
  const double before = accuracy(model.params, shape, split.test);
  const auto rows = all_rows(split.train);
  RngStream train(3, "train");
  model = local_update(model, shape, split.train, rows, TrainerHyper{50, 5, 0.25, 1.0}, train);
  const double after = accuracy(model.params, shape, split.test);
  CHECK(after > before);
  CHECK(after > 0.5);
}

TEST_CASE("aggregation arithmetic") {
  SUBCASE("unweighted mean") {
    const std::vector<WeightedUpdate> u{{model_of({1, 3}), Samples(1)}, {model_of({3, 1}), Samples(1)}};
    CHECK(aggregate(u, Weighting::Unweighted).params == std::vector<double>{2, 2});
  }
  SUBCASE("single update is returned as is") {
    const std::vector<WeightedUpdate> u{{model_of({0.1, -7.25, 3e-9}, 4), Samples(500)}};
    for (const auto w : {Weighting::Unweighted, Weighting::DataSize}) {
      const auto out = aggregate(u, w);
      CHECK(out.params == u[0].model.params);
      CHECK(out.round == 5);
    }
  }
  SUBCASE("data-size weighting") {
    const std::vector<WeightedUpdate> u{{model_of({0, 0}), Samples(100)}, {model_of({4, 4}), Samples(300)}};
    CHECK(aggregate(u, Weighting::DataSize).params == std::vector<double>{3, 3});
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(aggregate(std::span<const WeightedUpdate>{}, Weighting::Unweighted), ParameterError);
    const std::vector<WeightedUpdate> bad{{model_of({1}), Samples(1)}, {model_of({1, 2}), Samples(1)}};
    CHECK_THROWS_AS(aggregate(bad, Weighting::Unweighted), ModelError);
  }
}

TEST_CASE("property: aggregation is permutation-invariant and idempotent, bit for bit") {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_int_distribution<int> w(100, 1000);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 9);
    const std::size_t dim = 1 + static_cast<std::size_t>(trial % 17);
    std::vector<WeightedUpdate> updates;
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> p(dim);
      for (auto& v : p) v = z(gen) * std::pow(10.0, trial % 5 - 2);
      updates.push_back({model_of(p, trial % 3), Samples(w(gen))});
    }
    for (const auto mode : {Weighting::Unweighted, Weighting::DataSize}) {
      const auto ref = aggregate(updates, mode);
      auto shuffled = updates;
      for (int s = 0; s < 5; ++s) {
        std::shuffle(shuffled.begin(), shuffled.end(), gen);
        REQUIRE(aggregate(shuffled, mode).params == ref.params);
      }
      const std::vector<WeightedUpdate> copies(n, updates.front());
      REQUIRE(aggregate(copies, mode).params == updates.front().model.params);
    }
  }
}

TEST_CASE("surrogate curve") {
  CHECK(surrogate_accuracy({}, {0, 0}) == 0.0);
  CHECK(surrogate_accuracy({0.9, 100.0}, {100, 0}) == doctest::Approx(0.9 * (1.0 - std::exp(-1.0))));
  CHECK(surrogate_accuracy({0.9, 100.0}, {100, 0}) == doctest::Approx(0.5689).epsilon(1e-4));
  CHECK(surrogate_accuracy({0.8, 150.0}, {1000000, 0}) == 0.8);
  double prev = -1.0;
  for (std::int64_t u = 0; u < 2000; u += 7) {
    const double a = surrogate_accuracy({}, {u, 0});
    REQUIRE(a >= prev);
    REQUIRE(a <= 0.8);
    prev = a;
  }
  CHECK_THROWS_AS((SurrogateCurve{1.5, 10.0}.validate()), ParameterError);
  CHECK_THROWS_AS((SurrogateCurve{0.5, 0.0}.validate()), ParameterError);
}

TEST_CASE("surrogate trainer leaves the model alone") {
  const SurrogateTrainer t({0.9, 100.0});
  RngStream rng(0, "training");
  const auto m = t.initial_model(rng);
  CHECK(t.local_update(m, ClientId{3}, rng).params == m.params);
  CHECK(t.evaluate(m, {100, 0}) == doctest::Approx(0.5689).epsilon(1e-4));
}

TEST_CASE("native trainer trains on its client's shard") {
  RngStream rng(4, "dataset");
  auto split = make_gaussian_blob_split(2000, 500, 6, 4, 1.2, rng);
  const auto profiles = uniform_profiles(10, 200);
  RngStream prng(4, "partition");
  auto part = partition_dataset(split.train, profiles, PartitionMode::Iid, 2, prng);
  const NativeTrainer t(split.train, split.test, part, ModelShape{6, 0, 4}, TrainerHyper{});
  RngStream init(4, "init");
  const auto m0 = t.initial_model(init);
  const double a0 = t.evaluate(m0, {});
  RngStream r1(4, "c1");
  const auto m1 = t.local_update(m0, ClientId{1}, r1);
  CHECK(t.evaluate(m1, {}) > a0);
  CHECK_THROWS(t.local_update(m0, ClientId{11}, r1));
}

TEST_CASE("dataset files round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "fedcs-test-dataset";
  std::filesystem::create_directories(dir);
  const auto data = blobs(37, 5, 3, 1.0, 13);

  SUBCASE("csv is exact") {
    const auto path = dir / "blobs.csv";
    save_dataset(data, path, false);
    const auto back = load_dataset(path);
    CHECK(back.n_features == 5);
    CHECK(back.n_classes == 3);
    CHECK(back.labels == data.labels);
    CHECK(back.features == data.features);
  }
  SUBCASE("binary narrows to float32") {
    const auto path = dir / "blobs.bin";
    save_dataset(data, path, true);
    CHECK(std::filesystem::file_size(path) == 37 * (4 + 5 * 4));
    const auto back = load_dataset(path);
    CHECK(back.labels == data.labels);
    for (std::size_t i = 0; i < data.features.size(); ++i) {
      REQUIRE(back.features[i] == static_cast<double>(static_cast<float>(data.features[i])));
    }
  }
  SUBCASE("binary layout is little-endian label then features") {
    const auto path = dir / "one.bin";
    Dataset one;
    one.n_features = 1;
    one.n_classes = 3;
    one.features = {1.0};
    one.labels = {2};
    save_dataset(one, path, true);
    std::ifstream in(path, std::ios::binary);
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    const unsigned char expected[8] = {2, 0, 0, 0, 0x00, 0x00, 0x80, 0x3f};
    CHECK(std::equal(bytes, bytes + 8, expected));
  }
  SUBCASE("missing sidecar and bad rows are I/O errors") {
    CHECK_THROWS_AS(load_dataset(dir / "absent.bin"), IoError);
    const auto path = dir / "bad.csv";
    save_dataset(data, path, false);
    std::ofstream(path, std::ios::app) << "1,not-a-number,2,3,4,5\n";
    CHECK_THROWS_AS(load_dataset(path), IoError);
  }
  std::filesystem::remove_all(dir);
}
