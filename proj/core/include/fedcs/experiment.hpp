#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedcs/channel.hpp"
#include "fedcs/learning.hpp"
#include "fedcs/protocol.hpp"
#include "fedcs/resources.hpp"

namespace fedcs::experiment {

enum class TrainerKind { Surrogate, Native };

/// Where the native trainer's data comes from: an external file when `path` is set,
/// otherwise a synthetic Gaussian-blob set of the given size.
struct DatasetConfig {
  std::string path;
  std::size_t n_train = 20000;
  std::size_t n_test = 2000;
  std::size_t n_features = 256;
  std::size_t n_classes = 10;
  double separation = 0.15;
};

struct TrainerConfig {
  TrainerKind kind = TrainerKind::Surrogate;
  learning::TrainerHyper hyper;  // hyper.epochs mirrors protocol.budget.epochs_per_round
  learning::SurrogateCurve surrogate;
  std::size_t hidden = 0;
  DatasetConfig dataset;
};

struct PartitionConfig {
  learning::PartitionMode mode = learning::PartitionMode::Iid;
  int classes_per_client = 2;
};

struct StopConfig {
  std::optional<double> target_accuracy;
  std::vector<double> thresholds{0.5, 0.75};
};

/// Axes of the cartesian sweep. An empty axis means "use the base value".
struct SweepConfig {
  std::vector<double> t_round;
  std::vector<double> fluctuation_r;
  std::vector<protocol::Mode> mode;
  std::vector<learning::PartitionMode> partition;
};

struct ExperimentConfig {
  channel::CellConfig cell;
  ResourceRanges resources;
  protocol::ProtocolConfig protocol;
  TrainerConfig trainer;
  PartitionConfig partition;
  StopConfig stop;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  SweepConfig sweep;
  std::string output_dir = "fedcs-out";
};

/// The canonical configuration: every default filled in.
ExperimentConfig default_config();

/// Parses and validates JSON text. Omitted keys take defaults; unknown keys, wrong types and
/// out-of-range values raise ConfigError naming the key path.
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Fully resolved JSON form (pretty-printed with `indent` >= 0). Parsing it back yields an
/// identical configuration.
std::string config_to_json(const ExperimentConfig& config, int indent = 2);

/// 16 hex digits identifying the resolved configuration.
std::string config_hash(const ExperimentConfig& config);

/// One concrete simulation: a point of the sweep for one seed.
struct RunDescriptor {
  std::string name;   // unique, filesystem-safe
  std::string group;  // name without the seed; runs of one group are summarized together
  std::uint64_t seed = 0;
  ExperimentConfig config;  // sweep values applied
};

std::vector<RunDescriptor> expand_runs(const ExperimentConfig& config);

/// Profiles for a seed: generated from the "profiles" stream of that seed.
std::vector<ClientProfile> make_profiles(const ExperimentConfig& config, std::uint64_t seed);

/// Builds the configured trainer (for the native trainer this creates or loads the data and
/// partitions it over `profiles`).
std::unique_ptr<learning::Trainer> make_trainer(const ExperimentConfig& config,
                                                std::span<const ClientProfile> profiles,
                                                std::uint64_t seed);

/// Runs one descriptor end to end and returns its record stream.
std::vector<protocol::RoundRecord> execute(const RunDescriptor& run);

struct RunOptions {
  std::filesystem::path out;
  bool force = false;
  int parallelism = 1;
};

/// Executes every descriptor on a worker pool and writes, into options.out,
///   records-<run>.jsonl, curve-<run>.csv, profiles-seed<seed>.csv and summary.json.
/// Refuses an existing output directory unless options.force. A descriptor that throws is
/// reported in summary.json and skipped. Returns 0 when every run succeeded, 1 otherwise.
int run_all(const ExperimentConfig& config, const RunOptions& options, std::ostream& log);

std::string to_string(learning::PartitionMode mode);

}  // namespace fedcs::experiment
