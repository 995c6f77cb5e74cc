#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedcs/protocol.hpp"

namespace fedcs::metrics {

/// Clock at the first record whose accuracy reaches `threshold`; nullopt if never reached.
std::optional<Seconds> time_of_arrival(std::span<const protocol::RoundRecord> records,
                                       double threshold);

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

/// Mean and population std computed in a canonical (sorted) order, so the result does not
/// depend on the order of `values`.
Stat describe(std::vector<double> values);

struct RunSummary {
  std::vector<std::optional<double>> toa;  // seconds, one per threshold
  double final_accuracy = 0.0;
  double mean_clients_per_round = 0.0;
  double mean_clients_per_nonempty_round = 0.0;  // 0 when every round was empty
  std::int64_t total_clients_selected = 0;
  int rounds_completed = 0;
};

RunSummary summarize_run(std::span<const protocol::RoundRecord> records,
                         std::span<const double> thresholds);

struct ToaSummary {
  double threshold = 0.0;
  std::optional<double> mean;             // absent unless every run reached the threshold
  std::optional<double> mean_successful;  // over the runs that did reach it
  int successes = 0;
};

struct ExperimentSummary {
  std::vector<ToaSummary> toa;
  Stat final_accuracy;
  Stat clients_per_round;
  Stat clients_per_nonempty_round;
  Stat total_clients_selected;
  Stat rounds_completed;
  std::vector<RunSummary> per_run;
};

/// Multi-run aggregate. Throws ParameterError for an empty run list.
ExperimentSummary summarize(std::span<const std::vector<protocol::RoundRecord>> runs,
                            std::span<const double> thresholds);

/// JSON object text; absent ToA values are written as null.
std::string to_json(const ExperimentSummary& summary, int indent = -1);

/// `clock_seconds,accuracy,clients_selected` rows, preceded by `# <provenance>` when given.
void write_curve_csv(std::ostream& out, std::span<const protocol::RoundRecord> records,
                     const std::string& provenance = {});

}  // namespace fedcs::metrics
