#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedcs/learning.hpp"
#include "fedcs/random.hpp"
#include "fedcs/resources.hpp"
#include "fedcs/units.hpp"

namespace fedcs::protocol {

enum class Mode { FedCS, FedLim, VanillaFL };

/// What FedCS does with uploads that realize later than the schedule promised.
enum class LatePolicy {
  Extend,   // stretch the round; every scheduled update is aggregated
  Discard,  // hard deadline at t_round; late uploads are dropped
};

struct ProtocolConfig {
  Mode mode = Mode::FedCS;
  int k_total = 1000;
  double fraction = 0.1;
  TimeBudget budget;
  FluctuationConfig fluct;
  LatePolicy late_policy = LatePolicy::Extend;
  learning::Weighting weighting = learning::Weighting::Unweighted;

  /// ceil(K * C), never below 1.
  int requests_per_round() const;
  void validate() const;
};

struct StopCondition {
  std::optional<double> target_accuracy;
  Seconds t_final{24000.0};

  void validate() const;
};

/// Realized outcome of one round.
struct RoundRecord {
  int round = 0;
  std::vector<ClientId> requested;              // clients asked in Resource Request
  std::vector<ClientId> selected_or_completed;  // FedCS: scheduled; FedLim: completed in time
  int scheduled_count = 0;                      // clients that started the round's work
  Seconds realized_round_duration;              // wall-clock advance of this round
  Seconds work_duration;                        // realized T_cs + T_d + Theta + T_agg
  Seconds clock_after;
  double accuracy_after = 0.0;
  int aggregated_count = 0;
};

/// One JSON object on a single line, no trailing newline.
std::string to_json_line(const RoundRecord& record);

/// Mutable state of one simulated run. Owns the run's labelled random streams.
struct SimulationState {
  SimulationState(std::uint64_t seed, const learning::Trainer& trainer);

  Seconds clock{0.0};
  int round = 0;
  learning::GlobalModel model;
  learning::TrainingProgress progress;
  double accuracy = 0.0;

  RngStream selection;
  RngStream fluctuation;
  RngStream training;
};

/// Resource Request, greedy Client Selection, Distribution, Scheduled Update and Upload,
/// Aggregation. The clock advances by max(t_round, realized work) under Extend and by exactly
/// t_round under Discard.
RoundRecord run_round_fedcs(SimulationState& state, std::span<const ClientProfile> profiles,
                            const ProtocolConfig& config, const learning::Trainer& trainer);

/// Random ceil(K*C) clients, multicast distribution, parallel updates, sequential uploads in
/// random order; only uploads finishing within t_round are aggregated. Advances by t_round.
RoundRecord run_round_fedlim(SimulationState& state, std::span<const ClientProfile> profiles,
                             const ProtocolConfig& config, const learning::Trainer& trainer);

/// As FedLim without the deadline: every client completes and the round lasts as long as the
/// slowest path.
RoundRecord run_round_vanilla(SimulationState& state, std::span<const ClientProfile> profiles,
                              const ProtocolConfig& config, const learning::Trainer& trainer);

/// Dispatches on config.mode.
RoundRecord run_round(SimulationState& state, std::span<const ClientProfile> profiles,
                      const ProtocolConfig& config, const learning::Trainer& trainer);

/// Iterates rounds from a fresh state until the clock reaches stop.t_final or the target
/// accuracy is met.
std::vector<RoundRecord> run_experiment(const ProtocolConfig& config, const StopCondition& stop,
                                        const learning::Trainer& trainer,
                                        std::span<const ClientProfile> profiles,
                                        std::uint64_t seed);

std::string to_string(Mode mode);
std::string to_string(LatePolicy policy);

}  // namespace fedcs::protocol
