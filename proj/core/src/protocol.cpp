#include "fedcs/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fedcs/error.hpp"
#include "fedcs/selection.hpp"
#include "json.hpp"

namespace fedcs::protocol {

int ProtocolConfig::requests_per_round() const {
  return std::max(1, static_cast<int>(std::ceil(static_cast<double>(k_total) * fraction)));
}

void ProtocolConfig::validate() const {
  if (k_total < 1) throw ParameterError("k_total must be >= 1");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ParameterError("fraction must be in (0, 1]");
  budget.validate();
  fluct.validate();
}

void StopCondition::validate() const {
  if (target_accuracy && !(*target_accuracy > 0.0 && *target_accuracy <= 1.0)) {
    throw ParameterError("target accuracy must be in (0, 1]");
  }
}

std::string to_json_line(const RoundRecord& record) {
  auto ids = [](const std::vector<ClientId>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& id : v) a.push_back(id.value);
    return a;
  };
  nlohmann::json j;
  j["round"] = record.round;
  j["requested"] = ids(record.requested);
  j["selected_or_completed"] = ids(record.selected_or_completed);
  j["scheduled_count"] = record.scheduled_count;
  j["realized_round_duration"] = record.realized_round_duration.value();
  j["work_duration"] = record.work_duration.value();
  j["clock_after"] = record.clock_after.value();
  j["accuracy_after"] = record.accuracy_after;
  j["aggregated_count"] = record.aggregated_count;
  return j.dump();
}

SimulationState::SimulationState(std::uint64_t seed, const learning::Trainer& trainer)
    : selection(seed, "selection"), fluctuation(seed, "fluctuation"), training(seed, "training") {
  auto init = training.fork("init");
  model = trainer.initial_model(init);
  accuracy = trainer.evaluate(model, progress);
}

namespace {

const ClientProfile& profile_of(std::span<const ClientProfile> profiles, ClientId id) {
  return profiles[static_cast<std::size_t>(id.value - 1)];
}

std::vector<ClientId> resource_request(SimulationState& state,
                                       std::span<const ClientProfile> profiles,
                                       const ProtocolConfig& config) {
  if (profiles.size() != static_cast<std::size_t>(config.k_total)) {
    throw ParameterError("profile count does not match k_total");
  }
  const auto picks = state.selection.sample_without_replacement(
      profiles.size(), static_cast<std::size_t>(config.requests_per_round()));
  std::vector<ClientId> ids;
  ids.reserve(picks.size());
  for (const auto i : picks) ids.push_back(profiles[i].id);
  return ids;
}

// Realized per-client times for an upload order, and the finish time of each upload measured
// from round start (T_cs + T_d + Theta_i + T_agg).
struct Realization {
  std::vector<Seconds> finish;
  Seconds total{0.0};
};

Realization realize(SimulationState& state, std::span<const ClientProfile> profiles,
                    const std::vector<ClientId>& order, const ProtocolConfig& config) {
  const auto& budget = config.budget;
  std::vector<selection::Candidate> realized;
  realized.reserve(order.size());
  for (const auto id : order) {
    const auto t = resources::realized_times(profile_of(profiles, id), budget, config.fluct,
                                             state.fluctuation);
    realized.push_back({id, t.update, t.upload, t.throughput});
  }
  const Seconds dist = selection::dist_time(realized, budget.model_size);

  Realization out;
  selection::ThetaAccumulator acc;
  for (const auto& c : realized) {
    acc.append(c);
    out.finish.push_back(selection::round_total(dist, acc.theta(), budget));
  }
  out.total = selection::round_total(dist, acc.theta(), budget);
  return out;
}

// Local updates for `clients`, aggregation, evaluation. Each client's training stream depends
// only on (seed, round, client), so the updates are independent of each other.
void aggregate_round(SimulationState& state, std::span<const ClientProfile> profiles,
                     const std::vector<ClientId>& clients, const ProtocolConfig& config,
                     const learning::Trainer& trainer) {
  if (clients.empty()) return;
  std::vector<learning::WeightedUpdate> updates;
  updates.reserve(clients.size());
  std::int64_t samples = 0;
  for (const auto id : clients) {
    auto rng = state.training.fork("r" + std::to_string(state.round) + "/c" +
                                   std::to_string(id.value));
    const auto& profile = profile_of(profiles, id);
    updates.push_back({trainer.local_update(state.model, id, rng), profile.data_count});
    samples += static_cast<std::int64_t>(profile.data_count.value());
  }
  state.model = learning::aggregate(updates, config.weighting);
  state.progress.updates += static_cast<std::int64_t>(clients.size());
  state.progress.aggregated_samples += samples;
  state.accuracy = trainer.evaluate(state.model, state.progress);
}

RoundRecord finish_round(SimulationState& state, RoundRecord rec, Seconds advance) {
  state.clock = state.clock + advance;
  rec.round = state.round;
  rec.realized_round_duration = advance;
  rec.clock_after = state.clock;
  rec.accuracy_after = state.accuracy;
  ++state.round;
  return rec;
}

RoundRecord run_round_random(SimulationState& state, std::span<const ClientProfile> profiles,
                             const ProtocolConfig& config, const learning::Trainer& trainer,
                             bool deadline) {
  RoundRecord rec;
  rec.requested = resource_request(state, profiles, config);
  auto order = rec.requested;
  state.selection.shuffle(order);
  rec.scheduled_count = static_cast<int>(order.size());

  const auto real = realize(state, profiles, order, config);
  rec.work_duration = real.total;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!deadline || real.finish[i] <= config.budget.t_round) {
      rec.selected_or_completed.push_back(order[i]);
    }
  }
  rec.aggregated_count = static_cast<int>(rec.selected_or_completed.size());
  aggregate_round(state, profiles, rec.selected_or_completed, config, trainer);
  return finish_round(state, std::move(rec), deadline ? config.budget.t_round : real.total);
}

}  // namespace

RoundRecord run_round_fedcs(SimulationState& state, std::span<const ClientProfile> profiles,
                            const ProtocolConfig& config, const learning::Trainer& trainer) {
  RoundRecord rec;
  rec.requested = resource_request(state, profiles, config);

  std::vector<ClientProfile> asked;
  asked.reserve(rec.requested.size());
  for (const auto id : rec.requested) asked.push_back(profile_of(profiles, id));
  const auto candidates = selection::make_candidates(asked, config.budget);
  const auto schedule = selection::greedy_select(candidates, config.budget);
  rec.scheduled_count = static_cast<int>(schedule.size());

  const auto& budget = config.budget;
  if (schedule.order.empty()) {
    rec.work_duration = selection::round_total(Seconds(0.0), Seconds(0.0), budget);
    return finish_round(state, std::move(rec), budget.t_round);
  }

  const auto real = realize(state, profiles, schedule.order, config);
  rec.work_duration = real.total;
  Seconds advance = budget.t_round;
  if (config.late_policy == LatePolicy::Extend) {
    rec.selected_or_completed = schedule.order;
    advance = std::max(budget.t_round, real.total);
  } else {
    for (std::size_t i = 0; i < schedule.order.size(); ++i) {
      if (real.finish[i] <= budget.t_round) rec.selected_or_completed.push_back(schedule.order[i]);
    }
  }
  rec.aggregated_count = static_cast<int>(rec.selected_or_completed.size());
  aggregate_round(state, profiles, rec.selected_or_completed, config, trainer);
  return finish_round(state, std::move(rec), advance);
}

RoundRecord run_round_fedlim(SimulationState& state, std::span<const ClientProfile> profiles,
                             const ProtocolConfig& config, const learning::Trainer& trainer) {
  return run_round_random(state, profiles, config, trainer, true);
}

RoundRecord run_round_vanilla(SimulationState& state, std::span<const ClientProfile> profiles,
                              const ProtocolConfig& config, const learning::Trainer& trainer) {
  return run_round_random(state, profiles, config, trainer, false);
}

RoundRecord run_round(SimulationState& state, std::span<const ClientProfile> profiles,
                      const ProtocolConfig& config, const learning::Trainer& trainer) {
  switch (config.mode) {
    case Mode::FedCS:
      return run_round_fedcs(state, profiles, config, trainer);
    case Mode::FedLim:
      return run_round_fedlim(state, profiles, config, trainer);
    case Mode::VanillaFL:
      return run_round_vanilla(state, profiles, config, trainer);
  }
  throw ParameterError("unknown protocol mode");
}

std::vector<RoundRecord> run_experiment(const ProtocolConfig& config, const StopCondition& stop,
                                        const learning::Trainer& trainer,
                                        std::span<const ClientProfile> profiles,
                                        std::uint64_t seed) {
  config.validate();
  stop.validate();
  SimulationState state(seed, trainer);
  std::vector<RoundRecord> records;
  while (state.clock < stop.t_final) {
    records.push_back(run_round(state, profiles, config, trainer));
    if (stop.target_accuracy && records.back().accuracy_after >= *stop.target_accuracy) break;
  }
  return records;
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::FedCS:
      return "fedcs";
    case Mode::FedLim:
      return "fedlim";
    case Mode::VanillaFL:
      return "vanilla";
  }
  return "unknown";
}

std::string to_string(LatePolicy policy) {
  return policy == LatePolicy::Extend ? "extend" : "discard";
}

}  // namespace fedcs::protocol
