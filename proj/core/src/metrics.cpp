#include "fedcs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "fedcs/error.hpp"
#include "json.hpp"

namespace fedcs::metrics {

std::optional<Seconds> time_of_arrival(std::span<const protocol::RoundRecord> records,
                                       double threshold) {
  for (const auto& r : records) {
    if (r.accuracy_after >= threshold) return r.clock_after;
  }
  return std::nullopt;
}

Stat describe(std::vector<double> values) {
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  // Offsets from the smallest value keep the mean of identical values exact.
  double offset = 0.0;
  for (double v : values) offset += v - values.front();
  const double mean = values.front() + offset / n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / n)};
}

RunSummary summarize_run(std::span<const protocol::RoundRecord> records,
                         std::span<const double> thresholds) {
  RunSummary s;
  for (const double t : thresholds) {
    const auto toa = time_of_arrival(records, t);
    s.toa.push_back(toa ? std::optional<double>(toa->value()) : std::nullopt);
  }
  s.rounds_completed = static_cast<int>(records.size());
  if (records.empty()) return s;

  int nonempty = 0;
  for (const auto& r : records) {
    s.total_clients_selected += r.aggregated_count;
    if (r.aggregated_count > 0) ++nonempty;
  }
  s.final_accuracy = records.back().accuracy_after;
  s.mean_clients_per_round =
      static_cast<double>(s.total_clients_selected) / static_cast<double>(records.size());
  s.mean_clients_per_nonempty_round =
      nonempty == 0 ? 0.0 : static_cast<double>(s.total_clients_selected) / nonempty;
  return s;
}

ExperimentSummary summarize(std::span<const std::vector<protocol::RoundRecord>> runs,
                            std::span<const double> thresholds) {
  if (runs.empty()) throw ParameterError("summarize needs at least one run");
  ExperimentSummary out;
  for (const auto& run : runs) out.per_run.push_back(summarize_run(run, thresholds));

  auto column = [&](auto field) {
    std::vector<double> v;
    for (const auto& r : out.per_run) v.push_back(static_cast<double>(field(r)));
    return describe(std::move(v));
  };
  out.final_accuracy = column([](const RunSummary& r) { return r.final_accuracy; });
  out.clients_per_round = column([](const RunSummary& r) { return r.mean_clients_per_round; });
  out.clients_per_nonempty_round =
      column([](const RunSummary& r) { return r.mean_clients_per_nonempty_round; });
  out.total_clients_selected =
      column([](const RunSummary& r) { return r.total_clients_selected; });
  out.rounds_completed = column([](const RunSummary& r) { return r.rounds_completed; });

  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    ToaSummary ts;
    ts.threshold = thresholds[t];
    std::vector<double> reached;
    for (const auto& r : out.per_run) {
      if (r.toa[t]) reached.push_back(*r.toa[t]);
    }
    ts.successes = static_cast<int>(reached.size());
    if (!reached.empty()) ts.mean_successful = describe(reached).mean;
    if (reached.size() == out.per_run.size()) ts.mean = ts.mean_successful;
    out.toa.push_back(ts);
  }
  return out;
}

namespace {

nlohmann::json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}}; }

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string to_json(const ExperimentSummary& summary, int indent) {
  nlohmann::json j;
  j["toa"] = nlohmann::json::array();
  for (const auto& t : summary.toa) {
    j["toa"].push_back({{"threshold", t.threshold},
                        {"mean_seconds", optional_json(t.mean)},
                        {"mean_successful_seconds", optional_json(t.mean_successful)},
                        {"successes", t.successes},
                        {"runs", summary.per_run.size()}});
  }
  j["final_accuracy"] = stat_json(summary.final_accuracy);
  j["clients_per_round"] = stat_json(summary.clients_per_round);
  j["clients_per_nonempty_round"] = stat_json(summary.clients_per_nonempty_round);
  j["total_clients_selected"] = stat_json(summary.total_clients_selected);
  j["rounds_completed"] = stat_json(summary.rounds_completed);
  j["per_run"] = nlohmann::json::array();
  for (const auto& r : summary.per_run) {
    nlohmann::json toa = nlohmann::json::array();
    for (const auto& v : r.toa) toa.push_back(optional_json(v));
    j["per_run"].push_back({{"toa_seconds", toa},
                            {"final_accuracy", r.final_accuracy},
                            {"mean_clients_per_round", r.mean_clients_per_round},
                            {"mean_clients_per_nonempty_round", r.mean_clients_per_nonempty_round},
                            {"total_clients_selected", r.total_clients_selected},
                            {"rounds_completed", r.rounds_completed}});
  }
  return j.dump(indent);
}

void write_curve_csv(std::ostream& out, std::span<const protocol::RoundRecord> records,
                     const std::string& provenance) {
  if (!provenance.empty()) out << "# " << provenance << '\n';
  out << "clock_seconds,accuracy,clients_selected\n";
  const auto old_precision = out.precision(17);
  for (const auto& r : records) {
    out << r.clock_after.value() << ',' << r.accuracy_after << ',' << r.aggregated_count << '\n';
  }
  out.precision(old_precision);
}

}  // namespace fedcs::metrics
