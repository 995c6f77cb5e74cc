#include "fedcs/resources.hpp"

#include <cmath>
#include <ostream>

#include "fedcs/error.hpp"

namespace fedcs {

void ResourceRanges::validate() const {
  if (data_min < 1 || data_max < data_min) {
    throw ParameterError("data count range must satisfy 1 <= min <= max");
  }
  if (!std::isfinite(capability_min) || !std::isfinite(capability_max) || capability_min <= 0.0 ||
      capability_max < capability_min) {
    throw ParameterError("capability range must satisfy 0 < min <= max");
  }
}

void FluctuationConfig::validate() const {
  if (!std::isfinite(r) || r < 0.0) throw ParameterError("fluctuation r must be non-negative");
}

void TimeBudget::validate() const {
  if (!(t_round > t_cs + t_agg)) throw ParameterError("t_round must exceed t_cs + t_agg");
  if (t_final < t_round) throw ParameterError("t_final must be >= t_round");
  if (!(model_size.value() > 0.0)) throw ParameterError("model_size must be positive");
  if (epochs_per_round < 1) throw ParameterError("epochs_per_round must be >= 1");
}

namespace resources {

std::vector<ClientProfile> generate_profiles(int count, const channel::CellConfig& cell,
                                             const ResourceRanges& ranges, RngStream& rng) {
  if (count < 1) throw ParameterError("generate_profiles: count must be >= 1");
  ranges.validate();
  const auto positions = channel::place_clients(count, cell, rng);

  std::vector<ClientProfile> profiles;
  profiles.reserve(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto n = rng.uniform_int(ranges.data_min, ranges.data_max);
    const double cap = rng.uniform_closed(ranges.capability_min, ranges.capability_max);
    profiles.push_back(ClientProfile{
        .id = ClientId{static_cast<int>(i) + 1},
        .data_count = Samples(static_cast<double>(n)),
        .mean_capability = SamplesPerSecond(cap),
        .mean_throughput = channel::mean_throughput(positions[i], cell),
        .position = positions[i],
    });
  }
  return profiles;
}

Seconds estimated_update_time(const ClientProfile& profile, const TimeBudget& budget) {
  return (profile.data_count / profile.mean_capability) * budget.epochs_per_round;
}

Seconds estimated_upload_time(const ClientProfile& profile, const TimeBudget& budget) {
  return budget.model_size / profile.mean_throughput;
}

RealizedTimes realized_times(const ClientProfile& profile, const TimeBudget& budget,
                             const FluctuationConfig& fluct, RngStream& rng) {
  const double cap_mean = profile.mean_capability.value();
  const double thr_mean = profile.mean_throughput.value();
  const SamplesPerSecond cap(
      gaussian_truncated(rng, cap_mean, fluct.r, kFluctuationFloorFraction * cap_mean));
  const MegabitsPerSecond thr(
      gaussian_truncated(rng, thr_mean, fluct.r, kFluctuationFloorFraction * thr_mean));
  return RealizedTimes{
      .update = (profile.data_count / cap) * budget.epochs_per_round,
      .upload = budget.model_size / thr,
      .throughput = thr,
  };
}

void write_profiles_csv(std::ostream& out, const std::vector<ClientProfile>& profiles) {
  out << "id,data_count,capability,throughput_mbps,distance_m\n";
  const auto old_precision = out.precision(17);
  for (const auto& p : profiles) {
    out << p.id.value << ',' << p.data_count.value() << ',' << p.mean_capability.value() << ','
        << p.mean_throughput.value() << ',' << p.position.distance_m << '\n';
  }
  out.precision(old_precision);
}

}  // namespace resources
}  // namespace fedcs
