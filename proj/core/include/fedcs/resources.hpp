#pragma once

#include <iosfwd>
#include <vector>

#include "fedcs/channel.hpp"
#include "fedcs/random.hpp"
#include "fedcs/units.hpp"

namespace fedcs {

/// Static resources of one client, fixed for the lifetime of a simulation.
struct ClientProfile {
  ClientId id;
  Samples data_count;
  SamplesPerSecond mean_capability;
  MegabitsPerSecond mean_throughput;
  channel::ClientPosition position;
};

/// Ranges the profile generator draws from.
struct ResourceRanges {
  int data_min = 100;
  int data_max = 1000;
  double capability_min = 10.0;
  double capability_max = 100.0;

  void validate() const;
};

/// Relative standard deviation r applied to capability and throughput at realization time.
struct FluctuationConfig {
  double r = 0.0;

  void validate() const;
};

/// Time parameters of a round.
struct TimeBudget {
  Seconds t_round{180.0};
  Seconds t_final{24000.0};
  Seconds t_cs{0.0};
  Seconds t_agg{0.0};
  Megabits model_size{146.4};  // 18.3 MB of float32 parameters
  int epochs_per_round = 5;

  /// Enforces t_round > t_cs + t_agg, t_final >= t_round, model_size > 0, epochs >= 1.
  void validate() const;
};

/// Realized times for one client in one round, with the throughput sample they used.
struct RealizedTimes {
  Seconds update;
  Seconds upload;
  MegabitsPerSecond throughput;
};

namespace resources {

/// Positions from channel::place_clients, then data counts (uniform integer) and mean
/// capabilities (uniform real), all consumed from `rng` in that order.
std::vector<ClientProfile> generate_profiles(int count, const channel::CellConfig& cell,
                                             const ResourceRanges& ranges, RngStream& rng);

/// epochs * data_count / mean_capability.
Seconds estimated_update_time(const ClientProfile& profile, const TimeBudget& budget);

/// model_size / mean_throughput.
Seconds estimated_upload_time(const ClientProfile& profile, const TimeBudget& budget);

/// Lower clamp applied to fluctuated capability and throughput, as a fraction of the mean.
inline constexpr double kFluctuationFloorFraction = 0.01;

/// Draws one capability sample then one throughput sample (two normal variates, always),
/// and recomputes both times. With r == 0 the result equals the estimates bit-for-bit.
RealizedTimes realized_times(const ClientProfile& profile, const TimeBudget& budget,
                             const FluctuationConfig& fluct, RngStream& rng);

/// Audit snapshot: header line then one row per client
/// (id,data_count,capability,throughput_mbps,distance_m).
void write_profiles_csv(std::ostream& out, const std::vector<ClientProfile>& profiles);

}  // namespace resources
}  // namespace fedcs
