#pragma once

#include <vector>

#include "fedcs/random.hpp"
#include "fedcs/units.hpp"

namespace fedcs::channel {

/// Calibrated receiver noise figure [dB]. Chosen so that a uniformly populated cell with the
/// default link budget has a mean client throughput of 1.4 Mbit/s. It is an effective
/// constant: it absorbs whatever gains the link budget does not model explicitly, which is
/// why it is negative.
inline constexpr double kCalibratedNoiseFigureDb = -11.66;

/// Single urban microcell with the base station at its centre.
struct CellConfig {
  double radius_m = 2000.0;
  double carrier_freq_ghz = 2.5;
  double bs_height_m = 11.0;
  double ue_height_m = 1.0;
  double tx_power_dbm = 20.0;
  double antenna_gain_dbi = 0.0;  // applied at both ends
  int rb_count = 10;
  double bandwidth_hz = 1.8e6;  // total over rb_count resource blocks
  double noise_figure_db = kCalibratedNoiseFigureDb;
  double thermal_noise_dbm_per_hz = -174.0;
  double delta_loss = 1.6;  // linear SNR divisor
  double rho_max = 4.8;     // bit/s/Hz
  double shadowing_sigma_db = 4.0;
  double min_distance_m = 10.0;

  /// Throws ParameterError on an invalid configuration.
  void validate() const;

  /// bandwidth_hz * rho_max, in Mbit/s.
  MegabitsPerSecond max_throughput() const;
};

/// A client's location relative to the base station, with its per-client shadow-fading draw.
struct ClientPosition {
  double distance_m = 0.0;
  double shadow_fading_db = 0.0;
};

/// Places `count` clients uniformly over the disk area (distance density proportional to d).
/// Each client's shadow fading is drawn once here, from the same stream.
std::vector<ClientPosition> place_clients(int count, const CellConfig& cell, RngStream& rng);

/// Urban-micro NLOS path loss, 36.7 log10(d) + 22.7 + 26 log10(fc), distance clamped to
/// min_distance_m, plus the position's shadow fading.
double path_loss_db(const ClientPosition& pos, const CellConfig& cell);

/// Uplink SNR in dB over the full RB allocation.
double snr_db(const ClientPosition& pos, const CellConfig& cell);

/// bandwidth * min(rho_max, log2(1 + SNR / delta)). Fixed per client for the whole run.
MegabitsPerSecond mean_throughput(const ClientPosition& pos, const CellConfig& cell);

}  // namespace fedcs::channel
