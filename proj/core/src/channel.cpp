#include "fedcs/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fedcs/error.hpp"

namespace fedcs::channel {

void CellConfig::validate() const {
  if (!(radius_m > 0.0)) throw ParameterError("cell radius must be positive");
  if (!(bandwidth_hz > 0.0)) throw ParameterError("cell bandwidth must be positive");
  if (!(rho_max > 0.0)) throw ParameterError("rho_max must be positive");
  if (!(delta_loss >= 1.0)) throw ParameterError("delta_loss must be >= 1");
  if (!(carrier_freq_ghz > 0.0)) throw ParameterError("carrier frequency must be positive");
  if (!(shadowing_sigma_db >= 0.0)) throw ParameterError("shadowing sigma must be non-negative");
  if (!(min_distance_m > 0.0) || min_distance_m > radius_m) {
    throw ParameterError("min_distance must lie in (0, radius]");
  }
  if (rb_count < 1) throw ParameterError("rb_count must be >= 1");
  for (double v : {tx_power_dbm, antenna_gain_dbi, noise_figure_db, thermal_noise_dbm_per_hz,
                   bs_height_m, ue_height_m}) {
    if (!std::isfinite(v)) throw ParameterError("cell parameters must be finite");
  }
}

MegabitsPerSecond CellConfig::max_throughput() const {
  return MegabitsPerSecond(bandwidth_hz * rho_max / 1e6);
}

std::vector<ClientPosition> place_clients(int count, const CellConfig& cell, RngStream& rng) {
  if (count < 1) throw ParameterError("place_clients: count must be >= 1");
  cell.validate();
  std::vector<ClientPosition> positions;
  positions.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    // Inverse CDF of F(d) = (d/R)^2; 1 - u keeps d strictly positive.
    const double u = 1.0 - rng.uniform01();
    const double distance = cell.radius_m * std::sqrt(u);
    const double shadow = cell.shadowing_sigma_db * rng.standard_normal();
    positions.push_back({distance, shadow});
  }
  return positions;
}

double path_loss_db(const ClientPosition& pos, const CellConfig& cell) {
  const double d = std::max(pos.distance_m, cell.min_distance_m);
  return 36.7 * std::log10(d) + 22.7 + 26.0 * std::log10(cell.carrier_freq_ghz) +
         pos.shadow_fading_db;
}

double snr_db(const ClientPosition& pos, const CellConfig& cell) {
  const double noise_dbm =
      cell.thermal_noise_dbm_per_hz + 10.0 * std::log10(cell.bandwidth_hz) + cell.noise_figure_db;
  const double rx_dbm = cell.tx_power_dbm + 2.0 * cell.antenna_gain_dbi - path_loss_db(pos, cell);
  return rx_dbm - noise_dbm;
}

MegabitsPerSecond mean_throughput(const ClientPosition& pos, const CellConfig& cell) {
  const double snr = std::pow(10.0, snr_db(pos, cell) / 10.0);
  const double spectral_eff = std::log1p(snr / cell.delta_loss) / std::numbers::ln2;
  return MegabitsPerSecond(cell.bandwidth_hz * std::min(cell.rho_max, spectral_eff) / 1e6);
}

}  // namespace fedcs::channel
