#pragma once

#include <span>
#include <string>
#include <vector>

#include "fedcs/resources.hpp"
#include "fedcs/units.hpp"

namespace fedcs::selection {

/// Resource information a client reports in Resource Request.
struct Candidate {
  ClientId id;
  Seconds t_update;
  Seconds t_upload;
  MegabitsPerSecond throughput;
};

using CandidateSet = std::vector<Candidate>;

/// Builds candidates from profiles using the scheduler-side estimates.
CandidateSet make_candidates(std::span<const ClientProfile> profiles, const TimeBudget& budget);

/// Throws ParameterError if two candidates share an id.
void check_unique_ids(std::span<const Candidate> candidates);

/// Incremental elapsed-time recursion over an upload order.
///
/// Uploads are sequential; a client's update overlaps the uploads of the clients ahead of it,
/// so appending client k costs t_upload(k) + max(0, t_update(k) - theta). Appending is O(1).
class ThetaAccumulator {
 public:
  Seconds theta() const noexcept { return Seconds(update_part_ + upload_part_); }
  Seconds update_part() const noexcept { return Seconds(update_part_); }
  Seconds upload_part() const noexcept { return Seconds(upload_part_); }

  /// Theta after appending `c`, without changing the accumulator.
  Seconds peek(const Candidate& c) const;
  void append(const Candidate& c);

 private:
  double update_part_ = 0.0;
  double upload_part_ = 0.0;
};

/// Theta_0 .. Theta_n for the given order; Theta_0 = 0.
std::vector<Seconds> elapsed_theta(std::span<const Candidate> order);

/// Distribution time of a multicast limited by the slowest selected client;
/// zero for an empty selection.
Seconds dist_time(std::span<const Candidate> selected, Megabits model_size);

/// T_cs + T_d + Theta + T_agg.
Seconds round_total(Seconds dist, Seconds theta, const TimeBudget& budget);

/// True iff `total` fits within t_round (inclusive).
bool feasible(Seconds total, const TimeBudget& budget);

struct Schedule {
  std::vector<ClientId> order;
  std::vector<Seconds> theta;  // theta[0] == 0, size() == order.size() + 1
  Seconds dist_time;
  Seconds total_time;

  std::size_t size() const noexcept { return order.size(); }
};

/// Evaluates a fixed order into a Schedule (no feasibility filtering).
Schedule evaluate_order(std::span<const Candidate> order, const TimeBudget& budget);

/// Greedy client selection.
///
/// Repeatedly takes the remaining candidate with the smallest incremental cost
///   (T_d(S + k) - T_d(S)) + t_upload(k) + max(0, t_update(k) - theta),
/// removes it from the pool, and keeps it only if the resulting round total still fits within
/// t_round (inclusive, the same test as feasible()). A rejected candidate is never
/// reconsidered. Ties go to the lower ClientId.
Schedule greedy_select(std::span<const Candidate> candidates, const TimeBudget& budget);

/// Largest candidate count for which oracle_select is exhaustive over orderings.
inline constexpr std::size_t kOracleExhaustiveLimit = 8;
/// Hard guard on oracle_select input size.
inline constexpr std::size_t kOracleMaxCandidates = 10;

/// Brute-force maximum-cardinality schedule. Subsets are tried in decreasing size; for each
/// subset every ordering is tried when |subset| <= 8, otherwise the t_update-ascending order
/// plus a fixed pseudo-random sample of orderings. Among the feasible orders of the largest
/// size, returns the lexicographically smallest id sequence. Throws ParameterError if more
/// than kOracleMaxCandidates candidates are given.
Schedule oracle_select(std::span<const Candidate> candidates, const TimeBudget& budget);

/// {"order":[...],"theta":[...],"dist_time":x,"total_time":y}
std::string to_json(const Schedule& schedule);

}  // namespace fedcs::selection
