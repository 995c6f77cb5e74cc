#include "fedcs/selection.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>
#include <set>

#include "fedcs/error.hpp"
#include "fedcs/random.hpp"
#include "json.hpp"

namespace fedcs::selection {

CandidateSet make_candidates(std::span<const ClientProfile> profiles, const TimeBudget& budget) {
  CandidateSet out;
  out.reserve(profiles.size());
  for (const auto& p : profiles) {
    out.push_back({p.id, resources::estimated_update_time(p, budget),
                   resources::estimated_upload_time(p, budget), p.mean_throughput});
  }
  return out;
}

void check_unique_ids(std::span<const Candidate> candidates) {
  std::set<ClientId> seen;
  for (const auto& c : candidates) {
    if (!seen.insert(c.id).second) {
      throw ParameterError("duplicate client id " + std::to_string(c.id.value) + " in candidates");
    }
  }
}

Seconds ThetaAccumulator::peek(const Candidate& c) const {
  const double theta = update_part_ + upload_part_;
  const double wait = std::max(0.0, c.t_update.value() - theta);
  return Seconds((update_part_ + wait) + (upload_part_ + c.t_upload.value()));
}

void ThetaAccumulator::append(const Candidate& c) {
  const double theta = update_part_ + upload_part_;
  update_part_ += std::max(0.0, c.t_update.value() - theta);
  upload_part_ += c.t_upload.value();
}

std::vector<Seconds> elapsed_theta(std::span<const Candidate> order) {
  check_unique_ids(order);
  std::vector<Seconds> theta;
  theta.reserve(order.size() + 1);
  ThetaAccumulator acc;
  theta.push_back(acc.theta());
  for (const auto& c : order) {
    acc.append(c);
    theta.push_back(acc.theta());
  }
  return theta;
}

Seconds dist_time(std::span<const Candidate> selected, Megabits model_size) {
  if (selected.empty()) return Seconds(0.0);
  const auto slowest = std::min_element(
      selected.begin(), selected.end(),
      [](const Candidate& a, const Candidate& b) { return a.throughput < b.throughput; });
  return model_size / slowest->throughput;
}

Seconds round_total(Seconds dist, Seconds theta, const TimeBudget& budget) {
  return Seconds(budget.t_cs.value() + dist.value() + theta.value() + budget.t_agg.value());
}

bool feasible(Seconds total, const TimeBudget& budget) { return total <= budget.t_round; }

Schedule evaluate_order(std::span<const Candidate> order, const TimeBudget& budget) {
  Schedule s;
  s.theta = elapsed_theta(order);
  s.order.reserve(order.size());
  for (const auto& c : order) s.order.push_back(c.id);
  s.dist_time = dist_time(order, budget.model_size);
  s.total_time = round_total(s.dist_time, s.theta.back(), budget);
  return s;
}

Schedule greedy_select(std::span<const Candidate> candidates, const TimeBudget& budget) {
  check_unique_ids(candidates);

  std::vector<const Candidate*> pool;
  pool.reserve(candidates.size());
  for (const auto& c : candidates) pool.push_back(&c);

  Schedule s;
  s.theta.push_back(Seconds(0.0));
  ThetaAccumulator acc;
  double min_throughput = std::numeric_limits<double>::infinity();
  double dist = 0.0;
  const double model = budget.model_size.value();

  auto dist_with = [&](const Candidate& c) {
    return model / std::min(min_throughput, c.throughput.value());
  };

  while (!pool.empty()) {
    auto best = pool.end();
    double best_cost = std::numeric_limits<double>::infinity();
    for (auto it = pool.begin(); it != pool.end(); ++it) {
      const Candidate& c = **it;
      const double cost = (dist_with(c) - dist) + c.t_upload.value() +
                          std::max(0.0, c.t_update.value() - acc.theta().value());
      if (best == pool.end() || cost < best_cost ||
          (cost == best_cost && c.id < (*best)->id)) {
        best = it;
        best_cost = cost;
      }
    }
    const Candidate& x = **best;
    pool.erase(best);

    const Seconds next_theta = acc.peek(x);
    const double next_dist = dist_with(x);
    const double t = budget.t_cs.value() + next_dist + next_theta.value() + budget.t_agg.value();
    if (t <= budget.t_round.value()) {
      acc.append(x);
      min_throughput = std::min(min_throughput, x.throughput.value());
      dist = next_dist;
      s.order.push_back(x.id);
      s.theta.push_back(acc.theta());
    }
  }

  s.dist_time = Seconds(dist);
  s.total_time = round_total(s.dist_time, acc.theta(), budget);
  return s;
}

namespace {

// Round total for an order, recomputed from scratch.
double order_total(std::span<const Candidate* const> order, const TimeBudget& budget) {
  ThetaAccumulator acc;
  double min_thr = std::numeric_limits<double>::infinity();
  for (const Candidate* c : order) {
    acc.append(*c);
    min_thr = std::min(min_thr, c->throughput.value());
  }
  const double dist = order.empty() ? 0.0 : budget.model_size.value() / min_thr;
  return budget.t_cs.value() + dist + acc.theta().value() + budget.t_agg.value();
}

bool lex_less(std::span<const Candidate* const> a, std::span<const Candidate* const> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                      [](const Candidate* x, const Candidate* y) {
                                        return x->id < y->id;
                                      });
}

// Lexicographically smallest feasible ordering of `subset` (ids ascending on entry), or empty
// if none was found among the orderings this subset size allows.
std::vector<const Candidate*> best_order(std::vector<const Candidate*> subset,
                                         const TimeBudget& budget) {
  const double limit = budget.t_round.value();
  if (subset.size() <= kOracleExhaustiveLimit) {
    // next_permutation visits orders in lexicographic id order, so the first hit is the answer.
    do {
      if (order_total(subset, budget) <= limit) return subset;
    } while (std::next_permutation(subset.begin(), subset.end(),
                                   [](const Candidate* x, const Candidate* y) {
                                     return x->id < y->id;
                                   }));
    return {};
  }

  std::vector<const Candidate*> found;
  auto consider = [&](const std::vector<const Candidate*>& order) {
    if (order_total(order, budget) <= limit && (found.empty() || lex_less(order, found))) {
      found = order;
    }
  };
  auto by_update = subset;
  std::stable_sort(by_update.begin(), by_update.end(), [](const Candidate* x, const Candidate* y) {
    return x->t_update < y->t_update;
  });
  consider(by_update);
  RngStream rng(0x0ac1e, "oracle-orderings");
  constexpr int kSampledOrderings = 2000;
  auto sample = subset;
  for (int i = 0; i < kSampledOrderings; ++i) {
    rng.shuffle(sample);
    consider(sample);
  }
  return found;
}

}  // namespace

Schedule oracle_select(std::span<const Candidate> candidates, const TimeBudget& budget) {
  if (candidates.size() > kOracleMaxCandidates) {
    throw ParameterError("oracle_select supports at most " +
                         std::to_string(kOracleMaxCandidates) + " candidates");
  }
  check_unique_ids(candidates);

  std::vector<const Candidate*> sorted;
  for (const auto& c : candidates) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(),
            [](const Candidate* x, const Candidate* y) { return x->id < y->id; });

  const std::size_t n = sorted.size();
  for (std::size_t size = n; size > 0; --size) {
    std::vector<const Candidate*> best;
    // Every n-bit mask with `size` bits set.
    for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != size) continue;
      std::vector<const Candidate*> subset;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1U << i)) subset.push_back(sorted[i]);
      }
      auto order = best_order(std::move(subset), budget);
      if (!order.empty() && (best.empty() || lex_less(order, best))) best = std::move(order);
    }
    if (!best.empty()) {
      std::vector<Candidate> chosen;
      for (const Candidate* c : best) chosen.push_back(*c);
      return evaluate_order(chosen, budget);
    }
  }
  return evaluate_order(std::span<const Candidate>{}, budget);
}

std::string to_json(const Schedule& schedule) {
  nlohmann::json j;
  j["order"] = nlohmann::json::array();
  for (const auto& id : schedule.order) j["order"].push_back(id.value);
  j["theta"] = nlohmann::json::array();
  for (const auto& t : schedule.theta) j["theta"].push_back(t.value());
  j["dist_time"] = schedule.dist_time.value();
  j["total_time"] = schedule.total_time.value();
  return j.dump();
}

}  // namespace fedcs::selection
