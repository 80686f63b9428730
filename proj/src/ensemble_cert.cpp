#include "flipcert/ensemble_cert.hpp"

#include <algorithm>
#include <cmath>

namespace flipcert {

FlipCount ssdpa_radius(const VoteConfig& votes) {
  const auto& counts = votes.counts();
  const int c_star = votes.majority();
  int best_rival = 0;
  bool have_rival = false;
  for (int c = 0; c < votes.num_classes(); ++c) {
    if (c == c_star) continue;
    const int adjusted = counts[c] + (c < c_star ? 1 : 0);
    if (!have_rival || adjusted > best_rival) {
      best_rival = adjusted;
      have_rival = true;
    }
  }
  // The adjusted rival count never exceeds the winner's count, so the
  // gap is non-negative.
  const int gap = counts[c_star] - best_rival;
  return FlipCount(static_cast<std::uint64_t>(gap < 0 ? 0 : gap / 2));
}

MckpInstance build_mckp(const FlipCostMatrix& rho, const VoteConfig& votes,
                        int target) {
  if (target < 0 || target >= votes.num_classes())
    throw ValidationError("target class out of range");
  rho.require_zero_at_votes(votes);
  const int c_star = votes.majority();
  if (target == c_star)
    throw ValidationError("target class equals the current majority");

  MckpInstance instance;
  const int gap = votes.counts()[c_star] - votes.counts()[target];
  instance.threshold = gap + (c_star < target ? 1 : 0);
  instance.groups.resize(votes.num_partitions());

  for (int i = 0; i < votes.num_partitions(); ++i) {
    auto& group = instance.groups[i];
    group.push_back(MckpOption{FlipCount(0), 0});  // keep the vote
    const int vote = votes.votes()[i];
    if (vote == target) continue;  // nothing to gain from this partition

    if (vote == c_star) {
      if (!rho.at(i, target).is_inf())
        group.push_back(MckpOption{rho.at(i, target), 2});
      // Cheapest escape from the majority vote; worth one gap unit even
      // when it lands on a third class.
      int c_min = -1;
      for (int c = 0; c < votes.num_classes(); ++c) {
        if (c == c_star) continue;
        if (c_min < 0 || rho.at(i, c) < rho.at(i, c_min)) c_min = c;
      }
      if (c_min != target && !rho.at(i, c_min).is_inf())
        group.push_back(MckpOption{rho.at(i, c_min), 1});
    } else {
      if (!rho.at(i, target).is_inf())
        group.push_back(MckpOption{rho.at(i, target), 1});
    }
  }
  return instance;
}

FlipCount mckp_p2(const FlipCostMatrix& rho, const VoteConfig& votes,
                  int target) {
  const MckpInstance instance = build_mckp(rho, votes, target);
  const int capacity = instance.threshold;

  // dp[s]: minimum cost achieving total reduction >= s (s capped at the
  // threshold), picking exactly one option from each processed group.
  std::vector<FlipCount> dp(capacity + 1, FlipCount::inf());
  dp[0] = FlipCount(0);
  std::vector<FlipCount> next(capacity + 1);
  for (const auto& group : instance.groups) {
    std::fill(next.begin(), next.end(), FlipCount::inf());
    for (int s = 0; s <= capacity; ++s) {
      if (dp[s].is_inf()) continue;
      for (const MckpOption& option : group) {
        const int reached = std::min(capacity, s + option.reduction);
        next[reached] = std::min(next[reached], dp[s] + option.cost);
      }
    }
    dp.swap(next);
  }
  return dp[capacity];
}

EnsembleCertificate ensemble_radius(const FlipCostMatrix& rho,
                                    const VoteConfig& votes) {
  const int c_star = votes.majority();
  FlipCount best = FlipCount::inf();
  for (int c = 0; c < votes.num_classes(); ++c) {
    if (c == c_star) continue;
    best = std::min(best, mckp_p2(rho, votes, c));
  }
  if (best == FlipCount(0))
    throw ValidationError(
        "inconsistent inputs: a target class already overtakes the majority "
        "at zero cost");
  return EnsembleCertificate{c_star, best.radius_from_min_flips(), rho.kind()};
}

double rs_targeted_radius(double p, double q_noise) {
  if (!(p > 0.0) || !(p < 1.0))
    throw ValidationError("switching-probability bound must lie in (0, 1)");
  if (!(q_noise > 0.0) || !(q_noise < 0.5))
    throw ValidationError("label-noise rate must lie in (0, 0.5)");
  return std::log(4.0 * p * (1.0 - p)) /
         (2.0 * (1.0 - 2.0 * q_noise) * std::log(q_noise / (1.0 - q_noise)));
}

std::uint64_t rs_certified_flips(double p, double q_noise) {
  const double radius = rs_targeted_radius(p, q_noise);
  if (!(radius > 0.0)) return 0;
  return static_cast<std::uint64_t>(std::floor(radius));
}

}  // namespace flipcert
