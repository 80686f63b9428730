#ifndef FLIPCERT_ENSEMBLE_CERT_HPP
#define FLIPCERT_ENSEMBLE_CERT_HPP

#include <cstdint>
#include <vector>

#include "flipcert/core.hpp"

namespace flipcert {

/// Black-box certified radius of a partition-aggregation ensemble:
///   floor((n_{c*} - max_{c' != c*}(n_{c'} + 1[c' < c*])) / 2),
/// derived from the worst-case assumption that one label flip can
/// change any base classifier's vote.
FlipCount ssdpa_radius(const VoteConfig& votes);

/// One selectable move for a partition: pay `cost` label flips to gain
/// `reduction` in the vote gap between the target and the current
/// majority class (0 = keep the vote, 1 = move a non-majority vote to
/// the target or a majority vote elsewhere, 2 = move a majority vote to
/// the target).
struct MckpOption {
  FlipCount cost;
  int reduction = 0;
};

/// Multiple-choice knapsack built from a flip-cost matrix for one target
/// class: exactly one option per partition, total reduction must reach
/// `threshold` = vote gap + 1 when the majority class has the smaller
/// index. Unreachable (infinite-cost) moves are omitted; every group
/// keeps at least the zero-cost "stay" option.
struct MckpInstance {
  static constexpr int kMaxReduction = 2;

  std::vector<std::vector<MckpOption>> groups;
  int threshold = 0;
};

MckpInstance build_mckp(const FlipCostMatrix& rho, const VoteConfig& votes,
                        int target);

/// Minimum total label flips that make `target` overtake the current
/// majority class in votes (the pairwise relaxation of making it the
/// overall majority). Solved by a dynamic program over capped total
/// reduction, O(Np^2); infinity when infeasible.
FlipCount mckp_p2(const FlipCostMatrix& rho, const VoteConfig& votes,
                  int target);

struct EnsembleCertificate {
  int predicted = 0;
  FlipCount radius;
  BoundKind kind = BoundKind::exact;
};

/// Ensemble certified radius: min over target classes of mckp_p2, minus
/// one. The pairwise relaxation preserves this minimum, so the value is
/// exact for exact flip costs; lower-bound costs give a sound (lower)
/// certificate and upper-bound costs an upper bound, by monotonicity.
EnsembleCertificate ensemble_radius(const FlipCostMatrix& rho,
                                    const VoteConfig& votes);

/// Certified radius of a label-smoothed classifier against a targeted
/// switch, given a bound p on the switching probability and the label
/// noise rate q:  log(4 p (1-p)) / (2 (1-2q) log(q / (1-q))).
double rs_targeted_radius(double p, double q_noise);

/// Integer number of certified flips: floor of the radius when
/// positive, else zero.
std::uint64_t rs_certified_flips(double p, double q_noise);

}  // namespace flipcert

#endif  // FLIPCERT_ENSEMBLE_CERT_HPP
