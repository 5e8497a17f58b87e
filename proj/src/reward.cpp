#include "vsrsfol/reward.hpp"

#include <cmath>

namespace vsrsfol {

void RewardParams::validate() const {
  if (!(zeta > 0 && eta > 0 && epsilon > 0 && lambda > 0 && xi > 0 && dt > 0)) {
    throw RewardError("reward parameters must be positive");
  }
}

double g_saf(double v, double d, bool collided, const RewardParams& p) {
  if (!(v >= 0.0) || !(d >= 0.0)) throw RewardError("g_saf: v and d must be nonnegative");
  const double hazard = std::isinf(d) ? 0.0 : p.zeta * v * v / (d + p.epsilon);
  return -(hazard + (collided ? p.eta : 0.0));
}

double g_eff(double v, const RewardParams& p) {
  if (!(v >= 0.0)) throw RewardError("g_eff: v must be nonnegative");
  return p.lambda * v;
}

double g_smooth(double a, const RewardParams& p) {
  const double dv = a * p.dt;
  return -p.xi * dv * dv;
}

double reward_weight(const std::vector<RuleConfidence>& rules) {
  if (rules.empty()) throw RewardError("reward_weight: no rules for this component");
  double sum = 0.0;
  for (const auto& r : rules) sum += r.importance * r.confidence;
  return sum / static_cast<double>(rules.size());
}

RewardWeights reward_weights(const RuleConfidences& conf) {
  return {reward_weight(conf.efficiency), reward_weight(conf.safety)};
}

double final_reward(double gs, double ge, double gm, const RewardWeights& w) noexcept {
  return w.safety * gs + w.efficiency * ge + gm;
}

RewardComponents compute_reward(double v, double d, double a, bool collided, const RewardWeights& w,
                                const RewardParams& p) {
  RewardComponents c;
  c.g_saf = g_saf(v, d, collided, p);
  c.g_eff = g_eff(v, p);
  c.g_smooth = g_smooth(a, p);
  c.w_saf = w.safety;
  c.w_eff = w.efficiency;
  c.r_final = final_reward(c.g_saf, c.g_eff, c.g_smooth, w);
  return c;
}

}  // namespace vsrsfol
