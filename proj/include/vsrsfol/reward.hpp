#pragma once

// Base reward terms and the rule-confidence weighted total.

#include <stdexcept>
#include <vector>

#include "vsrsfol/sfol.hpp"

namespace vsrsfol {

class RewardError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RewardParams {
  double zeta = 0.5;     // speed hazard weight
  double eta = 100.0;    // collision penalty
  double epsilon = 0.1;  // gap offset, m
  double lambda = 1.0;   // speed reward weight
  double xi = 0.1;       // deceleration penalty weight
  double dt = 0.1;       // s

  void validate() const;
};

// -(zeta v^2 / (d + eps) + eta [collided]). d may be +inf (nobody around).
double g_saf(double v, double d, bool collided, const RewardParams& p = {});
double g_eff(double v, const RewardParams& p = {});
double g_smooth(double a, const RewardParams& p = {});

struct RewardWeights {
  double efficiency = 0.0;
  double safety = 0.0;
};

// Mean of importance * confidence over each tag's rules.
double reward_weight(const std::vector<RuleConfidence>& rules);
RewardWeights reward_weights(const RuleConfidences& conf);

struct RewardComponents {
  double g_saf = 0.0;
  double g_eff = 0.0;
  double g_smooth = 0.0;
  double w_saf = 0.0;
  double w_eff = 0.0;
  double r_final = 0.0;
};

double final_reward(double g_saf, double g_eff, double g_smooth, const RewardWeights& w) noexcept;

RewardComponents compute_reward(double v, double d, double a, bool collided, const RewardWeights& w,
                                const RewardParams& p = {});

}  // namespace vsrsfol
