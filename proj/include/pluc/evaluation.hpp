#pragma once

#include "pluc/criteria.hpp"

namespace pluc {

// Targeted fold-3 estimates with influence-curve variances and one-sided
// 95% bounds for a fixed candidate policy.
struct PolicyAssessment {
  double s_star = 0.0;   // targeted constraint estimate
  double v_star = 0.0;   // targeted value estimate
  double var_s = 0.0;
  double var_v = 0.0;
  double s_upper = 0.0;  // s_star + q95 sqrt(var_s / m)
  double v_lower = 0.0;  // v_star - q95 sqrt(var_v / m)
  double eps_mu_star = 0.0;
  double eps_nu_star = 0.0;
};

// Standard normal quantile, rational approximation plus one Newton step
// against Phi computed from erfc; accurate well below 1e-8.
double normal_quantile(double p);

PolicyAssessment assess_policy(const PolicyFn& policy, const NuisanceModel& nuis,
                               const Dataset& data, const std::vector<int>& fold,
                               double alpha);

PolicyAssessment assess_policy(const SmoothPolicy& policy, const NuisanceModel& nuis,
                               const Dataset& data, const std::vector<int>& fold,
                               double alpha);

PolicyAssessment assess_policy(const ThresholdPolicy& policy, const NuisanceModel& nuis,
                               const Dataset& data, const std::vector<int>& fold,
                               double alpha);

std::string assessment_csv_header();
std::string assessment_csv_row(double lambda, double beta, const PolicyAssessment& a);

}  // namespace pluc
