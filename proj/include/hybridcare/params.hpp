#pragma once

#include <string>

namespace hybridcare {

/// Primitives of one patient type.
///
/// Scores are clinical acuity (higher is worse, 0 is recovered). Remote and
/// on-site scores follow Brownian motions with negative drift; travel adds an
/// expected deterioration of theta_T per unit of travel time.
struct PatientParams {
  double lambda = 1.0;   ///< arrival rate (patients / time); 0 switches the type off
  double x = 1.0;        ///< initial health score at admission
  double T = 0.0;        ///< travel time to the hospital
  double theta_R = 0.2;  ///< remote recovery drift
  double theta_H = 0.5;  ///< on-site recovery drift
  double theta_T = 0.1;  ///< expected deterioration rate while travelling
  double sigma_R = 1.0;  ///< remote diffusion coefficient
  double sigma_H = 1.0;  ///< on-site diffusion coefficient
  double h_R = 1.0;      ///< remote holding cost rate
  double h_H = 1.0;      ///< on-site holding cost rate
  double h_T = 1.0;      ///< travel cost rate
  double S_bar = 15.0;   ///< most severe expected score allowed outside the hospital
};

/// Throws ValidationError naming the first offending field.
void validate(const PatientParams& p);

/// Copy of `p` with both holding-cost rates raised by `surcharge`.
PatientParams with_cost_surcharge(const PatientParams& p, double surcharge);

/// Largest admissible call-in threshold, max(0, S_bar - x - T*theta_T).
double max_threshold(const PatientParams& p);

}  // namespace hybridcare
