#pragma once

#include "axon/params.hpp"

namespace axon {

/**
 * Equilibrium of the plant for the desired axon length l_s.
 *
 * The profile is a two-mode exponential
 *   c_eq(x) = c_inf * (K_plus * e^{lambda_plus (x - l_s)}
 *                    + K_minus * e^{lambda_minus (x - l_s)}),
 * globally defined, so it remains evaluable when the simulation visits
 * l(t) != l_s.
 */
struct SteadyState {
    double lambda_plus = 0.0;   ///< spatial eigenvalue [1/um]
    double lambda_minus = 0.0;  ///< spatial eigenvalue [1/um]
    double K_plus = 0.0;        ///< mode weight, K_plus + K_minus = 1
    double K_minus = 0.0;       ///< mode weight
    double q_s_star = 0.0;      ///< equilibrium soma flux [uM/um]
    double c_inf = 0.0;
    double l_s = 0.0;

    /// Equilibrium concentration at x >= 0.
    double c_eq(double x) const;
    /// First spatial derivative of the equilibrium profile.
    double c_eq_prime(double x) const;
    /// Second spatial derivative of the equilibrium profile.
    double c_eq_second(double x) const;
};

/// Solves the equilibrium problem for the desired length. Validates the
/// parameter set first; the degenerate a = g = 0 case (double root at zero)
/// is resolved by its limit K_plus = K_minus = 1/2.
SteadyState compute_steady_state(const PhysicalParams& p);

}  // namespace axon
