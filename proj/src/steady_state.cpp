#include "axon/steady_state.hpp"

#include <cmath>

namespace axon {

double SteadyState::c_eq(double x) const {
    return c_inf * (K_plus * std::exp(lambda_plus * (x - l_s)) +
                    K_minus * std::exp(lambda_minus * (x - l_s)));
}

double SteadyState::c_eq_prime(double x) const {
    return c_inf * (K_plus * lambda_plus * std::exp(lambda_plus * (x - l_s)) +
                    K_minus * lambda_minus * std::exp(lambda_minus * (x - l_s)));
}

double SteadyState::c_eq_second(double x) const {
    return c_inf *
           (K_plus * lambda_plus * lambda_plus * std::exp(lambda_plus * (x - l_s)) +
            K_minus * lambda_minus * lambda_minus * std::exp(lambda_minus * (x - l_s)));
}

SteadyState compute_steady_state(const PhysicalParams& p) {
    p.validate();

    SteadyState ss;
    ss.c_inf = p.c_inf;
    ss.l_s = p.l_s;

    const double disc = p.a * p.a + 4.0 * p.D * p.g;
    const double root = std::sqrt(disc);
    ss.lambda_plus = (p.a + root) / (2.0 * p.D);
    ss.lambda_minus = (p.a - root) / (2.0 * p.D);
    if (root > 0.0) {
        const double shift = (p.a - 2.0 * p.g * p.l_c) / (2.0 * root);
        ss.K_plus = 0.5 + shift;
        ss.K_minus = 0.5 - shift;
    } else {
        // a = g = 0: both roots vanish and the weight split is the limit 1/2.
        ss.K_plus = 0.5;
        ss.K_minus = 0.5;
    }

    ss.q_s_star = -p.c_inf * (ss.K_plus * ss.lambda_plus * std::exp(-ss.lambda_plus * p.l_s) +
                              ss.K_minus * ss.lambda_minus * std::exp(-ss.lambda_minus * p.l_s));
    return ss;
}

}  // namespace axon
