#include "axon/error_system.hpp"

#include <cmath>

#include "axon/errors.hpp"

namespace axon {

SystemMatrices system_matrices(const PhysicalParams& p) {
    p.validate();
    SystemMatrices m;
    m.a_tilde = (p.a - p.r_g * p.c_inf) / p.l_c - p.g - p.r_tilde_g;
    m.beta = p.D / p.l_c;
    m.kappa = p.r_g / p.l_c;
    m.A << m.a_tilde, 0.0, p.r_g, 0.0;
    m.B << -m.beta, 0.0;
    m.C << 1.0, -(p.a - p.g * p.l_c) * p.c_inf / p.D;
    m.D = p.D;
    m.a = p.a;
    m.g = p.g;
    m.r_g = p.r_g;
    m.l_c = p.l_c;
    return m;
}

ErrorCoordinates error_coordinates(const Eigen::VectorXd& c_profile, double c_c, double l,
                                   double q_s_delayed, const SteadyState& ss) {
    if (l <= 0.0) throw DomainError("error_coordinates: l must be positive");
    ErrorCoordinates ec;
    const Eigen::Index n = c_profile.size();
    ec.u.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = (n > 1) ? l * double(i) / double(n - 1) : 0.0;
        ec.u(i) = c_profile(i) - ss.c_eq(x);
    }
    ec.X.z1 = c_c - ss.c_inf;
    ec.X.z2 = l - ss.l_s;
    ec.U_delayed = -(q_s_delayed - ss.q_s_star);
    return ec;
}

PlantCoordinates plant_coordinates(const Eigen::VectorXd& u_profile, const ErrorState& X,
                                   double U_delayed, const SteadyState& ss) {
    PlantCoordinates pc;
    pc.l = ss.l_s + X.z2;
    if (pc.l <= 0.0) throw DomainError("plant_coordinates: reconstructed l not positive");
    const Eigen::Index n = u_profile.size();
    pc.c.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = (n > 1) ? pc.l * double(i) / double(n - 1) : 0.0;
        pc.c(i) = u_profile(i) + ss.c_eq(x);
    }
    pc.c_c = X.z1 + ss.c_inf;
    pc.q_s_delayed = ss.q_s_star - U_delayed;
    return pc;
}

double h_tilde(double z2, const SteadyState& ss) {
    return ss.c_inf * (1.0 - ss.K_plus * std::exp(ss.lambda_plus * z2) -
                       ss.K_minus * std::exp(ss.lambda_minus * z2));
}

double h_bar(const ErrorState& X, const SteadyState& ss, const Vec2& C) {
    return (X.z1 + h_tilde(X.z2, ss)) - C.dot(X.vec());
}

double h_bar_expanded(const ErrorState& X, const SteadyState& ss) {
    const double z2 = X.z2;
    return ss.c_inf * ss.K_plus *
               (1.0 + ss.lambda_plus * z2 - std::exp(ss.lambda_plus * z2)) +
           ss.c_inf * ss.K_minus *
               (1.0 + ss.lambda_minus * z2 - std::exp(ss.lambda_minus * z2));
}

Vec2 f_nonlinear(const ErrorState& X, double kappa) {
    return Vec2(-kappa * X.z1 * X.z1, 0.0);
}

double k_n_constant(const SteadyState& ss) {
    const double kp = ss.c_inf * std::abs(ss.K_plus) * ss.lambda_plus * ss.lambda_plus;
    const double km = ss.c_inf * std::abs(ss.K_minus) * ss.lambda_minus * ss.lambda_minus;
    return std::max(kp, km);
}

double h_n_constant(const SteadyState& ss, double r_g) {
    const double hp = 2.0 * ss.c_inf * r_g * r_g * ss.K_plus * ss.K_plus *
                      std::pow(ss.lambda_plus, 4);
    const double hm = 2.0 * ss.c_inf * r_g * r_g * ss.K_minus * ss.K_minus *
                      std::pow(ss.lambda_minus, 4);
    return std::max(hp, hm);
}

}  // namespace axon
