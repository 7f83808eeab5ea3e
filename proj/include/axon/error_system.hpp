#pragma once

#include <Eigen/Dense>

#include "axon/params.hpp"
#include "axon/steady_state.hpp"

namespace axon {

using Vec2 = Eigen::Vector2d;
using RowVec2 = Eigen::RowVector2d;
using Mat2 = Eigen::Matrix2d;

/// ODE state of the reference-error system, X = [z1, z2]^T.
struct ErrorState {
    double z1 = 0.0;  ///< cone-concentration error [uM]
    double z2 = 0.0;  ///< length error [um]

    Vec2 vec() const { return Vec2(z1, z2); }
    static ErrorState from_vec(const Vec2& x) { return {x(0), x(1)}; }
};

/**
 * Linearized reference-error system data:
 *   A = [[a_tilde, 0], [r_g, 0]],  B = [-beta, 0]^T,
 *   C = [1, -(a - g l_c) c_inf / D]^T,
 * with a_tilde = (a - r_g c_inf)/l_c - g - r_tilde_g, beta = D/l_c,
 * kappa = r_g/l_c.
 */
struct SystemMatrices {
    Mat2 A = Mat2::Zero();
    Vec2 B = Vec2::Zero();
    Vec2 C = Vec2::Zero();
    double a_tilde = 0.0;
    double beta = 0.0;
    double kappa = 0.0;
    double D = 0.0;
    double a = 0.0;
    double g = 0.0;
    double r_g = 0.0;
    double l_c = 0.0;
};

SystemMatrices system_matrices(const PhysicalParams& p);

/// Reference-error coordinates of a plant state. The concentration profile is
/// given on uniform nodes spanning [0, l].
struct ErrorCoordinates {
    Eigen::VectorXd u;  ///< c(x) - c_eq(x) on the same nodes
    ErrorState X;
    double U_delayed = 0.0;  ///< -(q_s(t - D_e) - q_s*)
};

ErrorCoordinates error_coordinates(const Eigen::VectorXd& c_profile, double c_c, double l,
                                   double q_s_delayed, const SteadyState& ss);

/// Algebraic inverse of error_coordinates; reconstructs the plant state.
struct PlantCoordinates {
    Eigen::VectorXd c;
    double c_c = 0.0;
    double l = 0.0;
    double q_s_delayed = 0.0;
};

PlantCoordinates plant_coordinates(const Eigen::VectorXd& u_profile, const ErrorState& X,
                                   double U_delayed, const SteadyState& ss);

/// Boundary nonlinearity h~(z2) = c_inf (1 - K+ e^{l+ z2} - K- e^{l- z2}).
double h_tilde(double z2, const SteadyState& ss);

/// h_bar(X) = (z1 + h~(z2)) - C^T X.
double h_bar(const ErrorState& X, const SteadyState& ss, const Vec2& C);

/// Equivalent expanded form
/// c_inf K+ (1 + l+ z2 - e^{l+ z2}) + c_inf K- (1 + l- z2 - e^{l- z2});
/// agrees with h_bar because (a - g l_c)/D = l+ K+ + l- K-.
double h_bar_expanded(const ErrorState& X, const SteadyState& ss);

/// ODE nonlinearity f(X) = -kappa (e1 X)^2 e1.
Vec2 f_nonlinear(const ErrorState& X, double kappa);

/// Quadratic bound constant for h_bar: |h_bar| <= 2 k_n X^T X locally.
double k_n_constant(const SteadyState& ss);

/// Quartic bound constant for h_bar'(X)^2 <= h_n (X^T X)^2.
double h_n_constant(const SteadyState& ss, double r_g);

}  // namespace axon
