#pragma once

#include <complex>
#include <memory>
#include <span>

#include "axon/kernels.hpp"
#include "axon/simulator.hpp"

namespace axon {

/// Feedback gain row K = [k1, k2] applied as B K.
struct GainVector {
    double k1 = 0.0;
    double k2 = 0.0;
    RowVec2 row() const { return RowVec2(k1, k2); }
};

/// Defaults satisfying the gain inequalities (k1 > a_tilde/beta, k2 > 0)
/// for every admissible parameter set.
GainVector default_gains(const SystemMatrices& m);

struct HurwitzReport {
    bool hurwitz = false;            ///< all eigenvalues of A + BK in the open LHP
    std::complex<double> ev1, ev2;   ///< eigenvalues of A + BK
    bool closed_form = false;        ///< Routh test on s^2 - (a~ - b k1)s + b k2 r_g
};

HurwitzReport hurwitz_check(const SystemMatrices& m, const GainVector& K);

/**
 * Delay-compensating feedback
 *   U(t) = -int_{t-D_e}^{t} p(D_e, s+D_e-t) U(s) ds
 *          -int_0^{l} q(D_e, y) u(y, t) dy - psi(D_e - l) X(t),
 * with both integrals by composite trapezoid on the native grids. `past`
 * holds U over [t - D_e, t - dt] (oldest first, one value per controller
 * step); the trapezoid node at s = t is U(t) itself and is solved for
 * implicitly. psi(D_e - l) is read from the kernel table at x = D_e.
 */
double control_law(const Eigen::VectorXd& u_profile, const Vec2& X, double l,
                   std::span<const double> past, double dt, const KernelView& ks,
                   const SystemMatrices& mats);

/// The D_e = 0 law (-int q(0,y) u dy - psi(-l) X) from a zero-delay kernel
/// set; the comparison baseline when the plant itself still has delay.
double uncompensated_control(const Eigen::VectorXd& u_profile, const Vec2& X, double l,
                             const KernelView& ks_de0, const SystemMatrices& mats);

/// Closures binding the laws to simulator states.
ControlFn make_compensated_controller(std::shared_ptr<const KernelCache> cache,
                                      const SteadyState& ss, const SystemMatrices& mats);
ControlFn make_uncompensated_controller(std::shared_ptr<const KernelCache> cache_de0,
                                        const SteadyState& ss, const SystemMatrices& mats);

/// Reference-error profile of a state on its own grid nodes.
Eigen::VectorXd error_profile(const SimState& s, const SteadyState& ss);

}  // namespace axon
