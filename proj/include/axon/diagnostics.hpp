#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <vector>

#include "axon/controller.hpp"
#include "axon/error_system.hpp"
#include "axon/kernels.hpp"
#include "axon/simulator.hpp"

namespace axon {

/// Solves (A + BK)^T P + P (A + BK) = -Q for symmetric P. Throws SolverError
/// when the closed-loop matrix is not Hurwitz or P fails positivity.
Mat2 lyapunov_solve(const Mat2& acl, const Mat2& Q);

/// Discretized backstepping images of a plant state.
struct TransformResult {
    Eigen::VectorXd w;  ///< on the simulator nodes x_i = i l / N
    Eigen::VectorXd z;  ///< on the delay nodes x_m = m dt
    Vec2 X;
    double l = 0.0;
    double delay_dt = 0.0;
};

/// Forward maps
///   w(x) = u(x) - int_x^l k(x,y) u(y) dy - phi(x-l) X,
///   z(x) = v(x) + int_0^x p(x,y) v(y) dy + int_0^l q(x,y) u(y) dy + psi(x-l) X,
/// trapezoid quadrature on the native grids.
TransformResult forward_transform(const Eigen::VectorXd& u_profile,
                                  std::span<const double> v_history, const Vec2& X,
                                  double l, const KernelView& ks,
                                  const SystemMatrices& mats);

struct InverseResult {
    Eigen::VectorXd u;
    Eigen::VectorXd v;
};

/// Solves the discretized forward relations (triangular structure) for (u, v).
InverseResult inverse_transform(const Eigen::VectorXd& w, const Eigen::VectorXd& z,
                                const Vec2& X, double l, const KernelView& ks,
                                const SystemMatrices& mats);

/// Positive weights of V = d1 V1 + V2 + d2 V3 + d3 V4 + d4 V5 together with
/// the decay-rate bookkeeping of the stability lemma.
struct LyapunovWeights {
    double d1 = 0.0, d2 = 0.0, d3 = 0.0, d4 = 0.0;
    double c = 1.0;
    double eps = 0.0;
    double v_bar = 0.0;  ///< (D - 2 eps) / (8 l_bar)
    double alpha = 0.0;  ///< min{d1 D/8, g/16, lmin(Q)/(2 lmin(P)), c}
};

/// Sampled upper estimates of the kernel-boundedness constants, with the
/// sampling resolution recorded.
struct LConstants {
    double L1 = 0.0, L2 = 0.0, L3 = 0.0, L4 = 0.0, L5 = 0.0, L6 = 0.0, L7 = 0.0;
    int l_samples = 0;
    int quad_nodes = 0;
};

LConstants estimate_L_constants(const std::vector<std::shared_ptr<const KernelSet>>& sets,
                                const SystemMatrices& mats, int quad_nodes = 256);

/// Smallest weights satisfying the four displayed inequalities, d4 at its
/// upper bound. Throws ValidationError when the admissibility inequality
/// D/(4 l_bar) >= a fails or g = 0 makes the d2/d3 bounds degenerate.
LyapunovWeights select_weights(const PhysicalParams& p, const LConstants& L,
                               const Mat2& P, double lambda_min_Q = 1.0,
                               double c = 1.0, double eps = -1.0,
                               double d1_floor = 1.0);

/// Norm report of a single state in target coordinates.
struct NormReport {
    double u_L2 = 0.0, u_H1 = 0.0, v_H1 = 0.0;
    double X_sq = 0.0;
    double Z = 0.0;
    double V1 = 0.0, V2 = 0.0, V3 = 0.0, V4 = 0.0, V5 = 0.0;
    double V = 0.0;
    double Pi = 0.0;  ///< ||w||_H1^2 + ||z||_H1^2 + |X|^2
};

/// Constants of the norm equivalence delta_lo V <= Pi <= delta_hi V.
struct NormEquivalence {
    double M1 = 0.0, M2 = 0.0, M3 = 0.0, M4 = 0.0;
    double Sigma1 = 0.0, Sigma2 = 0.0, Sigma3 = 0.0;
    double delta_lo = 0.0, delta_hi = 0.0;
};

NormEquivalence norm_equivalence_constants(const PhysicalParams& p,
                                           const LyapunovWeights& w, const Mat2& P,
                                           double k_n);

/// Max-norm residuals of the target system along consecutive frames.
struct TargetResiduals {
    double w_pde = 0.0;      ///< w dynamics, interior nodes
    double z_transport = 0.0;
    double z_end = 0.0;      ///< |z(D_e, t)|
    double varpi_l = 0.0;    ///< |varpi(l, t)|
    double varpi_x0 = 0.0;   ///< |varpi_x(0, t)|
    /// |varpi_x(0, t) + u(0, t)/l_c|: the boundary residual with the
    /// transform's structural k(0,0) u(0) term added back. varpi_x0 itself
    /// floors at |u(0,t)|/l_c no matter how fine the grids are; this
    /// compensated form isolates the discretization part.
    double varpi_x0_compensated = 0.0;
    int frames_used = 0;
};

/// Exponential-decay fit of positive samples past the transient window.
struct DecayFit {
    double rate = 0.0;    ///< fitted decay rate (positive = decaying)
    double offset = 0.0;  ///< fitted log-value intercept at t = 0
    double r2 = 0.0;
    bool decaying = false;
};

DecayFit fit_decay(std::span<const double> ts, std::span<const double> values,
                   double transient_frac = 0.1);

struct DiagnosticsConfig {
    double c = 1.0;
    double eps = -1.0;       ///< < 0 picks the default D/4
    double d1_floor = 1.0;
    int l_samples = 5;       ///< snapshot count for the L estimates
    int quad_nodes = 256;
};

/// Bundles the precomputed Lyapunov data for a scenario and evaluates the
/// per-state diagnostics. Pure analysis over immutable inputs.
class Diagnostics {
public:
    using Config = DiagnosticsConfig;

    Diagnostics(const PhysicalParams& p, const SteadyState& ss,
                const SystemMatrices& mats, const GainVector& K,
                std::shared_ptr<const KernelCache> cache,
                Config cfg = DiagnosticsConfig());

    NormReport evaluate(const Eigen::VectorXd& u_profile,
                        std::span<const double> v_history, const Vec2& X,
                        double l) const;
    NormReport evaluate(const Frame& f) const;

    TransformResult forward(const Frame& f) const;

    /// Per-row hook for the simulator: {V, V1..V5}.
    DiagHook hook() const;

    TargetResiduals residuals(std::span<const Frame> frames) const;

    const LyapunovWeights& weights() const { return weights_; }
    const LConstants& l_constants() const { return lconsts_; }
    const Mat2& P() const { return P_; }
    const NormEquivalence& equivalence() const { return equiv_; }
    double k_n() const { return k_n_; }

private:
    PhysicalParams p_;
    SteadyState ss_;
    SystemMatrices mats_;
    std::shared_ptr<const KernelCache> cache_;
    Config cfg_;
    Mat2 P_ = Mat2::Zero();
    LConstants lconsts_;
    LyapunovWeights weights_;
    NormEquivalence equiv_;
    double k_n_ = 0.0;
};

}  // namespace axon
