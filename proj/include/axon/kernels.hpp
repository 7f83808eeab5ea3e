#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <mutex>

#include "axon/error_system.hpp"

namespace axon {

using Mat4 = Eigen::Matrix4d;
using RowVec4 = Eigen::Matrix<double, 1, 4>;

/// Block matrix driving the phi kernel,
///   N1 = [[0, (1/D)(gI + A + (a/D) B C^T)], [I, (1/D)(B C^T + a I)]].
Mat4 n1_matrix(const SystemMatrices& m);

/**
 * Analytic kernel phi and its derivatives, evaluated through the matrix
 * exponential
 *   phi(x)^T = [C^T  K^T - (1/D) C^T B C^T] e^{N1 x} [I; 0].
 * Entire in x, so any argument is valid.
 */
class PhiTable {
public:
    PhiTable(const SystemMatrices& m, const RowVec2& K);

    /// Direct construction from the initial row blocks (tests, degenerate cases).
    PhiTable(const RowVec2& first_block, const RowVec2& second_block, const Mat4& n1);

    RowVec2 phi(double x) const;
    RowVec2 phi_prime(double x) const;
    RowVec2 phi_second(double x) const;

    const Mat4& n1() const { return n1_; }
    const RowVec4& initial_row() const { return row0_; }

private:
    RowVec4 row_at(double x) const;
    Mat4 n1_ = Mat4::Zero();
    RowVec4 row0_ = RowVec4::Zero();
};

/// k(x, y) = (1/D) phi(x - y)^T B; depends on x - y only.
double k_eval(double x, double y, const PhiTable& phi, const Vec2& B, double D);

/// d/dx of k(x, y).
double k_x_eval(double x, double y, const PhiTable& phi, const Vec2& B, double D);

/**
 * Grid solution of the coupled (q, psi) kernel system, marched in x from the
 * slice q(0, y) = -k_x(0, y) with psi(-l) = -phi'(-l). x in [0, D_e],
 * y in [0, l_snap]. For D_e = 0 the grid degenerates to the initial slice.
 */
struct QPsiGrid {
    double l_snap = 0.0;
    double D_e = 0.0;
    int nx = 0;  ///< x intervals
    int ny = 0;  ///< y intervals
    double dx = 0.0;
    double dy = 0.0;
    Eigen::MatrixXd q;                                 ///< (nx+1) x (ny+1)
    Eigen::Matrix<double, Eigen::Dynamic, 2> psi;      ///< row n = psi(x_n - l_snap)

    double x_at(int n) const { return n * dx; }
    double y_at(int j) const { return j * dy; }

    /// Bilinear interpolation of q; arguments clamped to the grid box.
    double q_interp(double x, double y) const;
    /// Linear interpolation of the soma trace q(x, 0).
    double q0_interp(double x) const;
    /// Linear interpolation of psi against x.
    RowVec2 psi_interp(double x) const;
    /// Second-order one-sided q_y at y = l_snap on row n.
    double q_y_at_l(int n) const;
    /// Second-order one-sided q_y at y = 0 on row n.
    double q_y_at_0(int n) const;
};

/// Marches the (q, psi) system with an implicit step in x, centered second
/// order in y, Robin ghost node at y = 0, and one fixed-point correction per
/// step closing the psi <-> q boundary coupling. Throws SolverError when the
/// correction fails to contract.
QPsiGrid solve_q_psi(double l_snap, const SystemMatrices& mats, const PhiTable& phi,
                     double D_e, int nx, int ny);

/// Transport kernel p(x, y) = -D q(x - y, 0); requires 0 <= y <= x <= D_e.
double p_eval(double x, double y, const QPsiGrid& grid, double D);

/// Kernel bundle cached per axon-length snapshot.
struct KernelSet {
    std::shared_ptr<const PhiTable> phi;
    QPsiGrid qpsi;
};

/**
 * Length-continuous kernel evaluator: values are linearly blended between the
 * two snapshots bracketing the requested length. Keeps the control signal
 * continuous as l(t) crosses quantization cells; a single-snapshot view
 * (frac = 0) degenerates to plain snapshot evaluation.
 */
class KernelView {
public:
    explicit KernelView(std::shared_ptr<const KernelSet> only)
        : lo_(std::move(only)), hi_(lo_), frac_(0.0), l_(lo_->qpsi.l_snap) {}
    KernelView(std::shared_ptr<const KernelSet> lo, std::shared_ptr<const KernelSet> hi,
               double frac, double l)
        : lo_(std::move(lo)), hi_(std::move(hi)), frac_(frac), l_(l) {}

    double q_at(double x, double y) const {
        const double a = lo_->qpsi.q_interp(x, y);
        if (frac_ == 0.0) return a;
        return (1.0 - frac_) * a + frac_ * hi_->qpsi.q_interp(x, y);
    }
    double q0_at(double x) const {
        const double a = lo_->qpsi.q0_interp(x);
        if (frac_ == 0.0) return a;
        return (1.0 - frac_) * a + frac_ * hi_->qpsi.q0_interp(x);
    }
    RowVec2 psi_at(double x) const {
        const RowVec2 a = lo_->qpsi.psi_interp(x);
        if (frac_ == 0.0) return a;
        return (1.0 - frac_) * a + frac_ * hi_->qpsi.psi_interp(x);
    }
    /// psi at the table end x = D_e.
    RowVec2 psi_end() const {
        const RowVec2 a = lo_->qpsi.psi.row(lo_->qpsi.nx);
        if (frac_ == 0.0) return a;
        return (1.0 - frac_) * a + frac_ * RowVec2(hi_->qpsi.psi.row(hi_->qpsi.nx));
    }
    double q_y_at_l(double x) const;

    double delay() const { return lo_->qpsi.D_e; }
    double length() const { return l_; }
    const PhiTable& phi() const { return *lo_->phi; }
    const KernelSet& primary() const { return *lo_; }

private:
    std::shared_ptr<const KernelSet> lo_, hi_;
    double frac_;
    double l_;
};

/// x-difference used when substituting the grid back into the kernel PDE.
/// Centered exposes the O(dx) marching error (for the x-refinement study);
/// Backward matches the march so the x-truncation cancels and the pure
/// O(dy^2) spatial error is visible (for the y-refinement study).
enum class XStencil { Centered, Backward };

/// Independent-stencil residuals of the kernel equations over the stored grid
/// (fourth order in y), measured on x >= x_min_frac * D_e to stay clear of
/// the (0, l) start-up corner.
struct KernelResiduals {
    double q_pde = 0.0;        ///< q_x - D q_yy - a q_y + g q
    double robin = 0.0;        ///< q_y(x,0) + (a/D) q(x,0), one-sided stencil
    double psi_ode = 0.0;      ///< psi' - psi A + (D q_y + a q)(x, l) C^T
    double boundary = 0.0;     ///< q(x, l) + (1/D) psi B
    double initial = 0.0;      ///< q(0, y) + (1/D) phi'(-y)^T B
    double q_sup = 0.0;        ///< max |q| over the grid
    double psi_sup = 0.0;      ///< max |psi| row norm
};

KernelResiduals kernel_residuals(const QPsiGrid& grid, const SystemMatrices& mats,
                                 const PhiTable& phi, double x_min_frac = 0.25,
                                 int robin_order = 2,
                                 XStencil x_stencil = XStencil::Centered);

/// Solver grid settings for kernel snapshots.
struct KernelGridSettings {
    int nx = 400;           ///< x intervals over [0, D_e]
    int ny = 200;           ///< y intervals over [0, l_snap]
    double tol_l = 5e-3;    ///< snapshot quantization step
};

/**
 * Thread-safe cache of kernel sets keyed by quantized axon length. Lookups
 * never observe partially built entries; concurrent misses may solve twice,
 * the first insert wins.
 */
class KernelCache {
public:
    KernelCache(const SystemMatrices& mats, const RowVec2& K, double D_e,
                KernelGridSettings grid);

    /// get_kernels: cached set whose l_snap is within tol_l of l_current.
    std::shared_ptr<const KernelSet> get(double l_current) const;

    /// Length-continuous evaluator blending the two bracketing snapshots.
    KernelView view(double l_current) const;

    std::shared_ptr<const PhiTable> phi() const { return phi_; }
    const SystemMatrices& mats() const { return mats_; }
    double delay() const { return D_e_; }
    const KernelGridSettings& grid() const { return grid_; }
    std::size_t size() const;

private:
    std::shared_ptr<const KernelSet> get_by_key(long key) const;

    SystemMatrices mats_;
    std::shared_ptr<const PhiTable> phi_;
    double D_e_;
    KernelGridSettings grid_;
    mutable std::mutex mu_;
    mutable std::map<long, std::shared_ptr<const KernelSet>> entries_;
};

}  // namespace axon
