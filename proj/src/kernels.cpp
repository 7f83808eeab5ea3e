#include "axon/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "axon/errors.hpp"
#include "axon/matexp.hpp"

namespace axon {

Mat4 n1_matrix(const SystemMatrices& m) {
    const Mat2 BCt = m.B * m.C.transpose();
    Mat4 n1 = Mat4::Zero();
    n1.block<2, 2>(0, 2) = (m.g * Mat2::Identity() + m.A + (m.a / m.D) * BCt) / m.D;
    n1.block<2, 2>(2, 0) = Mat2::Identity();
    n1.block<2, 2>(2, 2) = (BCt + m.a * Mat2::Identity()) / m.D;
    return n1;
}

PhiTable::PhiTable(const SystemMatrices& m, const RowVec2& K) {
    n1_ = n1_matrix(m);
    const double ctb = m.C.dot(m.B);
    const RowVec2 second = K - (ctb / m.D) * m.C.transpose();
    row0_ << m.C.transpose(), second;
}

PhiTable::PhiTable(const RowVec2& first_block, const RowVec2& second_block, const Mat4& n1)
    : n1_(n1) {
    row0_ << first_block, second_block;
}

RowVec4 PhiTable::row_at(double x) const {
    return row0_ * expm(n1_ * x);
}

RowVec2 PhiTable::phi(double x) const {
    return row_at(x).head<2>();
}

RowVec2 PhiTable::phi_prime(double x) const {
    return (row_at(x) * n1_).head<2>();
}

RowVec2 PhiTable::phi_second(double x) const {
    return (row_at(x) * n1_ * n1_).head<2>();
}

double k_eval(double x, double y, const PhiTable& phi, const Vec2& B, double D) {
    return phi.phi(x - y).dot(B.transpose()) / D;
}

double k_x_eval(double x, double y, const PhiTable& phi, const Vec2& B, double D) {
    return phi.phi_prime(x - y).dot(B.transpose()) / D;
}

double QPsiGrid::q_interp(double x, double y) const {
    if (nx == 0) {
        // Degenerate slice: interpolate in y only.
        const double yt = std::clamp(y / dy, 0.0, double(ny));
        const int j = std::min(int(yt), ny - 1);
        const double fy = yt - j;
        return (1.0 - fy) * q(0, j) + fy * q(0, j + 1);
    }
    const double xt = std::clamp(x / dx, 0.0, double(nx));
    const double yt = std::clamp(y / dy, 0.0, double(ny));
    const int n = std::min(int(xt), nx - 1);
    const int j = std::min(int(yt), ny - 1);
    const double fx = xt - n;
    const double fy = yt - j;
    return (1.0 - fx) * ((1.0 - fy) * q(n, j) + fy * q(n, j + 1)) +
           fx * ((1.0 - fy) * q(n + 1, j) + fy * q(n + 1, j + 1));
}

double QPsiGrid::q0_interp(double x) const {
    if (nx == 0) return q(0, 0);
    const double xt = std::clamp(x / dx, 0.0, double(nx));
    const int n = std::min(int(xt), nx - 1);
    const double fx = xt - n;
    return (1.0 - fx) * q(n, 0) + fx * q(n + 1, 0);
}

RowVec2 QPsiGrid::psi_interp(double x) const {
    if (nx == 0) return psi.row(0);
    const double xt = std::clamp(x / dx, 0.0, double(nx));
    const int n = std::min(int(xt), nx - 1);
    const double fx = xt - n;
    return (1.0 - fx) * psi.row(n) + fx * psi.row(n + 1);
}

double QPsiGrid::q_y_at_l(int n) const {
    return (3.0 * q(n, ny) - 4.0 * q(n, ny - 1) + q(n, ny - 2)) / (2.0 * dy);
}

double QPsiGrid::q_y_at_0(int n) const {
    return (-3.0 * q(n, 0) + 4.0 * q(n, 1) - q(n, 2)) / (2.0 * dy);
}

namespace {

/// Tridiagonal LU without pivoting; the marching matrix is near symmetric
/// and diagonally dominant for the grids in use.
class TridiagSolver {
public:
    void factor(const std::vector<double>& lower, const std::vector<double>& diag,
                const std::vector<double>& upper) {
        const std::size_t n = diag.size();
        lower_ = lower;
        upper_ = upper;
        dfac_.assign(n, 0.0);
        dfac_[0] = diag[0];
        for (std::size_t i = 1; i < n; ++i) {
            lower_[i] = lower[i] / dfac_[i - 1];
            dfac_[i] = diag[i] - lower_[i] * upper[i - 1];
        }
    }

    void solve(std::vector<double>& rhs) const {
        const std::size_t n = dfac_.size();
        for (std::size_t i = 1; i < n; ++i) rhs[i] -= lower_[i] * rhs[i - 1];
        rhs[n - 1] /= dfac_[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) {
            rhs[i] = (rhs[i] - upper_[i] * rhs[i + 1]) / dfac_[i];
        }
    }

private:
    std::vector<double> lower_, upper_, dfac_;
};

}  // namespace

QPsiGrid solve_q_psi(double l_snap, const SystemMatrices& mats, const PhiTable& phi,
                     double D_e, int nx, int ny) {
    if (l_snap <= 0.0) throw DomainError("solve_q_psi: l_snap must be positive");
    if (ny < 4) throw DomainError("solve_q_psi: ny must be at least 4");
    if (D_e > 0.0 && nx < 1) throw DomainError("solve_q_psi: nx must be positive");
    if (D_e == 0.0) nx = 0;

    QPsiGrid grid;
    grid.l_snap = l_snap;
    grid.D_e = D_e;
    grid.nx = nx;
    grid.ny = ny;
    grid.dy = l_snap / ny;
    grid.dx = (nx > 0) ? D_e / nx : 0.0;
    grid.q.resize(nx + 1, ny + 1);
    grid.psi.resize(nx + 1, 2);

    const double D = mats.D, a = mats.a, g = mats.g;

    // Initial slice q(0, y) = -(1/D) phi'(-y)^T B on every node.
    for (int j = 0; j <= ny; ++j) {
        grid.q(0, j) = -phi.phi_prime(-grid.y_at(j)).dot(mats.B.transpose()) / D;
    }
    grid.psi.row(0) = -phi.phi_prime(-l_snap);
    if (nx == 0) return grid;

    const double dx = grid.dx, dy = grid.dy;
    const double rD = D * dx / (dy * dy);
    const double ra = a * dx / (2.0 * dy);

    std::vector<double> lower(ny), diag(ny), upper(ny);
    // Row 0: Robin ghost elimination q_ghost = q_1 + (2 dy a / D) q_0.
    diag[0] = 1.0 + 2.0 * rD - 2.0 * a * dx / dy + a * a * dx / D + g * dx;
    upper[0] = -2.0 * rD;
    lower[0] = 0.0;
    for (int j = 1; j < ny; ++j) {
        lower[j] = -(rD - ra);
        diag[j] = 1.0 + 2.0 * rD + g * dx;
        upper[j] = -(rD + ra);
    }
    TridiagSolver solver;
    solver.factor(lower, diag, upper);

    // psi step matrix: psi_{n+1} [I - dx (A + (a/D) B C^T)] = psi_n - dx D q_y C^T,
    // with the Dirichlet value q(x, l) = -(1/D) psi B folded into the system.
    const Mat2 M = Mat2::Identity() -
                   dx * (mats.A + (a / D) * mats.B * mats.C.transpose());
    const Mat2 Minv = M.inverse();

    std::vector<double> rhs(ny);
    std::vector<double> interior(ny);
    const double contraction_abs =
        1e-12 * std::max(1.0, grid.q.row(0).cwiseAbs().maxCoeff());

    for (int n = 0; n < nx; ++n) {
        const RowVec2 psi_n = grid.psi.row(n);
        double qy_prev = grid.q_y_at_l(n);

        auto psi_step = [&](double qy) -> RowVec2 {
            const RowVec2 r = psi_n - dx * D * qy * mats.C.transpose();
            return r * Minv;
        };
        auto q_solve = [&](double dirichlet) {
            for (int j = 0; j < ny; ++j) rhs[j] = grid.q(n, j);
            rhs[ny - 1] += (rD + ra) * dirichlet;
            solver.solve(rhs);
            interior = rhs;
        };
        auto qy_of = [&](double dirichlet) {
            return (3.0 * dirichlet - 4.0 * interior[ny - 1] + interior[ny - 2]) /
                   (2.0 * dy);
        };

        // Predictor with the previous row's boundary derivative.
        RowVec2 psi_new = psi_step(qy_prev);
        double dirichlet = -psi_new.dot(mats.B.transpose()) / D;
        q_solve(dirichlet);
        const double qy0 = qy_of(dirichlet);
        const double delta0 = std::abs(qy0 - qy_prev);

        // One fixed-point correction of the boundary coupling.
        psi_new = psi_step(qy0);
        dirichlet = -psi_new.dot(mats.B.transpose()) / D;
        q_solve(dirichlet);
        const double qy1 = qy_of(dirichlet);
        const double delta1 = std::abs(qy1 - qy0);

        if (delta1 > 0.5 * delta0 && delta1 > contraction_abs) {
            throw SolverError("solve_q_psi: boundary fixed point failed to contract", n);
        }

        for (int j = 0; j < ny; ++j) grid.q(n + 1, j) = interior[j];
        grid.q(n + 1, ny) = dirichlet;
        grid.psi.row(n + 1) = psi_new;
    }
    return grid;
}

double p_eval(double x, double y, const QPsiGrid& grid, double D) {
    const double s = x - y;
    const double tol = 1e-12 * std::max(1.0, grid.D_e);
    if (y < -tol || s < -tol || s > grid.D_e + tol) {
        throw DomainError("p_eval: requires 0 <= y <= x <= D_e");
    }
    return -D * grid.q0_interp(std::clamp(s, 0.0, grid.D_e));
}

KernelResiduals kernel_residuals(const QPsiGrid& grid, const SystemMatrices& mats,
                                 const PhiTable& phi, double x_min_frac,
                                 int robin_order, XStencil x_stencil) {
    KernelResiduals r;
    const double D = mats.D, a = mats.a, g = mats.g;
    const int nx = grid.nx, ny = grid.ny;
    const double dx = grid.dx, dy = grid.dy;

    r.q_sup = grid.q.cwiseAbs().maxCoeff();
    r.psi_sup = grid.psi.rowwise().norm().maxCoeff();

    for (int j = 0; j <= ny; ++j) {
        const double ref = -phi.phi_prime(-grid.y_at(j)).dot(mats.B.transpose()) / D;
        r.initial = std::max(r.initial, std::abs(grid.q(0, j) - ref));
    }

    const int n_start = std::max(1, int(std::ceil(x_min_frac * nx)));
    for (int n = n_start; n <= nx; ++n) {
        const double bnd =
            grid.q(n, ny) + grid.psi.row(n).dot(mats.B.transpose()) / D;
        r.boundary = std::max(r.boundary, std::abs(bnd));

        double robin;
        if (robin_order >= 2) {
            robin = grid.q_y_at_0(n) + (a / D) * grid.q(n, 0);
        } else {
            robin = (grid.q(n, 1) - grid.q(n, 0)) / dy + (a / D) * grid.q(n, 0);
        }
        r.robin = std::max(r.robin, std::abs(robin));
    }

    for (int n = std::max(1, n_start); n < nx; ++n) {
        for (int j = 2; j <= ny - 2; ++j) {
            const double qx =
                (x_stencil == XStencil::Centered)
                    ? (grid.q(n + 1, j) - grid.q(n - 1, j)) / (2.0 * dx)
                    : (grid.q(n, j) - grid.q(n - 1, j)) / dx;
            const double qyy = (-grid.q(n, j - 2) + 16.0 * grid.q(n, j - 1) -
                                30.0 * grid.q(n, j) + 16.0 * grid.q(n, j + 1) -
                                grid.q(n, j + 2)) /
                               (12.0 * dy * dy);
            const double qy = (grid.q(n, j - 2) - 8.0 * grid.q(n, j - 1) +
                               8.0 * grid.q(n, j + 1) - grid.q(n, j + 2)) /
                              (12.0 * dy);
            const double res = qx - D * qyy - a * qy + g * grid.q(n, j);
            r.q_pde = std::max(r.q_pde, std::abs(res));
        }

        const RowVec2 dpsi = (grid.psi.row(n + 1) - grid.psi.row(n - 1)) / (2.0 * dx);
        const RowVec2 rhs = RowVec2(grid.psi.row(n)) * mats.A -
                            (D * grid.q_y_at_l(n) + a * grid.q(n, ny)) *
                                mats.C.transpose();
        r.psi_ode = std::max(r.psi_ode, (dpsi - rhs).cwiseAbs().maxCoeff());
    }
    return r;
}

KernelCache::KernelCache(const SystemMatrices& mats, const RowVec2& K, double D_e,
                         KernelGridSettings grid)
    : mats_(mats),
      phi_(std::make_shared<PhiTable>(mats, K)),
      D_e_(D_e),
      grid_(grid) {}

std::shared_ptr<const KernelSet> KernelCache::get_by_key(long key) const {
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = entries_.find(key);
        if (it != entries_.end()) return it->second;
    }
    const double l_snap = key * grid_.tol_l;
    auto set = std::make_shared<KernelSet>();
    set->phi = phi_;
    set->qpsi = solve_q_psi(l_snap, mats_, *phi_, D_e_, grid_.nx, grid_.ny);
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, inserted] = entries_.emplace(key, std::move(set));
    return it->second;
}

std::shared_ptr<const KernelSet> KernelCache::get(double l_current) const {
    if (l_current <= 0.0) throw DomainError("KernelCache: l must be positive");
    return get_by_key(std::max(1L, std::lround(l_current / grid_.tol_l)));
}

KernelView KernelCache::view(double l_current) const {
    if (l_current <= 0.0) throw DomainError("KernelCache: l must be positive");
    const double t = l_current / grid_.tol_l;
    const long lo = std::max(1L, long(std::floor(t)));
    const double frac = std::clamp(t - double(lo), 0.0, 1.0);
    auto a = get_by_key(lo);
    if (frac == 0.0) return KernelView(std::move(a));
    auto b = get_by_key(lo + 1);
    return KernelView(std::move(a), std::move(b), frac, l_current);
}

double KernelView::q_y_at_l(double x) const {
    auto one = [&](const KernelSet& s) {
        const QPsiGrid& g = s.qpsi;
        if (g.nx == 0) return g.q_y_at_l(0);
        const double xt = std::clamp(x / g.dx, 0.0, double(g.nx));
        const int n = std::min(int(xt), g.nx - 1);
        const double fx = xt - n;
        return (1.0 - fx) * g.q_y_at_l(n) + fx * g.q_y_at_l(n + 1);
    };
    const double a = one(*lo_);
    if (frac_ == 0.0) return a;
    return (1.0 - frac_) * a + frac_ * one(*hi_);
}

std::size_t KernelCache::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
}

}  // namespace axon
