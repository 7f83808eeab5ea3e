#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "axon/error_system.hpp"
#include "axon/errors.hpp"
#include "axon/kernels.hpp"
#include "axon/matexp.hpp"
#include "axon/numerics.hpp"
#include "axon/steady_state.hpp"

using namespace axon;

namespace {

PhysicalParams default_params() {
    return PhysicalParams{};
}

/// Truncated Taylor series of e^{A} as an independent oracle.
Eigen::MatrixXd expm_taylor(const Eigen::MatrixXd& A, int terms) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(A.rows(), A.cols());
    Eigen::MatrixXd term = sum;
    for (int k = 1; k <= terms; ++k) {
        term = term * A / double(k);
        sum += term;
    }
    return sum;
}

}  // namespace

TEST_CASE("expm matches the Taylor oracle and scalar identities") {
    std::mt19937_64 rng(42u);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd A(4, 4);
        for (int i = 0; i < 16; ++i) A(i / 4, i % 4) = 2.0 * u(rng);
        const auto E = expm(A);
        const auto T = expm_taylor(A, 40);
        CHECK((E - T).cwiseAbs().maxCoeff() <= 1e-10 * T.cwiseAbs().maxCoeff());
    }
    // Diagonal case has the closed form.
    Eigen::MatrixXd Ad = Eigen::MatrixXd::Zero(2, 2);
    Ad(0, 0) = 7.3;
    Ad(1, 1) = -2.5;
    const auto Ed = expm(Ad);
    CHECK(Ed(0, 0) == doctest::Approx(std::exp(7.3)).epsilon(1e-12));
    CHECK(Ed(1, 1) == doctest::Approx(std::exp(-2.5)).epsilon(1e-12));
    CHECK(Ed(0, 1) == 0.0);
}

TEST_CASE("N1 block structure") {
    const auto m = system_matrices(default_params());
    const Mat4 n1 = n1_matrix(m);
    CHECK(n1.block<2, 2>(0, 0).cwiseAbs().maxCoeff() == 0.0);
    CHECK((n1.block<2, 2>(2, 0) - Mat2::Identity()).cwiseAbs().maxCoeff() == 0.0);
    const Mat2 BCt = m.B * m.C.transpose();
    const Mat2 tr = (m.g * Mat2::Identity() + m.A + (m.a / m.D) * BCt) / m.D;
    const Mat2 br = (BCt + m.a * Mat2::Identity()) / m.D;
    CHECK((n1.block<2, 2>(0, 2) - tr).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((n1.block<2, 2>(2, 2) - br).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("phi boundary identities at x = 0") {
    const auto m = system_matrices(default_params());
    const RowVec2 K(1.0, 1.0);
    const PhiTable phi(m, K);
    const RowVec2 phi0 = phi.phi(0.0);
    CHECK((phi0 - m.C.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    const double ctb = m.C.dot(m.B);
    const RowVec2 expected = K - (ctb / m.D) * m.C.transpose();
    CHECK((phi.phi_prime(0.0) - expected).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("phi against the truncated-series oracle at generic x") {
    const auto m = system_matrices(default_params());
    const RowVec2 K(1.2, 0.7);
    const PhiTable phi(m, K);
    const Mat4 n1 = n1_matrix(m);
    for (double x : {-1.5, -0.4, 0.3, 0.9}) {
        const Eigen::MatrixXd E = expm_taylor(n1 * x, 30);
        const RowVec4 row = phi.initial_row() * E;
        CHECK((phi.phi(x) - row.head<2>()).cwiseAbs().maxCoeff() <= 1e-10);
        const RowVec4 rowp = row * n1;
        CHECK((phi.phi_prime(x) - rowp.head<2>()).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("k is a function of x - y with k(x,x) = -1/l_c") {
    const auto p = default_params();
    const auto m = system_matrices(p);
    const PhiTable phi(m, RowVec2(1.0, 1.0));
    for (double x = 0.0; x <= 1.0; x += 0.1) {
        CHECK(k_eval(x, x, phi, m.B, m.D) == doctest::Approx(-1.0 / p.l_c).epsilon(1e-12));
    }
    const double base = k_eval(0.7, 0.2, phi, m.B, m.D);
    for (double delta : {-0.15, 0.1, 0.45}) {
        CHECK(k_eval(0.7 + delta, 0.2 + delta, phi, m.B, m.D) ==
              doctest::Approx(base).epsilon(1e-12));
    }
    CHECK(k_eval(0.6, 0.0, phi, m.B, m.D) ==
          doctest::Approx(phi.phi(0.6).dot(m.B.transpose()) / m.D).epsilon(1e-14));
}

TEST_CASE("q/psi march honours its construction slices") {
    const auto p = default_params();
    const auto m = system_matrices(p);
    const PhiTable phi(m, RowVec2(1.0, 1.0));
    const auto grid = solve_q_psi(p.l_s, m, phi, p.D_e, 100, 60);

    // Initial slice exact on every node.
    for (int j = 0; j <= grid.ny; ++j) {
        const double ref = -phi.phi_prime(-grid.y_at(j)).dot(m.B.transpose()) / m.D;
        CHECK(grid.q(0, j) == doctest::Approx(ref).epsilon(1e-14));
    }
    CHECK((grid.psi.row(0) + phi.phi_prime(-p.l_s)).cwiseAbs().maxCoeff() <= 1e-14);

    // Dirichlet coupling exact on every marched row.
    for (int n = 1; n <= grid.nx; ++n) {
        const double bnd = grid.q(n, grid.ny) +
                           grid.psi.row(n).dot(m.B.transpose()) / m.D;
        CHECK(std::abs(bnd) <= 1e-13);
    }

    const auto res = kernel_residuals(grid, m, phi);
    CHECK(res.initial <= 1e-13);
    CHECK(res.boundary <= 1e-13);
    CHECK(std::isfinite(res.q_pde));
    CHECK(res.q_sup < 100.0);
}

TEST_CASE("q residuals shrink under refinement (smoke)") {
    const auto p = default_params();
    const auto m = system_matrices(p);
    const PhiTable phi(m, RowVec2(1.0, 1.0));

    // x-direction: first order.
    const auto coarse = solve_q_psi(p.l_s, m, phi, p.D_e, 50, 200);
    const auto fine = solve_q_psi(p.l_s, m, phi, p.D_e, 200, 200);
    const auto rc = kernel_residuals(coarse, m, phi);
    const auto rf = kernel_residuals(fine, m, phi);
    CHECK(rf.q_pde < 0.6 * rc.q_pde);
    CHECK(rf.psi_ode < 0.6 * rc.psi_ode);

    // y-direction: second order (backward-x evaluator isolates the y error).
    const auto coarse_y = solve_q_psi(p.l_s, m, phi, p.D_e, 800, 12);
    const auto fine_y = solve_q_psi(p.l_s, m, phi, p.D_e, 800, 24);
    const auto rcy = kernel_residuals(coarse_y, m, phi, 0.25, 2, XStencil::Backward);
    const auto rfy = kernel_residuals(fine_y, m, phi, 0.25, 2, XStencil::Backward);
    CHECK(rfy.q_pde < 0.35 * rcy.q_pde);
    CHECK(rfy.robin < 0.35 * rcy.robin);
}

TEST_CASE("p solves its transport problem along characteristics") {
    const auto p = default_params();
    const auto m = system_matrices(p);
    const PhiTable phi(m, RowVec2(1.0, 1.0));
    const auto grid = solve_q_psi(p.l_s, m, phi, p.D_e, 200, 100);

    // Boundary condition p(x, 0) = -D q(x, 0).
    for (double x : {0.0, 0.2, 0.5}) {
        CHECK(p_eval(x, 0.0, grid, m.D) ==
              doctest::Approx(-m.D * grid.q0_interp(x)).epsilon(1e-14));
    }
    // Characteristic foot at the origin.
    for (double x : {0.1, 0.3, 0.5}) {
        CHECK(p_eval(x, x, grid, m.D) ==
              doctest::Approx(-m.D * grid.q(0, 0)).epsilon(1e-12));
    }
    // Directional derivative p_x + p_y = 0 up to grid interpolation.
    const double h = grid.dx;
    double worst = 0.0;
    for (double x = 0.15; x <= 0.45; x += 0.05) {
        for (double y = 0.02; y <= x - 0.05; y += 0.05) {
            const double px = (p_eval(x + h, y, grid, m.D) - p_eval(x - h, y, grid, m.D)) / (2 * h);
            const double py = (p_eval(x, y + h, grid, m.D) - p_eval(x, y - h, grid, m.D)) / (2 * h);
            worst = std::max(worst, std::abs(px + py));
        }
    }
    CHECK(worst <= 5.0 * grid.dx * std::max(1.0, grid.q.cwiseAbs().maxCoeff()));
    CHECK_THROWS_AS(p_eval(0.2, 0.3, grid, m.D), DomainError);
    CHECK_THROWS_AS(p_eval(0.9, 0.1, grid, m.D), DomainError);
}

TEST_CASE("kernel cache quantization semantics") {
    const auto p = default_params();
    const auto m = system_matrices(p);
    KernelGridSettings gs;
    gs.nx = 40;
    gs.ny = 24;
    gs.tol_l = p.l_s / 200.0;
    KernelCache cache(m, RowVec2(1.0, 1.0), p.D_e, gs);

    const double l0 = p.l_s;  // multiple of tol_l
    auto k1 = cache.get(l0);
    auto k2 = cache.get(l0);
    CHECK(k1.get() == k2.get());
    CHECK(cache.size() == 1);

    auto k3 = cache.get(l0 + gs.tol_l / 4.0);
    CHECK(k3.get() == k1.get());
    CHECK(cache.size() == 1);

    auto k4 = cache.get(l0 + 2.0 * gs.tol_l);
    CHECK(k4.get() != k1.get());
    CHECK(cache.size() == 2);
    CHECK(std::abs(k1->qpsi.l_snap - l0) <= gs.tol_l / 2.0 + 1e-12);
}
