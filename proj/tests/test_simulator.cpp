#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "axon/delay_line.hpp"
#include "axon/errors.hpp"
#include "axon/numerics.hpp"
#include "axon/simulator.hpp"
#include "axon/steady_state.hpp"

using namespace axon;

namespace {

SimState equilibrium_state(const PhysicalParams& p, const SteadyState& ss, int N,
                           double dt) {
    SimState s(N, p.D_e, dt, 0.0);
    s.l = p.l_s;
    s.c_c = p.c_inf;
    for (int i = 0; i <= N; ++i) s.c(i) = ss.c_eq(p.l_s * double(i) / N);
    return s;
}

/// L2 error of the frozen-domain manufactured solution
/// c*(x,t) = e^{-t} cos(pi x / l0) integrated to t_end. The domain is frozen
/// by zeroing r_g (so the mesh velocity vanishes) and the cone trace is pinned
/// to the exact solution at the new time level.
double mms_error(PhysicalParams p, Scheme scheme, int N, double dt, double t_end) {
    p.r_g = 0.0;
    const double l0 = p.l_s;
    auto exact = [&](double xi, double t) {
        return std::exp(-t) * std::cos(M_PI * xi);  // x = xi * l0
    };
    const double w = M_PI / l0;
    SourceFn f = [p, w, l0](double xi, double t) {
        const double x = xi * l0;
        const double e = std::exp(-t);
        const double c = e * std::cos(w * x);
        const double cx = -w * e * std::sin(w * x);
        const double cxx = -w * w * c;
        const double ct = -c;
        return ct - p.D * cxx + p.a * cx + p.g * c;
    };

    SimState s(N, 0.0, dt, 0.0);
    s.l = l0;
    for (int i = 0; i <= N; ++i) s.c(i) = exact(double(i) / N, 0.0);
    s.c_c = s.c(N);

    const long steps = long(std::llround(t_end / dt));
    for (long k = 0; k < steps; ++k) {
        // Exact flux at x = 0 vanishes (sin 0), so the delayed flux is 0.
        pde_step(s, p, 0.0, 0.0, dt, scheme, 1e-9, f, exact(1.0, s.t + dt));
        s.c_c = s.c(N);
    }
    std::vector<double> err2(N + 1);
    for (int i = 0; i <= N; ++i) {
        const double d = s.c(i) - exact(double(i) / N, s.t);
        err2[i] = d * d;
    }
    return std::sqrt(trapezoid(err2, l0 / N));
}

}  // namespace

TEST_CASE("delay line is an exact shift for integral D_e/dt") {
    DelayLine line(0.5, 0.1, 0.0);
    CHECK(line.steps() == 5);

    SUBCASE("constant input") {
        for (int k = 0; k < 20; ++k) {
            line.push(3.5);
        }
        CHECK(line.sample() == 3.5);
    }
    SUBCASE("impulse appears D_e/dt pushes later") {
        // Impulse pushed at clock t_1; it must surface when the clock reaches
        // t_1 + D_e = t_6, i.e. after five more pushes.
        line.push(1.0);
        for (int k = 0; k < 5; ++k) {
            CHECK(line.sample() == 0.0);
            line.push(0.0);
        }
        CHECK(line.sample() == 1.0);
        line.push(0.0);
        CHECK(line.sample() == 0.0);
    }
    SUBCASE("ramp is shifted by exactly D_e") {
        // push U(t_k) = t_k for k = 1.., sample before push at clock t_k.
        for (int k = 1; k <= 12; ++k) {
            line.push(0.1 * k);
        }
        // After 12 pushes the clock is t_12; sample = U(t_12 - 0.5) = 0.7.
        CHECK(line.sample() == doctest::Approx(0.7).epsilon(1e-15));
    }
    SUBCASE("misaligned dt rejected") {
        CHECK_THROWS_AS(DelayLine(0.5, 0.15, 0.0), DomainError);
    }
    SUBCASE("history spans oldest to newest") {
        for (int k = 1; k <= 7; ++k) line.push(double(k));
        const auto h = line.history();
        CHECK(h.size() == 6);
        CHECK(h.front() == 2.0);
        CHECK(h.back() == 7.0);
    }
}

TEST_CASE("equilibrium is a fixed point up to discretization") {
    PhysicalParams p;
    const auto ss = compute_steady_state(p);
    const int N = 100;
    const double dt = 1e-3;
    auto s = equilibrium_state(p, ss, N, dt);
    const Eigen::VectorXd c0 = s.c;

    pde_step(s, p, ss.q_s_star, ss.q_s_star, dt, Scheme::ImplicitEuler, 1e-6);
    ode_step(s, p, dt, 1e-6);

    const double h = 1.0 / N;
    const double c1 = 25.0;  // documented constant for the drift bound
    const double bound = c1 * dt * h * h;
    CHECK((s.c - c0).cwiseAbs().maxCoeff() <= bound);
    CHECK(std::abs(s.c_c - p.c_inf) <= bound);
    CHECK(std::abs(s.l - p.l_s) <= bound);
}

TEST_CASE("manufactured solution: implicit Euler is first order in time") {
    PhysicalParams p;
    p.D_e = 0.5;
    std::vector<double> dts = {4e-3, 2e-3, 1e-3};
    std::vector<double> logd, loge;
    for (double dt : dts) {
        const double e = mms_error(p, Scheme::ImplicitEuler, 600, dt, 0.5);
        logd.push_back(std::log(dt));
        loge.push_back(std::log(e));
    }
    const auto fit = fit_line(logd, loge);
    CHECK(fit.slope == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("manufactured solution: second order in space") {
    PhysicalParams p;
    std::vector<int> Ns = {25, 50, 100};
    std::vector<double> logh, loge;
    for (int N : Ns) {
        const double e = mms_error(p, Scheme::CrankNicolson, N, 2.5e-4, 0.25);
        logh.push_back(std::log(1.0 / N));
        loge.push_back(std::log(e));
    }
    const auto fit = fit_line(logh, loge);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("pure decay: profile L2 norm is monotone") {
    PhysicalParams p;
    p.a = 0.0;
    p.g = 0.5;
    const int N = 64;
    SimState s(N, p.D_e, 1e-3, 0.0);
    s.l = p.l_s;
    for (int i = 0; i <= N; ++i) s.c(i) = std::sin(M_PI * i / double(N));
    s.c_c = 0.0;
    s.c(N) = 0.0;
    double prev = s.c.norm();
    for (int k = 0; k < 200; ++k) {
        pde_step(s, p, 0.0, 0.0, 1e-3, Scheme::ImplicitEuler, 1e-9);
        s.c(N) = s.c_c;
        const double now = s.c.norm();
        CHECK(now <= prev + 1e-14);
        prev = now;
    }
}

TEST_CASE("ode step: equilibrium flux balance is stationary") {
    PhysicalParams p;
    const auto ss = compute_steady_state(p);
    const int N = 400;
    auto s = equilibrium_state(p, ss, N, 1e-3);
    ode_step(s, p, 1e-3, 1e-6);
    // Drift limited by the one-sided stencil truncation on c_eq.
    CHECK(std::abs(s.c_c - p.c_inf) <= 1e-7);
    CHECK(std::abs(s.l - p.l_s) <= 1e-9);
}

TEST_CASE("ode step: one RK2 step matches the hand-computed update") {
    PhysicalParams p;
    const double eps = 0.03;
    const int N = 16;
    SimState s(N, p.D_e, 1e-3, 0.0);
    s.l = p.l_s;
    s.c_c = p.c_inf + eps;
    // Flat profile: the one-sided gradient and hence the flux term are zero,
    // so dl/dt = r_g * z1 exactly at the first stage.
    for (int i = 0; i <= N; ++i) s.c(i) = s.c_c;

    auto rates = [&](double c_c, double l, double& dc, double& dl) {
        const double slope_xi =
            (3.0 * c_c - 4.0 * s.c(N - 1) + s.c(N - 2)) / (2.0 / N);
        dc = ((p.a - p.g * p.l_c) * c_c - p.D * slope_xi / l -
              (p.r_g * c_c + p.r_tilde_g * p.l_c) * (c_c - p.c_inf)) /
             p.l_c;
        dl = p.r_g * (c_c - p.c_inf);
    };
    double k1c, k1l, k2c, k2l;
    rates(s.c_c, s.l, k1c, k1l);
    CHECK(k1l == doctest::Approx(p.r_g * eps).epsilon(1e-14));
    const double dt = 1e-3;
    rates(s.c_c + dt * k1c, s.l + dt * k1l, k2c, k2l);
    const double expect_cc = s.c_c + 0.5 * dt * (k1c + k2c);
    const double expect_l = s.l + 0.5 * dt * (k1l + k2l);

    ode_step(s, p, dt, 1e-6);
    CHECK(s.c_c == doctest::Approx(expect_cc).epsilon(1e-14));
    CHECK(s.l == doctest::Approx(expect_l).epsilon(1e-14));
    CHECK(s.c(N) == s.c_c);
}

TEST_CASE("ode step: RK2 error shrinks fourfold when dt halves") {
    PhysicalParams p;
    const auto ss = compute_steady_state(p);
    // Coarse grid keeps the boundary-gradient coupling soft so the RK2
    // asymptotic range is wide.
    const int N = 8;

    auto integrate = [&](double dt, long steps, bool rk4) {
        auto s = equilibrium_state(p, ss, N, 1e-3);
        s.c_c = p.c_inf * 1.02;  // frozen profile, gently perturbed cone
        s.c(N) = s.c_c;
        const Eigen::VectorXd frozen = s.c;
        if (!rk4) {
            for (long k = 0; k < steps; ++k) {
                ode_step(s, p, dt, 1e-6);
                s.c = frozen;  // keep the profile frozen for the ODE study
                s.c(N) = s.c_c;
            }
            return std::pair<double, double>{s.c_c, s.l};
        }
        // RK4 oracle on the same frozen-interior vector field.
        auto rates = [&](double c_c, double l, double& dc, double& dl) {
            const double slope_xi =
                (3.0 * c_c - 4.0 * frozen(N - 1) + frozen(N - 2)) / (2.0 / N);
            const double c_x = slope_xi / l;
            dc = ((p.a - p.g * p.l_c) * c_c - p.D * c_x -
                  (p.r_g * c_c + p.r_tilde_g * p.l_c) * (c_c - p.c_inf)) /
                 p.l_c;
            dl = p.r_g * (c_c - p.c_inf);
        };
        double c_c = p.c_inf * 1.02, l = p.l_s;
        for (long k = 0; k < steps; ++k) {
            double k1c, k1l, k2c, k2l, k3c, k3l, k4c, k4l;
            rates(c_c, l, k1c, k1l);
            rates(c_c + 0.5 * dt * k1c, l + 0.5 * dt * k1l, k2c, k2l);
            rates(c_c + 0.5 * dt * k2c, l + 0.5 * dt * k2l, k3c, k3l);
            rates(c_c + dt * k3c, l + dt * k3l, k4c, k4l);
            c_c += dt / 6.0 * (k1c + 2 * k2c + 2 * k3c + k4c);
            l += dt / 6.0 * (k1l + 2 * k2l + 2 * k3l + k4l);
        }
        return std::pair<double, double>{c_c, l};
    };

    // The RK2 state uses the same one-sided slope of the frozen profile,
    // so the RK4 run is a higher-order oracle for the same ODE.
    const auto ref = integrate(1e-5, 50000, true);
    const auto coarse = integrate(2e-2, 25, false);
    const auto fine = integrate(1e-2, 50, false);
    const double e_coarse = std::abs(coarse.first - ref.first);
    const double e_fine = std::abs(fine.first - ref.first);
    const double ratio = e_coarse / e_fine;
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("closed loop: origin is invariant under zero perturbation") {
    PhysicalParams p;
    const auto ss = compute_steady_state(p);
    SimConfig cfg;
    cfg.N = 64;
    cfg.dt = 1e-3;
    cfg.t_end = 1.0;
    cfg.perturb_amp = 0.0;
    cfg.perturb_cone = 0.0;
    cfg.perturb_length = 0.0;
    cfg.record_stride = 100;

    // Zero controller stands in: at the origin the real law returns 0 anyway.
    // Zero controller stands in: at the origin the real law returns 0 anyway.
    // Tolerances reflect the O(dt h^2) sampling drift of the discrete scheme
    // around the continuum equilibrium.
    auto traj = run_closed_loop(p, cfg, ss, [](const SimState&) { return 0.0; });
    REQUIRE(traj.termination == "completed");
    for (const auto& row : traj.rows) {
        CHECK(std::abs(row.z1) <= 1e-5);
        CHECK(std::abs(row.z2) <= 1e-5);
        CHECK(row.norm_u_H1 <= 1e-4);
    }
}

TEST_CASE("closed loop: open loop retains a length offset when the profile "
          "spring vanishes") {
    // With a = g = 0 the equilibrium profile is flat, so the cone flux carries
    // no restoring term in z2 and the length integrator keeps a generic
    // offset. (For generic parameters the nonlinear plant is weakly
    // self-correcting, so this is the regime where open loop visibly misses
    // the target.)
    PhysicalParams p;
    p.a = 0.0;
    p.g = 0.0;
    const auto ss = compute_steady_state(p);
    SimConfig cfg;
    cfg.N = 100;
    cfg.dt = 1e-3;
    cfg.t_end = 60.0;
    cfg.mode = ControlMode::OpenLoop;
    cfg.record_stride = 200;
    cfg.perturb_amp = 0.05;
    cfg.perturb_cone = 0.05;
    cfg.perturb_length = 0.0;

    auto traj = run_closed_loop(p, cfg, ss, nullptr);
    REQUIRE(traj.termination == "completed");
    const auto& last = traj.rows.back();
    // z1 relaxes but the length integrator retains a generic offset.
    CHECK(std::abs(last.z1) <= 1e-3);
    CHECK(std::abs(last.z2) >= 10.0 * std::abs(last.z1));
    CHECK(std::abs(last.z2) >= 1e-3);
}

TEST_CASE("domain collapse is reported as a terminal event") {
    PhysicalParams p;
    const auto ss = compute_steady_state(p);
    SimConfig cfg;
    cfg.N = 32;
    cfg.dt = 1e-3;
    cfg.t_end = 50.0;
    cfg.record_stride = 50;
    // A crude destabilizing feedback drives the length down to the guard.
    auto traj = run_closed_loop(p, cfg, ss, [&](const SimState& s) {
        return 50.0 * (s.l - 0.0);  // large positive U drains the soma flux
    });
    CHECK((traj.termination == "domain-collapse" || traj.termination == "diverged"));
}
