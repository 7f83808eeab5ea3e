#include "axon/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "axon/errors.hpp"
#include "axon/numerics.hpp"

namespace axon {

std::vector<std::string> SimConfig::violations(const PhysicalParams& p) const {
    std::vector<std::string> v;
    if (N < 8) v.push_back("sim.N must be >= 8");
    if (dt <= 0.0) v.push_back("sim.dt must be > 0");
    if (t_end < dt) v.push_back("sim.t_end must cover at least one step");
    if (record_stride < 1) v.push_back("sim.record_stride must be >= 1");
    if (l_min_frac <= 0.0 || l_min_frac >= 1.0) v.push_back("sim.l_min_frac must be in (0,1)");
    if (overflow_guard <= 0.0) v.push_back("sim.overflow_guard must be > 0");
    if (transient_frac < 0.0 || transient_frac >= 1.0) {
        v.push_back("sim.transient_frac must be in [0,1)");
    }
    if (dt > 0.0) {
        const double ratio = p.D_e / dt;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
            v.push_back("sim.dt must divide physical.D_e (delay-line alignment)");
        }
    }
    return v;
}

void SimConfig::validate(const PhysicalParams& p) const {
    auto v = violations(p);
    if (!v.empty()) throw ValidationError(std::move(v));
}

namespace {

/// Thomas solve; coefficients are built fresh per step since l and l_dot move.
void solve_tridiag(std::vector<double>& lower, std::vector<double>& diag,
                   std::vector<double>& upper, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    }
}

double length_rate(const PhysicalParams& p, double c_c) {
    return p.r_g * (c_c - p.c_inf);
}

/// Spatial operator row coefficients of the immobilized equation
///   c_t = (D/l^2) c_xixi + (xi l_dot / l - a / l) c_xi - g c
/// at interior node i; boundary handling is done by the caller.
struct OpRow {
    double lower, diag, upper;
};

OpRow interior_row(const PhysicalParams& p, double l, double l_dot, double xi, double h) {
    const double diff = p.D / (l * l * h * h);
    const double adv = (xi * l_dot / l - p.a / l) / (2.0 * h);
    return {diff - adv, -2.0 * diff - p.g, diff + adv};
}

}  // namespace

void pde_step(SimState& s, const PhysicalParams& p, double q_s_old, double q_s_new,
              double dt, Scheme scheme, double l_min, const SourceFn& source,
              double dirichlet_new) {
    if (s.l <= l_min) throw DomainCollapseError(s.l, l_min);
    if (std::isnan(dirichlet_new)) dirichlet_new = s.c_c;
    const int N = int(s.c.size()) - 1;
    const double h = 1.0 / N;
    const double l = s.l;
    const double l_dot = length_rate(p, s.c_c);
    const double theta = (scheme == Scheme::CrankNicolson) ? 0.5 : 1.0;

    // Unknowns are nodes 0..N-1; node N carries the Dirichlet value c_c.
    std::vector<double> lower(N, 0.0), diag(N, 0.0), upper(N, 0.0), rhs(N, 0.0);

    // Node 0: ghost elimination of the Neumann flux
    // c_xi(0) = -l q_s  =>  c_{-1} = c_1 + 2 h l q_s.
    const double diff0 = p.D / (l * l * h * h);
    const double adv0 = -p.a / l;  // advection coefficient at xi = 0
    const double L0_diag = -2.0 * diff0 - p.g;
    const double L0_upper = 2.0 * diff0;
    auto flux_const = [&](double q_s) {
        // Constant contribution of the ghost substitution to L c at node 0.
        return diff0 * 2.0 * h * l * q_s - adv0 * l * q_s;
    };

    const double t_new = s.t + dt;
    auto src = [&](double xi, double tau) { return source ? source(xi, tau) : 0.0; };

    {
        // theta-weighted assembly for node 0.
        diag[0] = 1.0 - dt * theta * L0_diag;
        upper[0] = -dt * theta * L0_upper;
        double expl = s.c(0) + dt * (1.0 - theta) * (L0_diag * s.c(0) + L0_upper * s.c(1));
        expl += dt * (theta * flux_const(q_s_new) + (1.0 - theta) * flux_const(q_s_old));
        expl += dt * (theta * src(0.0, t_new) + (1.0 - theta) * src(0.0, s.t));
        rhs[0] = expl;
    }

    for (int i = 1; i < N; ++i) {
        const double xi = i * h;
        const OpRow row = interior_row(p, l, l_dot, xi, h);
        lower[i] = -dt * theta * row.lower;
        diag[i] = 1.0 - dt * theta * row.diag;
        upper[i] = -dt * theta * row.upper;
        double expl = s.c(i) + dt * (1.0 - theta) *
                                   (row.lower * s.c(i - 1) + row.diag * s.c(i) +
                                    row.upper * s.c(i + 1));
        expl += dt * (theta * src(xi, t_new) + (1.0 - theta) * src(xi, s.t));
        rhs[i] = expl;
    }
    // Dirichlet closure at node N.
    rhs[N - 1] -= upper[N - 1] * dirichlet_new;
    upper[N - 1] = 0.0;

    solve_tridiag(lower, diag, upper, rhs);
    for (int i = 0; i < N; ++i) s.c(i) = rhs[i];
    s.c(N) = dirichlet_new;
    s.t = t_new;
}

void ode_step(SimState& s, const PhysicalParams& p, double dt, double l_min) {
    const int N = int(s.c.size()) - 1;
    const double h = 1.0 / N;

    // Second-order one-sided gradient at xi = 1 on the frozen interior
    // profile; the cone node itself is the stage value of c_c (Dirichlet
    // relation), so each RK stage sees a consistent boundary gradient.
    auto rates = [&](double c_c, double l, double& dc_c, double& dl) {
        const double slope_xi = (3.0 * c_c - 4.0 * s.c(N - 1) + s.c(N - 2)) / (2.0 * h);
        const double c_x = slope_xi / l;
        dc_c = ((p.a - p.g * p.l_c) * c_c - p.D * c_x -
                (p.r_g * c_c + p.r_tilde_g * p.l_c) * (c_c - p.c_inf)) /
               p.l_c;
        dl = p.r_g * (c_c - p.c_inf);
    };

    double k1c, k1l, k2c, k2l;
    rates(s.c_c, s.l, k1c, k1l);
    rates(s.c_c + dt * k1c, s.l + dt * k1l, k2c, k2l);
    s.c_c += 0.5 * dt * (k1c + k2c);
    s.l += 0.5 * dt * (k1l + k2l);
    if (s.l <= l_min) throw DomainCollapseError(s.l, l_min);
    s.c(N) = s.c_c;  // Dirichlet consistency after every step
}

StateNorms state_norms(const SimState& s, const SteadyState& ss) {
    StateNorms n;
    const int N = int(s.c.size()) - 1;
    const double dx = s.l / N;
    std::vector<double> usq(N + 1), uxsq(N + 1);
    std::vector<double> u(N + 1);
    for (int i = 0; i <= N; ++i) {
        const double x = s.l * double(i) / N;
        u[i] = s.c(i) - ss.c_eq(x);
        usq[i] = u[i] * u[i];
    }
    for (int i = 0; i <= N; ++i) {
        double ux;
        if (i == 0) {
            ux = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx);
        } else if (i == N) {
            ux = (3.0 * u[N] - 4.0 * u[N - 1] + u[N - 2]) / (2.0 * dx);
        } else {
            ux = (u[i + 1] - u[i - 1]) / (2.0 * dx);
        }
        uxsq[i] = ux * ux;
    }
    const double uL2sq = trapezoid(usq, dx);
    const double uH1sq = uL2sq + trapezoid(uxsq, dx);
    n.u_L2 = std::sqrt(std::max(0.0, uL2sq));
    n.u_H1 = std::sqrt(std::max(0.0, uH1sq));

    const auto hist = s.delay.history();
    double vH1sq = 0.0;
    if (hist.size() > 1) {
        const double dtau = s.delay.dt();
        std::vector<double> vsq(hist.size()), vxsq(hist.size());
        for (std::size_t i = 0; i < hist.size(); ++i) vsq[i] = hist[i] * hist[i];
        for (std::size_t i = 0; i < hist.size(); ++i) {
            double vx;
            if (i == 0) {
                vx = (hist[1] - hist[0]) / dtau;
            } else if (i + 1 == hist.size()) {
                vx = (hist[i] - hist[i - 1]) / dtau;
            } else {
                vx = (hist[i + 1] - hist[i - 1]) / (2.0 * dtau);
            }
            vxsq[i] = vx * vx;
        }
        vH1sq = trapezoid(vsq, dtau) + trapezoid(vxsq, dtau);
    }
    n.v_H1 = std::sqrt(vH1sq);
    n.z1 = s.c_c - ss.c_inf;
    n.z2 = s.l - ss.l_s;
    n.Z = uH1sq + vH1sq + n.z1 * n.z1 + n.z2 * n.z2;
    return n;
}

SimState build_initial_state(const PhysicalParams& p, const SimConfig& cfg,
                             const SteadyState& ss) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> jitter(-0.1, 0.1);
    const double amp = cfg.perturbation_scale * cfg.perturb_amp * (1.0 + jitter(rng));
    const double cone = cfg.perturbation_scale * cfg.perturb_cone * (1.0 + jitter(rng));
    const double dlen = cfg.perturbation_scale * cfg.perturb_length * (1.0 + jitter(rng));

    SimState s(cfg.N, p.D_e, cfg.dt, cfg.prehistory);
    s.l = p.l_s * (1.0 + dlen);
    s.t = 0.0;
    for (int i = 0; i <= cfg.N; ++i) {
        const double xi = double(i) / cfg.N;
        const double bump = 0.5 * (1.0 - std::cos(2.0 * M_PI * xi));
        s.c(i) = ss.c_eq(xi * s.l) + p.c_inf * (amp * bump + cone * xi * xi);
    }
    s.c_c = s.c(cfg.N);
    return s;
}

Trajectory run_closed_loop(const PhysicalParams& p, const SimConfig& cfg,
                           const SteadyState& ss, const ControlFn& controller,
                           const DiagHook& diag) {
    p.validate();
    cfg.validate(p);

    Trajectory traj;
    SimState s = build_initial_state(p, cfg, ss);
    traj.initial = state_norms(s, ss);
    traj.record_dt = cfg.record_stride * cfg.dt;

    const double l_min = cfg.l_min_frac * p.l_s;
    const long n_steps = long(std::llround(cfg.t_end / cfg.dt));
    const double guard = cfg.overflow_guard *
                         std::max({1.0, traj.initial.u_H1, std::abs(traj.initial.z1),
                                   std::abs(traj.initial.z2)});

    auto record = [&](double U_now, double U_applied, bool with_frame) {
        const auto n = state_norms(s, ss);
        TrajectoryRow row;
        row.t = s.t;
        row.l = s.l;
        row.c_c = s.c_c;
        row.U_now = U_now;
        row.U_applied = U_applied;
        row.z1 = n.z1;
        row.z2 = n.z2;
        row.norm_u_L2 = n.u_L2;
        row.norm_u_H1 = n.u_H1;
        row.Z = n.Z;
        row.v_H1 = n.v_H1;
        if (diag) {
            const auto v = diag(s, U_now);
            row.V_total = v[0];
            for (int i = 0; i < 5; ++i) row.V[i] = v[i + 1];
        }
        traj.rows.push_back(row);
        if (with_frame) {
            Frame f;
            f.t = s.t;
            f.c = s.c;
            f.c_c = s.c_c;
            f.l = s.l;
            f.history = s.delay.history();
            f.U_now = U_now;
            f.U_applied = U_applied;
            traj.frames.push_back(f);
        }
    };

    // Row at t = 0; the pre-history stands in for U(0).
    record(cfg.prehistory, s.delay.sample(), false);

    try {
        for (long k = 0; k < n_steps; ++k) {
            const double U_applied = s.delay.sample();
            const double U_applied_next = s.delay.sample_next();
            const double q_s_old = ss.q_s_star - U_applied;
            const double q_s_new = ss.q_s_star - U_applied_next;

            pde_step(s, p, q_s_old, q_s_new, cfg.dt, cfg.scheme, l_min);
            ode_step(s, p, cfg.dt, l_min);

            const double U_now = controller ? controller(s) : 0.0;
            s.delay.push(U_now);

            const bool rec = ((k + 1) % cfg.record_stride == 0) || (k + 1 == n_steps);
            if (rec) record(U_now, U_applied, true);

            if (rec) {
                const auto& last = traj.rows.back();
                const bool bad = !std::isfinite(last.z1) || !std::isfinite(last.norm_u_H1) ||
                                 !std::isfinite(U_now) || std::abs(last.z1) > guard ||
                                 std::abs(last.z2) > guard || last.norm_u_H1 > guard ||
                                 std::abs(U_now) > guard;
                if (bad) {
                    traj.termination = "diverged";
                    return traj;
                }
            }
        }
    } catch (const DomainCollapseError&) {
        traj.termination = "domain-collapse";
        return traj;
    }
    traj.termination = "completed";
    return traj;
}

}  // namespace axon
