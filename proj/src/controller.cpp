#include "axon/controller.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "axon/errors.hpp"

namespace axon {

GainVector default_gains(const SystemMatrices& m) {
    return {std::max(0.0, m.a_tilde / m.beta) + 1.0, 1.0};
}

HurwitzReport hurwitz_check(const SystemMatrices& m, const GainVector& K) {
    const Mat2 acl = m.A + m.B * K.row();
    Eigen::EigenSolver<Mat2> es(acl);
    HurwitzReport r;
    r.ev1 = es.eigenvalues()(0);
    r.ev2 = es.eigenvalues()(1);
    r.hurwitz = r.ev1.real() < 0.0 && r.ev2.real() < 0.0;
    // char poly: s^2 - (a~ - beta k1) s + beta k2 r_g
    r.closed_form = (m.a_tilde - m.beta * K.k1 < 0.0) && (m.beta * K.k2 * m.r_g > 0.0);
    return r;
}

double control_law(const Eigen::VectorXd& u_profile, const Vec2& X, double l,
                   std::span<const double> past, double dt, const KernelView& ks,
                   const SystemMatrices& mats) {
    const double D_e = ks.delay();
    const long m = std::llround(D_e / dt);
    if (long(past.size()) != m) {
        throw DomainError("control_law: delay history does not cover D_e");
    }

    // State integral on the simulator nodes, q interpolated at x = D_e.
    const Eigen::Index N = u_profile.size() - 1;
    double iq = 0.0;
    for (Eigen::Index i = 0; i <= N; ++i) {
        const double y = l * double(i) / double(N);
        const double w = (i == 0 || i == N) ? 0.5 : 1.0;
        iq += w * ks.q_at(D_e, y) * u_profile(i);
    }
    iq *= l / double(N);

    // psi(D_e - l) read from the table end at x = D_e.
    const double psix = ks.psi_end().dot(X.transpose());

    // History convolution: nodes s_j = j dt, p(D_e, s) = -D q(D_e - s, 0);
    // the endpoint node carries the unknown U(t).
    double known = 0.0;
    for (long j = 0; j < m; ++j) {
        const double s = double(j) * dt;
        const double w = (j == 0) ? 0.5 : 1.0;
        known += w * dt * (-mats.D * ks.q0_at(D_e - s)) * past[std::size_t(j)];
    }
    const double p_end = -mats.D * ks.q0_at(0.0);
    const double w_end = (m > 0) ? 0.5 * dt : 0.0;

    return -(known + iq + psix) / (1.0 + w_end * p_end);
}

double uncompensated_control(const Eigen::VectorXd& u_profile, const Vec2& X, double l,
                             const KernelView& ks_de0, const SystemMatrices& mats) {
    if (ks_de0.delay() != 0.0) {
        throw DomainError("uncompensated_control: kernel set must be solved for D_e = 0");
    }
    return control_law(u_profile, X, l, {}, 1.0, ks_de0, mats);
}

Eigen::VectorXd error_profile(const SimState& s, const SteadyState& ss) {
    const Eigen::Index N = s.c.size() - 1;
    Eigen::VectorXd u(N + 1);
    for (Eigen::Index i = 0; i <= N; ++i) {
        u(i) = s.c(i) - ss.c_eq(s.l * double(i) / double(N));
    }
    return u;
}

ControlFn make_compensated_controller(std::shared_ptr<const KernelCache> cache,
                                      const SteadyState& ss, const SystemMatrices& mats) {
    return [cache, ss, mats](const SimState& s) {
        const auto ks = cache->view(s.l);
        const Eigen::VectorXd u = error_profile(s, ss);
        const Vec2 X(s.c_c - ss.c_inf, s.l - ss.l_s);
        const auto hist = s.delay.history();
        std::span<const double> past(hist);
        if (past.size() > 0) past = past.subspan(1);  // drop U(t - D_e - dt)
        return control_law(u, X, s.l, past, s.delay.dt(), ks, mats);
    };
}

ControlFn make_uncompensated_controller(std::shared_ptr<const KernelCache> cache_de0,
                                        const SteadyState& ss, const SystemMatrices& mats) {
    return [cache_de0, ss, mats](const SimState& s) {
        const auto ks = cache_de0->view(s.l);
        const Eigen::VectorXd u = error_profile(s, ss);
        const Vec2 X(s.c_c - ss.c_inf, s.l - ss.l_s);
        return uncompensated_control(u, X, s.l, ks, mats);
    };
}

}  // namespace axon
