#include "axon/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "axon/errors.hpp"
#include "axon/matexp.hpp"
#include "axon/numerics.hpp"

namespace axon {
namespace {

/// phi, phi', phi'' sampled at s_d = -d * delta for d = 0..N, built by one
/// matrix exponential and semigroup iteration.
struct PhiGridTables {
    std::vector<RowVec2> phi, phi_p, phi_pp;
};

PhiGridTables build_phi_tables(const PhiTable& table, double delta, int N) {
    PhiGridTables t;
    t.phi.resize(N + 1);
    t.phi_p.resize(N + 1);
    t.phi_pp.resize(N + 1);
    const Mat4& n1 = table.n1();
    const Mat4 step = expm(n1 * (-delta));
    RowVec4 row = table.initial_row();
    for (int d = 0; d <= N; ++d) {
        t.phi[d] = row.head<2>();
        t.phi_p[d] = (row * n1).head<2>();
        t.phi_pp[d] = (row * n1 * n1).head<2>();
        row = row * step;
    }
    return t;
}

double trapezoid_weight(Eigen::Index i, Eigen::Index n) {
    return (i == 0 || i == n) ? 0.5 : 1.0;
}

/// Second-order derivative samples of a uniformly gridded vector.
Eigen::VectorXd fd_derivative(const Eigen::VectorXd& f, double dx) {
    const Eigen::Index n = f.size() - 1;
    Eigen::VectorXd d(n + 1);
    if (n == 0) {
        d(0) = 0.0;
        return d;
    }
    if (n == 1) {
        d(0) = d(1) = (f(1) - f(0)) / dx;
        return d;
    }
    d(0) = (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * dx);
    for (Eigen::Index i = 1; i < n; ++i) d(i) = (f(i + 1) - f(i - 1)) / (2.0 * dx);
    d(n) = (3.0 * f(n) - 4.0 * f(n - 1) + f(n - 2)) / (2.0 * dx);
    return d;
}

double q_y_at_l_interp(const QPsiGrid& g, double x) {
    if (g.nx == 0) return g.q_y_at_l(0);
    const double xt = std::clamp(x / g.dx, 0.0, double(g.nx));
    const int n = std::min(int(xt), g.nx - 1);
    const double fx = xt - n;
    return (1.0 - fx) * g.q_y_at_l(n) + fx * g.q_y_at_l(n + 1);
}

}  // namespace

Mat2 lyapunov_solve(const Mat2& acl, const Mat2& Q) {
    Eigen::EigenSolver<Mat2> es(acl);
    if (es.eigenvalues()(0).real() >= 0.0 || es.eigenvalues()(1).real() >= 0.0) {
        throw SolverError("lyapunov_solve: closed-loop matrix is not Hurwitz", 0);
    }
    const double a11 = acl(0, 0), a12 = acl(0, 1), a21 = acl(1, 0), a22 = acl(1, 1);
    Eigen::Matrix3d M;
    Eigen::Vector3d rhs;
    M << 2.0 * a11, 2.0 * a21, 0.0,
         a12, a11 + a22, a21,
         0.0, 2.0 * a12, 2.0 * a22;
    rhs << -Q(0, 0), -Q(0, 1), -Q(1, 1);
    const Eigen::Vector3d x = M.partialPivLu().solve(rhs);
    Mat2 P;
    P << x(0), x(1), x(1), x(2);
    if (P(0, 0) <= 0.0 || P.determinant() <= 0.0) {
        throw SolverError("lyapunov_solve: P is not positive definite", 0);
    }
    return P;
}

TransformResult forward_transform(const Eigen::VectorXd& u_profile,
                                  std::span<const double> v_history, const Vec2& X,
                                  double l, const KernelView& ks,
                                  const SystemMatrices& mats) {
    const Eigen::Index N = u_profile.size() - 1;
    if (N < 2) throw DomainError("forward_transform: profile too short");
    const double delta = l / double(N);
    const auto tables = build_phi_tables(ks.phi(), delta, int(N));
    const double D = mats.D;

    TransformResult out;
    out.X = X;
    out.l = l;

    // k(x_i, y_j) = phi((i-j) delta)^T B / D, a function of j - i only.
    std::vector<double> kvec(N + 1);
    for (Eigen::Index d = 0; d <= N; ++d) kvec[d] = tables.phi[d].dot(mats.B.transpose()) / D;

    out.w.resize(N + 1);
    for (Eigen::Index i = 0; i <= N; ++i) {
        double integral = 0.0;
        if (i < N) {
            for (Eigen::Index j = i; j <= N; ++j) {
                const double wq = (j == i || j == N) ? 0.5 : 1.0;
                integral += wq * kvec[j - i] * u_profile(j);
            }
            integral *= delta;
        }
        const RowVec2 phi_il = tables.phi[N - i];  // phi(x_i - l)
        out.w(i) = u_profile(i) - integral - phi_il.dot(X.transpose());
    }

    const Eigen::Index M = Eigen::Index(v_history.size()) - 1;
    out.delay_dt = (M > 0) ? ks.delay() / double(M) : 0.0;
    out.z.resize(M + 1);
    std::vector<double> pvec(std::size_t(M) + 1, 0.0);
    for (Eigen::Index r = 0; r <= M; ++r) {
        pvec[r] = -D * ks.q0_at(double(r) * out.delay_dt);
    }
    for (Eigen::Index m = 0; m <= M; ++m) {
        const double x_m = double(m) * out.delay_dt;
        double pv = 0.0;
        if (m > 0) {
            for (Eigen::Index mp = 0; mp <= m; ++mp) {
                const double wq = (mp == 0 || mp == m) ? 0.5 : 1.0;
                pv += wq * pvec[m - mp] * v_history[std::size_t(mp)];
            }
            pv *= out.delay_dt;
        }
        double qu = 0.0;
        for (Eigen::Index j = 0; j <= N; ++j) {
            const double y = l * double(j) / double(N);
            qu += trapezoid_weight(j, N) * ks.q_at(x_m, y) * u_profile(j);
        }
        qu *= delta;
        out.z(m) = v_history[std::size_t(m)] + pv + qu + ks.psi_at(x_m).dot(X.transpose());
    }
    return out;
}

InverseResult inverse_transform(const Eigen::VectorXd& w, const Eigen::VectorXd& z,
                                const Vec2& X, double l, const KernelView& ks,
                                const SystemMatrices& mats) {
    const Eigen::Index N = w.size() - 1;
    if (N < 2) throw DomainError("inverse_transform: profile too short");
    const double delta = l / double(N);
    const auto tables = build_phi_tables(ks.phi(), delta, int(N));
    const double D = mats.D;
    std::vector<double> kvec(N + 1);
    for (Eigen::Index d = 0; d <= N; ++d) kvec[d] = tables.phi[d].dot(mats.B.transpose()) / D;

    InverseResult out;
    out.u.resize(N + 1);
    // Triangular back-substitution: node N first (empty integral).
    for (Eigen::Index i = N; i >= 0; --i) {
        double rhs = w(i) + tables.phi[N - i].dot(X.transpose());
        double diag = 1.0;
        if (i < N) {
            for (Eigen::Index j = i + 1; j <= N; ++j) {
                const double wq = (j == N) ? 0.5 : 1.0;
                rhs += delta * wq * kvec[j - i] * out.u(j);
            }
            diag -= 0.5 * delta * kvec[0];
        }
        if (std::abs(diag) < 1e-12) {
            throw SolverError("inverse_transform: singular diagonal", long(i));
        }
        out.u(i) = rhs / diag;
    }

    const Eigen::Index M = z.size() - 1;
    const double dtau = (M > 0) ? ks.delay() / double(M) : 0.0;
    std::vector<double> pvec(std::size_t(M) + 1, 0.0);
    for (Eigen::Index r = 0; r <= M; ++r) pvec[r] = -D * ks.q0_at(double(r) * dtau);

    out.v.resize(M + 1);
    for (Eigen::Index m = 0; m <= M; ++m) {
        const double x_m = double(m) * dtau;
        double qu = 0.0;
        for (Eigen::Index j = 0; j <= N; ++j) {
            const double y = l * double(j) / double(N);
            qu += trapezoid_weight(j, N) * ks.q_at(x_m, y) * out.u(j);
        }
        qu *= delta;
        double rhs = z(m) - qu - ks.psi_at(x_m).dot(X.transpose());
        double diag = 1.0;
        if (m > 0) {
            for (Eigen::Index mp = 0; mp < m; ++mp) {
                const double wq = (mp == 0) ? 0.5 : 1.0;
                rhs -= dtau * wq * pvec[m - mp] * out.v(mp);
            }
            diag += 0.5 * dtau * pvec[0];
        }
        out.v(m) = rhs / diag;
    }
    return out;
}

LConstants estimate_L_constants(const std::vector<std::shared_ptr<const KernelSet>>& sets,
                                const SystemMatrices& mats, int quad_nodes) {
    LConstants L;
    L.l_samples = int(sets.size());
    L.quad_nodes = quad_nodes;
    const double D = mats.D, a = mats.a;

    for (const auto& set : sets) {
        const double l = set->qpsi.l_snap;
        const double delta = l / quad_nodes;
        const auto t = build_phi_tables(*set->phi, delta, quad_nodes);

        // x_i = i delta, phi arguments x_i - l = -(quad_nodes - i) delta.
        std::vector<double> r_sq(quad_nodes + 1), rp_sq(quad_nodes + 1);
        std::vector<double> phi_sq(quad_nodes + 1), g2b_sq(quad_nodes + 1),
            g3b_sq(quad_nodes + 1);
        for (int i = 0; i <= quad_nodes; ++i) {
            const int d = quad_nodes - i;
            const RowVec2 phi = t.phi[d];
            const RowVec2 phip = t.phi_p[d];
            const RowVec2 phipp = t.phi_pp[d];
            const double k_xl = phi.dot(mats.B.transpose()) / D;
            const double kx_xl = phip.dot(mats.B.transpose()) / D;
            const RowVec2 r = phip - k_xl * mats.C.transpose();
            const RowVec2 rp = phipp - kx_xl * mats.C.transpose();
            r_sq[i] = r.squaredNorm();
            rp_sq[i] = rp.squaredNorm();
            phi_sq[i] = phi.squaredNorm();
            const double g2b = (-phip - (1.0 / D) * phi).dot(mats.B.transpose());
            const double g3b = (-phip - (a / D) * phi).dot(mats.B.transpose());
            g2b_sq[i] = g2b * g2b;
            g3b_sq[i] = g3b * g3b;
        }
        L.L1 = std::max(L.L1, r_sq[quad_nodes]);
        L.L2 = std::max(L.L2, trapezoid(r_sq, delta));
        L.L3 = std::max(L.L3, trapezoid(rp_sq, delta));
        L.L5 = std::max(L.L5, trapezoid(phi_sq, delta));
        L.L6 = std::max(L.L6, trapezoid(g2b_sq, delta));
        L.L7 = std::max(L.L7, trapezoid(g3b_sq, delta));

        // L4 bounds |psi'(-l) - q(0, l) C^T| from the stored grid slice.
        const QPsiGrid& g = set->qpsi;
        const RowVec2 psi0 = g.psi.row(0);
        const double q0l = g.q(0, g.ny);
        const double qy0l = g.q_y_at_l(0);
        const RowVec2 psip = RowVec2(psi0 * mats.A) -
                             (D * qy0l + a * q0l) * mats.C.transpose();
        const RowVec2 G1 = psip - q0l * mats.C.transpose();
        L.L4 = std::max(L.L4, G1.norm());
    }
    return L;
}

LyapunovWeights select_weights(const PhysicalParams& p, const LConstants& L,
                               const Mat2& P, double lambda_min_Q, double c,
                               double eps, double d1_floor) {
    (void)L;
    std::vector<std::string> bad;
    if (!p.assumption3_holds()) {
        bad.push_back("admissibility D/(4 l_bar) >= a fails for the configured l_bar");
    }
    if (p.g <= 0.0) {
        bad.push_back("weight selection requires g > 0 (d2, d3 bounds degenerate)");
    }
    if (eps < 0.0) eps = 0.25 * p.D;
    if (!(eps > 0.0 && 2.0 * eps < p.D)) {
        bad.push_back("eps must satisfy 0 < eps < D/2");
    }
    if (!bad.empty()) throw ValidationError(std::move(bad));

    const double lb = p.l_bar;
    const Eigen::RowVector2d BtP = Vec2(-p.D / p.l_c, 0.0).transpose() * P;
    const double btp_sq = BtP.squaredNorm();
    const Eigen::SelfAdjointEigenSolver<Mat2> es(P);
    const double lmin_P = es.eigenvalues()(0);

    LyapunovWeights w;
    w.c = c;
    w.eps = eps;
    w.v_bar = (p.D - 2.0 * eps) / (8.0 * lb);
    w.d1 = std::max(4.0 * p.a * p.a / (p.D * p.D), d1_floor);
    w.d4 = p.D * lambda_min_Q / (512.0 * lb * btp_sq);
    const double a2g2 = p.a * p.a + p.g * p.g * lb * lb;
    w.d2 = w.d1 * (p.g * p.g * std::pow(lb, 5) / (6.0 * p.D) +
                   (4.0 * a2g2 + p.g) / p.g) +
           32.0 * a2g2 / p.D + 32.0 * std::pow(lb, 3) / (3.0 * p.D) +
           w.d4 * 4.0 * btp_sq / lambda_min_Q;
    w.d3 = w.d1 * 4.0 * lb * lb / p.g + w.d1 * 4.0 * std::pow(lb, 3) / (3.0 * p.g) +
           32.0 * std::pow(lb, 5) / (3.0 * p.D) + 32.0 * std::pow(lb, 3) / (3.0 * p.D);
    w.alpha = std::min({w.d1 * p.D / 8.0, p.g / 16.0,
                        lambda_min_Q / (2.0 * lmin_P), c});
    return w;
}

NormEquivalence norm_equivalence_constants(const PhysicalParams& p,
                                           const LyapunovWeights& w, const Mat2& P,
                                           double k_n) {
    NormEquivalence e;
    const double lb = p.l_bar;
    e.M1 = 4.0 * std::pow(p.D_e, 3) * lb + 4.0 * p.D_e * std::pow(lb, 3);
    e.M2 = 12.0 * k_n * k_n;
    e.M3 = std::max(lb * lb, 1.0);
    e.M4 = std::max(1.0 / (lb * lb), 1.0);
    const Eigen::SelfAdjointEigenSolver<Mat2> es(P);
    const double lmin_P = es.eigenvalues()(0);
    const double dmax = std::max(w.d1, 1.0);
    e.Sigma1 = std::max(w.d2, w.d3) * std::exp(w.c * p.D_e) + 0.5 * e.M1 * e.M3 * dmax;
    e.Sigma2 = 1.5 * e.M3 * dmax;
    e.Sigma3 = w.d4 / lmin_P + 0.5 * e.M2 * e.M3 * dmax;
    e.delta_lo = 1.0 / std::max({e.Sigma1, e.Sigma2, e.Sigma3});
    e.delta_hi = std::max({2.0 + 2.0 * e.M1, 12.0, (1.0 + e.M2) / lmin_P});
    return e;
}

DecayFit fit_decay(std::span<const double> ts, std::span<const double> values,
                   double transient_frac) {
    if (ts.size() != values.size() || ts.size() < 2) {
        throw DomainError("fit_decay: need matching sample arrays");
    }
    const double t0 = ts.front() + transient_frac * (ts.back() - ts.front());
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts[i] < t0) continue;
        if (values[i] <= 0.0) break;  // fit the positive prefix only
        xs.push_back(ts[i]);
        ys.push_back(std::log(values[i]));
    }
    if (xs.size() < 2) {
        throw DomainError("fit_decay: no positive samples past the transient window");
    }
    const auto line = fit_line(xs, ys);
    DecayFit f;
    f.rate = -line.slope;
    f.offset = line.intercept;
    f.r2 = line.r2;
    f.decaying = f.rate > 1e-10;
    return f;
}

Diagnostics::Diagnostics(const PhysicalParams& p, const SteadyState& ss,
                         const SystemMatrices& mats, const GainVector& K,
                         std::shared_ptr<const KernelCache> cache, Config cfg)
    : p_(p), ss_(ss), mats_(mats), cache_(std::move(cache)), cfg_(cfg) {
    P_ = lyapunov_solve(mats_.A + mats_.B * K.row(), Mat2::Identity());
    k_n_ = k_n_constant(ss_);

    std::vector<std::shared_ptr<const KernelSet>> sets;
    const double l_lo = 0.8 * p_.l_s;
    const int n = std::max(2, cfg_.l_samples);
    for (int i = 0; i < n; ++i) {
        const double l = l_lo + (p_.l_bar - l_lo) * double(i) / double(n - 1);
        sets.push_back(cache_->get(l));
    }
    lconsts_ = estimate_L_constants(sets, mats_, cfg_.quad_nodes);
    weights_ = select_weights(p_, lconsts_, P_, 1.0, cfg_.c, cfg_.eps, cfg_.d1_floor);
    equiv_ = norm_equivalence_constants(p_, weights_, P_, k_n_);
}

NormReport Diagnostics::evaluate(const Eigen::VectorXd& u_profile,
                                 std::span<const double> v_history, const Vec2& X,
                                 double l) const {
    const auto ks = cache_->view(l);
    const auto tr = forward_transform(u_profile, v_history, X, l, ks, mats_);

    NormReport r;
    const Eigen::Index N = u_profile.size() - 1;
    const double dx = l / double(N);

    // u norms
    {
        std::vector<double> us(N + 1), uxs(N + 1);
        const Eigen::VectorXd ux = fd_derivative(u_profile, dx);
        for (Eigen::Index i = 0; i <= N; ++i) {
            us[i] = u_profile(i) * u_profile(i);
            uxs[i] = ux(i) * ux(i);
        }
        const double l2 = trapezoid(us, dx);
        r.u_L2 = std::sqrt(std::max(0.0, l2));
        r.u_H1 = std::sqrt(std::max(0.0, l2 + trapezoid(uxs, dx)));
    }
    // v norms
    double v_h1_sq = 0.0;
    {
        const Eigen::Index M = Eigen::Index(v_history.size()) - 1;
        if (M > 0) {
            const double dtau = tr.delay_dt;
            Eigen::VectorXd v(M + 1);
            for (Eigen::Index m = 0; m <= M; ++m) v(m) = v_history[std::size_t(m)];
            const Eigen::VectorXd vx = fd_derivative(v, dtau);
            std::vector<double> vs(M + 1), vxs(M + 1);
            for (Eigen::Index m = 0; m <= M; ++m) {
                vs[m] = v(m) * v(m);
                vxs[m] = vx(m) * vx(m);
            }
            v_h1_sq = trapezoid(vs, dtau) + trapezoid(vxs, dtau);
        }
    }
    r.v_H1 = std::sqrt(v_h1_sq);
    r.X_sq = X.squaredNorm();
    r.Z = r.u_H1 * r.u_H1 + v_h1_sq + r.X_sq;

    // varpi = w - x z(0) + l z(0) - h_bar(X)
    const double z0 = tr.z(0);
    const double hb = h_bar(ErrorState{X(0), X(1)}, ss_, mats_.C);
    Eigen::VectorXd varpi(N + 1);
    for (Eigen::Index i = 0; i <= N; ++i) {
        const double x = dx * double(i);
        varpi(i) = tr.w(i) - x * z0 + l * z0 - hb;
    }
    const Eigen::VectorXd varpi_x = fd_derivative(varpi, dx);
    {
        std::vector<double> a(N + 1), b(N + 1);
        for (Eigen::Index i = 0; i <= N; ++i) {
            a[i] = varpi(i) * varpi(i);
            b[i] = varpi_x(i) * varpi_x(i);
        }
        r.V1 = 0.5 * trapezoid(a, dx);
        r.V2 = 0.5 * trapezoid(b, dx);
    }
    // z norms with the exponential weight
    double z_h1_sq = 0.0;
    {
        const Eigen::Index M = tr.z.size() - 1;
        if (M > 0) {
            const double dtau = tr.delay_dt;
            const Eigen::VectorXd zx = fd_derivative(tr.z, dtau);
            std::vector<double> a(M + 1), b(M + 1), zs(M + 1), zxs(M + 1);
            for (Eigen::Index m = 0; m <= M; ++m) {
                const double wgt = std::exp(weights_.c * dtau * double(m));
                a[m] = wgt * tr.z(m) * tr.z(m);
                b[m] = wgt * zx(m) * zx(m);
                zs[m] = tr.z(m) * tr.z(m);
                zxs[m] = zx(m) * zx(m);
            }
            r.V3 = 0.5 * trapezoid(a, dtau);
            r.V4 = 0.5 * trapezoid(b, dtau);
            z_h1_sq = trapezoid(zs, dtau) + trapezoid(zxs, dtau);
        }
    }
    r.V5 = X.transpose() * P_ * X;
    r.V = weights_.d1 * r.V1 + r.V2 + weights_.d2 * r.V3 + weights_.d3 * r.V4 +
          weights_.d4 * r.V5;

    // Pi in target coordinates
    double w_h1_sq = 0.0;
    {
        const Eigen::VectorXd wx = fd_derivative(tr.w, dx);
        std::vector<double> ws(N + 1), wxs(N + 1);
        for (Eigen::Index i = 0; i <= N; ++i) {
            ws[i] = tr.w(i) * tr.w(i);
            wxs[i] = wx(i) * wx(i);
        }
        w_h1_sq = trapezoid(ws, dx) + trapezoid(wxs, dx);
    }
    r.Pi = w_h1_sq + z_h1_sq + r.X_sq;
    return r;
}

NormReport Diagnostics::evaluate(const Frame& f) const {
    Eigen::VectorXd u(f.c.size());
    const Eigen::Index N = f.c.size() - 1;
    for (Eigen::Index i = 0; i <= N; ++i) {
        u(i) = f.c(i) - ss_.c_eq(f.l * double(i) / double(N));
    }
    const Vec2 X(f.c_c - ss_.c_inf, f.l - ss_.l_s);
    return evaluate(u, f.history, X, f.l);
}

TransformResult Diagnostics::forward(const Frame& f) const {
    Eigen::VectorXd u(f.c.size());
    const Eigen::Index N = f.c.size() - 1;
    for (Eigen::Index i = 0; i <= N; ++i) {
        u(i) = f.c(i) - ss_.c_eq(f.l * double(i) / double(N));
    }
    const Vec2 X(f.c_c - ss_.c_inf, f.l - ss_.l_s);
    return forward_transform(u, f.history, X, f.l, cache_->view(f.l), mats_);
}

DiagHook Diagnostics::hook() const {
    return [this](const SimState& s, double) -> std::array<double, 6> {
        Eigen::VectorXd u(s.c.size());
        const Eigen::Index N = s.c.size() - 1;
        for (Eigen::Index i = 0; i <= N; ++i) {
            u(i) = s.c(i) - ss_.c_eq(s.l * double(i) / double(N));
        }
        const Vec2 X(s.c_c - ss_.c_inf, s.l - ss_.l_s);
        const auto hist = s.delay.history();
        const auto r = evaluate(u, hist, X, s.l);
        return {r.V, r.V1, r.V2, r.V3, r.V4, r.V5};
    };
}

TargetResiduals Diagnostics::residuals(std::span<const Frame> frames) const {
    if (frames.size() < 2) {
        throw DomainError("target_residuals: need at least two frames");
    }
    TargetResiduals out;

    TransformResult prev = forward(frames[0]);
    for (std::size_t fi = 1; fi < frames.size(); ++fi) {
        const Frame& fb = frames[fi];
        const TransformResult cur = forward(fb);
        const double dtf = fb.t - frames[fi - 1].t;
        const auto ks = cache_->view(fb.l);

        const Eigen::Index N = cur.w.size() - 1;
        const double dx = fb.l / double(N);
        const Vec2 X = cur.X;
        const double z1 = X(0);
        const double l_dot = mats_.r_g * z1;
        const double hb = h_bar(ErrorState{X(0), X(1)}, ss_, mats_.C);
        const Vec2 fX = f_nonlinear(ErrorState{X(0), X(1)}, mats_.kappa);

        const auto tables = build_phi_tables(ks.phi(), dx, int(N));

        // w-dynamics residual on interior nodes, previous w interpolated onto
        // the current physical grid.
        const double dx_prev = prev.l / double(N);
        auto w_prev_at = [&](double x) {
            const double t = std::clamp(x / dx_prev, 0.0, double(N));
            const Eigen::Index j = std::min(Eigen::Index(t), N - 1);
            const double fr = t - double(j);
            return (1.0 - fr) * prev.w(j) + fr * prev.w(j + 1);
        };
        for (Eigen::Index i = 2; i <= N - 2; ++i) {
            const double x = dx * double(i);
            const double w_t = (cur.w(i) - w_prev_at(x)) / dtf;
            const double w_x = (cur.w(i + 1) - cur.w(i - 1)) / (2.0 * dx);
            const double w_xx = (cur.w(i + 1) - 2.0 * cur.w(i) + cur.w(i - 1)) / (dx * dx);
            const RowVec2 phi = tables.phi[N - i];
            const RowVec2 phip = tables.phi_p[N - i];
            const double k_xl = phi.dot(mats_.B.transpose()) / mats_.D;
            const RowVec2 Fr = phip - k_xl * mats_.C.transpose();
            const double F = Fr.dot(X.transpose());
            const double phif = phi.dot(fX.transpose());
            const double gb = (phip + (mats_.a / mats_.D) * phi).dot(mats_.B.transpose());
            const double rhs = mats_.D * w_xx - mats_.a * w_x - mats_.g * cur.w(i) -
                               l_dot * F - phif - gb * hb;
            out.w_pde = std::max(out.w_pde, std::abs(w_t - rhs));
        }

        // z transport residual; the x-stencil is widened to the frame spacing
        // so both derivatives act on the same resolution (x is time-like).
        const Eigen::Index M = cur.z.size() - 1;
        if (M >= 2) {
            const double dtau = cur.delay_dt;
            const Eigen::Index step =
                std::max(Eigen::Index(1), Eigen::Index(std::llround(dtf / dtau)));
            for (Eigen::Index m = step; m + step <= M; ++m) {
                const double x_m = dtau * double(m);
                const double z_t = (cur.z(m) - prev.z(m)) / dtf;
                const double z_x =
                    (cur.z(m + step) - cur.z(m - step)) / (2.0 * dtau * double(step));
                const RowVec2 psi_m = ks.psi_at(x_m);
                const double q_xl = -psi_m.dot(mats_.B.transpose()) / mats_.D;
                const RowVec2 psip = RowVec2(psi_m * mats_.A) -
                                     (mats_.D * ks.q_y_at_l(x_m) +
                                      mats_.a * q_xl) *
                                         mats_.C.transpose();
                const RowVec2 coeff = q_xl * mats_.C.transpose() + psip;
                const double extra = l_dot * coeff.dot(X.transpose());
                out.z_transport = std::max(out.z_transport, std::abs(z_t - z_x + extra));
            }
        }
        out.z_end = std::max(out.z_end, std::abs(cur.z(M)));

        // Homogenized boundary identities.
        const double z0 = cur.z(0);
        Eigen::VectorXd varpi(N + 1);
        for (Eigen::Index i = 0; i <= N; ++i) {
            const double x = dx * double(i);
            varpi(i) = cur.w(i) - x * z0 + fb.l * z0 - hb;
        }
        out.varpi_l = std::max(out.varpi_l, std::abs(varpi(N)));
        const double vx0 = (-3.0 * varpi(0) + 4.0 * varpi(1) - varpi(2)) / (2.0 * dx);
        out.varpi_x0 = std::max(out.varpi_x0, std::abs(vx0));
        const double u0 = fb.c(0) - ss_.c_eq(0.0);
        out.varpi_x0_compensated =
            std::max(out.varpi_x0_compensated, std::abs(vx0 + u0 / mats_.l_c));

        prev = cur;
        ++out.frames_used;
    }
    return out;
}

}  // namespace axon
