#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "axon/delay_line.hpp"
#include "axon/error_system.hpp"
#include "axon/params.hpp"
#include "axon/steady_state.hpp"

namespace axon {

enum class Scheme { ImplicitEuler, CrankNicolson };
enum class ControlMode { Compensated, Uncompensated, OpenLoop };

/// Time-integration settings and initial perturbation description.
struct SimConfig {
    int N = 200;          ///< grid intervals on the normalized domain [0, 1]
    double dt = 1e-3;     ///< time step; must divide D_e
    double t_end = 18.0;
    Scheme scheme = Scheme::ImplicitEuler;
    ControlMode mode = ControlMode::Compensated;

    double perturb_amp = 0.05;      ///< bump amplitude as a fraction of c_inf
    double perturb_cone = 0.05;     ///< cone offset as a fraction of c_inf
    double perturb_length = -0.05;  ///< z2(0) as a fraction of l_s
    double perturbation_scale = 1.0;///< global multiplier over the three knobs
    unsigned long seed = 1;         ///< seeds the +-10% jitter on each knob
    double prehistory = 0.0;        ///< U on [-D_e, 0)

    int record_stride = 10;         ///< trajectory rows every this many steps
    double l_min_frac = 0.01;       ///< collapse guard, l_min = l_min_frac * l_s
    double overflow_guard = 1e6;    ///< divergence threshold on error norms
    double transient_frac = 0.1;    ///< skipped fraction for decay fits

    std::vector<std::string> violations(const PhysicalParams& p) const;
    void validate(const PhysicalParams& p) const;
};

/// Plant state on the boundary-immobilized grid xi = x / l(t).
struct SimState {
    Eigen::VectorXd c;   ///< N+1 nodes on xi in [0, 1]; c(N) = c_c
    double c_c = 0.0;
    double l = 0.0;
    double t = 0.0;
    DelayLine delay;

    SimState(int n, double D_e, double dt, double prehistory)
        : c(Eigen::VectorXd::Zero(n + 1)), delay(D_e, dt, prehistory) {}
};

/// Optional manufactured-solution forcing, f(xi, t) added to c_t.
using SourceFn = std::function<double(double, double)>;

/// Controller evaluated on the post-step state; returns U(t).
using ControlFn = std::function<double(const SimState&)>;

/// Optional per-row diagnostic hook returning {V, V1, V2, V3, V4, V5}.
using DiagHook = std::function<std::array<double, 6>(const SimState&, double)>;

/// One PDE sub-step of the immobilized tubulin equation with Neumann flux
/// data at xi = 0 (c_x(0,t) = -q_s(t - D_e)) and Dirichlet c(1) = c_c.
/// q_s_old/q_s_new are the delayed fluxes at the step endpoints; implicit
/// Euler uses the new value, Crank-Nicolson averages. dirichlet_new overrides
/// the end-of-step cone trace (manufactured-solution runs); by default the
/// value is frozen at c_c for the sub-step. Throws DomainCollapseError when
/// l <= l_min.
void pde_step(SimState& s, const PhysicalParams& p, double q_s_old, double q_s_new,
              double dt, Scheme scheme, double l_min,
              const SourceFn& source = nullptr,
              double dirichlet_new = std::numeric_limits<double>::quiet_NaN());

/// One explicit RK2 step of the cone/length ODEs on the frozen profile,
/// then re-imposes the Dirichlet consistency c(1) = c_c.
void ode_step(SimState& s, const PhysicalParams& p, double dt, double l_min);

/// Scalar norms of the reference error attached to a state.
struct StateNorms {
    double z1 = 0.0;
    double z2 = 0.0;
    double u_L2 = 0.0;
    double u_H1 = 0.0;
    double v_H1 = 0.0;
    double Z = 0.0;  ///< u_H1^2 + v_H1^2 + X^T X
};

StateNorms state_norms(const SimState& s, const SteadyState& ss);

struct TrajectoryRow {
    double t = 0.0, l = 0.0, c_c = 0.0;
    double U_now = 0.0, U_applied = 0.0;
    double z1 = 0.0, z2 = 0.0;
    double norm_u_L2 = 0.0, norm_u_H1 = 0.0;
    double V_total = 0.0;
    std::array<double, 5> V{};
    double Z = 0.0;     ///< in-memory only, not a CSV column
    double v_H1 = 0.0;  ///< in-memory only
};

/// Full state snapshot for post-hoc transform diagnostics.
struct Frame {
    double t = 0.0;
    Eigen::VectorXd c;
    double c_c = 0.0, l = 0.0;
    std::vector<double> history;  ///< U over [t - D_e, t], oldest first
    double U_now = 0.0;
    double U_applied = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryRow> rows;
    std::vector<Frame> frames;
    std::string termination = "completed";
    StateNorms initial;
    double record_dt = 0.0;
};

/// Integrates the closed loop: sample delay -> physical flux -> pde_step ->
/// ode_step -> controller -> push. Divergence and domain collapse become
/// terminal events recorded on the trajectory.
Trajectory run_closed_loop(const PhysicalParams& p, const SimConfig& cfg,
                           const SteadyState& ss, const ControlFn& controller,
                           const DiagHook& diag = nullptr);

/// Seeded perturbed initial state: raised-cosine bump plus a quadratic ramp
/// lifting the cone value, on top of the equilibrium profile.
SimState build_initial_state(const PhysicalParams& p, const SimConfig& cfg,
                             const SteadyState& ss);

}  // namespace axon
