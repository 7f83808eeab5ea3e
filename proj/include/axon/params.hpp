#pragma once

#include <string>
#include <vector>

namespace axon {

/**
 * Physical plant constants plus the control target.
 *
 * Unit convention used throughout (the model itself is unit-agnostic):
 * lengths in um, time in minutes, concentrations in uM.
 *
 * Immutable after construction; share freely across threads.
 */
struct PhysicalParams {
    double D = 1.0;         ///< tubulin diffusion constant [um^2/min]
    double a = 0.05;        ///< advection velocity [um/min]
    double g = 0.2;         ///< degradation rate [1/min]
    double l_c = 2.0;       ///< growth ratio [um]
    double r_g = 0.5;       ///< lumped growth rate [um^4/(umol*min)]
    double r_tilde_g = 0.1; ///< microtubule reaction rate [1/min]
    double c_inf = 1.0;     ///< equilibrium cone concentration [uM]
    double D_e = 1.0;       ///< input delay [min]
    double l_s = 1.0;       ///< desired axon length [um]
    double l_bar = 2.0;     ///< domain bound for the stability analysis [um]

    /// Violated constraints, empty when the set is admissible.
    std::vector<std::string> violations() const;

    /// Throws ValidationError listing every violated constraint.
    void validate() const;

    /// Admissibility of the physical constants for the configured domain
    /// bound: D/(4*l_bar) >= a.
    bool assumption3_holds() const { return D / (4.0 * l_bar) >= a; }
};

}  // namespace axon
