#pragma once

#include <cstddef>
#include <vector>

#include "driftlab/lattice.hpp"

namespace driftlab {

struct ErgodizationConfig {
    double grid_res = 0.0;  ///< target cell edge; 0 picks delta / 8
    double t_max = 1e4;     ///< abandon the sweep past this time
    double chunk = 0.0;     ///< sweep chunk length; 0 picks one from the flow speed
    std::size_t max_cells = 20000000;
};

/**
 * Cover-time measurement.  `time` is the first moment every center of the
 * fractional grid lies within delta of the orbit segment, so it brackets
 * the true delta-ergodization time T:
 *
 *   T(delta + slack) <= time <= T(delta),
 *
 * with `slack` the worst distance from a torus point to its nearest grid
 * center.  +infinity when the sweep hits t_max first (resonant flows).
 */
struct ErgodizationResult {
    double time = 0.0;
    double slack = 0.0;
    std::size_t cells = 0;
    double t_searched = 0.0;
};

/**
 * Ergodization time of the linear flow tau -> tau * Omega on R^l / Gamma,
 * started at the origin, measured by stamping first-hit times onto a grid
 * of cell centers.  Row-by-row stamping runs through the data-parallel
 * coverage kernel.
 */
ErgodizationResult ergodization_time(const Lattice& lat, const std::vector<double>& omega,
                                     double delta, const ErgodizationConfig& cfg = {});

/**
 * Empirical check of the spectral lower bound
 *
 *   T(delta) >= (1/4) / alpha(Gamma, Omega, 1/(4 delta)).
 *
 * c_emp = delta * min{ |p| : p dual, p != 0, |p . Omega| <= 1 / t_emp }
 * ties the measured time back to the dual mode that was slowest to
 * equidistribute; NaN when t_emp is infinite.
 */
struct LemmaCheck {
    double t_emp = 0.0;
    double alpha_val = 0.0;
    double lower = 0.0;
    bool holds = false;
    double c_emp = 0.0;
};

LemmaCheck check_lemma_bounds(const Lattice& lat, const std::vector<double>& omega,
                              double delta, const ErgodizationConfig& cfg = {});

/// (a / delta)^tau / C, the ergodization ceiling for a (C, tau)-Diophantine
/// direction; the stability estimates consume this form directly.
double diophantine_bound(double C, double tau, double delta, double a = 1.0);

}  // namespace driftlab
