#pragma once

#include <complex>
#include <vector>

#include "driftlab/perturbation.hpp"
#include "driftlab/smallmat.hpp"

namespace driftlab {

struct MelnikovConfig {
    double t_cut = 40.0;    ///< truncation half-width of the separatrix integral
    double quad_tol = 1e-12;
    int max_panels = 4000;
};

/**
 * Separatrix Fourier integral of one amplitude profile,
 *
 *   P + i S = integral over R of [g(q0(t)) - g(0)] * e^{i nu t} dt,
 *
 * with q0 the upper separatrix.  The integrand decays like e^{-|t|}, so
 * truncation at +-t_cut leaves a tail below 8 * Lip(g) * e^{-t_cut}, which
 * is added to the reported error estimate.
 */
std::complex<double> mode_integral(const QPolynomial& g, double nu,
                                   const MelnikovConfig& cfg = {});

/// Exact transform of the profile 1 - cos q: 2 pi nu / sinh(pi nu / 2),
/// continued through the removable singularity at nu = 0 with value 4.
double sech2_transform_exact(double nu);

struct MinimizeOptions {
    int max_iter = 100;
    double grad_tol = 1e-9;
    double eig_rel_tol = 1e-6;  ///< nondegeneracy: lambda_min > eig_rel_tol * max row sum
    double step_cap = 1.5707963267948966;  ///< max-norm cap on a Newton step
};

struct MinResult {
    std::vector<double> x;  ///< minimizer (phi0_1..phi0_d, theta0), wrapped to [0, 2 pi)
    double value = 0.0;
    double grad_norm = 0.0;
    std::vector<double> eigenvalues;  ///< Hessian spectrum at x, ascending
    int iterations = 0;
    bool converged = false;
    bool nondegenerate = false;
};

/**
 * Splitting potential on the (d+1)-torus of gluing phases x = (phi0, theta0):
 *
 *   L(x) = - sum_modes [ P_k cos(psi_k) - S_k sin(psi_k) ],
 *   psi_k = n_k . phi0 + l_k theta0,  nu_k = n_k . omega + l_k,
 *
 * the sign chosen so transition chains hang off the *minima*.  The mode
 * integrals (P_k, S_k) are computed once per frequency; evaluation is then
 * a short trig sum.
 */
class MelnikovModel {
  public:
    MelnikovModel(const TrigPerturbation& f, std::vector<double> omega,
                  const MelnikovConfig& cfg = {});

    int dim() const { return d_; }                       ///< rotator count d
    int vars() const { return d_ + 1; }                  ///< optimization dimension
    const std::vector<double>& omega() const { return omega_; }
    /// Per-mode separatrix integrals P + iS, in mode order of the perturbation.
    const std::vector<std::complex<double>>& coefficients() const { return ps_; }
    bool degenerate() const;  ///< true when L vanishes identically

    double value(const std::vector<double>& x) const;
    std::vector<double> gradient(const std::vector<double>& x) const;
    SmallMat hessian(const std::vector<double>& x) const;

    /**
     * Slow reference evaluation: quadrature of the phase-shifted difference
     * f(omega t + phi0, q0(t), t + theta0) - f(omega t + phi0, 0, t + theta0)
     * along the separatrix (negated).  Exists to cross-check value().
     */
    double value_direct(const std::vector<double>& x) const;

    /// Damped Newton with Armijo backtracking from x0; falls back to a
    /// gradient step whenever the Hessian is not positive definite.
    MinResult find_minimum(const std::vector<double>& x0,
                           const MinimizeOptions& opts = {}) const;

    /// Coarse torus grid search followed by a Newton polish.
    MinResult find_global_minimum(int grid_per_dim = 12,
                                  const MinimizeOptions& opts = {}) const;

  private:
    int d_;
    std::vector<double> omega_;
    MelnikovConfig cfg_;
    TrigPerturbation pert_;               // kept for value_direct
    std::vector<std::vector<int>> keys_;  // (n_1..n_d, l) per mode
    std::vector<double> nu_;
    std::vector<std::complex<double>> ps_;
};

struct ScanPoint {
    double s = 0.0;                 ///< position along the segment, in [0, 1]
    std::vector<double> omega;
    MinResult minimum;
};

/**
 * Track the splitting minimum along the straight frequency segment from
 * omega_from to omega_to (samples points, endpoints included).  The first
 * point is located by grid search, later ones by continuation.
 */
std::vector<ScanPoint> scan_frequency_segment(const TrigPerturbation& f,
                                              const std::vector<double>& omega_from,
                                              const std::vector<double>& omega_to, int samples,
                                              const MelnikovConfig& cfg = {},
                                              const MinimizeOptions& opts = {});

}  // namespace driftlab
