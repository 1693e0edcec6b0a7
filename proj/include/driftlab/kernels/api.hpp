#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "driftlab/perturbation.hpp"

namespace driftlab::kernels {

/// Name of the backend the dispatcher picked ("avx2" or "scalar").
/// Resolution happens once, on first use; DRIFTLAB_FORCE_SCALAR=1 in the
/// environment pins the scalar path regardless of CPU support.
const char* backend_name();
bool avx2_available();

/// Elementwise sin and cos.  Identical bits from both backends.
void sincos_batch(const double* x, double* s, double* c, std::size_t n);
void sincos_batch_scalar(const double* x, double* s, double* c, std::size_t n);
void sincos_batch_avx2(const double* x, double* s, double* c, std::size_t n);

/**
 * First-hit stamping for one grid row of the torus coverage sweep.  Cell
 * centers along a row are affine in the row index k, so with orbit chunk
 * y(tau) = Omega * tau the quantities
 *
 *   b(k)    = Omega . center_k          = b0 + b1 k
 *   disc(k) = b(k)^2 - |Omega|^2 (|center_k|^2 - r^2) = (A k + B) k + C
 *
 * describe the hit window [ (b - sqrt(disc)) inv_a, (b + sqrt(disc)) inv_a ]
 * exactly.  For each k in [0, count): hit[k] = 1 when the window meets
 * [t0, t1], and tau[k] is the first time inside it.
 */
struct CoverageRowArgs {
    double b0, b1, A, B, C;
    double inv_a;  ///< 1 / |Omega|^2
    double t0, t1;
};
void coverage_row(const CoverageRowArgs& a, int count, std::uint8_t* hit, double* tau);
void coverage_row_scalar(const CoverageRowArgs& a, int count, std::uint8_t* hit, double* tau);
void coverage_row_avx2(const CoverageRowArgs& a, int count, std::uint8_t* hit, double* tau);

/// Perturbation flattened into plain arrays for the batched stepper.
struct CompiledPert {
    int d = 0;
    int nmodes = 0;
    int deg = 0;                ///< shared trig degree in q, zero padded
    std::vector<double> n;      ///< nmodes x d, integer entries as doubles
    std::vector<double> l;      ///< nmodes
    std::vector<double> c0;     ///< nmodes
    std::vector<double> cc, cs;    ///< nmodes x deg, profile coefficients
    std::vector<double> dcc, dcs;  ///< nmodes x deg, derivative profile

    static CompiledPert compile(const driftlab::TrigPerturbation& f);
};

/**
 * Structure-of-arrays trajectory batch.  Lane arrays are padded to a
 * multiple of 4; padding lanes carry active = 0.  Diagnostics are running
 * extrema sampled at every kick midpoint.
 */
struct EnsembleState {
    int d = 0;
    std::size_t count = 0;   ///< live trajectories
    std::size_t stride = 0;  ///< padded lane count
    double t = 0.0;
    std::vector<double> phi;       ///< d x stride
    std::vector<double> act;       ///< d x stride, actions I
    std::vector<double> act0;      ///< d x stride, initial actions
    std::vector<double> q, p;      ///< stride
    std::vector<double> active;    ///< stride, 1.0 live / 0.0 frozen
    std::vector<double> max_drift; ///< stride, running max_j |I_j - I_j(0)|
    std::vector<double> min_abs_e; ///< stride, running min |E(q, p)|
    std::vector<double> blowup_time;  ///< stride, +inf unless frozen

    static EnsembleState create(int d, std::size_t count);
    std::size_t lane(std::size_t traj, int j = 0) const {
        return static_cast<std::size_t>(j) * stride + traj;
    }
    /// Call once after filling phi/act/q/p: snapshots act0, seeds the
    /// diagnostics with the initial energy, zeroes the drift.
    void finalize_initial();
};

/**
 * Advance every active lane by nsteps Strang splittings of size dt
 * (substeps = 1) or by the order-4 triple jump (substeps = 3).  Lanes
 * whose action or momentum leaves [-blowup, blowup], or that go
 * nonfinite, freeze in place with blowup_time set.  The shared clock is
 * re-anchored to t0 + k dt after every step, matching the scalar
 * integrator.
 */
void ensemble_run(EnsembleState& st, const CompiledPert& f, double mu, double dt, long nsteps,
                  double blowup, int substeps = 1);
void ensemble_run_scalar(EnsembleState& st, const CompiledPert& f, double mu, double dt,
                         long nsteps, double blowup, int substeps = 1);
void ensemble_run_avx2(EnsembleState& st, const CompiledPert& f, double mu, double dt,
                       long nsteps, double blowup, int substeps = 1);

}  // namespace driftlab::kernels
