#include "driftlab/kernels/algo.hpp"
#include "driftlab/kernels/lanes_scalar.hpp"

namespace driftlab::kernels {

void sincos_batch_scalar(const double* x, double* s, double* c, std::size_t n) {
    sincos_batch_impl<LaneS>(x, s, c, n);
}

void coverage_row_scalar(const CoverageRowArgs& a, int count, std::uint8_t* hit, double* tau) {
    coverage_row_impl<LaneS>(a, count, hit, tau);
}

void ensemble_run_scalar(EnsembleState& st, const CompiledPert& f, double mu, double dt,
                         long nsteps, double blowup, int substeps) {
    ensemble_run_impl<LaneS>(st, f, mu, dt, nsteps, blowup, substeps);
}

}  // namespace driftlab::kernels
