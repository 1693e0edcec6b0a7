#include "driftlab/kernels/algo.hpp"
#include "driftlab/kernels/lanes_avx2.hpp"

namespace driftlab::kernels {

void sincos_batch_avx2(const double* x, double* s, double* c, std::size_t n) {
    sincos_batch_impl<LaneV>(x, s, c, n);
}

void coverage_row_avx2(const CoverageRowArgs& a, int count, std::uint8_t* hit, double* tau) {
    coverage_row_impl<LaneV>(a, count, hit, tau);
}

void ensemble_run_avx2(EnsembleState& st, const CompiledPert& f, double mu, double dt,
                       long nsteps, double blowup, int substeps) {
    ensemble_run_impl<LaneV>(st, f, mu, dt, nsteps, blowup, substeps);
}

}  // namespace driftlab::kernels
