#include <cmath>
#include <cstdlib>
#include <limits>

#include "driftlab/dynamics.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/kernels/api.hpp"

namespace driftlab::kernels {

bool avx2_available() {
#ifdef DRIFTLAB_HAVE_AVX2
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

bool use_avx2() {
    static const bool picked = [] {
        const char* env = std::getenv("DRIFTLAB_FORCE_SCALAR");
        if (env && env[0] == '1') return false;
        return avx2_available();
    }();
    return picked;
}

}  // namespace

const char* backend_name() { return use_avx2() ? "avx2" : "scalar"; }

void sincos_batch(const double* x, double* s, double* c, std::size_t n) {
    use_avx2() ? sincos_batch_avx2(x, s, c, n) : sincos_batch_scalar(x, s, c, n);
}

void coverage_row(const CoverageRowArgs& a, int count, std::uint8_t* hit, double* tau) {
    use_avx2() ? coverage_row_avx2(a, count, hit, tau) : coverage_row_scalar(a, count, hit, tau);
}

void ensemble_run(EnsembleState& st, const CompiledPert& f, double mu, double dt, long nsteps,
                  double blowup, int substeps) {
    use_avx2() ? ensemble_run_avx2(st, f, mu, dt, nsteps, blowup, substeps)
               : ensemble_run_scalar(st, f, mu, dt, nsteps, blowup, substeps);
}

#ifndef DRIFTLAB_HAVE_AVX2
void sincos_batch_avx2(const double*, double*, double*, std::size_t) {
    throw Error("avx2 backend not built on this platform");
}
void coverage_row_avx2(const CoverageRowArgs&, int, std::uint8_t*, double*) {
    throw Error("avx2 backend not built on this platform");
}
void ensemble_run_avx2(EnsembleState&, const CompiledPert&, double, double, long, double, int) {
    throw Error("avx2 backend not built on this platform");
}
#endif

CompiledPert CompiledPert::compile(const driftlab::TrigPerturbation& f) {
    CompiledPert out;
    out.d = f.dim();
    out.nmodes = static_cast<int>(f.modes().size());
    if (out.d > 8) throw ConfigError("batched stepper supports at most 8 rotators");
    int deg = 0;
    for (const auto& m : f.modes()) deg = std::max(deg, static_cast<int>(m.g.degree()));
    if (deg > 6) throw ConfigError("batched stepper supports profile degree at most 6");
    out.deg = deg;
    out.n.resize(static_cast<std::size_t>(out.nmodes) * out.d);
    out.l.resize(static_cast<std::size_t>(out.nmodes));
    out.c0.resize(static_cast<std::size_t>(out.nmodes));
    std::size_t nd = static_cast<std::size_t>(out.nmodes) * deg;
    out.cc.assign(nd, 0.0);
    out.cs.assign(nd, 0.0);
    out.dcc.assign(nd, 0.0);
    out.dcs.assign(nd, 0.0);
    for (int k = 0; k < out.nmodes; ++k) {
        const auto& m = f.modes()[static_cast<std::size_t>(k)];
        for (int j = 0; j < out.d; ++j)
            out.n[static_cast<std::size_t>(k * out.d + j)] =
                static_cast<double>(m.n[static_cast<std::size_t>(j)]);
        out.l[static_cast<std::size_t>(k)] = static_cast<double>(m.l);
        out.c0[static_cast<std::size_t>(k)] = m.g.constant_term();
        for (std::size_t mm = 0; mm < m.g.degree(); ++mm) {
            std::size_t o = static_cast<std::size_t>(k) * deg + mm;
            double harmonic = static_cast<double>(mm + 1);
            out.cc[o] = m.g.cos_coeffs()[mm];
            out.cs[o] = m.g.sin_coeffs()[mm];
            out.dcc[o] = harmonic * m.g.sin_coeffs()[mm];  // g' in the same layout
            out.dcs[o] = -harmonic * m.g.cos_coeffs()[mm];
        }
    }
    return out;
}

EnsembleState EnsembleState::create(int d, std::size_t count) {
    if (d < 1 || d > 8) throw ConfigError("EnsembleState: d must be in [1, 8]");
    EnsembleState st;
    st.d = d;
    st.count = count;
    st.stride = (count + 3u) & ~static_cast<std::size_t>(3);
    if (st.stride == 0) st.stride = 4;
    std::size_t ds = static_cast<std::size_t>(d) * st.stride;
    st.phi.assign(ds, 0.0);
    st.act.assign(ds, 0.0);
    st.act0.assign(ds, 0.0);
    st.q.assign(st.stride, 0.0);
    st.p.assign(st.stride, 0.0);
    st.active.assign(st.stride, 0.0);
    for (std::size_t i = 0; i < count; ++i) st.active[i] = 1.0;
    st.max_drift.assign(st.stride, 0.0);
    st.min_abs_e.assign(st.stride, std::numeric_limits<double>::infinity());
    st.blowup_time.assign(st.stride, std::numeric_limits<double>::infinity());
    return st;
}

void EnsembleState::finalize_initial() {
    act0 = act;
    for (std::size_t i = 0; i < stride; ++i) {
        max_drift[i] = 0.0;
        min_abs_e[i] = std::fabs(pendulum_energy(q[i], p[i]));
    }
}

}  // namespace driftlab::kernels
