#pragma once

#include "driftlab/kernels/api.hpp"

// Template bodies of the data-parallel kernels, instantiated once per
// backend.  All arithmetic goes through the lane wrappers; never call
// libm here or the backends drift apart.

namespace driftlab::kernels {

// fdlibm coefficients for sin/cos on [-pi/4, pi/4] and the 3-term
// Cody-Waite split of pi/2.
inline constexpr double kTwoOverPi = 6.36619772367581382433e-01;
inline constexpr double kMagic = 6755399441055744.0;  // 1.5 * 2^52
inline constexpr double kPio2_1 = 1.57079632673412561417e+00;
inline constexpr double kPio2_2 = 6.07710050630396597660e-11;
inline constexpr double kPio2_3 = 2.02226624871116645580e-21;
inline constexpr double kS1 = -1.66666666666666324348e-01;
inline constexpr double kS2 = 8.33333333332248946124e-03;
inline constexpr double kS3 = -1.98412698298579493134e-04;
inline constexpr double kS4 = 2.75573137070700676789e-06;
inline constexpr double kS5 = -2.50507602534068634195e-08;
inline constexpr double kS6 = 1.58969099521155010221e-10;
inline constexpr double kC1 = 4.16666666666666019037e-02;
inline constexpr double kC2 = -1.38888888888741095749e-03;
inline constexpr double kC3 = 2.48015872894767294178e-05;
inline constexpr double kC4 = -2.75573143513906633035e-07;
inline constexpr double kC5 = 2.08757232129817482790e-09;
inline constexpr double kC6 = -1.13596475577881948265e-11;

/**
 * sin and cos via magic-number quadrant rounding.  The biased value
 * kd = round(x * 2/pi) + 1.5 * 2^52 keeps k mod 4 in its two lowest
 * mantissa bits; the Cody-Waite subtraction then reduces x to
 * [-pi/4, pi/4] where the fdlibm polynomials apply.  Valid far beyond
 * any |angle| this library produces (~1e6).
 */
template <class L>
inline void sincos_lane(L x, L& s, L& c) {
    L kd = fmadd(x, L::broadcast(kTwoOverPi), L::broadcast(kMagic));
    auto qb = quad_bits(kd);
    L k = kd - L::broadcast(kMagic);
    L r = fmadd(k, L::broadcast(-kPio2_1), x);
    r = fmadd(k, L::broadcast(-kPio2_2), r);
    r = fmadd(k, L::broadcast(-kPio2_3), r);
    L z = r * r;

    L ps = fmadd(z, L::broadcast(kS6), L::broadcast(kS5));
    ps = fmadd(z, ps, L::broadcast(kS4));
    ps = fmadd(z, ps, L::broadcast(kS3));
    ps = fmadd(z, ps, L::broadcast(kS2));
    ps = fmadd(z, ps, L::broadcast(kS1));
    L sin_r = fmadd(z * r, ps, r);

    L pc = fmadd(z, L::broadcast(kC6), L::broadcast(kC5));
    pc = fmadd(z, pc, L::broadcast(kC4));
    pc = fmadd(z, pc, L::broadcast(kC3));
    pc = fmadd(z, pc, L::broadcast(kC2));
    pc = fmadd(z, pc, L::broadcast(kC1));
    L cos_r = fmadd(z * z, pc, fmadd(z, L::broadcast(-0.5), L::broadcast(1.0)));

    auto swap = quad_bit0(qb);
    s = flip_sign(quad_bit1(qb), blend(swap, cos_r, sin_r));
    c = flip_sign(quad_bit1(quad_inc(qb)), blend(swap, sin_r, cos_r));
}

template <class L>
inline void sincos_batch_impl(const double* x, double* s, double* c, std::size_t n) {
    std::size_t i = 0;
    for (; i + L::width <= n; i += L::width) {
        L vs, vc;
        sincos_lane(L::load(x + i), vs, vc);
        vs.store(s + i);
        vc.store(c + i);
    }
    for (; i < n; ++i) {  // tail, one lane at a time through the same math
        L vs, vc;
        sincos_lane(L::broadcast(x[i]), vs, vc);
        double out_s[L::width], out_c[L::width];
        vs.store(out_s);
        vc.store(out_c);
        s[i] = out_s[0];
        c[i] = out_c[0];
    }
}

template <class L>
inline void coverage_row_impl(const CoverageRowArgs& a, int count, std::uint8_t* hit,
                              double* tau) {
    const L b0 = L::broadcast(a.b0), b1 = L::broadcast(a.b1);
    const L A = L::broadcast(a.A), B = L::broadcast(a.B), C = L::broadcast(a.C);
    const L inv_a = L::broadcast(a.inv_a);
    const L t0 = L::broadcast(a.t0), t1 = L::broadcast(a.t1);
    const L zero = L::broadcast(0.0);

    double kbuf[L::width], tbuf[L::width];
    for (int base = 0; base < count; base += L::width) {
        for (int j = 0; j < L::width; ++j)
            kbuf[j] = static_cast<double>(base + j);
        L k = L::load(kbuf);
        L b = fmadd(b1, k, b0);
        L disc = fmadd(fmadd(A, k, B), k, C);
        auto ok = cmp_ge(disc, zero);
        L root = sqrt(max(disc, zero));  // clamp keeps sqrt quiet on misses
        L entry = (b - root) * inv_a;
        L exit = (b + root) * inv_a;
        ok = mask_and(ok, cmp_le(entry, t1));
        ok = mask_and(ok, cmp_ge(exit, t0));
        L first = max(entry, t0);
        first = blend(ok, first, zero);
        first.store(tbuf);
        for (int j = 0; j < L::width && base + j < count; ++j) {
            tau[base + j] = tbuf[j];
            hit[base + j] = 0;
        }
        // round-trip the mask through memory as 1.0/0.0; avoids a
        // per-backend movemask abstraction
        L re = blend(ok, L::broadcast(1.0), zero);
        re.store(tbuf);
        for (int j = 0; j < L::width && base + j < count; ++j)
            hit[base + j] = tbuf[j] != 0.0 ? 1 : 0;
    }
}

template <class L>
inline void ensemble_run_impl(EnsembleState& st, const CompiledPert& f, double mu, double dt,
                              long nsteps, double blowup, int substeps) {
    // triple-jump scales for the order-4 composition
    const double w1 = 1.3512071919596576340476878089715;
    const double w0 = -1.7024143839193152680953756179429;
    const double scales1[1] = {1.0};
    const double scales3[3] = {w1, w0, w1};
    const double* scales = (substeps == 3) ? scales3 : scales1;
    const int nsub = (substeps == 3) ? 3 : 1;

    const int d = st.d, nm = f.nmodes, deg = f.deg;
    const std::size_t stride = st.stride;
    const double t0 = st.t;
    const L vblow = L::broadcast(blowup);
    const L vzero = L::broadcast(0.0);
    const L vone = L::broadcast(1.0);

    for (long step = 0; step < nsteps; ++step) {
        for (int sub = 0; sub < nsub; ++sub) {
            const double h = dt * scales[sub];
            const L vh = L::broadcast(h);
            const L vh2 = L::broadcast(0.5 * h);
            const L vmuh = L::broadcast(mu * h);
            const double tm = st.t + 0.5 * h;  // shared kick time

            for (std::size_t i = 0; i < stride; i += L::width) {
                auto act_mask = cmp_lt(vzero, L::load(st.active.data() + i));
                if (mask_none(act_mask)) continue;

                L q = L::load(st.q.data() + i);
                L p = L::load(st.p.data() + i);
                L I[8], phi[8];
                for (int j = 0; j < d; ++j) {
                    I[j] = L::load(st.act.data() + st.lane(i, j));
                    phi[j] = L::load(st.phi.data() + st.lane(i, j));
                }

                // half drift
                for (int j = 0; j < d; ++j) phi[j] = fmadd(vh2, I[j], phi[j]);
                q = fmadd(vh2, p, q);

                // kick at the midpoint time
                L sq, cq;
                sincos_lane(q, sq, cq);
                L cm[6], sm[6];
                if (deg > 0) {
                    cm[0] = cq;
                    sm[0] = sq;
                    for (int m = 1; m < deg; ++m) {
                        cm[m] = cm[m - 1] * cq - sm[m - 1] * sq;
                        sm[m] = sm[m - 1] * cq + cm[m - 1] * sq;
                    }
                }
                L accI[8];
                for (int j = 0; j < d; ++j) accI[j] = vzero;
                L accP = vzero;
                for (int k = 0; k < nm; ++k) {
                    L th = L::broadcast(f.l[static_cast<std::size_t>(k)] * tm);
                    for (int j = 0; j < d; ++j)
                        th = fmadd(L::broadcast(f.n[static_cast<std::size_t>(k * d + j)]),
                                   phi[j], th);
                    L sth, cth;
                    sincos_lane(th, sth, cth);
                    L g = L::broadcast(f.c0[static_cast<std::size_t>(k)]);
                    L gq = vzero;
                    for (int m = 0; m < deg; ++m) {
                        std::size_t o = static_cast<std::size_t>(k * deg + m);
                        g = fmadd(L::broadcast(f.cc[o]), cm[m], g);
                        g = fmadd(L::broadcast(f.cs[o]), sm[m], g);
                        gq = fmadd(L::broadcast(f.dcc[o]), cm[m], gq);
                        gq = fmadd(L::broadcast(f.dcs[o]), sm[m], gq);
                    }
                    L gs = g * sth;
                    for (int j = 0; j < d; ++j)
                        accI[j] = fmadd(L::broadcast(f.n[static_cast<std::size_t>(k * d + j)]),
                                        gs, accI[j]);
                    accP = fmadd(gq, cth, accP);
                }
                for (int j = 0; j < d; ++j) I[j] = fmadd(vmuh, accI[j], I[j]);
                L dp = fmadd(L::broadcast(-mu), accP, sq);
                L pmid = fmadd(vh2, dp, p);  // momentum at the kick time, O(h^2)
                p = fmadd(vh, dp, p);

                // diagnostics at the kick sample
                L drift = vzero;
                for (int j = 0; j < d; ++j)
                    drift = max(drift, abs(I[j] - L::load(st.act0.data() + st.lane(i, j))));
                L energy = abs(fmadd(L::broadcast(0.5), pmid * pmid, cq - vone));
                L md = L::load(st.max_drift.data() + i);
                L me = L::load(st.min_abs_e.data() + i);
                md = blend(act_mask, max(md, drift), md);
                me = blend(act_mask, min(me, energy), me);
                md.store(st.max_drift.data() + i);
                me.store(st.min_abs_e.data() + i);

                // half drift
                for (int j = 0; j < d; ++j) phi[j] = fmadd(vh2, I[j], phi[j]);
                q = fmadd(vh2, p, q);

                // blow-up screen: |I|, |p| inside the box; NaN fails the compare
                auto ok = cmp_le(abs(p), vblow);
                for (int j = 0; j < d; ++j) ok = mask_and(ok, cmp_le(abs(I[j]), vblow));
                auto froze = mask_andnot(ok, act_mask);  // was active, now failing

                L bt = L::load(st.blowup_time.data() + i);
                bt = blend(froze, L::broadcast(st.t + h), bt);
                bt.store(st.blowup_time.data() + i);

                L newactive = blend(mask_and(ok, act_mask), vone, vzero);
                newactive.store(st.active.data() + i);
                act_mask = mask_and(act_mask, ok);

                // frozen lanes keep their last healthy state
                for (int j = 0; j < d; ++j) {
                    blend(act_mask, phi[j], L::load(st.phi.data() + st.lane(i, j)))
                        .store(st.phi.data() + st.lane(i, j));
                    blend(act_mask, I[j], L::load(st.act.data() + st.lane(i, j)))
                        .store(st.act.data() + st.lane(i, j));
                }
                blend(act_mask, q, L::load(st.q.data() + i)).store(st.q.data() + i);
                blend(act_mask, p, L::load(st.p.data() + i)).store(st.p.data() + i);
            }
            st.t += h;
        }
        st.t = t0 + static_cast<double>(step + 1) * dt;
    }
}

}  // namespace driftlab::kernels
