#pragma once

#include <immintrin.h>

// Four-lane AVX2/FMA backend.  Semantics must stay in lockstep with
// lanes_scalar.hpp; the equivalence tests compare the two bit for bit.

namespace driftlab::kernels {

struct MaskV {
    __m256d m;
};

inline MaskV mask_and(MaskV a, MaskV b) { return {_mm256_and_pd(a.m, b.m)}; }
inline MaskV mask_andnot(MaskV a, MaskV b) { return {_mm256_andnot_pd(a.m, b.m)}; }
inline bool mask_none(MaskV a) { return _mm256_movemask_pd(a.m) == 0; }

struct LaneV {
    __m256d v;
    static constexpr int width = 4;

    static LaneV broadcast(double x) { return {_mm256_set1_pd(x)}; }
    static LaneV load(const double* p) { return {_mm256_loadu_pd(p)}; }
    void store(double* p) const { _mm256_storeu_pd(p, v); }

    friend LaneV operator+(LaneV a, LaneV b) { return {_mm256_add_pd(a.v, b.v)}; }
    friend LaneV operator-(LaneV a, LaneV b) { return {_mm256_sub_pd(a.v, b.v)}; }
    friend LaneV operator*(LaneV a, LaneV b) { return {_mm256_mul_pd(a.v, b.v)}; }
};

inline LaneV fmadd(LaneV a, LaneV b, LaneV c) { return {_mm256_fmadd_pd(a.v, b.v, c.v)}; }
inline LaneV abs(LaneV a) {
    return {_mm256_andnot_pd(_mm256_set1_pd(-0.0), a.v)};
}
inline LaneV sqrt(LaneV a) { return {_mm256_sqrt_pd(a.v)}; }
inline LaneV min(LaneV a, LaneV b) { return {_mm256_min_pd(a.v, b.v)}; }
inline LaneV max(LaneV a, LaneV b) { return {_mm256_max_pd(a.v, b.v)}; }
inline MaskV cmp_le(LaneV a, LaneV b) { return {_mm256_cmp_pd(a.v, b.v, _CMP_LE_OQ)}; }
inline MaskV cmp_ge(LaneV a, LaneV b) { return {_mm256_cmp_pd(a.v, b.v, _CMP_GE_OQ)}; }
inline MaskV cmp_lt(LaneV a, LaneV b) { return {_mm256_cmp_pd(a.v, b.v, _CMP_LT_OQ)}; }
inline LaneV blend(MaskV m, LaneV a, LaneV b) { return {_mm256_blendv_pd(b.v, a.v, m.m)}; }

struct QuadV {
    __m256i bits;
};

inline QuadV quad_bits(LaneV x) { return {_mm256_castpd_si256(x.v)}; }
inline QuadV quad_inc(QuadV q) { return {_mm256_add_epi64(q.bits, _mm256_set1_epi64x(1))}; }
inline MaskV quad_bit0(QuadV q) {
    __m256i one = _mm256_set1_epi64x(1);
    return {_mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(q.bits, one), one))};
}
inline MaskV quad_bit1(QuadV q) {
    __m256i two = _mm256_set1_epi64x(2);
    return {_mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(q.bits, two), two))};
}

inline LaneV flip_sign(MaskV m, LaneV x) {
    __m256d sign = _mm256_and_pd(m.m, _mm256_set1_pd(-0.0));
    return {_mm256_xor_pd(x.v, sign)};
}

}  // namespace driftlab::kernels
