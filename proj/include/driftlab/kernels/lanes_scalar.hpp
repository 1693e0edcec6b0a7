#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

// One-lane reference backend.  Every operation is written to mirror the
// AVX2 instruction semantics exactly (min/max tie rules, sign-bit flips,
// blends), so the two backends produce bit-identical results lane by
// lane.  Keep the two files in sync when touching either.

namespace driftlab::kernels {

struct MaskS {
    bool m;
};

inline MaskS mask_and(MaskS a, MaskS b) { return {a.m && b.m}; }
inline MaskS mask_andnot(MaskS a, MaskS b) { return {!a.m && b.m}; }  // (~a) & b
inline bool mask_none(MaskS a) { return !a.m; }

struct LaneS {
    double v;
    static constexpr int width = 1;

    static LaneS broadcast(double x) { return {x}; }
    static LaneS load(const double* p) { return {*p}; }
    void store(double* p) const { *p = v; }

    friend LaneS operator+(LaneS a, LaneS b) { return {a.v + b.v}; }
    friend LaneS operator-(LaneS a, LaneS b) { return {a.v - b.v}; }
    friend LaneS operator*(LaneS a, LaneS b) { return {a.v * b.v}; }
};

inline LaneS fmadd(LaneS a, LaneS b, LaneS c) { return {std::fma(a.v, b.v, c.v)}; }
inline LaneS abs(LaneS a) { return {std::fabs(a.v)}; }
inline LaneS sqrt(LaneS a) { return {std::sqrt(a.v)}; }
// vminpd/vmaxpd return the second operand on ties; mirror that exactly
inline LaneS min(LaneS a, LaneS b) { return {a.v < b.v ? a.v : b.v}; }
inline LaneS max(LaneS a, LaneS b) { return {a.v > b.v ? a.v : b.v}; }
inline MaskS cmp_le(LaneS a, LaneS b) { return {a.v <= b.v}; }
inline MaskS cmp_ge(LaneS a, LaneS b) { return {a.v >= b.v}; }
inline MaskS cmp_lt(LaneS a, LaneS b) { return {a.v < b.v}; }
inline LaneS blend(MaskS m, LaneS a, LaneS b) { return {m.m ? a.v : b.v}; }  // m ? a : b

struct QuadS {
    std::uint64_t bits;
};

inline QuadS quad_bits(LaneS x) { return {std::bit_cast<std::uint64_t>(x.v)}; }
inline QuadS quad_inc(QuadS q) { return {q.bits + 1}; }
inline MaskS quad_bit0(QuadS q) { return {(q.bits & 1u) != 0}; }
inline MaskS quad_bit1(QuadS q) { return {(q.bits & 2u) != 0}; }

/// Flip the sign bit where the mask is set (matches an AVX2 xorpd).
inline LaneS flip_sign(MaskS m, LaneS x) {
    std::uint64_t b = std::bit_cast<std::uint64_t>(x.v);
    if (m.m) b ^= 0x8000000000000000ull;
    return {std::bit_cast<double>(b)};
}

}  // namespace driftlab::kernels
