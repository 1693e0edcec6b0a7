#include "driftlab/ergodization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "driftlab/errors.hpp"
#include "driftlab/kernels/api.hpp"

namespace driftlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

long wrap_index(long m, long n) {
    long k = m % n;
    return k < 0 ? k + n : k;
}

}  // namespace

ErgodizationResult ergodization_time(const Lattice& lat, const std::vector<double>& omega,
                                     double delta, const ErgodizationConfig& cfg) {
    lat.validate();
    const int l = lat.dim();
    if (static_cast<int>(omega.size()) != l)
        throw ConfigError("ergodization_time: omega dimension does not match the lattice");
    if (!(delta > 0.0)) throw ConfigError("ergodization_time: delta must be positive");
    const double w2 = dot(omega, omega);
    if (!(w2 > 0.0)) throw ConfigError("ergodization_time: omega must be nonzero");

    const auto dual = dual_basis(lat);
    const double grid_res = cfg.grid_res > 0.0 ? cfg.grid_res : delta / 8.0;

    std::vector<long> N(static_cast<std::size_t>(l));
    std::vector<double> bn(static_cast<std::size_t>(l)), pad(static_cast<std::size_t>(l));
    std::vector<double> w(static_cast<std::size_t>(l));  // fractional flow speed
    std::size_t cells = 1;
    double slack = 0.0, wmax = 0.0;
    for (int i = 0; i < l; ++i) {
        std::size_t iu = static_cast<std::size_t>(i);
        bn[iu] = norm2(lat.basis[iu]);
        if (!(bn[iu] > 0.0)) throw ConfigError("ergodization_time: zero basis vector");
        N[iu] = std::max<long>(1, static_cast<long>(std::ceil(bn[iu] / grid_res)));
        slack += 0.5 * bn[iu] / static_cast<double>(N[iu]);
        pad[iu] = delta * norm2(dual[iu]) + 1e-12;
        w[iu] = dot(dual[iu], omega);
        wmax = std::max(wmax, std::fabs(w[iu]));
        if (cells > cfg.max_cells / static_cast<std::size_t>(N[iu]))
            throw ConfigError("ergodization_time: grid exceeds the cell budget");
        cells *= static_cast<std::size_t>(N[iu]);
    }
    if (!(wmax > 0.0)) throw ConfigError("ergodization_time: flow is stationary");

    // quarter-torus fractional travel per chunk keeps candidate slabs thin
    const double chunk = cfg.chunk > 0.0 ? cfg.chunk : 0.25 / wmax;

    // first-hit stamps, row-major with the last axis contiguous
    std::vector<double> stamp(cells, kInf);
    std::vector<std::size_t> stride(static_cast<std::size_t>(l), 1);
    for (int i = l - 2; i >= 0; --i)
        stride[static_cast<std::size_t>(i)] =
            stride[static_cast<std::size_t>(i + 1)] * static_cast<std::size_t>(N[i + 1]);

    const std::size_t last = static_cast<std::size_t>(l - 1);
    std::vector<double> stp(static_cast<std::size_t>(l));
    for (int j = 0; j < l; ++j)
        stp[static_cast<std::size_t>(j)] = lat.basis[last][static_cast<std::size_t>(j)] /
                                           static_cast<double>(N[last]);
    const double b1 = dot(omega, stp);
    const double ss = dot(stp, stp);
    const double inv_a = 1.0 / w2;

    std::vector<long> mlo(static_cast<std::size_t>(l)), mhi(static_cast<std::size_t>(l));
    std::vector<long> m(static_cast<std::size_t>(l));
    std::vector<double> base(static_cast<std::size_t>(l));
    std::vector<std::uint8_t> hit;
    std::vector<double> tau;

    std::size_t uncovered = cells;
    double t_a = 0.0;
    while (uncovered > 0 && t_a < cfg.t_max) {
        const double t_b = std::min(t_a + chunk, cfg.t_max);
        bool empty = false;
        for (int i = 0; i < l; ++i) {
            std::size_t iu = static_cast<std::size_t>(i);
            double xa = w[iu] * t_a, xb = w[iu] * t_b;
            double lo = std::min(xa, xb) - pad[iu], hi = std::max(xa, xb) + pad[iu];
            double Nd = static_cast<double>(N[iu]);
            mlo[iu] = static_cast<long>(std::ceil(lo * Nd - 0.5 - 1e-9));
            mhi[iu] = static_cast<long>(std::floor(hi * Nd - 0.5 + 1e-9));
            if (mhi[iu] < mlo[iu]) empty = true;
        }
        if (!empty) {
            const int count = static_cast<int>(mhi[last] - mlo[last] + 1);
            hit.resize(static_cast<std::size_t>(count));
            tau.resize(static_cast<std::size_t>(count));
            m = mlo;
            for (;;) {
                // row base: centers at fractions (m_i + 1/2) / N_i of each axis
                std::fill(base.begin(), base.end(), 0.0);
                for (int i = 0; i < l; ++i) {
                    std::size_t iu = static_cast<std::size_t>(i);
                    double frac = (static_cast<double>(i == l - 1 ? mlo[iu] : m[iu]) + 0.5) /
                                  static_cast<double>(N[iu]);
                    for (int j = 0; j < l; ++j)
                        base[static_cast<std::size_t>(j)] +=
                            frac * lat.basis[iu][static_cast<std::size_t>(j)];
                }
                kernels::CoverageRowArgs args;
                args.b0 = dot(omega, base);
                args.b1 = b1;
                args.A = b1 * b1 - w2 * ss;
                args.B = 2.0 * (args.b0 * b1 - w2 * dot(base, stp));
                args.C = args.b0 * args.b0 - w2 * (dot(base, base) - delta * delta);
                args.inv_a = inv_a;
                args.t0 = t_a;
                args.t1 = t_b;
                kernels::coverage_row(args, count, hit.data(), tau.data());

                std::size_t off = 0;
                for (int i = 0; i < l - 1; ++i)
                    off += static_cast<std::size_t>(wrap_index(m[static_cast<std::size_t>(i)],
                                                               N[static_cast<std::size_t>(i)])) *
                           stride[static_cast<std::size_t>(i)];
                for (int j = 0; j < count; ++j) {
                    if (!hit[static_cast<std::size_t>(j)]) continue;
                    std::size_t cell =
                        off + static_cast<std::size_t>(wrap_index(mlo[last] + j, N[last]));
                    double& s = stamp[cell];
                    if (s == kInf) --uncovered;
                    s = std::min(s, tau[static_cast<std::size_t>(j)]);
                }

                int axis = l - 2;  // odometer over the leading axes
                while (axis >= 0 && ++m[static_cast<std::size_t>(axis)] >
                                        mhi[static_cast<std::size_t>(axis)]) {
                    m[static_cast<std::size_t>(axis)] = mlo[static_cast<std::size_t>(axis)];
                    --axis;
                }
                if (axis < 0) break;
            }
        }
        t_a = t_b;
    }

    ErgodizationResult out;
    out.slack = slack;
    out.cells = cells;
    out.t_searched = t_a;
    out.time = uncovered == 0 ? *std::max_element(stamp.begin(), stamp.end()) : kInf;
    return out;
}

LemmaCheck check_lemma_bounds(const Lattice& lat, const std::vector<double>& omega,
                              double delta, const ErgodizationConfig& cfg) {
    LemmaCheck out;
    out.t_emp = ergodization_time(lat, omega, delta, cfg).time;
    out.alpha_val = alpha(lat, omega, 1.0 / (4.0 * delta));
    out.lower = std::isinf(out.alpha_val) ? 0.0 : 0.25 / out.alpha_val;
    out.holds = out.t_emp >= out.lower;

    if (!std::isfinite(out.t_emp)) {
        out.c_emp = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const double level = 1.0 / out.t_emp;
    double best = kInf;
    for (double radius = 1.0; radius <= 1048576.0; radius *= 2.0) {
        for (const auto& p : dual_vectors(lat, radius)) {
            if (std::fabs(dot(p, omega)) <= level) best = std::min(best, norm2(p));
        }
        if (std::isfinite(best)) break;
    }
    out.c_emp = std::isfinite(best) ? delta * best : kInf;
    return out;
}

double diophantine_bound(double C, double tau, double delta, double a) {
    if (!(C > 0.0) || !(delta > 0.0) || !(a > 0.0))
        throw ConfigError("diophantine_bound: C, delta, a must be positive");
    return std::pow(a / delta, tau) / C;
}

}  // namespace driftlab
