#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "driftlab/errors.hpp"

namespace driftlab {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;  // estimated absolute error
    int panels = 0;
};

namespace detail {

// Gauss-Kronrod 7-15 abscissae and weights on [-1, 1] (QUADPACK dqk15).
// Even-indexed nodes form the embedded 7-point Gauss rule.
inline constexpr double gk_x[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void gk15(const F& f, double a, double b, double& value, double& err) {
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fc = f(c);
    double kron = gk_wk[7] * fc, gauss = gk_wg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        double x = h * gk_x[i];
        double s = f(c - x) + f(c + x);
        kron += gk_wk[i] * s;
        if (i % 2 != 0) gauss += gk_wg[i / 2] * s;
    }
    value = kron * h;
    err = std::fabs((kron - gauss) * h);
}

}  // namespace detail

/**
 * Globally adaptive Gauss-Kronrod 7-15 integration of f over [a, b]: the
 * interval with the largest error estimate is bisected until the summed
 * estimate drops below abs_tol.  Throws QuadratureError when the panel
 * budget runs out first.
 */
template <class F>
QuadResult integrate_adaptive(const F& f, double a, double b, double abs_tol,
                              int max_panels = 4000) {
    struct Panel {
        double a, b, value, err;
        bool operator<(const Panel& o) const { return err < o.err; }
    };
    std::priority_queue<Panel> heap;
    Panel p0{a, b, 0, 0};
    detail::gk15(f, a, b, p0.value, p0.err);
    heap.push(p0);
    double total_err = p0.err;
    int panels = 1;
    while (total_err > abs_tol) {
        if (panels >= max_panels)
            throw QuadratureError("adaptive quadrature: panel budget exhausted", total_err);
        Panel w = heap.top();
        heap.pop();
        total_err -= w.err;
        double m = 0.5 * (w.a + w.b);
        Panel l{w.a, m, 0, 0}, r{m, w.b, 0, 0};
        detail::gk15(f, l.a, l.b, l.value, l.err);
        detail::gk15(f, r.a, r.b, r.value, r.err);
        heap.push(l);
        heap.push(r);
        total_err += l.err + r.err;
        ++panels;
    }
    double v = 0.0;
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(panels));
    while (!heap.empty()) {
        vals.push_back(heap.top().value);
        heap.pop();
    }
    // small-to-large summation keeps the result deterministic and accurate
    std::sort(vals.begin(), vals.end(), [](double x, double y) {
        return std::fabs(x) < std::fabs(y);
    });
    for (double x : vals) v += x;
    return {v, total_err, panels};
}

}  // namespace driftlab
