#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace driftlab {

/**
 * Real trigonometric polynomial in the pendulum angle q:
 *
 *   P(q) = c0 + sum_{m=1..M} ( cosc[m-1]*cos(m q) + sinc[m-1]*sin(m q) ).
 *
 * The class is closed under differentiation, which keeps perturbation
 * gradients and their separatrix integrals exact.
 */
class QPolynomial {
  public:
    QPolynomial() = default;
    QPolynomial(double c0, std::vector<double> cos_coeffs, std::vector<double> sin_coeffs)
        : c0_(c0), cosc_(std::move(cos_coeffs)), sinc_(std::move(sin_coeffs)) {
        if (sinc_.size() > cosc_.size()) cosc_.resize(sinc_.size(), 0.0);
        if (cosc_.size() > sinc_.size()) sinc_.resize(cosc_.size(), 0.0);
    }

    static QPolynomial constant(double c) { return QPolynomial(c, {}, {}); }
    /// 1 - cos q, the kernel of the classical example perturbation.
    static QPolynomial one_minus_cos() { return QPolynomial(1.0, {-1.0}, {0.0}); }

    double constant_term() const { return c0_; }
    const std::vector<double>& cos_coeffs() const { return cosc_; }
    const std::vector<double>& sin_coeffs() const { return sinc_; }
    std::size_t degree() const { return cosc_.size(); }

    double eval(double q) const {
        if (cosc_.empty()) return c0_;
        double c1 = std::cos(q), s1 = std::sin(q);
        double cm = c1, sm = s1, v = c0_;
        for (std::size_t m = 0; m < cosc_.size(); ++m) {
            v += cosc_[m] * cm + sinc_[m] * sm;
            double cn = cm * c1 - sm * s1;  // angle-addition recurrence
            sm = sm * c1 + cm * s1;
            cm = cn;
        }
        return v;
    }

    QPolynomial derivative() const {
        std::vector<double> dc(cosc_.size()), ds(cosc_.size());
        for (std::size_t m = 0; m < cosc_.size(); ++m) {
            double k = static_cast<double>(m + 1);
            dc[m] = k * sinc_[m];
            ds[m] = -k * cosc_[m];
        }
        return QPolynomial(0.0, std::move(dc), std::move(ds));
    }

    QPolynomial scaled(double c) const {
        std::vector<double> cc(cosc_), ss(sinc_);
        for (auto& x : cc) x *= c;
        for (auto& x : ss) x *= c;
        return QPolynomial(c0_ * c, std::move(cc), std::move(ss));
    }

    /// sup_q |P'(q)| upper bound: sum of m*(|cos_m| + |sin_m|).
    double lipschitz_bound() const {
        double s = 0.0;
        for (std::size_t m = 0; m < cosc_.size(); ++m)
            s += static_cast<double>(m + 1) * (std::fabs(cosc_[m]) + std::fabs(sinc_[m]));
        return s;
    }

    /// sup_q |P(q)| upper bound.
    double max_abs_bound() const {
        double s = std::fabs(c0_);
        for (std::size_t m = 0; m < cosc_.size(); ++m)
            s += std::fabs(cosc_[m]) + std::fabs(sinc_[m]);
        return s;
    }

    bool is_zero() const {
        if (c0_ != 0.0) return false;
        for (double x : cosc_)
            if (x != 0.0) return false;
        for (double x : sinc_)
            if (x != 0.0) return false;
        return true;
    }

    bool operator==(const QPolynomial& o) const = default;

  private:
    double c0_ = 0.0;
    std::vector<double> cosc_;
    std::vector<double> sinc_;
};
}  // namespace driftlab
