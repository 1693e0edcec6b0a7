#pragma once

#include <string>
#include <vector>

#include "driftlab/qpoly.hpp"

namespace driftlab {

/// Norm used to measure the order |(n,l)| of a trigonometric mode.
enum class ModeNorm { L1, L2, Linf };

std::string to_string(ModeNorm k);
ModeNorm mode_norm_from_string(const std::string& s);

/// Order of the combined mode vector (n_1..n_d, l) in the given norm.
double mode_order(const std::vector<int>& n, int l, ModeNorm k);

/// One real mode g(q) * cos(n.phi + l t).
struct PertMode {
    std::vector<int> n;
    int l = 0;
    QPolynomial g;
};

/**
 * Purely spatial trigonometric perturbation
 *
 *   f(phi, q, t) = sum_k g_k(q) * cos(n_k . phi + l_k t),
 *
 * a real trig polynomial of order at most N in (phi, t) whose coefficients
 * are trig polynomials in q.  Mode keys are kept canonical: the first
 * nonzero entry of (n_1, .., n_d, l) is positive, so each harmonic appears
 * exactly once.  f depends on neither I nor p, hence the phi and q
 * equations of motion pick up no perturbing terms.
 */
class TrigPerturbation {
  public:
    TrigPerturbation(int d, int order, ModeNorm norm, std::vector<PertMode> modes);

    /// Classical example: f = (1 - cos q)(cos phi_1 + cos t), extended to
    /// d rotators by using only the first angle.
    static TrigPerturbation arnold(int d = 1);

    static TrigPerturbation from_json_text(const std::string& text);
    static TrigPerturbation load(const std::string& path);
    std::string json_text() const;
    void save(const std::string& path) const;

    int dim() const { return d_; }
    int order() const { return order_; }
    ModeNorm norm_kind() const { return norm_; }
    const std::vector<PertMode>& modes() const { return modes_; }
    bool empty() const;

    double value(const std::vector<double>& phi, double q, double t) const;
    /// d f / d phi_j, written into out (resized to d).
    void grad_phi(const std::vector<double>& phi, double q, double t,
                  std::vector<double>& out) const;
    double dq(const std::vector<double>& phi, double q, double t) const;
    double dt(const std::vector<double>& phi, double q, double t) const;

    /// Upper bound for sup |d f / d phi_j|, per component.
    std::vector<double> grad_phi_bound() const;
    /// Upper bound for sup |f|.
    double sup_bound() const;

  private:
    int d_;
    int order_;
    ModeNorm norm_;
    std::vector<PertMode> modes_;
    std::vector<QPolynomial> gq_;  // derivative profiles, cached
};

}  // namespace driftlab
