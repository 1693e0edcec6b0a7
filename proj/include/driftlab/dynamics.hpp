#pragma once

#include "driftlab/perturbation.hpp"
#include "driftlab/state.hpp"

namespace driftlab {

/// Pendulum energy E = p^2/2 + cos q - 1.  Zero on the separatrix and on
/// the hyperbolic fixed point, negative inside the eye, positive outside.
inline double pendulum_energy(double q, double p) {
    return 0.5 * p * p + std::cos(q) - 1.0;
}

/**
 * Point on the upper separatrix branch at time t:
 *
 *   q0(t) = 4 atan(e^t),  p0(t) = 2 / cosh t,
 *
 * with q0 -> 0 as t -> -inf and q0 -> 2 pi as t -> +inf.  For |t| > 700 the
 * exponentials over/underflow, so the exact asymptotic limit is returned.
 */
inline void separatrix_state(double t, double& q, double& p) {
    if (t > 700.0) {
        q = two_pi;
        p = 0.0;
        return;
    }
    if (t < -700.0) {
        q = 0.0;
        p = 0.0;
        return;
    }
    q = 4.0 * std::atan(std::exp(t));
    p = 2.0 / std::cosh(t);
}

/**
 * Coupled rotator-pendulum system with a purely spatial perturbation:
 *
 *   phi' = I,              I' = -mu df/dphi,
 *   q'   = p,              p' = sin q - mu df/dq,
 *
 * the Hamiltonian flow of H = |I|^2/2 + p^2/2 + (cos q - 1) + mu f.
 */
class System {
  public:
    System(TrigPerturbation pert, double mu) : pert_(std::move(pert)), mu_(mu) {}

    int dim() const { return pert_.dim(); }
    double mu() const { return mu_; }
    const TrigPerturbation& perturbation() const { return pert_; }

    double hamiltonian(const PhaseState& s) const {
        double h = 0.0;
        for (double I : s.action) h += 0.5 * I * I;
        h += pendulum_energy(s.q, s.p);
        if (mu_ != 0.0) h += mu_ * pert_.value(s.phi, s.q, s.time);
        return h;
    }

    void vector_field(const PhaseState& s, PhaseDeriv& out) const {
        out.dphi = s.action;
        out.dq = s.p;
        if (mu_ != 0.0) {
            pert_.grad_phi(s.phi, s.q, s.time, out.daction);
            for (double& x : out.daction) x = -mu_ * x;
            out.dp = std::sin(s.q) - mu_ * pert_.dq(s.phi, s.q, s.time);
        } else {
            out.daction.assign(s.action.size(), 0.0);
            out.dp = std::sin(s.q);
        }
    }

  private:
    TrigPerturbation pert_;
    double mu_;
};

}  // namespace driftlab
