#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "driftlab/angles.hpp"
#include "driftlab/errors.hpp"

namespace driftlab {

/**
 * Full phase point of the rotator-pendulum system: d rotator angles phi
 * with conjugate actions I, the pendulum pair (q, p), and the time t.
 *
 * Angles are stored unreduced so that winding counts survive; reduction
 * happens only through the explicit *_wrapped queries.
 */
struct PhaseState {
    std::vector<double> phi;     ///< rotator angles, radians, unreduced
    std::vector<double> action;  ///< rotator actions
    double q = 0.0;              ///< pendulum angle, radians, unreduced
    double p = 0.0;              ///< pendulum momentum
    double time = 0.0;

    PhaseState() = default;
    PhaseState(std::vector<double> phi_, std::vector<double> action_, double q_, double p_,
               double t_ = 0.0)
        : phi(std::move(phi_)), action(std::move(action_)), q(q_), p(p_), time(t_) {
        validate();
    }

    std::size_t dim() const { return phi.size(); }

    bool finite() const {
        for (double x : phi)
            if (!std::isfinite(x)) return false;
        for (double x : action)
            if (!std::isfinite(x)) return false;
        return std::isfinite(q) && std::isfinite(p) && std::isfinite(time);
    }

    void validate() const {
        if (phi.empty() || phi.size() != action.size())
            throw ConfigError("PhaseState: need d >= 1 with matching phi/action sizes");
        if (!finite()) throw ConfigError("PhaseState: nonfinite component");
    }

    double q_wrapped() const { return wrap_2pi(q); }
    std::vector<double> phi_wrapped() const {
        std::vector<double> w(phi.size());
        for (std::size_t i = 0; i < phi.size(); ++i) w[i] = wrap_2pi(phi[i]);
        return w;
    }

    /// Signed number of full pendulum turns relative to a reference angle.
    long winding(double q_ref = 0.0) const {
        return static_cast<long>(std::floor((q - q_ref) / two_pi));
    }
};

/// Time derivative of a PhaseState under the equations of motion.
struct PhaseDeriv {
    std::vector<double> dphi;
    std::vector<double> daction;
    double dq = 0.0;
    double dp = 0.0;
};
}  // namespace driftlab
