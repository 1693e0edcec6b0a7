#include "driftlab/integrator.hpp"

#include <cmath>

#include "driftlab/errors.hpp"

namespace driftlab {

std::string to_string(Scheme s) {
    return s == Scheme::Strang2 ? "strang2" : "yoshida4";
}

Scheme scheme_from_string(const std::string& s) {
    if (s == "strang2") return Scheme::Strang2;
    if (s == "yoshida4") return Scheme::Yoshida4;
    throw ConfigError("unknown scheme '" + s + "' (expected strang2 or yoshida4)");
}

namespace {

void drift(PhaseState& s, double h) {
    for (std::size_t j = 0; j < s.phi.size(); ++j) s.phi[j] += h * s.action[j];
    s.q += h * s.p;
    s.time += h;
}

void kick(const System& sys, PhaseState& s, double h, std::vector<double>& scratch) {
    double mu = sys.mu();
    if (mu != 0.0) {
        const auto& f = sys.perturbation();
        f.grad_phi(s.phi, s.q, s.time, scratch);
        for (std::size_t j = 0; j < s.action.size(); ++j) s.action[j] -= h * mu * scratch[j];
        s.p += h * (std::sin(s.q) - mu * f.dq(s.phi, s.q, s.time));
    } else {
        s.p += h * std::sin(s.q);
    }
}

void strang2(const System& sys, PhaseState& s, double h, std::vector<double>& scratch) {
    drift(s, 0.5 * h);
    kick(sys, s, h, scratch);
    drift(s, 0.5 * h);
}

// Triple-jump coefficients: w1 = 1/(2 - 2^(1/3)), w0 = 1 - 2 w1.
constexpr double yoshida_w1 = 1.3512071919596576340476878089715;
constexpr double yoshida_w0 = -1.7024143839193152680953756179429;

void do_step(const System& sys, PhaseState& s, double h, Scheme scheme,
             std::vector<double>& scratch) {
    if (scheme == Scheme::Strang2) {
        strang2(sys, s, h, scratch);
    } else {
        strang2(sys, s, yoshida_w1 * h, scratch);
        strang2(sys, s, yoshida_w0 * h, scratch);
        strang2(sys, s, yoshida_w1 * h, scratch);
    }
}

void check_alive(const PhaseState& s, double blowup) {
    if (!s.finite()) throw BlowUpError("integration produced a nonfinite state", s.time);
    if (std::fabs(s.p) > blowup) throw BlowUpError("pendulum momentum blew up", s.time);
    for (double I : s.action)
        if (std::fabs(I) > blowup) throw BlowUpError("rotator action blew up", s.time);
}

double hermite(double x0, double d0, double x1, double d1, double dt, double th) {
    double t2 = th * th, t3 = t2 * th;
    return (2 * t3 - 3 * t2 + 1) * x0 + (t3 - 2 * t2 + th) * dt * d0 +
           (-2 * t3 + 3 * t2) * x1 + (t3 - t2) * dt * d1;
}

PhaseState hermite_state(const PhaseState& a, const PhaseDeriv& da, const PhaseState& b,
                         const PhaseDeriv& db, double dt, double th) {
    PhaseState s(a);
    for (std::size_t j = 0; j < s.phi.size(); ++j) {
        s.phi[j] = hermite(a.phi[j], da.dphi[j], b.phi[j], db.dphi[j], dt, th);
        s.action[j] = hermite(a.action[j], da.daction[j], b.action[j], db.daction[j], dt, th);
    }
    s.q = hermite(a.q, da.dq, b.q, db.dq, dt, th);
    s.p = hermite(a.p, da.dp, b.p, db.dp, dt, th);
    s.time = a.time + th * dt;
    return s;
}

/// Locate the zero of u(theta) = cos(q(theta)/2) inside a step where the
/// endpoint signs differ.  Regula falsi with a bisection safeguard.
SectionEvent refine_event(const PhaseState& a, const PhaseDeriv& da, const PhaseState& b,
                          const PhaseDeriv& db, double dt, long step_index, double tol) {
    auto u = [&](double th) {
        double q = hermite(a.q, da.dq, b.q, db.dq, dt, th);
        return std::cos(0.5 * q);
    };
    double lo = 0.0, hi = 1.0, ulo = u(lo), uhi = u(hi);
    double th = 0.5;
    for (int it = 0;; ++it) {
        if (it >= 100) throw Error("section event refinement did not converge");
        double denom = uhi - ulo;
        th = (denom != 0.0) ? lo - ulo * (hi - lo) / denom : 0.5 * (lo + hi);
        if (th <= lo || th >= hi) th = 0.5 * (lo + hi);
        double uth = u(th);
        if (uth == 0.0 || (hi - lo) * std::fabs(dt) < tol) break;
        if ((ulo < 0) == (uth < 0)) {
            lo = th;
            ulo = uth;
        } else {
            hi = th;
            uhi = uth;
        }
    }
    SectionEvent ev;
    ev.state = hermite_state(a, da, b, db, dt, th);
    double dq = hermite(a.p, da.dp, b.p, db.dp, dt, th);  // dq/dt = p when f is spatial
    ev.direction = dq >= 0.0 ? 1 : -1;
    ev.step_index = step_index;
    return ev;
}

}  // namespace

void step_once(const System& sys, PhaseState& s, double dt, Scheme scheme) {
    std::vector<double> scratch;
    do_step(sys, s, dt, scheme, scratch);
}

IntegrationSummary integrate(const System& sys, PhaseState& s, double t_end,
                             const StepperConfig& cfg, const StepObserver& observer,
                             bool collect_events) {
    if (!(cfg.dt > 0)) throw ConfigError("integrate: dt must be positive");
    if (t_end < s.time) throw ConfigError("integrate: t_end lies before the state time");
    IntegrationSummary out;
    const double t0 = s.time, span = t_end - t0;
    long nfull = static_cast<long>(std::floor(span / cfg.dt + 1e-9));
    double rem = span - static_cast<double>(nfull) * cfg.dt;
    if (rem < 1e-9 * cfg.dt) rem = 0.0;
    long ntotal = nfull + (rem > 0.0 ? 1 : 0);
    if (ntotal > cfg.max_steps) throw StepCapError("integrate: step budget exceeded");

    std::vector<double> scratch;
    PhaseState prev(s);
    PhaseDeriv dprev, dcur;
    if (collect_events) sys.vector_field(s, dprev);

    for (long k = 0; k < ntotal; ++k) {
        double h = (k < nfull) ? cfg.dt : rem;
        if (collect_events) prev = s;
        do_step(sys, s, h, cfg.scheme, scratch);
        // re-anchor the clock onto the exact grid to stop roundoff creep
        s.time = (k < nfull) ? t0 + static_cast<double>(k + 1) * cfg.dt : t_end;
        check_alive(s, cfg.blowup);
        if (collect_events) {
            sys.vector_field(s, dcur);
            double u0 = std::cos(0.5 * prev.q), u1 = std::cos(0.5 * s.q);
            if (u0 * u1 < 0.0)
                out.events.push_back(refine_event(prev, dprev, s, dcur, h, k, cfg.section_tol));
            dprev = dcur;
        }
        ++out.steps;
        if (observer) observer(s, k);
    }
    return out;
}

std::optional<SectionEvent> integrate_to_section(const System& sys, PhaseState& s, double t_max,
                                                 const StepperConfig& cfg, int direction) {
    if (!(cfg.dt > 0)) throw ConfigError("integrate_to_section: dt must be positive");
    std::vector<double> scratch;
    PhaseState prev(s);
    PhaseDeriv dprev, dcur;
    sys.vector_field(s, dprev);
    long steps = 0;
    while (s.time < t_max) {
        if (steps >= cfg.max_steps) throw StepCapError("integrate_to_section: step budget exceeded");
        double h = std::min(cfg.dt, t_max - s.time);
        prev = s;
        do_step(sys, s, h, cfg.scheme, scratch);
        check_alive(s, cfg.blowup);
        sys.vector_field(s, dcur);
        double u0 = std::cos(0.5 * prev.q), u1 = std::cos(0.5 * s.q);
        if (u0 * u1 < 0.0) {
            SectionEvent ev = refine_event(prev, dprev, s, dcur, h, steps, cfg.section_tol);
            if (direction == 0 || ev.direction == direction) {
                s = ev.state;  // rewind onto the section
                return ev;
            }
        }
        dprev = dcur;
        ++steps;
    }
    return std::nullopt;
}

}  // namespace driftlab
