#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "driftlab/dynamics.hpp"
#include "driftlab/state.hpp"

namespace driftlab {

/// Strang2: symmetric drift-kick-drift splitting, order 2.
/// Yoshida4: triple-jump composition of Strang2, order 4.
enum class Scheme { Strang2, Yoshida4 };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct StepperConfig {
    Scheme scheme = Scheme::Strang2;
    double dt = 1e-3;
    double blowup = 1e8;        ///< throw BlowUpError when |I| or |p| passes this
    long max_steps = 400000000; ///< step budget per integrate call
    double section_tol = 1e-12; ///< time tolerance of event refinement
};

/// Crossing of the section q = pi (mod 2 pi).
struct SectionEvent {
    PhaseState state;  ///< interpolated state, state.time is the refined crossing time
    int direction = 0; ///< sign of dq/dt at the crossing
    long step_index = 0;
};

using StepObserver = std::function<void(const PhaseState&, long)>;

/// Advance one step of size dt with the chosen scheme.  The kick is
/// applied at the half-step time, which keeps the extended-phase-space
/// map symmetric; with the perturbation frozen in t the map is exactly
/// symplectic.
void step_once(const System& sys, PhaseState& s, double dt, Scheme scheme);

struct IntegrationSummary {
    long steps = 0;
    std::vector<SectionEvent> events;
};

/**
 * Integrate in place up to t_end on a fixed grid (a shorter final step
 * closes any remainder).  The observer, when set, runs after every step.
 * With collect_events the section crossings inside each step are located
 * by cubic Hermite interpolation plus safeguarded root refinement and
 * returned in order.
 */
IntegrationSummary integrate(const System& sys, PhaseState& s, double t_end,
                             const StepperConfig& cfg, const StepObserver& observer = nullptr,
                             bool collect_events = false);

/**
 * Integrate until the first section crossing with the given direction
 * (+1 upward, -1 downward, 0 either).  On success the state is rewound
 * onto the refined event point, so resuming integration from it is
 * reproducible.  Returns nullopt when t_max arrives first.
 */
std::optional<SectionEvent> integrate_to_section(const System& sys, PhaseState& s, double t_max,
                                                 const StepperConfig& cfg, int direction = 1);

}  // namespace driftlab
