#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "driftlab/integrator.hpp"
#include "driftlab/perturbation.hpp"
#include "driftlab/resonance.hpp"
#include "driftlab/state.hpp"

namespace driftlab {

/**
 * Shared configuration of the diffusion and stability experiments.
 *
 * JSON keys: pert, mu_list, omega_i, omega_f, path, eta, c_jump, dt,
 * scheme, kappa, kappa0, seed, samples, bands.  "pert" is either a full
 * perturbation object, the string "arnold", or {"preset": "arnold",
 * "d": k}; omega_i / omega_f accept a number or an array.  Defaulted
 * keys may be omitted; json_text() always emits the canonical complete
 * form, which is what the config hash covers.
 */
struct ExperimentConfig {
    TrigPerturbation pert = TrigPerturbation::arnold(1);
    std::vector<double> mu_list = {0.05, 0.02, 0.01};
    std::vector<double> omega_i = {0.4};
    std::vector<double> omega_f = {0.6};
    /// Waypoints of the certified frequency path; empty means the straight
    /// segment omega_i -> omega_f.
    std::vector<std::vector<double>> path;
    double eta = 0.05;     ///< required resonant-web clearance of the path
    double c_jump = 1.0;   ///< per-transition jump budget, in units of mu
    StepperConfig stepper; ///< dt and scheme; dt defaults to 1e-2 here
    double kappa = 0.1;    ///< drift tolerance of the stability experiment
    double kappa0 = 0.1;   ///< stability horizon factor (kappa0/mu) ln(1/mu)
    std::uint64_t seed = 1;
    int samples = 50;                   ///< stability samples per (mu, band)
    std::vector<double> bands = {0.1, 0.5};  ///< |E(0)| band edges, ascending

    ExperimentConfig() { stepper.dt = 1e-2; }

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig load(const std::string& path);
    std::string json_text() const;
    void save(const std::string& path) const;

    /// All mu in (0, 1), matching dimensions, ascending band edges, and a
    /// nonempty sample budget; throws ConfigError otherwise.
    void validate() const;

    double budget(double mu) const { return c_jump * mu; }
    double horizon(double mu) const { return kappa0 / mu * std::log(1.0 / mu); }
    int n_bands() const { return static_cast<int>(bands.size()) + 1; }
    int band_of(double abs_e) const;

    /// The path actually certified: explicit waypoints, or the straight
    /// omega_i -> omega_f segment when none were given.
    FrequencyPath effective_path() const;

    /// FNV-1a hash of the canonical JSON, as fixed-width hex.
    std::string hash_hex() const;
};

/// One gluing instant of a pseudo-diffusion orbit: the (I, p) jump applied
/// at a section crossing, together with the arc that led to it.
struct Transition {
    double theta = 0.0;      ///< crossing time
    double delta_i = 0.0;    ///< action component of the jump
    double delta_p = 0.0;    ///< momentum component of the jump
    double jump_size = 0.0;  ///< l2 size, <= c_jump * mu
    double t_s = 0.0;        ///< duration since the previous gluing instant
    long turns = 1;          ///< pendulum turns in that arc (extra ones are waits)
    bool stabilization = false;  ///< energy maintenance at an unaligned crossing
};

struct DiffusionRecord {
    double mu = 0.0;
    long k = 0;      ///< number of gluing instants
    long waits = 0;  ///< whole-turn waits spent on phase alignment
    long stabilization_delays = 0;  ///< wait turns beyond the 10-turn allowance
    double t_total = 0.0;
    double final_gap = 0.0;  ///< |I(end) - omega_f|
    bool reached = false;
    std::string failure;  ///< nonempty when the run threw inside a sweep
    std::vector<Transition> transitions;

    /// Transition-log invariants: theta strictly increasing, every jump
    /// within budget, and k >= 1 for a perturbed run.
    void validate(double budget) const;
};

/// Pseudo-diffusion orbit: the record plus the bracketing section states.
/// pre[i] / post[i] are the states just before and after transition i, and
/// end is the terminal crossing state.  Every inter-transition arc is a true
/// solution, so re-integrating post[i] turn by turn reproduces pre[i+1].
struct PseudoOrbit {
    DiffusionRecord record;
    std::vector<PhaseState> pre;
    std::vector<PhaseState> post;
    PhaseState end;
};

/// Advance to the next transit of the section q = pi (mod 2 pi) in either
/// direction, skipping the crossing the state is currently seated on.
/// This is the turn primitive of the pseudo-orbit builder; it is exposed
/// so recorded arcs can be replayed exactly.
SectionEvent next_section_crossing(const System& sys, PhaseState& s, const StepperConfig& cfg);

/**
 * Construct a pseudo-diffusion orbit at the given mu: true solution arcs
 * glued at upward crossings of the section q = pi (mod 2 pi) by jumps in
 * (I, p) of size <= c_jump * mu.  Each jump moves I toward the next path
 * waypoint and re-centers the pendulum energy near the separatrix, and is
 * applied only when the crossing phase lies within angular distance 1.0 of
 * the splitting minimum (phi0*, theta0*); other crossings wait a whole
 * turn.  Waiting beyond 10 turns on one arc is counted as stabilization
 * delay.  Terminates once |I - omega_f| <= c_jump * mu.
 *
 * mu = 0 produces the unperturbed control: a few turns on the invariant
 * torus, zero jumps.  With no_jumps the perturbed flow is followed over
 * the same kind of horizon without any gluing (exploratory mode).
 */
PseudoOrbit build_pseudo_orbit(const ExperimentConfig& cfg, double mu, bool no_jumps = false);

/// build_pseudo_orbit per entry of cfg.mu_list, in parallel.  A failure
/// lands in that record's failure field and never aborts the sweep.
std::vector<DiffusionRecord> run_diffusion_sweep(const ExperimentConfig& cfg,
                                                 bool no_jumps = false);

/// Least-squares comparison of T_d against C (1/mu) ln(1/mu) and against
/// the competing law C / mu^2, both through the origin.
struct FitReport {
    double c_hat = 0.0;
    double max_rel_residual = 0.0;
    double rms_rel_residual = 0.0;
    double competing_c = 0.0;
    double competing_max_rel = 0.0;
    double competing_rms = 0.0;
    bool log_law_wins = false;  ///< rms comparison
    long points = 0;
};

/// Requires >= 3 reached records and at least two distinct mu.
FitReport fit_time_law(const std::vector<DiffusionRecord>& records);

struct StabilityRecord {
    double mu = 0.0;
    int band = 0;
    long sample = 0;
    std::vector<double> phi0;
    std::vector<double> action0;
    double q0 = 0.0;
    double p0 = 0.0;
    double horizon = 0.0;
    double max_drift = 0.0;  ///< max over t of max_j |I_j(t) - I_j(0)|
    double min_abs_e = 0.0;  ///< min |E(q, p)| along the run
    bool blew_up = false;
    double blowup_time = 0.0;  ///< +inf when the run stayed bounded
    bool violation = false;    ///< max_drift > kappa
};

/**
 * Theorem-2 style experiment: for each mu and each |E(0)| band, integrate
 * cfg.samples initial conditions (|I(0)| <= 1, |p(0)| <= 2.5, angles
 * uniform) over the horizon (kappa0/mu) ln(1/mu) with the batched stepper
 * and record drift and separatrix proximity.  Sampling is seeded per
 * (mu, band), so records are reproducible; a blown-up sample is frozen and
 * flagged without disturbing the rest of its batch.
 */
std::vector<StabilityRecord> run_stability(const ExperimentConfig& cfg);

/**
 * Write diffusion.csv, stability.csv, plotdata.csv and summary.json into
 * out_dir (created when missing) and return the written paths.  CSV cells
 * are printf %.17g, so equal configs produce byte-identical files.
 * diffusion.csv rows carry the per-transition blocks behind the fixed
 * columns; plotdata.csv has columns mu, T_d, (1/mu)ln(1/mu); summary.json
 * records the fit, the config hash and the seed.
 */
std::vector<std::string> emit_reports(const ExperimentConfig& cfg,
                                      const std::vector<DiffusionRecord>& diffusion,
                                      const std::vector<StabilityRecord>& stability,
                                      const std::string& out_dir);

std::vector<DiffusionRecord> read_diffusion_csv(const std::string& path);
std::vector<StabilityRecord> read_stability_csv(const std::string& path);

}  // namespace driftlab
