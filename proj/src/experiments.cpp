#include "driftlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

#include "driftlab/angles.hpp"
#include "driftlab/dynamics.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/kernels/api.hpp"
#include "driftlab/melnikov.hpp"

namespace driftlab {

using json = nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.141592653589793238462643383279;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kAlignRadius = 1.0;  // O(1) neighborhood of the splitting minimum
constexpr long kWaitAllowance = 10;   // turns before waiting counts as stabilization delay
constexpr double kRbar = 1.0;         // |I(0)| sampling radius of the stability runs
constexpr double kRtilde = 2.5;       // |p(0)| sampling radius

std::string fmt(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double unit(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double cell_num(const std::vector<std::string>& cells, std::size_t i, const char* what) {
    try {
        return std::stod(cells.at(i));
    } catch (const std::exception&) {
        throw ConfigError(std::string("bad numeric cell in ") + what);
    }
}

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

}  // namespace

// ---------------------------------------------------------------- config

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("experiment config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    ExperimentConfig c;
    auto as_vec = [](const json& v, const char* key) {
        std::vector<double> out;
        if (v.is_number()) {
            out.push_back(v.get<double>());
            return out;
        }
        if (!v.is_array())
            throw ConfigError(std::string("config key '") + key + "' must be a number or an array");
        for (const auto& x : v) out.push_back(x.get<double>());
        return out;
    };
    try {
        if (j.contains("pert")) {
            const json& pj = j["pert"];
            if (pj.is_string()) {
                if (pj.get<std::string>() != "arnold")
                    throw ConfigError("unknown perturbation preset '" + pj.get<std::string>() + "'");
                c.pert = TrigPerturbation::arnold(1);
            } else if (pj.is_object() && pj.contains("preset")) {
                if (pj["preset"].get<std::string>() != "arnold")
                    throw ConfigError("unknown perturbation preset in config");
                c.pert = TrigPerturbation::arnold(pj.value("d", 1));
            } else {
                c.pert = TrigPerturbation::from_json_text(pj.dump());
            }
        }
        if (j.contains("mu_list")) c.mu_list = as_vec(j["mu_list"], "mu_list");
        if (j.contains("omega_i")) c.omega_i = as_vec(j["omega_i"], "omega_i");
        if (j.contains("omega_f")) c.omega_f = as_vec(j["omega_f"], "omega_f");
        if (j.contains("path")) {
            c.path.clear();
            for (const auto& w : j["path"]) c.path.push_back(as_vec(w, "path"));
        }
        if (j.contains("eta")) c.eta = j["eta"].get<double>();
        if (j.contains("c_jump")) c.c_jump = j["c_jump"].get<double>();
        if (j.contains("dt")) c.stepper.dt = j["dt"].get<double>();
        if (j.contains("scheme"))
            c.stepper.scheme = scheme_from_string(j["scheme"].get<std::string>());
        if (j.contains("kappa")) c.kappa = j["kappa"].get<double>();
        if (j.contains("kappa0")) c.kappa0 = j["kappa0"].get<double>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("samples")) c.samples = j["samples"].get<int>();
        if (j.contains("bands")) c.bands = as_vec(j["bands"], "bands");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open experiment config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string ExperimentConfig::json_text() const {
    json j;
    j["pert"] = json::parse(pert.json_text());
    j["mu_list"] = mu_list;
    j["omega_i"] = omega_i;
    j["omega_f"] = omega_f;
    j["path"] = path;
    j["eta"] = eta;
    j["c_jump"] = c_jump;
    j["dt"] = stepper.dt;
    j["scheme"] = to_string(stepper.scheme);
    j["kappa"] = kappa;
    j["kappa0"] = kappa0;
    j["seed"] = seed;
    j["samples"] = samples;
    j["bands"] = bands;
    return j.dump(2) + "\n";
}

void ExperimentConfig::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write experiment config '" + path + "'");
    out << json_text();
}

void ExperimentConfig::validate() const {
    const int d = pert.dim();
    if (mu_list.empty()) throw ConfigError("config: mu_list must be nonempty");
    for (double mu : mu_list)
        if (!(mu > 0.0) || !(mu < 1.0))
            throw ConfigError("config: every mu must lie in (0, 1)");
    if (static_cast<int>(omega_i.size()) != d || static_cast<int>(omega_f.size()) != d)
        throw ConfigError("config: omega_i and omega_f must have d components");
    for (const auto& w : path)
        if (static_cast<int>(w.size()) != d)
            throw ConfigError("config: path waypoints must have d components");
    if (!path.empty()) {
        if (path.size() < 2) throw ConfigError("config: a path needs at least two waypoints");
        if (path.front() != omega_i || path.back() != omega_f)
            throw ConfigError("config: path must run from omega_i to omega_f");
    }
    if (!(eta > 0.0)) throw ConfigError("config: eta must be positive");
    if (!(c_jump > 0.0)) throw ConfigError("config: c_jump must be positive");
    if (!(stepper.dt > 0.0)) throw ConfigError("config: dt must be positive");
    if (!(kappa > 0.0) || !(kappa0 > 0.0))
        throw ConfigError("config: kappa and kappa0 must be positive");
    if (samples < 1) throw ConfigError("config: samples must be >= 1");
    for (std::size_t i = 0; i < bands.size(); ++i) {
        if (!(bands[i] > 0.0)) throw ConfigError("config: band edges must be positive");
        if (i > 0 && !(bands[i] > bands[i - 1]))
            throw ConfigError("config: band edges must be strictly ascending");
    }
}

int ExperimentConfig::band_of(double abs_e) const {
    int b = 0;
    for (double edge : bands) {
        if (abs_e < edge) break;
        ++b;
    }
    return b;
}

FrequencyPath ExperimentConfig::effective_path() const {
    FrequencyPath p;
    p.waypoints = path.empty() ? std::vector<std::vector<double>>{omega_i, omega_f} : path;
    p.eta = eta;
    return p;
}

std::string ExperimentConfig::hash_hex() const {
    char b[20];
    std::snprintf(b, sizeof b, "%016llx",
                  static_cast<unsigned long long>(fnv1a(json_text())));
    return b;
}

// ---------------------------------------------------------- pseudo-orbit

void DiffusionRecord::validate(double budget) const {
    double prev = -kInf;
    for (const auto& tr : transitions) {
        if (!(tr.theta > prev))
            throw Error("diffusion record: transition times must be strictly increasing");
        prev = tr.theta;
        if (tr.jump_size > budget * (1.0 + 1e-12))
            throw Error("diffusion record: jump size above the c_jump * mu budget");
        if (std::fabs(std::hypot(tr.delta_i, tr.delta_p) - tr.jump_size) >
            1e-12 * (1.0 + tr.jump_size))
            throw Error("diffusion record: jump size inconsistent with its components");
        if (tr.t_s < 0.0 || tr.turns < 0)
            throw Error("diffusion record: negative transition duration");
    }
    if (static_cast<long>(transitions.size()) != k)
        throw Error("diffusion record: k disagrees with the transition log");
    if (mu > 0.0 && reached && failure.empty() && k < 1)
        throw Error("diffusion record: a perturbed run must glue at least once");
}

namespace {

struct ScanMin {
    std::vector<double> omega;
    std::vector<double> x;  // (phi0*, theta0*)
};

double period_guess(double e) {
    return std::log(32.0 / std::clamp(std::fabs(e), 1e-14, 32.0));
}

const ScanMin& nearest_min(const std::vector<ScanMin>& mins, const std::vector<double>& w) {
    std::size_t best = 0;
    double bd = kInf;
    for (std::size_t i = 0; i < mins.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) {
            double dd = mins[i].omega[j] - w[j];
            s += dd * dd;
        }
        if (s < bd) {
            bd = s;
            best = i;
        }
    }
    return mins[best];
}

/// Certify the frequency path and track the splitting minima along it.
std::vector<ScanMin> diffusion_preflight(const ExperimentConfig& cfg) {
    FrequencyPath path = cfg.effective_path();
    auto modes = enumerate_modes(cfg.pert.dim(), cfg.pert.order(), cfg.pert.norm_kind());
    PathCheck pc = certify_path(path, modes);
    if (!pc.certified) {
        std::ostringstream os;
        os << "frequency path rejected: web clearance " << pc.clearance << " below eta "
           << path.eta;
        throw ConfigError(os.str());
    }
    std::vector<ScanMin> mins;
    for (std::size_t seg = 0; seg + 1 < path.waypoints.size(); ++seg) {
        auto pts = scan_frequency_segment(cfg.pert, path.waypoints[seg],
                                          path.waypoints[seg + 1], 9);
        for (const auto& pt : pts) {
            if (!pt.minimum.converged || !pt.minimum.nondegenerate)
                throw Error("splitting minimum degenerate along the path (segment position " +
                            std::to_string(pt.s) + ")");
            mins.push_back({pt.omega, pt.minimum.x});
        }
    }
    return mins;
}

/// Per-mode quadrature coefficients for the perturbative exchange accrued
/// along a stretch of the separatrix branch through the apex.  With psi
/// the transit phase n phi + l t of a mode, the accrued exchange is
/// a sin psi + b cos psi.  Two integrands arise:
///   action:    dI/dtau =  mu n g(q0) sin(psi + nu tau)
///   pendulum:  dE/dtau = -mu p0 g'(q0) cos(psi + nu tau)
/// The saddle value of g is subtracted from the action integrand: it
/// drives the bounded linger oscillation, not the transit-local exchange.
/// tau_lo/tau_hi select the stretch: the full transit, the departing half
/// (tau >= 0) or the approaching half (tau <= 0).
struct KickCoef {
    double a = 0.0, b = 0.0;
};

enum class ExchKind { kAction, kPendulum };

constexpr double kTauCut = 38.0;  // sech tail ~ e^-38 beyond the cut

std::vector<KickCoef> exchange_coeffs(const TrigPerturbation& f, double mu, double action,
                                      double dir, ExchKind kind, double tau_lo, double tau_hi) {
    constexpr int kN = 8192;  // composite Simpson nodes (even count)
    const double h = (tau_hi - tau_lo) / kN;
    std::vector<KickCoef> out;
    out.reserve(f.modes().size());
    for (const auto& m : f.modes()) {
        const QPolynomial gp = m.g.derivative();
        const double g0 = m.g.eval(0.0);
        const double nu = m.n[0] * action + m.l;
        double c = 0.0, sn = 0.0;
        for (int i = 0; i <= kN; ++i) {
            double tau = tau_lo + h * i;
            double w = (i == 0 || i == kN) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            double ex = std::exp(dir * tau);
            double q0 = 4.0 * std::atan(ex);
            double base = kind == ExchKind::kAction
                              ? w * m.n[0] * (m.g.eval(q0) - g0)
                              : w * dir * 4.0 / (ex + 1.0 / ex) * gp.eval(q0);
            c += base * std::cos(nu * tau);
            sn += base * std::sin(nu * tau);
        }
        if (kind == ExchKind::kAction)
            out.push_back({mu * c * (h / 3.0), mu * sn * (h / 3.0)});
        else
            out.push_back({mu * sn * (h / 3.0), -mu * c * (h / 3.0)});
    }
    return out;
}

double eval_exchange(const TrigPerturbation& f, const std::vector<KickCoef>& kc, double phi,
                     double th) {
    double total = 0.0;
    for (std::size_t j = 0; j < kc.size(); ++j) {
        const auto& m = f.modes()[j];
        double psi = m.n[0] * phi + m.l * th;
        total += kc[j].a * std::sin(psi) + kc[j].b * std::cos(psi);
    }
    return total;
}

struct SteerResult {
    double e_tgt;  // re-centered level to glue onto at this transit
    double e_pk;   // predicted post-exchange level governing the linger
};

/// Choose the re-centered pendulum level for the upcoming arc.  The orbit
/// lingers near the saddle for about log(32/|E|) before re-crossing the
/// section, so the level doubles as the phase-alignment knob; the scan
/// aims the post-exchange level E + D, since the departure exchange D is
/// predictable from the transit phase.  Negative post-exchange levels are
/// allowed (the arc turns back and re-crosses the apex reversed), but the
/// glued level itself must stay inside the |E| <= c_jump mu band and be
/// reachable with the pendulum share of the jump.  Arrival scatter grows
/// like sigma_d / |E + D| through the linger stretch, so candidates are
/// scored against the splitting minimum with that uncertainty folded in.
/// Candidates are also charged for the natural action exchange their
/// arrival transit would pick up, both the full kick and its approaching
/// half: with those held near zero at every arrival the per-arc exchanges
/// telescope away and the transport stays pinned to the jump steps.

SteerResult steer_energy(const ScanMin& sm, const TrigPerturbation& f, double mu,
                         const PhaseState& s, double di_est, double budget, double dp_cap,
                         double offset, double sigma_d) {
    const double i1 = s.action[0] + di_est;
    const double dir = s.p >= 0.0 ? 1.0 : -1.0;
    const double D = eval_exchange(
        f, exchange_coeffs(f, mu, i1, dir, ExchKind::kPendulum, 0.0, kTauCut), s.phi[0], s.time);
    const double pa = std::max(std::fabs(s.p) - dp_cap, 0.05);
    const double pb = std::fabs(s.p) + dp_cap;
    const double cq = std::cos(s.q);
    const double reach_lo = 0.5 * pa * pa + cq - 1.0;
    const double reach_hi = 0.5 * pb * pb + cq - 1.0;
    const double e_lo = std::max(reach_lo, -budget);
    const double e_hi = std::min(reach_hi, budget);
    const double t_lo = period_guess(budget + std::fabs(D)) + offset;
    const double t_hi = period_guess(0.02 * budget) + offset;

    // fallback: aim for the band (longest reliable linger inside it), within reach
    SteerResult best{std::clamp(std::clamp(-D, -budget, budget), reach_lo, reach_hi), 0.0};
    best.e_pk = best.e_tgt + D;
    if (e_lo > e_hi) return best;  // band not yet reachable: pure recovery glue
    const auto full_up = exchange_coeffs(f, mu, i1, dir, ExchKind::kAction, -kTauCut, kTauCut);
    const auto full_dn = exchange_coeffs(f, mu, i1, -dir, ExchKind::kAction, -kTauCut, kTauCut);
    const auto app_up = exchange_coeffs(f, mu, i1, dir, ExchKind::kAction, -kTauCut, 0.0);
    const auto app_dn = exchange_coeffs(f, mu, i1, -dir, ExchKind::kAction, -kTauCut, 0.0);
    const auto pf_up = exchange_coeffs(f, mu, i1, dir, ExchKind::kPendulum, -kTauCut, kTauCut);
    const auto pf_dn = exchange_coeffs(f, mu, i1, -dir, ExchKind::kPendulum, -kTauCut, kTauCut);
    const auto pa_up = exchange_coeffs(f, mu, i1, dir, ExchKind::kPendulum, -kTauCut, 0.0);
    const auto pa_dn = exchange_coeffs(f, mu, i1, -dir, ExchKind::kPendulum, -kTauCut, 0.0);
    const double wgt = 1.0 + i1 * i1;  // linger scatter enters both angles
    double best_score = kInf;
    for (double T = t_lo; T <= t_hi; T += 0.05) {
        double mag = 32.0 * std::exp(offset - T);
        for (double sign : {1.0, -1.0}) {
            double e_pk = sign * mag;
            double e_tgt = e_pk - D;
            if (e_tgt < e_lo || e_tgt > e_hi) continue;
            double sig_t = sigma_d / mag;
            double phi_a = s.phi[0] + i1 * T;
            double th_a = s.time + T;
            double d2 = std::pow(angular_dist(phi_a, sm.x[0]), 2) +
                        std::pow(angular_dist(th_a, sm.x[1]), 2);
            double kf = eval_exchange(f, e_pk >= 0.0 ? full_up : full_dn, phi_a, th_a) / budget;
            double ka = eval_exchange(f, e_pk >= 0.0 ? app_up : app_dn, phi_a, th_a) / budget;
            // pendulum channel telescopes the same way; its approach half is
            // the arrival-level scatter and full minus approach is the next
            // departure exchange, which keeps the following window in-band
            double ef = eval_exchange(f, e_pk >= 0.0 ? pf_up : pf_dn, phi_a, th_a) / budget;
            double ea = eval_exchange(f, e_pk >= 0.0 ? pa_up : pa_dn, phi_a, th_a) / budget;
            // both the alignment and the scatter terms saturate: past ~2 rad
            // an arrival is misaligned whatever the exact distance, and the
            // scan should then spend the hop on kick suppression instead
            double score = std::min(d2, 4.0) + std::min(wgt * sig_t * sig_t, 4.0) +
                           0.35 * (kf * kf + ka * ka) +
                           0.25 * (ea * ea + (ef - ea) * (ef - ea));
            if (score < best_score) {
                best_score = score;
                best = {e_tgt, e_pk};
            }
        }
    }
    return best;
}

}  // namespace

SectionEvent next_section_crossing(const System& sys, PhaseState& s, const StepperConfig& cfg) {
    // Seated exactly on the section the sign test retriggers within the first
    // step, so discard any event closer than half the shortest return time and
    // hop one step past the section before searching again.  Grazing transits
    // can defeat the bracketed refinement; hop past those too and keep walking.
    const double t_floor = s.time + 0.5;
    for (int tries = 0; tries < 12; ++tries) {
        double e = pendulum_energy(s.q, s.p);
        double t_max = s.time + 8.0 * period_guess(e) + 60.0;
        std::optional<SectionEvent> ev;
        try {
            ev = integrate_to_section(sys, s, t_max, cfg, 0);
        } catch (const BlowUpError&) {
            throw;
        } catch (const StepCapError&) {
            throw;
        } catch (const Error&) {
            step_once(sys, s, cfg.dt, cfg.scheme);
            continue;
        }
        if (!ev) throw Error("pseudo-orbit lost the section return");
        if (ev->state.time >= t_floor) return *ev;
        step_once(sys, s, cfg.dt, cfg.scheme);
    }
    throw Error("section return kept collapsing onto the seated crossing");
}

PseudoOrbit build_pseudo_orbit(const ExperimentConfig& cfg, double mu, bool no_jumps) {
    cfg.validate();
    if (cfg.pert.dim() != 1)
        throw ConfigError("the pseudo-orbit builder supports a single rotator (d = 1)");
    if (!(mu >= 0.0) || mu >= 1.0)
        throw ConfigError("build_pseudo_orbit: mu must lie in [0, 1)");

    const std::vector<ScanMin> mins = diffusion_preflight(cfg);
    const bool jumps = mu > 0.0 && !no_jumps;
    if (jumps && cfg.omega_i == cfg.omega_f)
        throw ConfigError("build_pseudo_orbit: omega_i and omega_f must differ");

    const double budget = cfg.budget(mu);
    const double e_nom = mu > 0.0 ? 0.75 * cfg.c_jump * mu : 1e-3;
    const double omf = cfg.omega_f[0];
    const double gap0 = std::fabs(omf - cfg.omega_i[0]);
    const double gbound = cfg.pert.grad_phi_bound()[0];

    System sys(cfg.pert, mu);
    const StepperConfig& icfg = cfg.stepper;
    const FrequencyPath path = cfg.effective_path();
    const auto& wps = path.waypoints;

    // start on the section apex, phase-locked to the splitting minimum; seat
    // it where the departing branch carries no net exchange in either the
    // action or the pendulum channel, so the run boundary contributes O(mu)
    // rather than a fixed fraction of the transport budget, and the first
    // window of re-centered levels stays inside the band
    const ScanMin& m0 = nearest_min(mins, cfg.omega_i);
    double phi0 = m0.x[0], th0 = m0.x[1];
    if (jumps) {
        const auto dep_i =
            exchange_coeffs(cfg.pert, mu, cfg.omega_i[0], 1.0, ExchKind::kAction, 0.0, kTauCut);
        const auto dep_e =
            exchange_coeffs(cfg.pert, mu, cfg.omega_i[0], 1.0, ExchKind::kPendulum, 0.0, kTauCut);
        const double b2 = budget * budget;
        double best = kInf;
        for (double dphi = -1.5; dphi <= 1.5; dphi += 0.01)
            for (double dth = -1.5; dth <= 1.5; dth += 0.01) {
                double r2 = dphi * dphi + dth * dth;
                if (r2 > 2.25) continue;
                double ki = eval_exchange(cfg.pert, dep_i, m0.x[0] + dphi, m0.x[1] + dth);
                double ke = eval_exchange(cfg.pert, dep_e, m0.x[0] + dphi, m0.x[1] + dth);
                double h2 = (ki * ki + ke * ke) / b2 + 0.05 * r2;
                if (h2 < best) {
                    best = h2;
                    phi0 = m0.x[0] + dphi;
                    th0 = m0.x[1] + dth;
                }
            }
    }
    PhaseState s({phi0}, {cfg.omega_i[0]}, kPi, std::sqrt(2.0 * e_nom + 4.0), th0);

    PseudoOrbit out;
    DiffusionRecord& rec = out.record;
    rec.mu = mu;
    const double t_start = s.time;
    double prev_theta = s.time;
    long arc_turns = 0;
    long miss_streak = 0;
    std::size_t wp = 1;
    double offset = 0.9;  // measured arc time minus log(32/|E|), learned online
    double sigma_d = 0.0;  // scatter of the exchange prediction, learned online
    double pending_epk = e_nom;  // post-exchange level of the arc in flight
    if (jumps) sigma_d = 0.15 * budget;

    const long cap_turns = 4000 + (jumps ? static_cast<long>(60.0 * gap0 / budget) : 0);
    const double free_span = (mu > 0.0 && !jumps) ? cfg.horizon(mu) : 0.0;
    const long free_turns = 8;  // mu = 0 control horizon, in pendulum turns

    for (long turn = 0;; ++turn) {
        if (turn > cap_turns) throw StepCapError("pseudo-orbit exceeded its turn budget");
        double gap_f = std::fabs(s.action[0] - omf);
        // land half a band-width inside the target: the tail of the walk then
        // costs the same number of hops at every mu instead of saving an
        // O(1) slice whose relative weight would grow with mu
        if (jumps && gap_f <= 0.5 * budget) {
            rec.reached = true;
            break;
        }
        if (!jumps) {
            bool done = mu == 0.0 ? turn >= free_turns : s.time - t_start >= free_span;
            if (done) {
                rec.reached = gap_f <= budget;
                break;
            }
        }

        if (jumps) {
            // every section transit is a gluing instant: the jump always
            // re-centers the pendulum level (which also sets the linger time
            // steering the next transit phase), and carries action toward the
            // next waypoint only when the transit arrived phase-aligned
            while (wp + 1 < wps.size() && std::fabs(s.action[0] - wps[wp][0]) <= budget) ++wp;
            const ScanMin& sm = nearest_min(mins, s.action);
            bool aligned = std::hypot(angular_dist(s.phi[0], sm.x[0]),
                                      angular_dist(s.time, sm.x[1])) <= kAlignRadius;
            double want = wps[wp][0] - s.action[0];
            double dp_cap = 0.9 * budget;
            double di_est = std::clamp(want, -0.436 * budget, 0.436 * budget);
            SteerResult sr =
                steer_energy(sm, cfg.pert, mu, s, di_est, budget, dp_cap, offset, sigma_d);
            double dir = s.p >= 0.0 ? 1.0 : -1.0;
            double p_want = dir * std::sqrt(2.0 * (sr.e_tgt + 1.0 - std::cos(s.q)));
            double dp = std::clamp(p_want - s.p, -dp_cap, dp_cap);
            double slack = std::sqrt(std::max(budget * budget - dp * dp, 0.0));
            // fixed-size action steps: k then counts gap / step almost
            // deterministically, which is what makes k scale like 1/mu
            double di = std::clamp(want, -std::min(slack, 0.435 * budget),
                                   std::min(slack, 0.435 * budget));

            out.pre.push_back(s);
            Transition tr;
            tr.theta = s.time;
            tr.t_s = s.time - prev_theta;
            tr.turns = arc_turns;
            tr.stabilization = !aligned;
            tr.delta_i = di;
            tr.delta_p = dp;
            tr.jump_size = std::hypot(di, dp);
            s.action[0] += di;
            s.p += dp;
            out.post.push_back(s);
            rec.transitions.push_back(tr);
            if (aligned) {
                miss_streak = 0;
            } else {
                rec.waits += 1;
                miss_streak += 1;
                if (miss_streak > kWaitAllowance) rec.stabilization_delays += 1;
            }
            prev_theta = s.time;
            arc_turns = 0;
            if (std::fabs(s.action[0] - omf) <= 0.5 * budget) {
                rec.reached = true;
                break;
            }

            // measure the realized post-exchange level on a throwaway copy;
            // it calibrates the linger-time offset and the kick scatter
            double span = std::max(4.0, std::min(6.0, 0.5 * (period_guess(sr.e_pk) + offset)));
            double e_meas = sr.e_pk;
            try {
                PhaseState probe = s;
                integrate(sys, probe, s.time + span, icfg);
                e_meas = pendulum_energy(probe.q, probe.p);
            } catch (const Error&) {
            }
            sigma_d = std::clamp(0.8 * sigma_d + 0.2 * std::fabs(e_meas - sr.e_pk),
                                 0.05 * budget, 2.0 * budget);
            pending_epk = e_meas;
        }

        double t_before = s.time;
        SectionEvent ev = next_section_crossing(sys, s, icfg);
        s = ev.state;
        if (jumps) offset = 0.7 * offset + 0.3 * (s.time - t_before - period_guess(pending_epk));
        ++arc_turns;
    }

    out.end = s;
    rec.k = static_cast<long>(rec.transitions.size());
    rec.t_total = s.time - t_start;
    rec.final_gap = std::fabs(s.action[0] - omf);
    rec.validate(budget);

    if (jumps) {
        // ledger assertions: the logged jumps plus the continuous drift bound
        // account for the whole action displacement
        double moved = std::fabs(out.end.action[0] - cfg.omega_i[0]);
        double sum_jump = 0.0, max_ts = 0.0;
        for (const auto& tr : rec.transitions) {
            sum_jump += tr.jump_size;
            max_ts = std::max(max_ts, tr.t_s);
        }
        if (moved > sum_jump + mu * gbound * rec.t_total * (1.0 + 1e-9) + 1e-12)
            throw Error("pseudo-orbit: action moved beyond the jump + drift ledger");
        if (sum_jump + 1e-12 < moved - rec.k * mu * gbound * max_ts)
            throw Error("pseudo-orbit: jump ledger below the measured displacement");
        for (std::size_t i = 0; i + 1 < out.post.size(); ++i) {
            double drift = std::fabs(out.pre[i + 1].action[0] - out.post[i].action[0]);
            if (drift > mu * gbound * rec.transitions[i + 1].t_s * (1.0 + 1e-9) + 1e-12)
                throw Error("pseudo-orbit: arc drift above the mu sup|df/dphi| T_s bound");
        }
    }
    return out;
}

std::vector<DiffusionRecord> run_diffusion_sweep(const ExperimentConfig& cfg, bool no_jumps) {
    cfg.validate();
    std::vector<DiffusionRecord> out(cfg.mu_list.size());
    std::vector<std::future<void>> tasks;
    tasks.reserve(out.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        tasks.push_back(std::async(std::launch::async, [&cfg, &out, no_jumps, i] {
            try {
                out[i] = build_pseudo_orbit(cfg, cfg.mu_list[i], no_jumps).record;
            } catch (const std::exception& e) {
                out[i] = DiffusionRecord{};
                out[i].mu = cfg.mu_list[i];
                out[i].failure = e.what();
            }
        }));
    for (auto& t : tasks) t.get();
    return out;
}

// -------------------------------------------------------------- time law

FitReport fit_time_law(const std::vector<DiffusionRecord>& records) {
    std::vector<double> xlog, xsq, y;
    for (const auto& r : records) {
        if (!r.failure.empty() || !r.reached || !std::isfinite(r.t_total)) continue;
        if (!(r.mu > 0.0) || r.mu >= 1.0) continue;
        xlog.push_back(std::log(1.0 / r.mu) / r.mu);
        xsq.push_back(1.0 / (r.mu * r.mu));
        y.push_back(r.t_total);
    }
    if (y.size() < 3) throw ConfigError("fit_time_law: need at least 3 reached records");
    bool distinct = false;
    for (double x : xlog)
        if (x != xlog.front()) distinct = true;
    if (!distinct) throw ConfigError("fit_time_law: degenerate design, all mu equal");

    auto fit_through_origin = [&y](const std::vector<double>& x, double& c, double& max_rel,
                                   double& rms) {
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            sxy += x[i] * y[i];
            sxx += x[i] * x[i];
        }
        c = sxy / sxx;
        max_rel = 0.0;
        double acc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            double rel = std::fabs(y[i] - c * x[i]) / std::fabs(y[i]);
            max_rel = std::max(max_rel, rel);
            acc += rel * rel;
        }
        rms = std::sqrt(acc / static_cast<double>(y.size()));
    };

    FitReport rep;
    rep.points = static_cast<long>(y.size());
    fit_through_origin(xlog, rep.c_hat, rep.max_rel_residual, rep.rms_rel_residual);
    fit_through_origin(xsq, rep.competing_c, rep.competing_max_rel, rep.competing_rms);
    rep.log_law_wins = rep.rms_rel_residual <= rep.competing_rms;
    return rep;
}

// ------------------------------------------------------------- stability

namespace {

std::vector<StabilityRecord> stability_band(const ExperimentConfig& cfg,
                                            const kernels::CompiledPert& cp,
                                            std::size_t mu_idx, int band) {
    const int d = cfg.pert.dim();
    const double mu = cfg.mu_list[mu_idx];
    const long n = cfg.samples;
    std::mt19937_64 gen(splitmix(cfg.seed ^ splitmix(0x5741B17Eull + 1000 * mu_idx +
                                                     static_cast<std::uint64_t>(band))));
    kernels::EnsembleState st = kernels::EnsembleState::create(d, static_cast<std::size_t>(n));
    std::vector<StabilityRecord> recs(n);
    for (long i = 0; i < n; ++i) {
        double q = 0.0, p = 0.0;
        long guard = 0;
        for (;;) {
            if (++guard > 1000000)
                throw Error("stability sampling: |E| band " + std::to_string(band) +
                            " rejection cap hit");
            q = two_pi * unit(gen);
            p = kRtilde * (2.0 * unit(gen) - 1.0);
            if (cfg.band_of(std::fabs(pendulum_energy(q, p))) == band) break;
        }
        StabilityRecord& r = recs[i];
        r.mu = mu;
        r.band = band;
        r.sample = i;
        r.q0 = q;
        r.p0 = p;
        r.phi0.resize(d);
        r.action0.resize(d);
        for (int j = 0; j < d; ++j) {
            r.phi0[j] = two_pi * unit(gen);
            r.action0[j] = kRbar * (2.0 * unit(gen) - 1.0);
            st.phi[st.lane(i, j)] = r.phi0[j];
            st.act[st.lane(i, j)] = r.action0[j];
        }
        st.q[i] = q;
        st.p[i] = p;
    }
    st.finalize_initial();

    const double dt = cfg.stepper.dt;
    long nsteps = std::max<long>(1, std::llround(cfg.horizon(mu) / dt));
    int substeps = cfg.stepper.scheme == Scheme::Yoshida4 ? 3 : 1;
    kernels::ensemble_run(st, cp, mu, dt, nsteps, 1e8, substeps);

    for (long i = 0; i < n; ++i) {
        StabilityRecord& r = recs[i];
        r.horizon = static_cast<double>(nsteps) * dt;
        r.max_drift = st.max_drift[i];
        r.min_abs_e = st.min_abs_e[i];
        r.blowup_time = st.blowup_time[i];
        r.blew_up = std::isfinite(r.blowup_time);
        r.violation = !(r.max_drift <= cfg.kappa);
    }
    return recs;
}

}  // namespace

std::vector<StabilityRecord> run_stability(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto cp = kernels::CompiledPert::compile(cfg.pert);
    const int nb = cfg.n_bands();
    std::vector<std::vector<StabilityRecord>> parts(cfg.mu_list.size() * nb);
    std::vector<std::future<void>> tasks;
    tasks.reserve(parts.size());
    for (std::size_t i = 0; i < cfg.mu_list.size(); ++i)
        for (int b = 0; b < nb; ++b)
            tasks.push_back(std::async(std::launch::async, [&cfg, &cp, &parts, i, b, nb] {
                parts[i * nb + b] = stability_band(cfg, cp, i, b);
            }));
    for (auto& t : tasks) t.get();
    std::vector<StabilityRecord> out;
    for (auto& part : parts) out.insert(out.end(), part.begin(), part.end());
    return out;
}

// --------------------------------------------------------------- reports

std::vector<std::string> emit_reports(const ExperimentConfig& cfg,
                                      const std::vector<DiffusionRecord>& diffusion,
                                      const std::vector<StabilityRecord>& stability,
                                      const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error("cannot create output directory '" + out_dir + "': " + ec.message());
    auto open = [&out_dir](const std::string& name) {
        std::ofstream f(out_dir + "/" + name, std::ios::binary);
        if (!f) throw Error("cannot write '" + out_dir + "/" + name + "'");
        return f;
    };
    std::vector<std::string> written;

    {
        std::ofstream f = open("diffusion.csv");
        f << "mu,k,waits,stab_delays,t_total,final_gap,reached,failure,"
             "theta[],jump[],delta_I[],delta_p[],t_s[],turns[],stab[]\n";
        for (const auto& r : diffusion) {
            f << fmt(r.mu) << ',' << r.k << ',' << r.waits << ',' << r.stabilization_delays
              << ',' << fmt(r.t_total) << ',' << fmt(r.final_gap) << ','
              << (r.reached ? 1 : 0) << ',' << sanitize(r.failure);
            for (const auto& tr : r.transitions) f << ',' << fmt(tr.theta);
            for (const auto& tr : r.transitions) f << ',' << fmt(tr.jump_size);
            for (const auto& tr : r.transitions) f << ',' << fmt(tr.delta_i);
            for (const auto& tr : r.transitions) f << ',' << fmt(tr.delta_p);
            for (const auto& tr : r.transitions) f << ',' << fmt(tr.t_s);
            for (const auto& tr : r.transitions) f << ',' << tr.turns;
            for (const auto& tr : r.transitions) f << ',' << (tr.stabilization ? 1 : 0);
            f << '\n';
        }
        written.push_back(out_dir + "/diffusion.csv");
    }

    {
        std::ofstream f = open("stability.csv");
        const int d = cfg.pert.dim();
        f << "mu,band,sample,horizon,max_drift,min_abs_E,violation,blew_up,blowup_time,q0,p0";
        for (int j = 1; j <= d; ++j) f << ",phi0_" << j;
        for (int j = 1; j <= d; ++j) f << ",I0_" << j;
        f << '\n';
        for (const auto& r : stability) {
            f << fmt(r.mu) << ',' << r.band << ',' << r.sample << ',' << fmt(r.horizon) << ','
              << fmt(r.max_drift) << ',' << fmt(r.min_abs_e) << ',' << (r.violation ? 1 : 0)
              << ',' << (r.blew_up ? 1 : 0) << ',' << fmt(r.blowup_time) << ',' << fmt(r.q0)
              << ',' << fmt(r.p0);
            for (double v : r.phi0) f << ',' << fmt(v);
            for (double v : r.action0) f << ',' << fmt(v);
            f << '\n';
        }
        written.push_back(out_dir + "/stability.csv");
    }

    {
        std::ofstream f = open("plotdata.csv");
        f << "mu,T_d,(1/mu)ln(1/mu)\n";
        for (const auto& r : diffusion) {
            if (!r.failure.empty() || !r.reached) continue;
            f << fmt(r.mu) << ',' << fmt(r.t_total) << ','
              << fmt(std::log(1.0 / r.mu) / r.mu) << '\n';
        }
        written.push_back(out_dir + "/plotdata.csv");
    }

    {
        json j;
        j["config"] = json::parse(cfg.json_text());
        j["config_hash"] = cfg.hash_hex();
        j["seed"] = cfg.seed;
        json darr = json::array();
        for (const auto& r : diffusion) {
            json e;
            e["mu"] = r.mu;
            e["k"] = r.k;
            e["waits"] = r.waits;
            e["stabilization_delays"] = r.stabilization_delays;
            e["t_total"] = r.t_total;
            e["final_gap"] = r.final_gap;
            e["reached"] = r.reached;
            if (!r.failure.empty()) e["failure"] = r.failure;
            darr.push_back(e);
        }
        j["diffusion"] = darr;
        try {
            FitReport fr = fit_time_law(diffusion);
            json e;
            e["c_hat"] = fr.c_hat;
            e["max_rel_residual"] = fr.max_rel_residual;
            e["rms_rel_residual"] = fr.rms_rel_residual;
            e["competing_c"] = fr.competing_c;
            e["competing_max_rel"] = fr.competing_max_rel;
            e["competing_rms"] = fr.competing_rms;
            e["log_law_wins"] = fr.log_law_wins;
            e["points"] = fr.points;
            j["fit"] = e;
        } catch (const std::exception& e) {
            j["fit"] = nullptr;
            j["fit_note"] = e.what();
        }
        json sarr = json::array();
        for (std::size_t i = 0; i < cfg.mu_list.size(); ++i)
            for (int b = 0; b < cfg.n_bands(); ++b) {
                long count = 0, violations = 0, blowups = 0;
                double worst = 0.0, closest = kInf;
                for (const auto& r : stability) {
                    if (r.mu != cfg.mu_list[i] || r.band != b) continue;
                    ++count;
                    if (r.violation) ++violations;
                    if (r.blew_up) ++blowups;
                    worst = std::max(worst, r.max_drift);
                    closest = std::min(closest, r.min_abs_e);
                }
                if (count == 0) continue;
                json e;
                e["mu"] = cfg.mu_list[i];
                e["band"] = b;
                e["count"] = count;
                e["violations"] = violations;
                e["blowups"] = blowups;
                e["worst_drift"] = worst;
                e["min_abs_E"] = closest;
                sarr.push_back(e);
            }
        j["stability"] = sarr;
        std::ofstream f = open("summary.json");
        f << j.dump(2) << '\n';
        written.push_back(out_dir + "/summary.json");
    }
    return written;
}

std::vector<DiffusionRecord> read_diffusion_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("diffusion csv '" + path + "' is empty");
    std::vector<DiffusionRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() < 8) throw ConfigError("diffusion csv row too short");
        DiffusionRecord r;
        r.mu = cell_num(cells, 0, "diffusion csv");
        r.k = static_cast<long>(cell_num(cells, 1, "diffusion csv"));
        r.waits = static_cast<long>(cell_num(cells, 2, "diffusion csv"));
        r.stabilization_delays = static_cast<long>(cell_num(cells, 3, "diffusion csv"));
        r.t_total = cell_num(cells, 4, "diffusion csv");
        r.final_gap = cell_num(cells, 5, "diffusion csv");
        r.reached = cell_num(cells, 6, "diffusion csv") != 0.0;
        r.failure = cells[7];
        const std::size_t k = static_cast<std::size_t>(r.k);
        if (cells.size() != 8 + 7 * k)
            throw ConfigError("diffusion csv row has wrong transition block length");
        r.transitions.resize(k);
        for (std::size_t i = 0; i < k; ++i) {
            Transition& tr = r.transitions[i];
            tr.theta = cell_num(cells, 8 + i, "diffusion csv");
            tr.jump_size = cell_num(cells, 8 + k + i, "diffusion csv");
            tr.delta_i = cell_num(cells, 8 + 2 * k + i, "diffusion csv");
            tr.delta_p = cell_num(cells, 8 + 3 * k + i, "diffusion csv");
            tr.t_s = cell_num(cells, 8 + 4 * k + i, "diffusion csv");
            tr.turns = static_cast<long>(cell_num(cells, 8 + 5 * k + i, "diffusion csv"));
            tr.stabilization = cell_num(cells, 8 + 6 * k + i, "diffusion csv") != 0.0;
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<StabilityRecord> read_stability_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("stability csv '" + path + "' is empty");
    const std::size_t ncols = split_csv(line).size();
    if (ncols < 13 || (ncols - 11) % 2 != 0)
        throw ConfigError("stability csv header has unexpected shape");
    const std::size_t d = (ncols - 11) / 2;
    std::vector<StabilityRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != ncols) throw ConfigError("stability csv row has wrong width");
        StabilityRecord r;
        r.mu = cell_num(cells, 0, "stability csv");
        r.band = static_cast<int>(cell_num(cells, 1, "stability csv"));
        r.sample = static_cast<long>(cell_num(cells, 2, "stability csv"));
        r.horizon = cell_num(cells, 3, "stability csv");
        r.max_drift = cell_num(cells, 4, "stability csv");
        r.min_abs_e = cell_num(cells, 5, "stability csv");
        r.violation = cell_num(cells, 6, "stability csv") != 0.0;
        r.blew_up = cell_num(cells, 7, "stability csv") != 0.0;
        r.blowup_time = cell_num(cells, 8, "stability csv");
        r.q0 = cell_num(cells, 9, "stability csv");
        r.p0 = cell_num(cells, 10, "stability csv");
        r.phi0.resize(d);
        r.action0.resize(d);
        for (std::size_t j = 0; j < d; ++j) {
            r.phi0[j] = cell_num(cells, 11 + j, "stability csv");
            r.action0[j] = cell_num(cells, 11 + d + j, "stability csv");
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace driftlab
