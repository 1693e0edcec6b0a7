#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "driftlab/dynamics.hpp"
#include "driftlab/ergodization.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/experiments.hpp"
#include "driftlab/integrator.hpp"
#include "driftlab/lattice.hpp"
#include "driftlab/melnikov.hpp"
#include "driftlab/perturbation.hpp"
#include "driftlab/resonance.hpp"

using json = nlohmann::ordered_json;
using namespace driftlab;

namespace {

// "arnold", "arnold:3", or a spec file path
TrigPerturbation load_pert(const std::string& arg) {
    if (arg == "arnold") return TrigPerturbation::arnold(1);
    if (arg.rfind("arnold:", 0) == 0) return TrigPerturbation::arnold(std::stoi(arg.substr(7)));
    return TrigPerturbation::load(arg);
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

json scan_to_json(const std::vector<ScanPoint>& points) {
    json out = json::array();
    for (const auto& pt : points) {
        json row;
        row["omega"] = pt.omega;
        row["minimizer"] = pt.minimum.x;
        row["grad_norm"] = pt.minimum.grad_norm;
        row["hess_eigs"] = pt.minimum.eigenvalues;
        row["nondegenerate"] = pt.minimum.nondegenerate;
        out.push_back(row);
    }
    return out;
}

json check_to_json(const PathCheck& chk, double eta) {
    json out;
    out["certified"] = chk.certified;
    out["clearance"] = chk.clearance;
    out["eta"] = eta;
    out["worst_segment"] = chk.worst_segment;
    out["worst_mode"] = {{"n", chk.worst_mode.n}, {"l", chk.worst_mode.l}};
    return out;
}

json fit_to_json(const FitReport& fr) {
    json out;
    out["c_hat"] = fr.c_hat;
    out["max_rel_residual"] = fr.max_rel_residual;
    out["rms_rel_residual"] = fr.rms_rel_residual;
    out["competing_c"] = fr.competing_c;
    out["competing_max_rel"] = fr.competing_max_rel;
    out["competing_rms"] = fr.competing_rms;
    out["log_law_wins"] = fr.log_law_wins;
    out["points"] = fr.points;
    return out;
}

void dump_trajectory(const TrigPerturbation& pert, double mu, PhaseState s, double t_end,
                     const StepperConfig& scfg, long stride, const std::string& out_path,
                     const std::string& events_path) {
    System sys(pert, mu);
    std::ofstream out(out_path);
    if (!out) throw ConfigError("traj: cannot open " + out_path);
    const int d = sys.dim();
    out << "t";
    for (int j = 1; j <= d; ++j) out << ",phi_" << j;
    for (int j = 1; j <= d; ++j) out << ",I_" << j;
    out << ",q,p,E_pend,H\n";

    auto row = [&](const PhaseState& x) {
        out << fmt(x.time);
        for (int j = 0; j < d; ++j) out << ',' << fmt(x.phi[j]);
        for (int j = 0; j < d; ++j) out << ',' << fmt(x.action[j]);
        out << ',' << fmt(x.q) << ',' << fmt(x.p) << ',' << fmt(pendulum_energy(x.q, x.p))
            << ',' << fmt(sys.hamiltonian(x)) << '\n';
    };

    row(s);
    auto observer = [&](const PhaseState& x, long step) {
        if (step % stride == 0) row(x);
    };
    IntegrationSummary sum = integrate(sys, s, s.time + t_end, scfg, observer, !events_path.empty());

    if (!events_path.empty()) {
        std::ofstream ev(events_path);
        if (!ev) throw ConfigError("traj: cannot open " + events_path);
        ev << "index,theta";
        for (int j = 1; j <= d; ++j) ev << ",phi_" << j;
        for (int j = 1; j <= d; ++j) ev << ",I_" << j;
        ev << ",q,p,direction\n";
        for (std::size_t i = 0; i < sum.events.size(); ++i) {
            const SectionEvent& e = sum.events[i];
            ev << i << ',' << fmt(e.state.time);
            for (int j = 0; j < d; ++j) ev << ',' << fmt(e.state.phi[j]);
            for (int j = 0; j < d; ++j) ev << ',' << fmt(e.state.action[j]);
            ev << ',' << fmt(e.state.q) << ',' << fmt(e.state.p) << ',' << e.direction << '\n';
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"driftlab: pseudo-orbit diffusion laboratory for the rotator-pendulum system"};
    app.require_subcommand(1);

    // melnikov scan
    auto* mel = app.add_subcommand("melnikov", "splitting-primitive computations");
    mel->require_subcommand(1);
    auto* scan = mel->add_subcommand("scan", "minimize the primitive along a frequency segment");
    std::string scan_pert = "arnold";
    std::vector<double> scan_from, scan_to;
    int scan_samples = 11;
    scan->add_option("--pert", scan_pert, "perturbation file or preset name");
    scan->add_option("--omega-from", scan_from, "segment start frequency")->required()->expected(-1);
    scan->add_option("--omega-to", scan_to, "segment end frequency")->required()->expected(-1);
    scan->add_option("--samples", scan_samples, "sample count along the segment");
    scan->callback([&] {
        auto pts = scan_frequency_segment(load_pert(scan_pert), scan_from, scan_to, scan_samples);
        std::cout << scan_to_json(pts).dump(2) << "\n";
    });

    // resonance dist / certify
    auto* res = app.add_subcommand("resonance", "resonant web queries");
    res->require_subcommand(1);
    auto* dist = res->add_subcommand("dist", "distance from a frequency to the web");
    std::vector<double> dist_omega;
    int dist_order = 3;
    std::string dist_norm = "l1";
    dist->add_option("--omega", dist_omega, "frequency vector")->required()->expected(-1);
    dist->add_option("--order", dist_order, "web order N");
    dist->add_option("--norm", dist_norm, "mode norm: l1, l2 or linf");
    dist->callback([&] {
        auto modes = enumerate_modes(static_cast<int>(dist_omega.size()), dist_order,
                                     mode_norm_from_string(dist_norm));
        json out;
        out["omega"] = dist_omega;
        out["order"] = dist_order;
        out["modes"] = modes.size();
        out["distance"] = distance_to_web(dist_omega, modes);
        std::cout << out.dump(2) << "\n";
    });
    auto* cert = res->add_subcommand("certify", "certify a path against the web");
    std::string cert_path;
    int cert_order = 3;
    std::string cert_norm = "l1";
    cert->add_option("--path", cert_path, "frequency path file")->required();
    cert->add_option("--order", cert_order, "web order N");
    cert->add_option("--norm", cert_norm, "mode norm: l1, l2 or linf");
    cert->callback([&] {
        FrequencyPath path = FrequencyPath::load(cert_path);
        const int d = path.waypoints.empty() ? 0 : static_cast<int>(path.waypoints[0].size());
        auto modes = enumerate_modes(d, cert_order, mode_norm_from_string(cert_norm));
        std::cout << check_to_json(certify_path(path, modes), path.eta).dump(2) << "\n";
    });

    // ergo alpha / time / check
    auto* ergo = app.add_subcommand("ergo", "linear-flow ergodization on a torus");
    ergo->require_subcommand(1);
    std::string ergo_basis;
    std::vector<double> ergo_omega;
    double ergo_radius = 10.0, ergo_delta = 0.1, ergo_tmax = 1e4;
    auto add_common = [&](CLI::App* c) {
        c->add_option("--basis", ergo_basis, "lattice basis file")->required();
        c->add_option("--omega", ergo_omega, "flow direction")->required()->expected(-1);
    };
    auto* ealpha = ergo->add_subcommand("alpha", "smallest dual resonance defect");
    add_common(ealpha);
    ealpha->add_option("--radius", ergo_radius, "dual ball radius");
    ealpha->callback([&] {
        json out;
        out["radius"] = ergo_radius;
        out["alpha"] = alpha(Lattice::load(ergo_basis), ergo_omega, ergo_radius);
        std::cout << out.dump(2) << "\n";
    });
    auto* etime = ergo->add_subcommand("time", "measure the delta-ergodization time");
    add_common(etime);
    etime->add_option("--delta", ergo_delta, "covering radius delta");
    etime->add_option("--tmax", ergo_tmax, "abandon the sweep past this time");
    etime->callback([&] {
        ErgodizationConfig cfg;
        cfg.t_max = ergo_tmax;
        auto r = ergodization_time(Lattice::load(ergo_basis), ergo_omega, ergo_delta, cfg);
        json out;
        out["delta"] = ergo_delta;
        out["time"] = r.time;
        out["slack"] = r.slack;
        out["cells"] = r.cells;
        out["t_searched"] = r.t_searched;
        std::cout << out.dump(2) << "\n";
    });
    auto* echeck = ergo->add_subcommand("check", "check the spectral lower bound");
    add_common(echeck);
    echeck->add_option("--delta", ergo_delta, "covering radius delta");
    echeck->add_option("--tmax", ergo_tmax, "abandon the sweep past this time");
    echeck->callback([&] {
        ErgodizationConfig cfg;
        cfg.t_max = ergo_tmax;
        auto c = check_lemma_bounds(Lattice::load(ergo_basis), ergo_omega, ergo_delta, cfg);
        json out;
        out["delta"] = ergo_delta;
        out["t_emp"] = c.t_emp;
        out["alpha"] = c.alpha_val;
        out["lower"] = c.lower;
        out["holds"] = c.holds;
        out["c_emp"] = c.c_emp;
        std::cout << out.dump(2) << "\n";
    });

    // lab diffuse / stability / fit
    auto* lab = app.add_subcommand("lab", "diffusion and stability experiments");
    lab->require_subcommand(1);
    std::string lab_config, lab_out = "out", lab_in;
    bool no_jumps = false;
    auto* diffuse = lab->add_subcommand("diffuse", "run the pseudo-orbit diffusion sweep");
    diffuse->add_option("--config", lab_config, "experiment config file")->required();
    diffuse->add_option("--out", lab_out, "report directory");
    diffuse->add_flag("--no-jumps", no_jumps, "follow the perturbed flow without gluing");
    diffuse->callback([&] {
        ExperimentConfig cfg = ExperimentConfig::load(lab_config);
        cfg.validate();
        auto recs = run_diffusion_sweep(cfg, no_jumps);
        auto files = emit_reports(cfg, recs, {}, lab_out);
        json out;
        out["records"] = recs.size();
        long reached = 0;
        for (const auto& r : recs) reached += r.reached ? 1 : 0;
        out["reached"] = reached;
        try {
            out["fit"] = fit_to_json(fit_time_law(recs));
        } catch (const Error& e) {
            out["fit_note"] = e.what();
        }
        out["files"] = files;
        std::cout << out.dump(2) << "\n";
    });
    auto* stab = lab->add_subcommand("stability", "run the stability experiment");
    stab->add_option("--config", lab_config, "experiment config file")->required();
    stab->add_option("--out", lab_out, "report directory");
    stab->callback([&] {
        ExperimentConfig cfg = ExperimentConfig::load(lab_config);
        cfg.validate();
        auto recs = run_stability(cfg);
        auto files = emit_reports(cfg, {}, recs, lab_out);
        long violations = 0;
        for (const auto& r : recs) violations += r.violation ? 1 : 0;
        json out;
        out["records"] = recs.size();
        out["violations"] = violations;
        out["files"] = files;
        std::cout << out.dump(2) << "\n";
    });
    auto* fit = lab->add_subcommand("fit", "refit the time law from emitted reports");
    fit->add_option("--in", lab_in, "report directory holding diffusion.csv")->required();
    fit->callback([&] {
        auto recs = read_diffusion_csv(lab_in + "/diffusion.csv");
        std::cout << fit_to_json(fit_time_law(recs)).dump(2) << "\n";
    });

    // pert echo
    auto* pert = app.add_subcommand("pert", "perturbation spec utilities");
    pert->require_subcommand(1);
    auto* echo = pert->add_subcommand("echo", "parse a spec and print its canonical form");
    std::string pert_file;
    echo->add_option("--file", pert_file, "perturbation file or preset name")->required();
    echo->callback([&] { std::cout << load_pert(pert_file).json_text() << "\n"; });

    // traj dump
    auto* traj = app.add_subcommand("traj", "trajectory dumps");
    traj->require_subcommand(1);
    auto* dump = traj->add_subcommand("dump", "integrate one orbit and write CSV");
    std::string traj_pert = "arnold", traj_out, traj_events, traj_scheme = "strang2";
    std::vector<double> traj_phi{0.0}, traj_action{0.0};
    double traj_mu = 0.0, traj_q = std::numbers::pi, traj_p = 0.0, traj_tend = 100.0,
           traj_dt = 1e-3;
    long traj_stride = 100;
    dump->add_option("--pert", traj_pert, "perturbation file or preset name");
    dump->add_option("--mu", traj_mu, "perturbation strength");
    dump->add_option("--phi", traj_phi, "initial rotator angles")->expected(-1);
    dump->add_option("--action", traj_action, "initial actions")->expected(-1);
    dump->add_option("--q", traj_q, "initial pendulum angle");
    dump->add_option("--p", traj_p, "initial pendulum momentum");
    dump->add_option("--t-end", traj_tend, "integration time");
    dump->add_option("--dt", traj_dt, "step size");
    dump->add_option("--scheme", traj_scheme, "strang2 or yoshida4");
    dump->add_option("--stride", traj_stride, "steps between dump rows")->check(CLI::PositiveNumber);
    dump->add_option("--out", traj_out, "trajectory CSV path")->required();
    dump->add_option("--events", traj_events, "section events CSV path");
    dump->callback([&] {
        StepperConfig scfg;
        scfg.dt = traj_dt;
        scfg.scheme = scheme_from_string(traj_scheme);
        PhaseState s(traj_phi, traj_action, traj_q, traj_p);
        dump_trajectory(load_pert(traj_pert), traj_mu, s, traj_tend, scfg, traj_stride, traj_out,
                        traj_events);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
