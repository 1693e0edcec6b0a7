#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "driftlab/dynamics.hpp"
#include "driftlab/experiments.hpp"
#include "driftlab/kernels/api.hpp"

using namespace driftlab;

namespace {

ExperimentConfig quick_config() {
    ExperimentConfig cfg;
    cfg.mu_list = {0.02};
    return cfg;
}

double sum_jumps(const DiffusionRecord& r) {
    double s = 0.0;
    for (const auto& t : r.transitions) s += t.jump_size;
    return s;
}

double median_ts(const DiffusionRecord& r) {
    std::vector<double> ts;
    for (const auto& t : r.transitions) ts.push_back(t.t_s);
    std::sort(ts.begin(), ts.end());
    return ts[ts.size() / 2];
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const char* tag) {
        path = std::filesystem::temp_directory_path() /
               (std::string("driftlab_test_") + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("config json round trip is canonical") {
    ExperimentConfig cfg;
    cfg.mu_list = {0.05, 0.01};
    cfg.c_jump = 0.8;
    cfg.seed = 42;
    const std::string text = cfg.json_text();
    ExperimentConfig back = ExperimentConfig::from_json_text(text);
    CHECK(back.json_text() == text);
    CHECK(back.hash_hex() == cfg.hash_hex());
    CHECK(back.mu_list == cfg.mu_list);
    CHECK(back.c_jump == cfg.c_jump);
    CHECK(back.seed == cfg.seed);

    // scalar omega form and the preset string are accepted
    ExperimentConfig sc = ExperimentConfig::from_json_text(
        R"({"pert": "arnold", "omega_i": 0.3, "omega_f": 0.7, "mu_list": [0.02]})");
    CHECK(sc.omega_i == std::vector<double>{0.3});
    CHECK(sc.omega_f == std::vector<double>{0.7});
}

TEST_CASE("config hash tracks content") {
    ExperimentConfig a, b;
    CHECK(a.hash_hex() == b.hash_hex());
    b.c_jump = 0.9;
    CHECK(a.hash_hex() != b.hash_hex());
}

TEST_CASE("config validation rejects bad fields") {
    ExperimentConfig cfg;
    cfg.validate();

    ExperimentConfig bad = cfg;
    bad.mu_list = {0.02, 0.0};
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.mu_list = {1.5};
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.bands = {0.5, 0.1};
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.samples = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.omega_f = {0.4, 0.6};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("fit recovers an exact log law") {
    std::vector<DiffusionRecord> recs;
    for (double mu : {0.05, 0.02, 0.01, 0.005}) {
        DiffusionRecord r;
        r.mu = mu;
        r.k = 1;
        r.t_total = 7.0 * (1.0 / mu) * std::log(1.0 / mu);
        r.reached = true;
        recs.push_back(r);
    }
    FitReport fr = fit_time_law(recs);
    CHECK(fr.c_hat == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(fr.max_rel_residual < 1e-12);
    CHECK(fr.log_law_wins);
    CHECK(fr.points == 4);
}

TEST_CASE("fit prefers the competing law on quadratic data") {
    std::vector<DiffusionRecord> recs;
    for (double mu : {0.05, 0.02, 0.01, 0.005}) {
        DiffusionRecord r;
        r.mu = mu;
        r.k = 1;
        r.t_total = 3.0 / (mu * mu);
        r.reached = true;
        recs.push_back(r);
    }
    FitReport fr = fit_time_law(recs);
    CHECK(fr.competing_c == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(fr.competing_max_rel < 1e-10);
    CHECK_FALSE(fr.log_law_wins);
}

TEST_CASE("fit rejects degenerate designs") {
    std::vector<DiffusionRecord> recs(2);
    recs[0].mu = 0.02;
    recs[0].t_total = 100.0;
    recs[0].reached = true;
    recs[1] = recs[0];
    CHECK_THROWS_AS(fit_time_law(recs), ConfigError);  // < 3 points

    recs.push_back(recs[0]);
    CHECK_THROWS_AS(fit_time_law(recs), ConfigError);  // all mu equal
}

TEST_CASE("unperturbed orbit has no jumps and no drift") {
    ExperimentConfig cfg = quick_config();
    PseudoOrbit orb = build_pseudo_orbit(cfg, 0.0);
    CHECK(orb.record.k == 0);
    CHECK(orb.record.transitions.empty());
    CHECK(orb.record.waits == 0);
    CHECK(orb.end.action[0] == cfg.omega_i[0]);  // exact: I is constant at mu = 0
    CHECK_FALSE(orb.record.reached);
    CHECK(orb.record.final_gap == doctest::Approx(0.2));
}

TEST_CASE("pseudo orbit reaches the target inside the budget") {
    ExperimentConfig cfg = quick_config();
    const double mu = 0.02;
    const double budget = cfg.budget(mu);
    PseudoOrbit orb = build_pseudo_orbit(cfg, mu);
    const DiffusionRecord& r = orb.record;

    CHECK(r.reached);
    CHECK(r.final_gap <= budget);
    CHECK(r.k >= 10);  // |omega_f - omega_i| / budget transitions at minimum
    r.validate(budget);

    for (std::size_t i = 0; i < r.transitions.size(); ++i) {
        const Transition& t = r.transitions[i];
        CHECK(t.jump_size <= budget * (1.0 + 1e-12));
        CHECK(t.jump_size ==
              doctest::Approx(std::hypot(t.delta_i, t.delta_p)).epsilon(1e-12));
        if (i == 0) {  // the start is seated on the section
            CHECK(t.t_s >= 0.0);
            CHECK(t.turns >= 0);
        } else {
            CHECK(t.t_s > 0.0);
            CHECK(t.turns >= 1);
        }
    }
    for (std::size_t i = 1; i < r.transitions.size(); ++i)
        CHECK(r.transitions[i].theta > r.transitions[i - 1].theta);

    // triangle inequality over the ledger, plus the continuous drift bound
    const double gbound = cfg.pert.grad_phi_bound()[0];
    const double moved = std::fabs(orb.end.action[0] - cfg.omega_i[0]);
    CHECK(moved <= sum_jumps(r) + mu * gbound * r.t_total + 1e-9);
    CHECK(sum_jumps(r) <= static_cast<double>(r.k) * budget * (1.0 + 1e-12));

    double max_ts = 0.0;
    for (const auto& t : r.transitions) max_ts = std::max(max_ts, t.t_s);
    CHECK(sum_jumps(r) >= moved - static_cast<double>(r.k) * mu * gbound * max_ts);
}

TEST_CASE("arc drift obeys the continuous bound") {
    ExperimentConfig cfg = quick_config();
    const double mu = 0.02;
    PseudoOrbit orb = build_pseudo_orbit(cfg, mu);
    const double gbound = cfg.pert.grad_phi_bound()[0];
    REQUIRE(orb.pre.size() == orb.record.transitions.size());
    REQUIRE(orb.post.size() == orb.record.transitions.size());
    for (std::size_t i = 1; i < orb.pre.size(); ++i) {
        const double drift = std::fabs(orb.pre[i].action[0] - orb.post[i - 1].action[0]);
        CHECK(drift <= mu * gbound * orb.record.transitions[i].t_s + 1e-9);
    }
}

TEST_CASE("replaying an arc reproduces its endpoint") {
    ExperimentConfig cfg = quick_config();
    PseudoOrbit orb = build_pseudo_orbit(cfg, 0.02);
    REQUIRE(orb.record.k >= 3);
    System sys(cfg.pert, 0.02);
    const double tol = 10.0 * cfg.stepper.dt * cfg.stepper.dt;

    const std::size_t i = orb.pre.size() / 2;  // a middle arc, post[i-1] -> pre[i]
    PhaseState s = orb.post[i - 1];
    for (long n = 0; n < orb.record.transitions[i].turns; ++n)
        next_section_crossing(sys, s, cfg.stepper);
    CHECK(std::fabs(s.time - orb.pre[i].time) < tol);
    CHECK(std::fabs(s.action[0] - orb.pre[i].action[0]) < tol);
    CHECK(std::fabs(s.p - orb.pre[i].p) < tol);
    CHECK(std::fabs(s.q - orb.pre[i].q) < tol);
}

TEST_CASE("sweep scaling matches the expected laws") {
    ExperimentConfig cfg;  // mu_list {0.05, 0.02, 0.01}
    std::vector<DiffusionRecord> recs = run_diffusion_sweep(cfg);
    REQUIRE(recs.size() == 3);
    for (const auto& r : recs) {
        CHECK(r.failure.empty());
        CHECK(r.reached);
    }

    // T_d non-decreasing as mu decreases
    CHECK(recs[1].t_total >= recs[0].t_total);
    CHECK(recs[2].t_total >= recs[1].t_total);

    // k = O(1/mu): k * mu within a factor 2 across the sweep
    double lo = 1e300, hi = 0.0;
    for (const auto& r : recs) {
        const double km = static_cast<double>(r.k) * r.mu;
        lo = std::min(lo, km);
        hi = std::max(hi, km);
    }
    CHECK(hi <= 2.0 * lo);

    // T_s = O(ln(1/mu)): medians grow at most logarithmically
    const double ratio = median_ts(recs[2]) / median_ts(recs[0]);
    CHECK(ratio <= 1.5 * std::log(1.0 / 0.01) / std::log(1.0 / 0.05));

    FitReport fr = fit_time_law(recs);
    CHECK(std::isfinite(fr.c_hat));
    CHECK(fr.c_hat > 0.0);
    CHECK(fr.log_law_wins);
}

TEST_CASE("exploratory no-jump mode stays within the drift bound") {
    ExperimentConfig cfg = quick_config();
    const double mu = 0.02;
    PseudoOrbit orb = build_pseudo_orbit(cfg, mu, true);
    CHECK(orb.record.k == 0);
    CHECK(orb.record.transitions.empty());
    const double gbound = cfg.pert.grad_phi_bound()[0];
    const double drift = std::fabs(orb.end.action[0] - cfg.omega_i[0]);
    CHECK(drift <= mu * gbound * orb.record.t_total + 1e-9);
}

TEST_CASE("unperturbed ensemble has exactly zero drift") {
    auto cp = kernels::CompiledPert::compile(TrigPerturbation::arnold(1));
    auto st = kernels::EnsembleState::create(1, 3);
    const double qs[3] = {0.5, 2.0, 3.0};
    for (std::size_t k = 0; k < 3; ++k) {
        st.phi[st.lane(k)] = 0.3 + 0.7 * static_cast<double>(k);
        st.act[st.lane(k)] = 0.4;
        st.q[k] = qs[k];
        st.p[k] = 0.2 * static_cast<double>(k);
    }
    st.finalize_initial();
    kernels::ensemble_run(st, cp, 0.0, 1e-2, 5000, 1e8, 1);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(st.max_drift[k] == 0.0);  // I never touched at mu = 0
        CHECK(st.blowup_time[k] == std::numeric_limits<double>::infinity());
    }
}

TEST_CASE("the pendulum rest point is invariant under the coupling") {
    // f = (1 - cos q)(...) vanishes with its gradient at q = p = 0
    auto cp = kernels::CompiledPert::compile(TrigPerturbation::arnold(1));
    auto st = kernels::EnsembleState::create(1, 2);
    for (std::size_t k = 0; k < 2; ++k) {
        st.phi[st.lane(k)] = 1.1 * static_cast<double>(k);
        st.act[st.lane(k)] = 0.5;
        st.q[k] = 0.0;
        st.p[k] = 0.0;
    }
    st.finalize_initial();
    kernels::ensemble_run(st, cp, 0.05, 1e-2, 5000, 1e8, 1);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(st.max_drift[k] == 0.0);
        CHECK(st.q[k] == 0.0);
        CHECK(st.p[k] == 0.0);
    }
}

TEST_CASE("stability sampling is stratified and reproducible") {
    ExperimentConfig cfg;
    cfg.mu_list = {0.05};
    cfg.samples = 6;
    cfg.kappa0 = 0.05;
    std::vector<StabilityRecord> recs = run_stability(cfg);
    REQUIRE(recs.size() == static_cast<std::size_t>(cfg.samples * cfg.n_bands()));

    for (const auto& r : recs) {
        // the achieved horizon is rounded up to a whole number of steps
        CHECK(r.horizon >= cfg.horizon(0.05));
        CHECK(r.horizon <= cfg.horizon(0.05) + cfg.stepper.dt);
        CHECK(r.max_drift >= 0.0);
        const double e0 = std::fabs(pendulum_energy(r.q0, r.p0));
        CHECK(cfg.band_of(e0) == r.band);
        CHECK(std::fabs(r.action0[0]) <= 1.0);
        CHECK(std::fabs(r.p0) <= 2.5);
        CHECK(r.violation == (r.max_drift > cfg.kappa));
    }

    std::vector<StabilityRecord> again = run_stability(cfg);
    REQUIRE(again.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(again[i].q0 == recs[i].q0);
        CHECK(again[i].p0 == recs[i].p0);
        CHECK(again[i].max_drift == recs[i].max_drift);
    }
}

TEST_CASE("halving mu does not increase far-band drift on the shared window") {
    // equalize the horizons so both runs cover the same absolute window
    ExperimentConfig c1;
    c1.mu_list = {0.1};
    c1.samples = 8;
    c1.kappa0 = 0.5;
    ExperimentConfig c2 = c1;
    c2.mu_list = {0.05};
    c2.kappa0 = c1.kappa0 * (0.05 / 0.1) * std::log(1.0 / 0.1) / std::log(1.0 / 0.05);
    REQUIRE(c2.horizon(0.05) == doctest::Approx(c1.horizon(0.1)).epsilon(1e-12));

    std::vector<StabilityRecord> r1 = run_stability(c1);
    std::vector<StabilityRecord> r2 = run_stability(c2);
    REQUIRE(r1.size() == r2.size());

    const int far = c1.n_bands() - 1;
    int pairs = 0;
    for (std::size_t i = 0; i < r1.size(); ++i) {
        if (r1[i].band != far) continue;
        // same seed and band index, so the samples pair up exactly
        REQUIRE(r1[i].q0 == r2[i].q0);
        REQUIRE(r1[i].p0 == r2[i].p0);
        CHECK(r2[i].max_drift <= r1[i].max_drift * (1.0 + 1e-9));
        ++pairs;
    }
    CHECK(pairs == c1.samples);
}

TEST_CASE("reports survive a csv round trip") {
    ExperimentConfig cfg = quick_config();
    cfg.samples = 4;
    cfg.kappa0 = 0.02;
    std::vector<DiffusionRecord> diff = run_diffusion_sweep(cfg);
    std::vector<StabilityRecord> stab = run_stability(cfg);

    TempDir dir("roundtrip");
    std::vector<std::string> files = emit_reports(cfg, diff, stab, dir.str());
    REQUIRE(files.size() == 4);

    std::vector<DiffusionRecord> diff2 = read_diffusion_csv(dir.str() + "/diffusion.csv");
    REQUIRE(diff2.size() == diff.size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
        CHECK(diff2[i].mu == diff[i].mu);
        CHECK(diff2[i].k == diff[i].k);
        CHECK(diff2[i].waits == diff[i].waits);
        CHECK(diff2[i].t_total == diff[i].t_total);
        CHECK(diff2[i].final_gap == diff[i].final_gap);
        CHECK(diff2[i].reached == diff[i].reached);
        REQUIRE(diff2[i].transitions.size() == diff[i].transitions.size());
        for (std::size_t j = 0; j < diff[i].transitions.size(); ++j) {
            const Transition& a = diff[i].transitions[j];
            const Transition& b = diff2[i].transitions[j];
            CHECK(b.theta == a.theta);
            CHECK(b.delta_i == a.delta_i);
            CHECK(b.delta_p == a.delta_p);
            CHECK(b.jump_size == a.jump_size);
            CHECK(b.t_s == a.t_s);
            CHECK(b.turns == a.turns);
            CHECK(b.stabilization == a.stabilization);
        }
    }

    std::vector<StabilityRecord> stab2 = read_stability_csv(dir.str() + "/stability.csv");
    REQUIRE(stab2.size() == stab.size());
    for (std::size_t i = 0; i < stab.size(); ++i) {
        CHECK(stab2[i].mu == stab[i].mu);
        CHECK(stab2[i].band == stab[i].band);
        CHECK(stab2[i].sample == stab[i].sample);
        CHECK(stab2[i].horizon == stab[i].horizon);
        CHECK(stab2[i].max_drift == stab[i].max_drift);
        CHECK(stab2[i].min_abs_e == stab[i].min_abs_e);
        CHECK(stab2[i].q0 == stab[i].q0);
        CHECK(stab2[i].p0 == stab[i].p0);
        CHECK(stab2[i].violation == stab[i].violation);
    }
}

TEST_CASE("reports are byte-identical under a fixed seed") {
    ExperimentConfig cfg = quick_config();
    cfg.samples = 3;
    cfg.kappa0 = 0.02;
    TempDir d1("det1"), d2("det2");
    emit_reports(cfg, run_diffusion_sweep(cfg), run_stability(cfg), d1.str());
    emit_reports(cfg, run_diffusion_sweep(cfg), run_stability(cfg), d2.str());
    for (const char* name : {"diffusion.csv", "stability.csv", "plotdata.csv", "summary.json"})
        CHECK(slurp(d1.str() + "/" + name) == slurp(d2.str() + "/" + name));
}

TEST_CASE("empty record lists produce headers-only files") {
    ExperimentConfig cfg = quick_config();
    TempDir dir("empty");
    emit_reports(cfg, {}, {}, dir.str());
    const std::string dcsv = slurp(dir.str() + "/diffusion.csv");
    const std::string scsv = slurp(dir.str() + "/stability.csv");
    CHECK(std::count(dcsv.begin(), dcsv.end(), '\n') == 1);
    CHECK(std::count(scsv.begin(), scsv.end(), '\n') == 1);
    CHECK(dcsv.substr(0, 5) == "mu,k,");
    CHECK(scsv.substr(0, 8) == "mu,band,");
    CHECK(read_diffusion_csv(dir.str() + "/diffusion.csv").empty());
    CHECK(read_stability_csv(dir.str() + "/stability.csv").empty());

    const std::string summary = slurp(dir.str() + "/summary.json");
    CHECK(summary.find(cfg.hash_hex()) != std::string::npos);
    CHECK(summary.find("\"seed\"") != std::string::npos);
}
