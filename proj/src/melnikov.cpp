#include "driftlab/melnikov.hpp"

#include <cmath>

#include "driftlab/angles.hpp"
#include "driftlab/dynamics.hpp"
#include "driftlab/quadrature.hpp"

namespace driftlab {

double sech2_transform_exact(double nu) {
    double x = 0.5 * M_PI * nu;
    if (std::fabs(x) < 1e-4) {
        double x2 = x * x;
        return 4.0 * (1.0 - x2 / 6.0 + 7.0 * x2 * x2 / 360.0);
    }
    return 4.0 * x / std::sinh(x);
}

std::complex<double> mode_integral(const QPolynomial& g, double nu, const MelnikovConfig& cfg) {
    double g0 = g.eval(0.0);
    auto dg = [&](double t) {
        double q, p;
        separatrix_state(t, q, p);
        return g.eval(q) - g0;
    };
    auto re = integrate_adaptive([&](double t) { return dg(t) * std::cos(nu * t); },
                                 -cfg.t_cut, cfg.t_cut, cfg.quad_tol, cfg.max_panels);
    auto im = integrate_adaptive([&](double t) { return dg(t) * std::sin(nu * t); },
                                 -cfg.t_cut, cfg.t_cut, cfg.quad_tol, cfg.max_panels);
    return {re.value, im.value};
}

MelnikovModel::MelnikovModel(const TrigPerturbation& f, std::vector<double> omega,
                             const MelnikovConfig& cfg)
    : d_(f.dim()), omega_(std::move(omega)), cfg_(cfg), pert_(f) {
    if (static_cast<int>(omega_.size()) != d_)
        throw ConfigError("MelnikovModel: omega must have one entry per rotator");
    for (double w : omega_)
        if (!std::isfinite(w)) throw ConfigError("MelnikovModel: nonfinite frequency");
    keys_.reserve(f.modes().size());
    for (const auto& m : f.modes()) {
        std::vector<int> key(m.n);
        key.push_back(m.l);
        double nu = static_cast<double>(m.l);
        for (int j = 0; j < d_; ++j) nu += m.n[static_cast<std::size_t>(j)] * omega_[static_cast<std::size_t>(j)];
        keys_.push_back(std::move(key));
        nu_.push_back(nu);
        ps_.push_back(mode_integral(m.g, nu, cfg_));
    }
}

bool MelnikovModel::degenerate() const {
    double m = 0.0;
    for (const auto& c : ps_) m = std::max(m, std::abs(c));
    return m < 1e-14;
}

double MelnikovModel::value(const std::vector<double>& x) const {
    double v = 0.0;
    for (std::size_t k = 0; k < ps_.size(); ++k) {
        double psi = 0.0;
        for (std::size_t j = 0; j < keys_[k].size(); ++j) psi += keys_[k][j] * x[j];
        v -= ps_[k].real() * std::cos(psi) - ps_[k].imag() * std::sin(psi);
    }
    return v;
}

std::vector<double> MelnikovModel::gradient(const std::vector<double>& x) const {
    std::vector<double> g(static_cast<std::size_t>(vars()), 0.0);
    for (std::size_t k = 0; k < ps_.size(); ++k) {
        double psi = 0.0;
        for (std::size_t j = 0; j < keys_[k].size(); ++j) psi += keys_[k][j] * x[j];
        double a = ps_[k].real() * std::sin(psi) + ps_[k].imag() * std::cos(psi);
        for (std::size_t j = 0; j < keys_[k].size(); ++j) g[j] += keys_[k][j] * a;
    }
    return g;
}

SmallMat MelnikovModel::hessian(const std::vector<double>& x) const {
    SmallMat H(static_cast<std::size_t>(vars()));
    for (std::size_t k = 0; k < ps_.size(); ++k) {
        double psi = 0.0;
        for (std::size_t j = 0; j < keys_[k].size(); ++j) psi += keys_[k][j] * x[j];
        double a = ps_[k].real() * std::cos(psi) - ps_[k].imag() * std::sin(psi);
        for (std::size_t i = 0; i < keys_[k].size(); ++i)
            for (std::size_t j = 0; j < keys_[k].size(); ++j)
                H(i, j) += keys_[k][i] * keys_[k][j] * a;
    }
    return H;
}

double MelnikovModel::value_direct(const std::vector<double>& x) const {
    std::vector<double> phi(static_cast<std::size_t>(d_));
    auto integrand = [&](double t) {
        double q, p;
        separatrix_state(t, q, p);
        for (int j = 0; j < d_; ++j)
            phi[static_cast<std::size_t>(j)] = omega_[static_cast<std::size_t>(j)] * t + x[static_cast<std::size_t>(j)];
        double tt = t + x[static_cast<std::size_t>(d_)];
        return pert_.value(phi, q, tt) - pert_.value(phi, 0.0, tt);
    };
    auto r = integrate_adaptive(integrand, -cfg_.t_cut, cfg_.t_cut, cfg_.quad_tol, cfg_.max_panels);
    return -r.value;
}

namespace {

std::vector<double> wrapped(std::vector<double> x) {
    for (double& v : x) v = wrap_2pi(v);
    return x;
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double norm_inf(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

}  // namespace

MinResult MelnikovModel::find_minimum(const std::vector<double>& x0,
                                      const MinimizeOptions& opts) const {
    if (degenerate())
        throw Error("splitting potential vanishes identically; minima are degenerate");
    if (x0.size() != static_cast<std::size_t>(vars()))
        throw ConfigError("find_minimum: start point has wrong dimension");

    MinResult r;
    std::vector<double> x = wrapped(x0);
    for (r.iterations = 0; r.iterations < opts.max_iter; ++r.iterations) {
        std::vector<double> g = gradient(x);
        if (norm_inf(g) < opts.grad_tol) {
            r.converged = true;
            break;
        }
        SmallMat H = hessian(x);
        std::vector<double> s;
        SmallMat L;
        bool newton = cholesky_spd(H, L);
        if (newton) {
            std::vector<double> ng(g);
            for (double& v : ng) v = -v;
            s = lu_solve(H, ng);
            double dot = 0.0;
            for (std::size_t j = 0; j < s.size(); ++j) dot += g[j] * s[j];
            if (dot >= 0.0) newton = false;  // numerically not a descent direction
        }
        if (!newton) {
            s.assign(g.size(), 0.0);
            for (std::size_t j = 0; j < s.size(); ++j) s[j] = -g[j];
        }
        double cap = norm_inf(s);
        if (cap > opts.step_cap)
            for (double& v : s) v *= opts.step_cap / cap;

        double f0 = value(x), slope = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) slope += g[j] * s[j];
        double alpha = 1.0;
        bool moved = false;
        while (alpha > 1e-12) {
            std::vector<double> trial(x);
            for (std::size_t j = 0; j < s.size(); ++j) trial[j] += alpha * s[j];
            trial = wrapped(trial);
            if (value(trial) <= f0 + 1e-4 * alpha * slope) {
                x = std::move(trial);
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!moved) break;  // line search stalled
    }

    r.x = x;
    r.value = value(x);
    r.grad_norm = norm2(gradient(x));
    SmallMat H = hessian(x);
    r.eigenvalues = jacobi_eigenvalues(H);
    double scale = std::max(H.max_abs(), 1e-300);
    r.nondegenerate = r.converged && !r.eigenvalues.empty() &&
                      r.eigenvalues.front() > opts.eig_rel_tol * scale;
    return r;
}

MinResult MelnikovModel::find_global_minimum(int grid_per_dim, const MinimizeOptions& opts) const {
    int nvar = vars();
    long total = 1;
    for (int j = 0; j < nvar; ++j) {
        total *= grid_per_dim;
        if (total > 1000000) throw ConfigError("find_global_minimum: grid too large");
    }
    std::vector<double> best;
    double best_v = 0.0;
    for (long c = 0; c < total; ++c) {
        long rem = c;
        std::vector<double> x(static_cast<std::size_t>(nvar));
        for (int j = 0; j < nvar; ++j) {
            x[static_cast<std::size_t>(j)] =
                two_pi * static_cast<double>(rem % grid_per_dim) / grid_per_dim;
            rem /= grid_per_dim;
        }
        double v = value(x);
        if (best.empty() || v < best_v) {
            best = x;
            best_v = v;
        }
    }
    return find_minimum(best, opts);
}

std::vector<ScanPoint> scan_frequency_segment(const TrigPerturbation& f,
                                              const std::vector<double>& omega_from,
                                              const std::vector<double>& omega_to, int samples,
                                              const MelnikovConfig& cfg,
                                              const MinimizeOptions& opts) {
    if (samples < 1) throw ConfigError("scan_frequency_segment: need samples >= 1");
    if (omega_from.size() != omega_to.size() ||
        omega_from.size() != static_cast<std::size_t>(f.dim()))
        throw ConfigError("scan_frequency_segment: frequency endpoints must match dim");
    std::vector<ScanPoint> out;
    out.reserve(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) {
        double s = (samples == 1) ? 0.0 : static_cast<double>(i) / (samples - 1);
        std::vector<double> omega(omega_from.size());
        for (std::size_t j = 0; j < omega.size(); ++j)
            omega[j] = (1.0 - s) * omega_from[j] + s * omega_to[j];
        MelnikovModel model(f, omega, cfg);
        MinResult r;
        if (out.empty()) {
            r = model.find_global_minimum(12, opts);
        } else {
            r = model.find_minimum(out.back().minimum.x, opts);
            if (!r.converged || !r.nondegenerate) {
                MinResult retry = model.find_global_minimum(12, opts);
                if (retry.converged && (retry.value < r.value || retry.nondegenerate)) r = retry;
            }
        }
        out.push_back({s, std::move(omega), std::move(r)});
    }
    return out;
}

}  // namespace driftlab
