#include "driftlab/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "driftlab/errors.hpp"

namespace driftlab {

using json = nlohmann::ordered_json;

std::string to_string(ModeNorm k) {
    switch (k) {
        case ModeNorm::L1: return "l1";
        case ModeNorm::L2: return "l2";
        case ModeNorm::Linf: return "linf";
    }
    return "l1";
}

ModeNorm mode_norm_from_string(const std::string& s) {
    if (s == "l1") return ModeNorm::L1;
    if (s == "l2") return ModeNorm::L2;
    if (s == "linf") return ModeNorm::Linf;
    throw ConfigError("unknown norm_kind '" + s + "' (expected l1, l2 or linf)");
}

double mode_order(const std::vector<int>& n, int l, ModeNorm k) {
    switch (k) {
        case ModeNorm::L1: {
            long s = std::labs(l);
            for (int x : n) s += std::labs(x);
            return static_cast<double>(s);
        }
        case ModeNorm::L2: {
            double s = static_cast<double>(l) * l;
            for (int x : n) s += static_cast<double>(x) * x;
            return std::sqrt(s);
        }
        case ModeNorm::Linf: {
            long s = std::labs(l);
            for (int x : n) s = std::max(s, std::labs(x));
            return static_cast<double>(s);
        }
    }
    return 0.0;
}

namespace {

bool canonical_key(const std::vector<int>& n, int l) {
    for (int x : n) {
        if (x > 0) return true;
        if (x < 0) return false;
    }
    return l >= 0;
}

}  // namespace

TrigPerturbation::TrigPerturbation(int d, int order, ModeNorm norm, std::vector<PertMode> modes)
    : d_(d), order_(order), norm_(norm), modes_(std::move(modes)) {
    if (d_ < 1) throw ConfigError("perturbation needs d >= 1");
    if (order_ < 0) throw ConfigError("perturbation order must be >= 0");
    for (std::size_t i = 0; i < modes_.size(); ++i) {
        const auto& m = modes_[i];
        if (static_cast<int>(m.n.size()) != d_)
            throw ConfigError("mode " + std::to_string(i) + " has wrong n dimension");
        if (!canonical_key(m.n, m.l))
            throw ConfigError("mode " + std::to_string(i) +
                              " not canonical: first nonzero of (n, l) must be positive");
        if (mode_order(m.n, m.l, norm_) > order_ + 1e-12)
            throw ConfigError("mode " + std::to_string(i) + " exceeds declared order");
        for (std::size_t j = 0; j < i; ++j)
            if (modes_[j].n == m.n && modes_[j].l == m.l)
                throw ConfigError("duplicate mode key at index " + std::to_string(i));
    }
    gq_.reserve(modes_.size());
    for (const auto& m : modes_) gq_.push_back(m.g.derivative());
}

TrigPerturbation TrigPerturbation::arnold(int d) {
    std::vector<PertMode> ms;
    std::vector<int> e1(static_cast<std::size_t>(d), 0), zero(static_cast<std::size_t>(d), 0);
    e1[0] = 1;
    ms.push_back({e1, 0, QPolynomial::one_minus_cos()});
    ms.push_back({zero, 1, QPolynomial::one_minus_cos()});
    return TrigPerturbation(d, 1, ModeNorm::L1, std::move(ms));
}

bool TrigPerturbation::empty() const {
    return std::all_of(modes_.begin(), modes_.end(),
                       [](const PertMode& m) { return m.g.is_zero(); });
}

double TrigPerturbation::value(const std::vector<double>& phi, double q, double t) const {
    double v = 0.0;
    for (const auto& m : modes_) {
        double th = static_cast<double>(m.l) * t;
        for (int j = 0; j < d_; ++j) th += m.n[static_cast<std::size_t>(j)] * phi[static_cast<std::size_t>(j)];
        v += m.g.eval(q) * std::cos(th);
    }
    return v;
}

void TrigPerturbation::grad_phi(const std::vector<double>& phi, double q, double t,
                                std::vector<double>& out) const {
    out.assign(static_cast<std::size_t>(d_), 0.0);
    for (const auto& m : modes_) {
        double th = static_cast<double>(m.l) * t;
        for (int j = 0; j < d_; ++j) th += m.n[static_cast<std::size_t>(j)] * phi[static_cast<std::size_t>(j)];
        double a = m.g.eval(q) * std::sin(th);
        for (int j = 0; j < d_; ++j) out[static_cast<std::size_t>(j)] -= m.n[static_cast<std::size_t>(j)] * a;
    }
}

double TrigPerturbation::dq(const std::vector<double>& phi, double q, double t) const {
    double v = 0.0;
    for (std::size_t k = 0; k < modes_.size(); ++k) {
        const auto& m = modes_[k];
        double th = static_cast<double>(m.l) * t;
        for (int j = 0; j < d_; ++j) th += m.n[static_cast<std::size_t>(j)] * phi[static_cast<std::size_t>(j)];
        v += gq_[k].eval(q) * std::cos(th);
    }
    return v;
}

double TrigPerturbation::dt(const std::vector<double>& phi, double q, double t) const {
    double v = 0.0;
    for (const auto& m : modes_) {
        if (m.l == 0) continue;
        double th = static_cast<double>(m.l) * t;
        for (int j = 0; j < d_; ++j) th += m.n[static_cast<std::size_t>(j)] * phi[static_cast<std::size_t>(j)];
        v -= static_cast<double>(m.l) * m.g.eval(q) * std::sin(th);
    }
    return v;
}

std::vector<double> TrigPerturbation::grad_phi_bound() const {
    std::vector<double> b(static_cast<std::size_t>(d_), 0.0);
    for (const auto& m : modes_) {
        double a = m.g.max_abs_bound();
        for (int j = 0; j < d_; ++j)
            b[static_cast<std::size_t>(j)] += std::labs(m.n[static_cast<std::size_t>(j)]) * a;
    }
    return b;
}

double TrigPerturbation::sup_bound() const {
    double s = 0.0;
    for (const auto& m : modes_) s += m.g.max_abs_bound();
    return s;
}

TrigPerturbation TrigPerturbation::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("perturbation file is not valid JSON: ") + e.what());
    }
    for (const char* key : {"d", "N", "norm_kind", "modes"})
        if (!j.contains(key)) throw ConfigError(std::string("perturbation file missing key '") + key + "'");
    int d = j.at("d").get<int>();
    int order = j.at("N").get<int>();
    ModeNorm norm = mode_norm_from_string(j.at("norm_kind").get<std::string>());
    std::vector<PertMode> ms;
    for (const auto& jm : j.at("modes")) {
        for (const char* key : {"n", "l", "cos_coeffs", "sin_coeffs", "const"})
            if (!jm.contains(key)) throw ConfigError(std::string("mode entry missing key '") + key + "'");
        PertMode m;
        m.n = jm.at("n").get<std::vector<int>>();
        m.l = jm.at("l").get<int>();
        m.g = QPolynomial(jm.at("const").get<double>(),
                          jm.at("cos_coeffs").get<std::vector<double>>(),
                          jm.at("sin_coeffs").get<std::vector<double>>());
        ms.push_back(std::move(m));
    }
    return TrigPerturbation(d, order, norm, std::move(ms));
}

TrigPerturbation TrigPerturbation::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open perturbation file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string TrigPerturbation::json_text() const {
    json j;
    j["d"] = d_;
    j["N"] = order_;
    j["norm_kind"] = to_string(norm_);
    j["modes"] = json::array();
    for (const auto& m : modes_) {
        json jm;
        jm["n"] = m.n;
        jm["l"] = m.l;
        jm["cos_coeffs"] = m.g.cos_coeffs();
        jm["sin_coeffs"] = m.g.sin_coeffs();
        jm["const"] = m.g.constant_term();
        j["modes"].push_back(std::move(jm));
    }
    return j.dump(2) + "\n";
}

void TrigPerturbation::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write perturbation file '" + path + "'");
    out << json_text();
}

}  // namespace driftlab
