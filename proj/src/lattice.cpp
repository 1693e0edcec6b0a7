#include "driftlab/lattice.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "driftlab/errors.hpp"
#include "driftlab/smallmat.hpp"

namespace driftlab {

using json = nlohmann::ordered_json;

void Lattice::validate() const {
    if (basis.empty()) throw ConfigError("lattice: empty basis");
    std::size_t l = basis.size();
    for (const auto& row : basis) {
        if (row.size() != l)
            throw ConfigError("lattice: basis must be square (full rank in R^l)");
        for (double x : row)
            if (!std::isfinite(x)) throw ConfigError("lattice: nonfinite basis entry");
    }
}

std::vector<std::vector<double>> dual_basis(const Lattice& lat) {
    lat.validate();
    std::size_t l = lat.basis.size();
    SmallMat M(l);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < l; ++j) M(i, j) = lat.basis[i][j];
    // row k of the dual solves M x = e_k: then b_j . x = (M x)_j = delta_jk
    std::vector<std::vector<double>> dual(l);
    for (std::size_t k = 0; k < l; ++k) {
        std::vector<double> e(l, 0.0);
        e[k] = 1.0;
        dual[k] = lu_solve(M, e);
    }
    return dual;
}

namespace {

void enumerate_rec(const SmallMat& R, double radius2, std::vector<long>& m,
                   std::vector<double>& partial, std::size_t i,
                   const std::vector<std::vector<double>>& dual,
                   std::vector<std::vector<double>>& out, long cap) {
    std::size_t l = R.n;
    // partial[i] holds sum_{k > i} w_k^2 with w_k the k-th row form
    double rem = radius2 - partial[i];
    if (rem < 0) return;
    double off = 0.0;
    for (std::size_t j = i + 1; j < l; ++j) off += R(i, j) * static_cast<double>(m[j]);
    double center = -off / R(i, i);
    double half = std::sqrt(rem) / R(i, i);
    long lo = static_cast<long>(std::ceil(center - half - 1e-9));
    long hi = static_cast<long>(std::floor(center + half + 1e-9));
    for (long mi = lo; mi <= hi; ++mi) {
        double w = R(i, i) * static_cast<double>(mi) + off;
        double acc = partial[i] + w * w;
        if (acc > radius2 * (1.0 + 1e-12)) continue;
        m[i] = mi;
        if (i == 0) {
            bool zero = true;
            for (long v : m) zero = zero && (v == 0);
            if (zero) continue;
            std::vector<double> p(l, 0.0);
            for (std::size_t k = 0; k < l; ++k)
                for (std::size_t j = 0; j < l; ++j)
                    p[j] += static_cast<double>(m[k]) * dual[k][j];
            // exact recheck of the true norm, the bounds above carry slack
            double nn = 0.0;
            for (double x : p) nn += x * x;
            if (nn <= radius2 * (1.0 + 1e-12)) {
                if (static_cast<long>(out.size()) >= cap)
                    throw EnumerationCapError("dual_vectors: enumeration cap exceeded");
                out.push_back(std::move(p));
            }
        } else {
            partial[i - 1] = acc;
            enumerate_rec(R, radius2, m, partial, i - 1, dual, out, cap);
        }
    }
    m[i] = 0;
}

}  // namespace

std::vector<std::vector<double>> dual_vectors(const Lattice& lat, double radius, long cap) {
    lat.validate();
    if (!(radius >= 0)) throw ConfigError("dual_vectors: radius must be nonnegative");
    if (radius == 0.0) return {};
    std::size_t l = lat.basis.size();
    auto dual = dual_basis(lat);
    SmallMat G(l);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < l; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < l; ++k) s += dual[i][k] * dual[j][k];
            G(i, j) = s;
        }
    SmallMat L;
    if (!cholesky_spd(G, L)) throw Error("dual_vectors: dual Gram matrix not positive definite");
    SmallMat R(l);  // upper-triangular factor, R = L^T
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = i; j < l; ++j) R(i, j) = L(j, i);

    std::vector<std::vector<double>> out;
    std::vector<long> m(l, 0);
    std::vector<double> partial(l, 0.0);
    enumerate_rec(R, radius * radius, m, partial, l - 1, dual, out, cap);
    return out;
}

double alpha(const Lattice& lat, const std::vector<double>& Omega, double radius, long cap) {
    lat.validate();
    if (Omega.size() != lat.basis.size())
        throw ConfigError("alpha: flow vector dimension must match the lattice");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : dual_vectors(lat, radius, cap)) {
        double dot = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) dot += p[j] * Omega[j];
        best = std::min(best, std::fabs(dot));
    }
    return best;
}

Lattice Lattice::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("basis file is not valid JSON: ") + e.what());
    }
    if (!j.contains("basis")) throw ConfigError("basis file missing key 'basis'");
    Lattice lat;
    lat.basis = j.at("basis").get<std::vector<std::vector<double>>>();
    lat.validate();
    return lat;
}

Lattice Lattice::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open basis file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string Lattice::json_text() const {
    json j;
    j["basis"] = basis;
    return j.dump(2) + "\n";
}

void Lattice::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write basis file '" + path + "'");
    out << json_text();
}

}  // namespace driftlab
