#include "driftlab/resonance.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "driftlab/errors.hpp"

namespace driftlab {

using json = nlohmann::ordered_json;

namespace {

bool canonical_key(const std::vector<int>& n, int l) {
    for (int x : n) {
        if (x > 0) return true;
        if (x < 0) return false;
    }
    return l > 0;
}

int gcd_all(const std::vector<int>& n, int l) {
    int g = std::abs(l);
    for (int x : n) g = std::gcd(g, std::abs(x));
    return g;
}

}  // namespace

std::vector<ResonanceMode> enumerate_modes(int d, int order, ModeNorm norm) {
    if (d < 1) throw ConfigError("enumerate_modes: need d >= 1");
    if (order < 1) throw ConfigError("enumerate_modes: need order >= 1");
    std::vector<ResonanceMode> out;
    std::vector<int> v(static_cast<std::size_t>(d) + 1, -order);  // (n_1..n_d, l)
    while (true) {
        std::vector<int> n(v.begin(), v.end() - 1);
        int l = v.back();
        bool nz = false;
        for (int x : n) nz = nz || (x != 0);
        if (nz && canonical_key(n, l) && gcd_all(n, l) == 1 &&
            mode_order(n, l, norm) <= order + 1e-12)
            out.push_back({std::move(n), l});
        // odometer over the box [-order, order]^(d+1)
        std::size_t j = 0;
        for (; j < v.size(); ++j) {
            if (v[j] < order) {
                ++v[j];
                break;
            }
            v[j] = -order;
        }
        if (j == v.size()) break;
    }
    return out;
}

double distance_to_web(const std::vector<double>& omega,
                       const std::vector<ResonanceMode>& modes) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& m : modes) {
        if (m.n.size() != omega.size())
            throw ConfigError("distance_to_web: mode dimension mismatch");
        double dot = static_cast<double>(m.l), nn = 0.0;
        for (std::size_t j = 0; j < omega.size(); ++j) {
            dot += m.n[j] * omega[j];
            nn += static_cast<double>(m.n[j]) * m.n[j];
        }
        best = std::min(best, std::fabs(dot) / std::sqrt(nn));
    }
    return best;
}

PathCheck certify_path(const FrequencyPath& path, const std::vector<ResonanceMode>& modes) {
    if (path.waypoints.size() < 2)
        throw ConfigError("certify_path: need at least two waypoints");
    if (!(path.eta > 0)) throw ConfigError("certify_path: eta must be positive");
    std::size_t d = path.waypoints.front().size();
    for (const auto& w : path.waypoints)
        if (w.size() != d) throw ConfigError("certify_path: inconsistent waypoint dimensions");

    PathCheck out;
    out.clearance = std::numeric_limits<double>::infinity();
    for (std::size_t seg = 0; seg + 1 < path.waypoints.size(); ++seg) {
        const auto& a = path.waypoints[seg];
        const auto& b = path.waypoints[seg + 1];
        for (const auto& m : modes) {
            if (m.n.size() != d) throw ConfigError("certify_path: mode dimension mismatch");
            double fa = static_cast<double>(m.l), fb = static_cast<double>(m.l), nn = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                fa += m.n[j] * a[j];
                fb += m.n[j] * b[j];
                nn += static_cast<double>(m.n[j]) * m.n[j];
            }
            double dist;
            if ((fa < 0 && fb > 0) || (fa > 0 && fb < 0) || fa == 0.0 || fb == 0.0)
                dist = 0.0;  // the affine form changes sign: plane crossed
            else
                dist = std::min(std::fabs(fa), std::fabs(fb)) / std::sqrt(nn);
            if (dist < out.clearance) {
                out.clearance = dist;
                out.worst_segment = seg;
                out.worst_mode = m;
            }
        }
    }
    out.certified = out.clearance >= path.eta;
    return out;
}

FrequencyPath FrequencyPath::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("path file is not valid JSON: ") + e.what());
    }
    for (const char* key : {"waypoints", "eta"})
        if (!j.contains(key)) throw ConfigError(std::string("path file missing key '") + key + "'");
    FrequencyPath p;
    p.waypoints = j.at("waypoints").get<std::vector<std::vector<double>>>();
    p.eta = j.at("eta").get<double>();
    return p;
}

FrequencyPath FrequencyPath::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open path file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string FrequencyPath::json_text() const {
    json j;
    j["waypoints"] = waypoints;
    j["eta"] = eta;
    return j.dump(2) + "\n";
}

void FrequencyPath::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write path file '" + path + "'");
    out << json_text();
}

}  // namespace driftlab
