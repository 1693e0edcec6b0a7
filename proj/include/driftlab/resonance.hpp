#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "driftlab/perturbation.hpp"

namespace driftlab {

/**
 * Primitive resonance mode (n, l): integer rotator vector n != 0 plus a
 * time harmonic l, with gcd(n, l) = 1 and the first nonzero entry of
 * (n_1..n_d, l) positive.  Each mode stands for the affine plane
 * n . omega + l = 0 in frequency space.
 */
struct ResonanceMode {
    std::vector<int> n;
    int l = 0;
};

/// All primitive modes of order at most N (in the given norm) for d rotators.
std::vector<ResonanceMode> enumerate_modes(int d, int order, ModeNorm norm = ModeNorm::L1);

/// Euclidean distance from omega to the nearest plane of the web:
/// min over modes of |n . omega + l| / |n|_2.  Infinity when modes is empty.
double distance_to_web(const std::vector<double>& omega,
                       const std::vector<ResonanceMode>& modes);

/// Piecewise-linear frequency path with its required web clearance eta.
struct FrequencyPath {
    std::vector<std::vector<double>> waypoints;
    double eta = 0.0;

    static FrequencyPath from_json_text(const std::string& text);
    static FrequencyPath load(const std::string& path);
    std::string json_text() const;
    void save(const std::string& path) const;
};

struct PathCheck {
    bool certified = false;
    double clearance = 0.0;          ///< exact min of the web distance along the path
    std::size_t worst_segment = 0;   ///< segment attaining the clearance
    ResonanceMode worst_mode;        ///< mode attaining it
};

/**
 * Exact clearance certification.  Along a segment each n . omega(s) + l
 * is affine in s, so per mode the distance minimum sits at an endpoint
 * unless the sign flips, in which case the plane is crossed and the
 * clearance is zero.  No sampling or subdivision is involved.
 */
PathCheck certify_path(const FrequencyPath& path, const std::vector<ResonanceMode>& modes);

}  // namespace driftlab
