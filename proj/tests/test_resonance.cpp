#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "driftlab/errors.hpp"
#include "driftlab/resonance.hpp"

using namespace driftlab;

namespace {

// Oracle: scan every integer (n, l) in the box with |(n, l)| <= N and
// n != 0, no primitivity or sign reduction.  Multiples of a primitive
// mode give the same plane distance, so the minimum must agree with the
// library's reduced enumeration.
double brute_force_distance(const std::vector<double>& omega, int order, ModeNorm norm) {
    int d = static_cast<int>(omega.size());
    std::vector<int> v(static_cast<std::size_t>(d) + 1, -order);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        bool nz = false;
        for (int j = 0; j < d; ++j) nz = nz || (v[j] != 0);
        std::vector<int> n(v.begin(), v.end() - 1);
        if (nz && mode_order(n, v.back(), norm) <= order + 1e-12) {
            double dot = v.back(), nn = 0.0;
            for (int j = 0; j < d; ++j) {
                dot += v[j] * omega[j];
                nn += static_cast<double>(v[j]) * v[j];
            }
            best = std::min(best, std::fabs(dot) / std::sqrt(nn));
        }
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
    return best;
}

}  // namespace

TEST_CASE("mode enumeration, d = 1") {
    auto m2 = enumerate_modes(1, 2, ModeNorm::L1);
    REQUIRE(m2.size() == 3);
    // (1,0), (1,-1), (1,1) in some order
    auto has = [&](int n, int l) {
        return std::any_of(m2.begin(), m2.end(), [&](const ResonanceMode& m) {
            return m.n[0] == n && m.l == l;
        });
    };
    CHECK(has(1, 0));
    CHECK(has(1, 1));
    CHECK(has(1, -1));

    for (const auto& m : enumerate_modes(1, 6, ModeNorm::L1)) {
        CHECK(m.n[0] > 0);  // canonical
        CHECK(std::gcd(m.n[0], std::abs(m.l)) == 1);
        CHECK(m.n[0] + std::abs(m.l) <= 6);
    }
    CHECK_THROWS_AS(enumerate_modes(0, 2, ModeNorm::L1), ConfigError);
    CHECK_THROWS_AS(enumerate_modes(1, 0, ModeNorm::L1), ConfigError);
}

TEST_CASE("mode enumeration counts and norms") {
    // Linf order 1, d = 2: all (n1, n2, l) in {-1,0,1}^3 with n != 0,
    // canonical and primitive
    auto m = enumerate_modes(2, 1, ModeNorm::Linf);
    for (const auto& mm : m) {
        bool lead_pos = false;
        for (int x : mm.n) {
            if (x != 0) {
                lead_pos = x > 0;
                break;
            }
        }
        CHECK(lead_pos);
    }
    // 9 canonical modes with n1 = 1 plus 3 with n = (0, 1)
    CHECK(m.size() == 12);

    // L2 ball of radius 2 contains (1,1) pairs but not (1,1,1) triples
    auto l2 = enumerate_modes(1, 2, ModeNorm::L2);
    bool has_11 = std::any_of(l2.begin(), l2.end(), [](const ResonanceMode& mm) {
        return mm.n[0] == 1 && std::abs(mm.l) == 1;
    });
    CHECK(has_11);
    for (const auto& mm : l2)
        CHECK(mm.n[0] * mm.n[0] + mm.l * mm.l <= 4);
}

TEST_CASE("distance to web agrees with the full-ball oracle") {
    std::mt19937_64 rng(424242u);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    std::uniform_int_distribution<int> D(1, 3), N(1, 5), K(0, 2);
    for (int trial = 0; trial < 300; ++trial) {
        int d = D(rng), order = N(rng);
        ModeNorm norm = static_cast<ModeNorm>(K(rng));
        std::vector<double> omega(static_cast<std::size_t>(d));
        for (auto& w : omega) w = U(rng);
        auto modes = enumerate_modes(d, order, norm);
        double got = distance_to_web(omega, modes);
        double want = brute_force_distance(omega, order, norm);
        CHECK(std::fabs(got - want) <= 1e-12);
    }
}

TEST_CASE("distance landmarks") {
    auto modes = enumerate_modes(1, 2, ModeNorm::L1);  // planes omega = -1, 0, 1
    CHECK(distance_to_web({0.4}, modes) == doctest::Approx(0.4));
    CHECK(distance_to_web({0.6}, modes) == doctest::Approx(0.4));
    CHECK(distance_to_web({1.0}, modes) == doctest::Approx(0.0));
    CHECK(std::isinf(distance_to_web({0.5}, {})));
}

TEST_CASE("path certification is exact, not sampled") {
    auto modes = enumerate_modes(1, 2, ModeNorm::L1);

    FrequencyPath ok;
    ok.waypoints = {{0.3}, {0.9}};
    ok.eta = 0.05;
    auto r = certify_path(ok, modes);
    CHECK(r.certified);
    // order-2 planes sit at 0 and +-1; the endpoint 0.9 is 0.1 from omega = 1
    CHECK(r.clearance == doctest::Approx(0.1));
    CHECK(r.worst_segment == 0);

    FrequencyPath tight(ok);
    tight.eta = 0.2;
    CHECK_FALSE(certify_path(tight, modes).certified);

    // at order 3 the mode (2, -1) adds the plane omega = 1/2; crossing it
    // must be caught even though both endpoints keep a healthy distance
    auto modes3 = enumerate_modes(1, 3, ModeNorm::L1);
    FrequencyPath crossing;
    crossing.waypoints = {{0.45}, {0.55}};
    crossing.eta = 0.01;
    auto rc = certify_path(crossing, modes3);
    CHECK_FALSE(rc.certified);
    CHECK(rc.clearance == 0.0);
    CHECK(rc.worst_mode.n[0] == 2);
    CHECK(rc.worst_mode.l == -1);

    // touching a plane exactly at a waypoint is also a rejection
    FrequencyPath touch;
    touch.waypoints = {{0.3}, {0.5}};
    touch.eta = 0.01;
    CHECK(certify_path(touch, modes3).clearance == 0.0);

    CHECK_THROWS_AS(certify_path(FrequencyPath{{{0.3}}, 0.1}, modes), ConfigError);
    CHECK_THROWS_AS(certify_path(FrequencyPath{{{0.3}, {0.4}}, 0.0}, modes), ConfigError);
}

TEST_CASE("multi segment path takes the worst clearance") {
    auto modes = enumerate_modes(2, 1, ModeNorm::L1);
    FrequencyPath p;
    p.waypoints = {{0.30, 0.40}, {0.45, 0.40}, {0.45, 0.25}};
    p.eta = 0.02;
    auto r = certify_path(p, modes);
    CHECK(r.certified);
    // sampled lower bound can never undercut the exact clearance
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t seg = 0; seg + 1 < p.waypoints.size(); ++seg)
        for (int i = 0; i <= 50; ++i) {
            double s = i / 50.0;
            std::vector<double> w(2);
            for (int j = 0; j < 2; ++j)
                w[static_cast<std::size_t>(j)] = (1 - s) * p.waypoints[seg][static_cast<std::size_t>(j)] +
                                                 s * p.waypoints[seg + 1][static_cast<std::size_t>(j)];
            lo = std::min(lo, distance_to_web(w, modes));
        }
    CHECK(r.clearance <= lo + 1e-15);
    CHECK(r.clearance == doctest::Approx(lo).epsilon(0.05));
}

TEST_CASE("path files round trip") {
    FrequencyPath p;
    p.waypoints = {{0.4}, {0.6}};
    p.eta = 0.125;
    auto q = FrequencyPath::from_json_text(p.json_text());
    CHECK(q.waypoints == p.waypoints);
    CHECK(q.eta == p.eta);
    CHECK_THROWS_AS(FrequencyPath::from_json_text("{}"), ConfigError);
    CHECK_THROWS_AS(FrequencyPath::load("/nonexistent/path.json"), ConfigError);
}
