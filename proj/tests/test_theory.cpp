#include <qzsim/theory.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace qzsim;

TEST_CASE("fidelity_short_time at t = 0 and the pinned points") {
    NoiseModel stat{1.0, 1.0, NoiseRegime::static_field};
    NoiseModel delta{1.0, 0.05, NoiseRegime::delta_correlated};
    CHECK(fidelity_short_time(stat, 0.0) == 1.0);
    CHECK(fidelity_short_time(delta, 0.0) == 1.0);
    CHECK(fidelity_short_time(stat, 0.1) == Catch::Approx(0.99));
    CHECK(fidelity_short_time(delta, 0.1) == Catch::Approx(0.99));
}

TEST_CASE("fidelity_short_time rejects out-of-range expansions") {
    NoiseModel stat{1.0, 1.0, NoiseRegime::static_field};
    CHECK_THROWS_AS(fidelity_short_time(stat, 2.0), SimulationError);
}

TEST_CASE("static-regime deficit has log-log slope exactly 2") {
    NoiseModel stat{2.0, 1.0, NoiseRegime::static_field};
    // regression of log(1-F) on log(t) over t in [1e-3, 1e-1] / lambda
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int k = 0; k < 60; ++k) {
        const double t = (1e-3 + k * (1e-1 - 1e-3) / 59.0) / stat.lambda;
        const double d = 1.0 - fidelity_short_time(stat, t);
        const double x = std::log(t), y = std::log(d);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == Catch::Approx(2.0).margin(1e-6));
}

TEST_CASE("zeno_survival pinned values") {
    NoiseModel stat{1.0, 1.0, NoiseRegime::static_field};
    const auto n1 = zeno_survival(stat, 1.0, 1);
    CHECK(n1.exact == 0.0);
    CHECK(n1.approx == Catch::Approx(std::exp(-1.0)));

    const auto n100 = zeno_survival(stat, 1.0, 100);
    CHECK(n100.exact == Catch::Approx(0.99004).margin(5e-6));
    CHECK(n100.approx == Catch::Approx(std::exp(-0.01)));

    const auto big = zeno_survival(stat, 1.0, 1 << 20);
    CHECK(big.exact > 0.999999);
    CHECK(big.approx > 0.999999);
}

TEST_CASE("zeno_survival exact form increases strictly with N") {
    NoiseModel stat{0.7, 1.0, NoiseRegime::static_field};  // lambda T = 0.7
    double prev = zeno_survival(stat, 1.0, 1).exact;
    for (int n = 2; n <= 4096; n *= 2) {
        const double cur = zeno_survival(stat, 1.0, n).exact;
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("exact and approximate forms converge as N grows") {
    NoiseModel stat{1.0, 1.0, NoiseRegime::static_field};
    double prev_gap = 1e9;
    for (int n = 4; n <= 4096; n *= 2) {
        const auto s = zeno_survival(stat, 1.0, n);
        const double gap = std::abs(s.exact - s.approx);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap < 1e-6);
}

TEST_CASE("zeno_survival input validation") {
    NoiseModel stat{1.0, 1.0, NoiseRegime::static_field};
    CHECK_THROWS_AS(zeno_survival(stat, 1.0, 0), ValidationError);
    CHECK_THROWS_AS(zeno_survival(stat, 3.0, 2), SimulationError);  // F(T/N) < 0
    NoiseModel delta{1.0, 0.1, NoiseRegime::delta_correlated};
    CHECK_THROWS_AS(zeno_survival(delta, 1.0, 4), ValidationError);
}
