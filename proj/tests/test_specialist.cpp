#include <doctest.h>

#include "regimekit/simulator.hpp"
#include "regimekit/specialist.hpp"

#include <cmath>
#include <limits>

using namespace regimekit;

namespace {

StateSample obs(double v, double b, double a) { return {0.0, v, b, a}; }

// 3x3 normal equations by Gaussian elimination, independent of the Eigen path.
std::array<double, 3> normal_equations(const std::vector<StateSample>& xs) {
    double m[3][4] = {};
    for (const auto& x : xs) {
        const double row[3] = {1.0, x.v, x.b};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) m[i][j] += row[i] * row[j];
            m[i][3] += row[i] * *x.a_obs;
        }
    }
    for (int c = 0; c < 3; ++c) {
        int p = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(m[r][c]) > std::abs(m[p][c])) p = r;
        for (int j = 0; j < 4; ++j) std::swap(m[c][j], m[p][j]);
        for (int r = 0; r < 3; ++r) {
            if (r == c) continue;
            const double f = m[r][c] / m[c][c];
            for (int j = 0; j < 4; ++j) m[r][j] -= f * m[c][j];
        }
    }
    return {m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]};
}

}  // namespace

TEST_CASE("analytic predictions") {
    const auto dry = make_analytic(1.0, 0.3, {0.9, 1.1});
    CHECK(dry.predict(obs(20, 1.0, 0)).a_hat == doctest::Approx(9.81).epsilon(1e-15));
    const auto ice = make_analytic(0.2, 0.3, {0.1, 0.3});
    CHECK(ice.predict(obs(20, 0.0, 0)).a_hat == 0.0);
    CHECK(std::vector<double>(dry.params().begin(), dry.params().end()) == std::vector<double>{1.0});
}

TEST_CASE("affine prediction is the dot product") {
    const auto s = Specialist::restore("aff", Family::Affine, 0.2, {0.0, 0.0, 1.962}, 0.3, {0.1, 0.3});
    CHECK(s.predict(obs(13.0, 0.5, 0)).a_hat == doctest::Approx(0.981).epsilon(1e-14));
}

TEST_CASE("predict rejects bad input") {
    const auto dry = make_analytic(1.0, 0.3, {0.9, 1.1});
    CHECK_THROWS_AS(dry.predict(obs(std::numeric_limits<double>::quiet_NaN(), 0.5, 0)), std::domain_error);
    CHECK_THROWS_AS(dry.predict(obs(10, 1.5, 0)), std::domain_error);
    CHECK_THROWS_AS(dry.predict(obs(10, 0.5, std::numeric_limits<double>::infinity())), std::domain_error);
}

TEST_CASE("residual loss") {
    const auto dry = make_analytic(1.0, 0.5, {0.9, 1.1});
    CHECK(residual_loss(dry, obs(10, 0.4, 1.0 * kGravity * 0.4)) == 0.0);

    // mu=1 specialist on mu=0.2 data at full braking, sigma 0.5.
    const double expect = std::pow((0.2 - 1.0) * 9.81, 2) / 0.25;
    CHECK(residual_loss(dry, obs(10, 1.0, 0.2 * 9.81)) == doctest::Approx(expect));
    CHECK(expect == doctest::Approx(246.3).epsilon(1e-3));

    // implied mu 1.4 exceeds mu_max 1.2
    const StateSample hot = obs(10, 0.5, 1.4 * 9.81 * 0.5);
    CHECK(physics_penalty(hot) > 0.0);
    const double data = std::pow(1.4 * 9.81 * 0.5 - 9.81 * 0.5, 2) / 0.25;
    CHECK(residual_loss(dry, hot) == doctest::Approx(data + physics_penalty(hot)));

    StateSample no_obs = obs(10, 0.5, 0);
    no_obs.a_obs.reset();
    CHECK_THROWS_AS(residual_loss(dry, no_obs), PredictionOnlySample);
}

TEST_CASE("physics penalty") {
    CHECK(physics_penalty(obs(10, 0.5, 0.5 * 9.81 * 0.8)) == 0.0);
    CHECK(physics_penalty(obs(10, 0.5, 0.5 * 9.81 * 1.5)) == doctest::Approx(0.09).epsilon(1e-12));
    CHECK(physics_penalty(obs(10, 0.0, 50.0)) == 0.0);
    CHECK(physics_penalty(obs(10, 0.05, 50.0)) == 0.0);
    CHECK(physics_penalty(obs(10, 0.5, -0.5 * 9.81 * 1.5)) == doctest::Approx(0.09).epsilon(1e-12));
}

TEST_CASE("make_analytic validates its jurisdiction") {
    CHECK_THROWS_AS(make_analytic(0.5, 0.3, {0.6, 0.8}), std::invalid_argument);
    CHECK_THROWS_AS(make_analytic(0.7, 0.0, {0.6, 0.8}), std::invalid_argument);
    CHECK_THROWS_AS(make_analytic(0.7, 0.3, {0.8, 0.6}), std::invalid_argument);
    CHECK_NOTHROW(make_analytic(0.2, 0.3, {0.1, 0.3}, "ice"));
}

TEST_CASE("fit_affine round trip and normal-equation oracle") {
    auto clean = generate_regime_samples(0.6, 50, 0.0, 3);
    const auto fit = fit_affine(clean);
    CHECK(fit.family() == Family::Affine);
    CHECK(std::abs(fit.mu() - 0.6) < 1e-9);
    CHECK(fit.sigma() == doctest::Approx(1e-3));  // floored
    CHECK(fit.jurisdiction().contains(0.6));
    CHECK(fit.jurisdiction().hi - fit.jurisdiction().lo == doctest::Approx(0.2));

    auto noisy = generate_regime_samples(0.6, 400, 0.3, 9);
    const auto nfit = fit_affine(noisy);
    const auto theta = normal_equations(noisy);
    for (int i = 0; i < 3; ++i) CHECK(nfit.params()[i] == doctest::Approx(theta[i]).epsilon(1e-9));
    CHECK(nfit.sigma() == doctest::Approx(0.3).epsilon(0.1));
}

TEST_CASE("fit_affine errors") {
    auto two = generate_regime_samples(0.6, 2, 0.0, 3);
    CHECK_THROWS_AS(fit_affine(two), std::invalid_argument);

    auto flat = generate_regime_samples(0.6, 20, 0.1, 3);
    for (auto& x : flat) x.b = 0.5;
    try {
        fit_affine(flat);
        FAIL("expected a rank error");
    } catch (const RankDeficient& e) {
        CHECK(e.column() == "b");
    }
}

TEST_CASE("property: analytic predict is linear in b") {
    const CounterNormal u(5);
    for (std::uint64_t i = 0; i < 2000; ++i) {
        const double mu = 0.05 + u.uniform_at(3 * i);
        const double b1 = 0.5 * u.uniform_at(3 * i + 1), b2 = 0.5 * u.uniform_at(3 * i + 2);
        const auto s = make_analytic(mu, 0.3, {0.0, 2.0});
        const double lhs = s.predict(obs(10, b1 + b2, 0)).a_hat;
        const double rhs = s.predict(obs(10, b1, 0)).a_hat + s.predict(obs(10, b2, 0)).a_hat;
        CHECK(std::abs(lhs - rhs) <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("property: residual loss is non-negative and zero only at an exact clean match") {
    const CounterNormal u(6);
    const auto s = make_analytic(0.7, 0.4, {0.6, 0.8});
    for (std::uint64_t i = 0; i < 5000; ++i) {
        const double b = u.uniform_at(2 * i);
        const double a = 12.0 * (u.uniform_at(2 * i + 1) - 0.2);
        const StateSample x = obs(10, b, a);
        const double l = residual_loss(s, x);
        CHECK(l >= 0.0);
        if (l == 0.0) CHECK(a == s.predict(x).a_hat);
    }
}
