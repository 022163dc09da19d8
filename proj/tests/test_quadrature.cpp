#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hubreg/errors.hpp"
#include "hubreg/quadrature.hpp"

using namespace hubreg;

TEST_CASE("polynomials are integrated near-exactly") {
    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(integrate([](double x) { return x * x * x - 2.0 * x; }, -1.0, 2.0) ==
          doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("smooth transcendental integrands") {
    CHECK(integrate([](double x) { return std::sin(x); }, 0.0, M_PI) ==
          doctest::Approx(2.0).epsilon(1e-12));
    CHECK(integrate([](double x) { return std::exp(-x); }, 0.0, 40.0) ==
          doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("degenerate and invalid ranges") {
    CHECK(integrate([](double x) { return x; }, 2.0, 2.0) == 0.0);
    CHECK_THROWS_AS(integrate([](double x) { return x; }, 1.0, 0.0), invalid_input_error);
    CHECK_THROWS_AS(
        integrate([](double x) { return x; }, 0.0, 1.0, {-1.0, 30}), invalid_input_error);
}

TEST_CASE("non-finite integrand is reported") {
    CHECK_THROWS_AS(integrate([](double x) { return 1.0 / x; }, -1.0, 1.0), numerical_error);
}

TEST_CASE("kinks handled by pre-splitting") {
    const double v = integrate_split([](double x) { return std::abs(x); }, -1.0, 1.0, {0.0});
    CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("jump discontinuities at breakpoints keep full accuracy") {
    // f has a genuine jump at 0; each side's endpoint sample must stay on its
    // own branch for the piecewise integrals to converge.
    auto f = [](double x) { return x < 0.0 ? 1.0 : 2.0; };
    CHECK(integrate_split(f, -1.0, 1.0, {0.0}) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("integrable endpoint singularity in the derivative") {
    // x^0.4 has unbounded derivatives at 0 yet integrates to 1/1.4.
    CHECK(integrate([](double x) { return std::pow(x, 0.4); }, 0.0, 1.0, {1e-12, 52}) ==
          doctest::Approx(1.0 / 1.4).epsilon(1e-10));
}

TEST_CASE("breakpoints outside the range are ignored") {
    const double plain = integrate([](double x) { return std::cos(x); }, 0.0, 1.0);
    const double split =
        integrate_split([](double x) { return std::cos(x); }, 0.0, 1.0, {-5.0, 7.0, 0.5});
    CHECK(split == doctest::Approx(plain).epsilon(1e-12));
    CHECK(split == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
}

TEST_CASE("duplicate breakpoints collapse") {
    const double v = integrate_split([](double x) { return x * x; }, 0.0, 1.0,
                                     {0.5, 0.5, 0.5, 0.25});
    CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("tight tolerances are honored on oscillatory integrands") {
    const double v = integrate([](double x) { return std::sin(20.0 * x) * std::exp(x); }, 0.0,
                               2.0, {1e-12, 52});
    // antiderivative of e^x sin(20x): e^x (sin(20x) - 20 cos(20x)) / 401
    auto F = [](double x) {
        return std::exp(x) * (std::sin(20.0 * x) - 20.0 * std::cos(20.0 * x)) / 401.0;
    };
    CHECK(v == doctest::Approx(F(2.0) - F(0.0)).epsilon(1e-11));
}
