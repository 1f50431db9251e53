#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "freqlab/fields.hpp"

using namespace freqlab;

namespace {

double lap5(const ClosedFormSolution& u, const Point& x, double h)
{
    double c = u.value(x);
    double s = 0.0;
    for (int d = 0; d < u.n; ++d) {
        Point p = x, m = x;
        p[d] += h;
        m[d] -= h;
        s += u.value(p) + u.value(m) - 2.0 * c;
    }
    return s / (h * h);
}

// Independent Bessel-mode profile straight from the library function.
double bessel_profile_oracle(int k, double lambda, double s)
{
    double kap = std::sqrt(lambda);
    return std::cyl_bessel_j(k, kap * s) * std::pow(2.0, k) * std::tgamma(k + 1.0) / std::pow(kap, k);
}

}  // namespace

TEST(EvalField, ConstantIsConstant)
{
    auto f = make_constant(7.0, 2, 1.0);
    EXPECT_EQ(f.value({0.3, -0.2, 0.0}), 7.0);
    EXPECT_EQ(f.value({1.0, 1.0, 0.0}), 7.0);
}

TEST(EvalField, CuspValues)
{
    auto f = make_cusp(1.0, 0.5, {0, 0, 0}, 1.0, 2);
    EXPECT_DOUBLE_EQ(f.value({0.25, 0.0, 0.0}), 0.5);
    EXPECT_EQ(f.value({0.0, 0.0, 0.0}), 0.0);
}

TEST(EvalField, OutsideCubeThrows)
{
    auto f = make_cusp(1.0, 0.5, {0, 0, 0}, 1.0, 2);
    EXPECT_THROW(f.value({1.5, 0.0, 0.0}), DomainError);
}

TEST(EvalField, PureBitwise)
{
    auto f = make_weierstrass(1.0, 3.0, 6, 0.4, {1.0, 2.0, 0.0}, 1.0, 2);
    Point x{0.123, -0.456, 0.0};
    double a = f.value(x), b = f.value(x);
    EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
}

TEST(MakeCusp, StoredNorms)
{
    auto f = make_cusp(1.0, 0.5, {0, 0, 0}, 1.0, 2);
    EXPECT_EQ(f.M0, 1.0);
    EXPECT_EQ(f.M, 1.0);
    EXPECT_EQ(make_cusp(3.0, 0.5, {0, 0, 0}, 1.0, 2).M0, 3.0);
    auto lip = make_cusp(2.5, 1.0, {0, 0, 0}, 1.0, 2);
    EXPECT_EQ(lip.M0, 2.5);
    auto off = make_cusp(1.0, 0.5, {1.0, 0, 0}, 1.0, 2);
    EXPECT_DOUBLE_EQ(off.M, std::sqrt(2.0));
}

TEST(MakeCusp, BetaOutOfRange)
{
    EXPECT_THROW(make_cusp(1.0, 0.0, {0, 0, 0}, 1.0, 2), ParameterError);
    EXPECT_THROW(make_cusp(1.0, 1.5, {0, 0, 0}, 1.0, 2), ParameterError);
}

TEST(Seminorm, ConstantIsZero)
{
    EXPECT_EQ(holder_seminorm_estimate(make_constant(7.0, 2, 1.0), 0.5, 1000, 1), 0.0);
}

TEST(Seminorm, CuspOwnBeta)
{
    auto f = make_cusp(1.0, 0.5, {0, 0, 0}, 1.0, 2);
    double e = holder_seminorm_estimate(f, 0.5, 10000, 42);
    EXPECT_GT(e, 0.9);
    EXPECT_LE(e, 1.0);
}

TEST(Seminorm, LinearInAmplitude)
{
    auto f1 = make_cusp(1.0, 0.5, {0.1, 0.2, 0}, 1.0, 2);
    auto f2 = make_cusp(2.0, 0.5, {0.1, 0.2, 0}, 1.0, 2);
    EXPECT_DOUBLE_EQ(holder_seminorm_estimate(f2, 0.5, 5000, 9), 2.0 * holder_seminorm_estimate(f1, 0.5, 5000, 9));
}

TEST(Seminorm, NeverExceedsStoredBound)
{
    std::vector<HolderField> fields;
    fields.push_back(make_cusp(1.0, 0.3, {0.2, -0.1, 0}, 1.0, 2));
    fields.push_back(make_cusp(5.0, 0.8, {0, 0, 0}, 2.0, 3));
    fields.push_back(make_cusp_vector(2.0, 0.5, {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, 1.0, 2));
    fields.push_back(make_cosine_pack({{1.0, {3.0, 1.0, 0}, 0.2}, {0.5, {0.0, 7.0, 0}, 1.0}}, 0.5, 1.0, 2));
    fields.push_back(make_weierstrass(1.0, 3.0, 8, 0.5, {1.0, 1.0, 0.0}, 1.0, 2));
    fields.push_back(make_constant(3.0, 2, 1.0));
    std::vector<double> g;
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) g.push_back(std::sin(1.0 * i) * std::cos(0.7 * j));
    fields.push_back(make_custom_grid(g, 9, 0.6, 1.0, 2));
    for (const auto& f : fields) {
        double e = holder_seminorm_estimate(f, f.beta, 100000, 7);
        EXPECT_LE(e, f.M0 * 1.01) << f.to_block();
    }
}

TEST(Seminorm, TooFewPairs)
{
    EXPECT_THROW(holder_seminorm_estimate(make_constant(1.0, 2, 1.0), 0.5, 10, 1), ParameterError);
}

TEST(FieldBlock, RoundTrip)
{
    std::vector<HolderField> fields = {
        make_cusp(1.5, 0.3, {0.2, -0.1, 0}, 1.0, 2),
        make_cusp_vector(2.0, 0.5, {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, 1.0, 2),
        make_cosine_pack({{1.0, {3.0, 1.0, 0}, 0.2}}, 0.5, 1.0, 2),
        make_weierstrass(1.0, 3.0, 8, 0.5, {1.0, 0.0, 0.0}, 1.0, 2),
        make_constant(-2.0, 3, 1.0),
        make_custom_grid({0, 1, 2, 3}, 2, 1.0, 1.0, 2),
    };
    for (const auto& f : fields) {
        auto text = f.to_block();
        auto g = HolderField::from_block(text);
        EXPECT_EQ(g.to_block(), text);
        Point x{0.1, 0.2, 0.05};
        EXPECT_EQ(f.eval(x), g.eval(x));
    }
}

TEST(Solutions, HarmonicAtOne)
{
    auto u = make_harmonic(2, 2);
    EXPECT_DOUBLE_EQ(u.value({1.0, 0.0, 0.0}), 1.0);
}

TEST(Solutions, BesselAtOrigin)
{
    EXPECT_DOUBLE_EQ(make_bessel(0, 1.0, 2).value({0.0, 0.0, 0.0}), 1.0);
}

TEST(Solutions, RadialHarmonicMode)
{
    auto ode = std::make_shared<RadialOde>([](double) { return 0.0; }, 1, 2, 1.0, 0.0);
    auto u = make_radial(ode);
    for (double s : {1e-3, 1e-2, 0.5}) EXPECT_NEAR(u.value({s, 0.0, 0.0}), s, 1e-14);
}

TEST(Solutions, UnsupportedDimension)
{
    EXPECT_THROW(make_harmonic(2, 1), ParameterError);
    EXPECT_THROW(make_bessel(1, 1.0, 4), ParameterError);
}

TEST(Solutions, DiscreteLaplacianOfHarmonicConverges)
{
    for (int k : {5, 6}) {
        auto u = make_harmonic(k, 2);
        Point x{0.4, 0.3, 0.0};
        double e1 = std::fabs(lap5(u, x, 0.02)), e2 = std::fabs(lap5(u, x, 0.01));
        double ratio = e1 / e2;
        EXPECT_GE(ratio, 3.5);
        EXPECT_LE(ratio, 4.5);
    }
    auto u3 = make_harmonic(3, 2);
    EXPECT_NEAR(lap5(u3, {0.4, 0.3, 0.0}, 0.01), 0.0, 1e-9);
}

TEST(Solutions, BesselSolvesHelmholtz)
{
    for (int n : {2, 3}) {
        auto u = make_bessel(2, 30.0, n);
        Point x{0.31, 0.22, n == 3 ? 0.1 : 0.0};
        double r1 = lap5(u, x, 0.004) + 30.0 * u.value(x);
        double r2 = lap5(u, x, 0.002) + 30.0 * u.value(x);
        EXPECT_GE(std::fabs(r1 / r2), 3.5);
        EXPECT_LE(std::fabs(r1 / r2), 4.5);
        EXPECT_LT(std::fabs(r2), 1e-3 * std::fabs(30.0 * u.value(x)));
    }
}

TEST(Solutions, GradientMatchesDifferences)
{
    auto ode = std::make_shared<RadialOde>([](double s) { return 5.0 * std::sqrt(s); }, 2, 2, 1.0, 5.0);
    std::vector<ClosedFormSolution> us = {make_harmonic(4, 2), make_bessel(3, 50.0, 2), make_bessel(1, 20.0, 3),
                                          make_radial(ode)};
    for (const auto& u : us) {
        Point x{0.3, -0.2, u.n == 3 ? 0.15 : 0.0};
        Point g = u.gradient(x);
        for (int d = 0; d < u.n; ++d) {
            const double h = 1e-5;
            Point p = x, m = x;
            p[d] += h;
            m[d] -= h;
            EXPECT_NEAR(g[d], (u.value(p) - u.value(m)) / (2 * h), 1e-7 * (1.0 + std::fabs(g[d]))) << u.describe();
        }
    }
}

TEST(RadialOde, MatchesBessel)
{
    const double lambda = 100.0;
    for (int k : {0, 2, 5}) {
        RadialOde ode([&](double) { return -lambda; }, k, 2, 1.0, lambda);
        for (int i = 0; i <= 200; ++i) {
            double s = i / 200.0;
            EXPECT_NEAR(ode.w(s), bessel_profile_oracle(k, lambda, s), 1e-8) << "k=" << k << " s=" << s;
        }
    }
}

TEST(RadialOde, EulerEquation)
{
    RadialOde ode([](double) { return 0.0; }, 3, 2, 2.0, 0.0);
    for (double s : {2e-3, 0.01, 0.3, 1.0, 2.0}) EXPECT_NEAR(ode.w(s) / (s * s * s), 1.0, 1e-10);
    RadialOde flat([](double) { return 0.0; }, 0, 2, 1.0, 0.0);
    EXPECT_EQ(flat.w(0.7), 1.0);
}

TEST(RadialOde, UnboundedPotentialRejected)
{
    EXPECT_THROW(RadialOde([](double s) { return 1.0 / s; }, 0, 2, 1.0, INFINITY), ParameterError);
}

TEST(Coefficients, SinusoidDerivatives)
{
    auto c = CoefficientField::sinusoid(0.2, 1.5, 2);
    Point x{0.3, -0.4, 0.0};
    for (int k = 0; k < 2; ++k) {
        Point p = x, m = x;
        p[k] += 1e-6;
        m[k] -= 1e-6;
        Mat d = c.dA(x, k), ap = c.A(p), am = c.A(m);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) EXPECT_NEAR(d[i][j], (ap[i][j] - am[i][j]) / 2e-6, 1e-8);
    }
    auto a0 = c.A({0, 0, 0});
    EXPECT_EQ(a0[0][0], 1.0);
    EXPECT_EQ(a0[0][1], 0.0);
}
