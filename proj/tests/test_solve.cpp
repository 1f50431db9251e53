#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "freqlab/solve.hpp"

using namespace freqlab;

namespace {

// u* = sin(x1) cos(x2) and its derivatives.
double us(const Point& x) { return std::sin(x[0]) * std::cos(x[1]); }

Point us_grad(const Point& x) { return {std::cos(x[0]) * std::cos(x[1]), -std::sin(x[0]) * std::sin(x[1]), 0.0}; }

Mat us_hess(const Point& x)
{
    Mat h{};
    h[0][0] = -us(x);
    h[1][1] = -us(x);
    h[0][1] = h[1][0] = -std::cos(x[0]) * std::sin(x[1]);
    return h;
}

// -sum_ij d_j(a_ij d_i u) + W.grad u + V u written out for the sinusoid
// a_ij = delta_ij + g sin(k (x_i + x_j)).
double manufactured_source(double g, double k, const Point& w, double v, const Point& x)
{
    Point du = us_grad(x);
    Mat hu = us_hess(x);
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double a = (i == j ? 1.0 : 0.0) + g * std::sin(k * (x[i] + x[j]));
            double daij_dxj = g * k * std::cos(k * (x[i] + x[j])) * ((i == j) ? 2.0 : 1.0);
            s += daij_dxj * du[i] + a * hu[i][j];
        }
    return -s + w[0] * du[0] + w[1] * du[1] + v * us(x);
}

double max_error(const GridField<double>& u)
{
    double e = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i)
        e = std::max(e, std::fabs(u.values[i] - us(u.grid.coord(i))));
    return e;
}

OperatorSpec manufactured_op(OperatorClass cls)
{
    const double g = 0.2, k = 1.5;
    auto W = [](const Point& x) { return Point{1.0 + 0.5 * std::sin(x[1]), 0.5 * std::cos(x[0]), 0.0}; };
    auto V = [](const Point&) { return 1.0; };
    OperatorSpec op;
    switch (cls) {
    case OperatorClass::schrodinger:
        op = OperatorSpec::schrodinger(V, 2);
        op.source = [](const Point& x) { return 3.0 * us(x); };
        break;
    case OperatorClass::drift:
        op = OperatorSpec::drift(W, 2);
        op.source = [W](const Point& x) { return manufactured_source(0.0, 0.0, W(x), 0.0, x); };
        break;
    case OperatorClass::divergence:
        op = OperatorSpec::divergence(CoefficientField::sinusoid(g, k, 2), V, 2);
        op.source = [=](const Point& x) { return manufactured_source(g, k, {0, 0, 0}, 1.0, x); };
        break;
    case OperatorClass::general:
        op = OperatorSpec::general(CoefficientField::sinusoid(g, k, 2), W, V, 2);
        op.source = [=](const Point& x) { return manufactured_source(g, k, W(x), 1.0, x); };
        break;
    }
    return op;
}

}  // namespace

TEST(SolveDirichlet, DiscreteHarmonicQuadratic)
{
    auto op = OperatorSpec::schrodinger([](const Point&) { return 0.0; }, 2);
    auto bd = [](const Point& x) { return x[0] * x[0] - x[1] * x[1]; };
    auto u = solve_dirichlet(op, bd, CubeGrid{2, 1.0, 65});
    double e = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) e = std::max(e, std::fabs(u.values[i] - bd(u.grid.coord(i))));
    EXPECT_LT(e, 1e-8);
}

TEST(SolveDirichlet, ManufacturedSecondOrderEveryClass)
{
    for (auto cls : {OperatorClass::schrodinger, OperatorClass::drift, OperatorClass::divergence,
                     OperatorClass::general}) {
        auto op = manufactured_op(cls);
        double e1 = max_error(solve_dirichlet(op, us, CubeGrid{2, 1.0, 65}));
        double e2 = max_error(solve_dirichlet(op, us, CubeGrid{2, 1.0, 129}));
        EXPECT_GE(e1 / e2, 3.5) << to_string(cls);
        EXPECT_LE(e1 / e2, 4.5) << to_string(cls);
        EXPECT_LT(e2, 1e-4) << to_string(cls);
    }
}

TEST(SolveDirichlet, ManufacturedThreeDimensional)
{
    auto op = OperatorSpec::schrodinger([](const Point&) { return 1.0; }, 3);
    auto u3 = [](const Point& x) { return std::sin(x[0]) * std::cos(x[1]) * std::exp(x[2]); };
    op.source = [&](const Point& x) { return 2.0 * u3(x); };
    auto u = solve_dirichlet(op, u3, CubeGrid{3, 1.0, 65});
    double e = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) e = std::max(e, std::fabs(u.values[i] - u3(u.grid.coord(i))));
    EXPECT_LT(e, 1e-4);
}

TEST(SolveDirichlet, ZeroDriftIsBitIdentical)
{
    auto bd = [](const Point& x) { return std::exp(x[0]) * std::cos(x[1]) + x[0] * x[1] * x[1]; };
    CubeGrid g{2, 1.0, 65};
    auto a = solve_dirichlet(OperatorSpec::schrodinger([](const Point&) { return 0.0; }, 2), bd, g);
    auto b = solve_dirichlet(OperatorSpec::drift([](const Point&) { return Point{0.0, 0.0, 0.0}; }, 2), bd, g);
    ASSERT_EQ(a.values.size(), b.values.size());
    EXPECT_EQ(std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)), 0);
}

TEST(SolveDirichlet, MaximumPrinciple)
{
    auto V = make_cusp(50.0, 0.5, {0.1, -0.2, 0}, 1.0, 2);
    auto bd = [](const Point& x) { return std::cos(3.0 * x[0]) + std::sin(2.0 * x[1]); };
    auto u = solve_dirichlet(OperatorSpec::schrodinger(V), bd, CubeGrid{2, 1.0, 129});
    double bmax = -1e300, imax = -1e300;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        bool in = u.grid.interior(u.grid.multi(i));
        (in ? imax : bmax) = std::max(in ? imax : bmax, u.values[i]);
    }
    EXPECT_LE(imax, bmax + 1e-8 * std::fabs(bmax));
}

TEST(SolveDirichlet, Preconditions)
{
    auto op = OperatorSpec::schrodinger([](const Point&) { return 0.0; }, 2);
    EXPECT_THROW(solve_dirichlet(op, us, CubeGrid{2, 1.0, 33}), ParameterError);
    Mat bad{};
    bad[0][0] = 1.0;
    bad[1][1] = -1.0;
    auto nonell = OperatorSpec::divergence(CoefficientField::constant(bad, 2), nullptr, 2);
    EXPECT_THROW(solve_dirichlet(nonell, us, CubeGrid{2, 1.0, 65}), ParameterError);
}

TEST(SolveDirichlet, NearEigenvalueDetected)
{
    // First discrete Dirichlet eigenvalue of -Delta_h on [-1,1]^2.
    CubeGrid g{2, 1.0, 65};
    const double h = g.h();
    const double lam = 2.0 * 4.0 / (h * h) * std::pow(std::sin(kPi * h / 4.0), 2);
    auto op = OperatorSpec::schrodinger([lam](const Point&) { return -lam; }, 2);
    op.source = [](const Point& x) { return 1.0 + x[0]; };
    EXPECT_THROW(solve_dirichlet(op, [](const Point&) { return 0.0; }, g), NearSingularError);
}

TEST(Residual, SolverContract)
{
    auto V = make_cusp(10.0, 0.5, {0, 0, 0}, 1.0, 2);
    auto op = OperatorSpec::schrodinger(V);
    auto bd = [](const Point& x) { return 1.0 + x[0] * x[1]; };
    auto u = solve_dirichlet(op, bd, CubeGrid{2, 1.0, 129});
    double scale = u.sup_abs() * (1.0 + V.M);
    EXPECT_LE(residual(u, op), 1e-6 * scale);
}

TEST(Residual, HarmonicPolynomials)
{
    auto op = OperatorSpec::schrodinger([](const Point&) { return 0.0; }, 2);
    auto h2 = make_harmonic(2, 2);
    std::function<double(const Point&)> f2 = [&](const Point& x) { return h2.value(x); };
    auto u2 = sample_grid<double>(CubeGrid{2, 1.0, 65}, f2);
    EXPECT_LE(residual(u2, op), 1e-10 * u2.sup_abs());
    // Degree 4: the 5-point stencil has O(h^2) truncation error.
    auto h4 = make_harmonic(4, 2);
    std::function<double(const Point&)> f4 = [&](const Point& x) { return h4.value(x); };
    double r1 = residual(sample_grid<double>(CubeGrid{2, 1.0, 65}, f4), op);
    double r2 = residual(sample_grid<double>(CubeGrid{2, 1.0, 129}, f4), op);
    EXPECT_GE(r1 / r2, 3.5);
    EXPECT_LE(r1 / r2, 4.5);
}

TEST(Residual, UnitPerturbationJump)
{
    auto V = make_cusp(10.0, 0.5, {0, 0, 0}, 1.0, 2);
    auto op = OperatorSpec::schrodinger(V);
    CubeGrid g{2, 1.0, 65};
    auto u = solve_dirichlet(op, [](const Point& x) { return x[0]; }, g);
    double r0 = residual(u, op);
    std::size_t node = g.index({20, 40, 0});
    u.values[node] += 1.0;
    const double h = g.h();
    double expected = 4.0 / (h * h) + V.value(g.coord(node));
    EXPECT_NEAR(residual(u, op), expected, r0 + 1e-9 * expected);
}

TEST(Residual, GridMismatch)
{
    auto u = GridField<double>(CubeGrid{2, 1.0, 65});
    auto op3 = OperatorSpec::schrodinger([](const Point&) { return 0.0; }, 3);
    EXPECT_THROW(residual(u, op3), GridMismatchError);
}

TEST(GridField, GradientCacheIsCentredDifference)
{
    std::function<double(const Point&)> f = [](const Point& x) { return x[0] * x[0] * x[1]; };
    auto u = sample_grid<double>(CubeGrid{2, 1.0, 65}, f);
    u.compute_gradient();
    const auto& g = u.grid;
    const double h = g.h();
    for (std::size_t idx : {g.index({10, 20, 0}), g.index({33, 5, 0})}) {
        EXPECT_EQ((*u.gradient)[idx][0], (u.values[idx + g.stride(0)] - u.values[idx - g.stride(0)]) / (2.0 * h));
        EXPECT_EQ((*u.gradient)[idx][1], (u.values[idx + 1] - u.values[idx - 1]) / (2.0 * h));
    }
}

TEST(GridField, TextRoundTrip)
{
    std::function<double(const Point&)> f = [](const Point& x) { return std::sin(7.0 * x[0]) / 3.0 + x[1]; };
    auto u = sample_grid<double>(CubeGrid{2, 0.75, 65}, f);
    auto text = grid_to_string(u);
    EXPECT_EQ(text.rfind("2 0.75 65\n", 0), 0u);
    auto v = grid_from_string<double>(text);
    EXPECT_TRUE(v.grid == u.grid);
    EXPECT_EQ(std::memcmp(v.values.data(), u.values.data(), u.values.size() * sizeof(double)), 0);
    GridField<std::complex<double>> c(CubeGrid{2, 1.0, 65});
    c.values[3] = {1.0 / 3.0, -2.0};
    auto c2 = grid_from_string<std::complex<double>>(grid_to_string(c));
    EXPECT_EQ(c2.values[3], c.values[3]);
    EXPECT_THROW(grid_from_string<double>("2 1.0 65\n1\n2\n"), UsageError);
}

TEST(RadialSolve, EulerModeIsExactPower)
{
    const double R = 1.0;
    auto u = radial_solve([](double) { return 0.0; }, 3, 2, R);
    for (double s : {1e-3, 0.01, 0.2, 0.77, 1.0}) {
        Point x{s, 0.0, 0.0};
        EXPECT_NEAR(u.value(x) / (s * s * s), 1.0, 1e-10);
    }
    auto one = radial_solve([](double) { return 0.0; }, 0, 2, R);
    EXPECT_EQ(one.value({0.4, 0.3, 0.0}), 1.0);
}

TEST(RadialSolve, BesselCrossCheck)
{
    const double lambda = 40.0;
    for (int k : {0, 1, 4}) {
        auto u = radial_solve([=](double) { return -lambda; }, k, 2, 1.0);
        double kap = std::sqrt(lambda);
        double norm = std::pow(2.0, k) * std::tgamma(k + 1.0) / std::pow(kap, k);
        for (int i = 1; i <= 50; ++i) {
            double s = i / 50.0;
            EXPECT_NEAR(u.radial->w(s), norm * std::cyl_bessel_j(k, kap * s), 1e-8);
        }
    }
}

TEST(RadialSolve, UnboundedPotentialRejected)
{
    EXPECT_THROW(radial_solve([](double s) { return 1.0 / s; }, 0, 2, 1.0), ParameterError);
}
