#include <gtest/gtest.h>

#include <cmath>

#include "freqlab/mollify.hpp"

using namespace freqlab;

namespace {

// Radial composite Simpson for int_0^1 e^{-1/(1-s^2)} s^p 2 pi s ds in n = 2.
double radial_bump_moment(double p)
{
    const int m = 200000;
    const double h = 1.0 / m;
    double sum = 0.0;
    for (int i = 0; i <= m; ++i) {
        double s = i * h;
        double f = (s < 1.0) ? std::exp(-1.0 / (1.0 - s * s)) * std::pow(s, p) * 2.0 * kPi * s : 0.0;
        sum += f * ((i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    return sum * h / 3.0;
}

HolderField linear_field(double R)
{
    std::vector<double> v;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) v.push_back(-R + i * R);
    return make_custom_grid(v, 3, 1.0, R, 2);
}

}  // namespace

TEST(Kernel, UnitMass)
{
    MollifierKernel k(2);
    EXPECT_NEAR(k.total_mass(), 1.0, 1e-12);
    EXPECT_NEAR(k.raw_mass() / radial_bump_moment(0.0), 1.0, 1e-6);
    MollifierKernel k3(3);
    EXPECT_NEAR(k3.total_mass(), 1.0, 1e-12);
}

TEST(Kernel, SupportedInBall)
{
    MollifierKernel k(2);
    EXPECT_EQ(k.density({0.1, 0.0, 0.0}, 0.1), 0.0);
    EXPECT_EQ(k.density({0.08, 0.08, 0.0}, 0.1), 0.0);
    EXPECT_GT(k.density({0.05, 0.0, 0.0}, 0.1), 0.0);
}

TEST(Mollify, ConstantField)
{
    auto f = make_constant(7.0, 2, 1.0);
    auto mf = mollify(f, 0.2, GridSpec{2, 0.025});
    ASSERT_FALSE(mf.samples.empty());
    for (const auto& s : mf.samples) {
        EXPECT_EQ(s.value[0], 7.0);
        EXPECT_EQ(s.grad[0][0], 0.0);
        EXPECT_EQ(s.grad[0][1], 0.0);
        EXPECT_EQ(s.defect[0], 0.0);
    }
    EXPECT_TRUE(mf.defect_exact_zero);
}

TEST(Mollify, LinearFieldReproduced)
{
    auto f = linear_field(1.0);
    Mollifier mol(f, 0.1);
    for (Point x : {Point{0.2, 0.1, 0}, Point{-0.5, 0.3, 0}, Point{0.0, -0.8, 0}}) {
        auto s = mol.sample(x, true, true);
        EXPECT_NEAR(s.value[0], x[0], 1e-14);
        EXPECT_NEAR(s.grad[0][0], 1.0, 1e-12);
        EXPECT_NEAR(s.grad[0][1], 0.0, 1e-12);
        EXPECT_NEAR(s.hess[0][0][0], 0.0, 1e-9);
    }
}

TEST(Mollify, CuspDefectAtCenter)
{
    const double beta = 0.5, eps = 0.1;
    const double c = radial_bump_moment(beta) / radial_bump_moment(0.0);
    auto f = make_cusp(1.0, beta, {0, 0, 0}, 1.0, 2);
    Mollifier mol(f, eps);
    double defect = mol.sample({0, 0, 0}, false).defect[0];
    EXPECT_NEAR(defect / (c * std::pow(eps, beta)), 1.0, 2e-3);
}

TEST(Mollify, PreconditionErrors)
{
    auto f = make_cusp(1.0, 0.5, {0, 0, 0}, 0.25, 2);
    EXPECT_THROW(mollify(f, 0.3, GridSpec{2, 0.01}), ParameterError);
    EXPECT_THROW(mollify(f, 0.1, GridSpec{2, 0.02}), ResolutionError);
    EXPECT_THROW(verify_mollify_rates(f, {0.1, 0.05, 0.025}), ParameterError);
}

TEST(Mollify, SupBoundedBySupOfField)
{
    std::vector<HolderField> fields = {make_cusp(2.0, 0.3, {0.1, 0, 0}, 1.0, 2),
                                       make_weierstrass(1.0, 3.0, 6, 0.5, {1.0, 1.0, 0.0}, 1.0, 2),
                                       make_cosine_pack({{1.0, {9.0, 2.0, 0}, 0.3}}, 0.5, 1.0, 2)};
    for (const auto& f : fields) {
        auto mf = mollify(f, 0.2, GridSpec{2, 0.025});
        EXPECT_LE(mf.sup_value, f.M * (1.0 + 1e-12));
    }
}

TEST(Mollify, Linear)
{
    CosineMode m1{1.0, {3.0, 1.0, 0}, 0.2}, m2{0.5, {0.0, 7.0, 0}, 1.0};
    auto f1 = make_cosine_pack({m1}, 0.5, 1.0, 2);
    auto f2 = make_cosine_pack({m2}, 0.5, 1.0, 2);
    const double a = 2.0, b = -3.0;
    CosineMode s1 = m1, s2 = m2;
    s1.amplitude *= a;
    s2.amplitude *= b;
    auto fsum = make_cosine_pack({s1, s2}, 0.5, 1.0, 2);
    Mollifier M1(f1, 0.1), M2(f2, 0.1), MS(fsum, 0.1);
    for (Point x : {Point{0.2, 0.1, 0}, Point{-0.5, 0.3, 0}}) {
        double lhs = MS.value(x), rhs = a * M1.value(x) + b * M2.value(x);
        EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::fabs(lhs)));
    }
}

TEST(Mollify, HessianConsistentWithGradient)
{
    auto f = make_cusp_vector(1.0, 0.5, {0, 0, 0}, {0, 0, 0}, {1, 0, 0}, 1.0, 2);
    Mollifier mol(f, 0.1);
    Point x{0.3, 0.2, 0.0};
    auto s = mol.sample(x, true, true);
    const double h = 1e-5;
    for (int k = 0; k < 2; ++k) {
        Point p = x, m = x;
        p[k] += h;
        m[k] -= h;
        auto sp = mol.sample(p), sm = mol.sample(m);
        for (int i = 0; i < 2; ++i)
            EXPECT_NEAR(s.hess[0][i][k], (sp.grad[0][i] - sm.grad[0][i]) / (2 * h),
                        1e-3 * (1 + std::fabs(s.hess[0][i][k])));
    }
}

TEST(Rates, CuspHalf)
{
    auto f = make_cusp(1.0, 0.5, {0, 0, 0}, 0.25, 2);
    auto rep = verify_mollify_rates(f, {0.125, 0.0625, 0.03125, 0.015625});
    EXPECT_NEAR(rep.defect_slope, 0.5, 0.05);
    EXPECT_NEAR(rep.grad_slope, -0.5, 0.05);
    EXPECT_FALSE(rep.defect_exact_zero);
}

TEST(Rates, ConstantExactZero)
{
    auto rep = verify_mollify_rates(make_constant(3.0, 2, 0.25), {0.125, 0.0625, 0.03125, 0.015625});
    EXPECT_TRUE(rep.defect_exact_zero);
    EXPECT_TRUE(std::isnan(rep.defect_slope));
    EXPECT_NE(rep.to_csv().find("exact-zero"), std::string::npos);
}

TEST(Rates, LipschitzGradientBounded)
{
    auto f = make_cusp(1.0, 1.0, {0, 0, 0}, 0.25, 2);
    auto rep = verify_mollify_rates(f, {0.125, 0.0625, 0.03125, 0.015625});
    EXPECT_NEAR(rep.grad_slope, 0.0, 0.05);
}

TEST(Rates, ConstantsStableAcrossBeta)
{
    // grad |x|^beta = beta |x|^{beta-1}: the gradient constant is compared
    // after dividing out beta.
    double lo_d = 1e300, hi_d = 0, lo_g = 1e300, hi_g = 0;
    for (double beta : {0.3, 0.5, 0.8}) {
        auto rep = verify_mollify_rates(make_cusp(1.0, beta, {0, 0, 0}, 0.25, 2), {0.125, 0.0625, 0.03125, 0.015625});
        lo_d = std::min(lo_d, rep.defect_C);
        hi_d = std::max(hi_d, rep.defect_C);
        lo_g = std::min(lo_g, rep.grad_C / beta);
        hi_g = std::max(hi_g, rep.grad_C / beta);
    }
    EXPECT_LE(hi_d / lo_d, 2.0);
    EXPECT_LE(hi_g / lo_g, 2.0);
}

TEST(Rates, CsvLayout)
{
    auto rep = verify_mollify_rates(make_cusp(1.0, 0.5, {0, 0, 0}, 0.25, 2), {0.125, 0.0625, 0.03125, 0.015625});
    auto csv = rep.to_csv();
    EXPECT_EQ(csv.rfind("epsilon,defect_sup,grad_sup,grad2_sup\n", 0), 0u);
    EXPECT_NE(csv.find("\nslope,"), std::string::npos);
    EXPECT_NE(csv.find("\nconstant,"), std::string::npos);
}

TEST(RadialTable, MatchesPointwise)
{
    auto f = make_cusp(3.0, 0.5, {0, 0, 0}, 1.0, 2);
    RadialMollifiedTable t(f, 0.1, 2048);
    Mollifier mol(f, 0.1);
    // Within eps of the cusp the rule resolves the kink only to ~h^{2+beta}.
    for (double s : {0.0, 0.013, 0.05}) {
        Point x{s / std::sqrt(2.0), s / std::sqrt(2.0), 0.0};
        EXPECT_NEAR(t.value(s), mol.value(x), 1e-3 * mol.value(x) + 1e-3);
    }
    for (double s : {0.2, 0.7}) {
        Point x{s / std::sqrt(2.0), s / std::sqrt(2.0), 0.0};
        EXPECT_NEAR(t.value(s), mol.value(x), 1e-7 * mol.value(x));
    }
}
