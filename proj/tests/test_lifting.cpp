#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "freqlab/lifting.hpp"

using namespace freqlab;

namespace {

const Point kA{1.0, 0.5, 0.0};
const Point kAperp{-0.5, 1.0, 0.0};

// W = a + amp |x|^beta0 a_perp, so u = exp(a.x) solves -Lap u + W.grad u = 0.
HolderField cusp_drift(double beta0, double amp = 20.0)
{
    return make_cusp_vector(amp, beta0, {0, 0, 0}, kA, kAperp, 1.0, 2);
}

double drift_K(const HolderField& W) { return W.M + W.M0; }

std::shared_ptr<DriftMollification> mollified(const HolderField& W)
{
    return std::make_shared<DriftMollification>(W, drift_epsilon_choice(drift_K(W), W.beta, 1.0).epsilon);
}

std::shared_ptr<DriftMollification> zero_drift()
{
    return std::make_shared<DriftMollification>(make_constant_vector({0, 0, 0}, 2, 1.0), 0.1);
}

double exp_solution(const Point& x) { return std::exp(kA[0] * x[0] + kA[1] * x[1]); }

const CertifyOptions kNoCert{0, 1, 0.0};

}  // namespace

TEST(BuildB, ZeroDrift)
{
    auto W = zero_drift();
    EXPECT_EQ(W->B(), 1.0);
    EXPECT_EQ(W->Bhat(), 1.0);
    auto b = build_b(W, 6.0);
    Point v = b.at(Point{0.3, -0.2, 0.0});
    EXPECT_DOUBLE_EQ(v[0], 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(v[1], 1.0 / 6.0);
    EXPECT_NEAR(norm(v, 2), std::sqrt(2.0) / 6.0, 1e-15);
    EXPECT_THROW(build_b(W, 0.0), ParameterError);
}

TEST(BuildB, CertifiedBound)
{
    EXPECT_DOUBLE_EQ(certified_b_bound(4, 10.0), 0.3);
    for (int n : {1, 2, 3, 4}) EXPECT_NEAR(certified_b_bound(n, default_L(n)), 0.5, 1e-15);
    auto W = mollified(cusp_drift(0.5));
    auto b = build_b(W, default_L(2));
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) EXPECT_LE(norm(b.at(random_in_ball(rng, 2, 0.8)), 2), b.certified_bound);
}

TEST(BuildStage, MatrixExamples)
{
    EXPECT_TRUE(assemble_lifted_matrix(3, 1, {0, 0, 0}, 5.0, 1.0).isIdentity(0.0));
    auto A = assemble_lifted_matrix(1, 1, {0.4, 0, 0}, 5.0, 1.0);
    EXPECT_DOUBLE_EQ(A(0, 1), -0.2);
    EXPECT_DOUBLE_EQ(A(1, 0), -0.2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    EXPECT_NEAR(es.eigenvalues()(0), 0.8, 1e-15);
    EXPECT_NEAR(es.eigenvalues()(1), 1.2, 1e-15);
    auto A4 = assemble_lifted_matrix(2, 4, {0.1, 0.2, 0}, 4.0, 0.9);
    EXPECT_EQ(A4.rows(), 6);
    EXPECT_DOUBLE_EQ(A4(0, 3), 0.125);
    EXPECT_DOUBLE_EQ(A4(2, 3), 0.0);
    EXPECT_DOUBLE_EQ(A4(4, 4), 0.9);
    EXPECT_DOUBLE_EQ(A4(5, 5), 1.0);
}

TEST(BuildStage, QuadraticFormBound)
{
    auto W = mollified(cusp_drift(0.3));
    auto op = build_stage(1, W, std::nullopt, std::nullopt, kNoCert);
    std::mt19937_64 rng(11);
    double worst = 1e9;
    for (int i = 0; i < 1000; ++i) {
        Point x = random_in_ball(rng, 2, 0.9);
        auto s = W->at(x);
        auto A = op.A(s);
        Eigen::VectorXd xi(3);
        for (int k = 0; k < 3; ++k) xi(k) = 2.0 * uniform01(rng) - 1.0;
        double q = xi.dot(A * xi) / xi.squaredNorm();
        EXPECT_GE(q, 1.0 - norm(op.b.at(s), 2));
        worst = std::min(worst, q);
    }
    EXPECT_GE(worst, 0.5);
}

TEST(BuildStage, CertificatesForDriftBattery)
{
    for (double beta0 : {0.3, 0.5, 0.8}) {
        auto W = mollified(cusp_drift(beta0));
        for (int stage = 1; stage <= 4; ++stage) {
            auto op = build_stage(stage, W);
            const auto& c = op.cert;
            EXPECT_EQ(c.samples, 1000);
            EXPECT_TRUE(c.symmetric);
            EXPECT_GE(c.min_eig, c.certified_min_eig);
            EXPECT_GE(c.certified_min_eig, 0.5);
            EXPECT_LE(c.lipschitz_sampled, c.lipschitz_bound);
            if (stage == 1) {
                EXPECT_GE(c.min_eig, 1.0 - op.b.certified_bound);
            }
            if (stage >= 3) {
                EXPECT_GE(c.a_yy_min, 1.0 / (2.0 * op.L1));
                EXPECT_LE(c.a_yy_max, 1.0);
                EXPECT_LE(c.a_yy_grad_sampled, std::sqrt(2.0) * W->hess_sup() / (2 * op.L1 * op.L1 * op.Bhat()));
            }
        }
    }
}

TEST(BuildStage, DefectScalesLikeKEpsBeta)
{
    std::vector<double> ratios;
    for (double beta0 : {0.3, 0.5, 0.8}) {
        auto Wf = cusp_drift(beta0);
        auto W = mollified(Wf);
        auto op = build_stage(4, W);
        ratios.push_back(op.cert.g_sup / (drift_K(Wf) * std::pow(W->epsilon(), beta0)));
    }
    auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    EXPECT_GT(*lo, 0.0);
    EXPECT_LE(*hi / *lo, 2.0);
}

TEST(BuildStage, AdmissibilityFailures)
{
    auto W = mollified(cusp_drift(0.5));
    try {
        build_stage(1, W, 4.0, std::nullopt, kNoCert);
        FAIL() << "expected admissibility failure";
    } catch (const AdmissibilityError& e) {
        EXPECT_NE(std::string(e.what()).find("minimal L = 4.82842712474618"), std::string::npos) << e.what();
        EXPECT_EQ(e.exit_code(), 2);
    }
    try {
        build_stage(3, W, std::nullopt, 0.9, kNoCert);
        FAIL() << "expected admissibility failure";
    } catch (const AdmissibilityError& e) {
        EXPECT_NE(std::string(e.what()).find("minimal L1"), std::string::npos);
    }
    EXPECT_NO_THROW(build_stage(3, W, 10.0, 3.0, kNoCert));
    EXPECT_THROW(build_stage(5, W), ParameterError);
    // Stages 1-2 never read L1.
    EXPECT_NO_THROW(build_stage(2, W, std::nullopt, 0.0, kNoCert));
}

TEST(BuildStage, ZeroDriftDefaults)
{
    auto op = build_stage(4, zero_drift());
    EXPECT_EQ(op.L1, 1.0);
    EXPECT_EQ(op.cert.a_yy_min, 1.0);
    EXPECT_EQ(op.cert.a_yy_max, 1.0);
    EXPECT_EQ(op.cert.lipschitz_sampled, 0.0);
    EXPECT_EQ(op.cert.g_sup, 0.0);
    EXPECT_NEAR(op.omega(), std::sqrt(2.0 * op.L * op.L + 1.0), 1e-14);
}

TEST(LiftSolution, Evaluation)
{
    auto op = build_stage(4, mollified(cusp_drift(0.5)), std::nullopt, std::nullopt, kNoCert);
    auto lf = lift_solution(exp_solution, op);
    const Point x{0.2, -0.1, 0.0};
    EXPECT_EQ(lf(x, {0, 0, 0, 0}), cplx(exp_solution(x)));
    const double LB = op.L * op.B();
    const double m = std::abs(lf(x, {1e-3, 1e-3, 0, 0}));
    EXPECT_NEAR(m, std::exp(2e-3 * LB) * exp_solution(x), 1e-12 * m);
    for (double z : {0.01, 0.3, -2.0}) {
        EXPECT_NEAR(std::abs(lf(x, {0.001, 0, 0.002, z})), std::abs(lf(x, {0.001, 0, 0.002, 0})),
                    1e-13 * std::abs(lf(x, {0.001, 0, 0.002, 0})));
    }
    auto r = lf.rates;
    ASSERT_EQ(r.size(), 4u);
    EXPECT_DOUBLE_EQ(r[2].real(), op.L1 * std::sqrt(op.Bhat()));
    EXPECT_DOUBLE_EQ(r[3].imag() * r[3].imag(), 2 * LB * LB + op.L1 * op.Bhat());
}

TEST(LiftedResidual, ZeroDriftHarmonic)
{
    auto W = zero_drift();
    auto op = build_stage(4, W, std::nullopt, std::nullopt, kNoCert);
    BaseRule u = [](const Point& x) { return std::exp(x[0]) * std::cos(x[1]); };
    auto pts = residual_points(*W, 0.6, 0.0, 12, 3);
    auto rep = lifted_residual(lift_solution(u, op), op, {0.04, 0.02, 0.01}, pts);
    for (double q : rep.ratio) {
        EXPECT_GE(q, 3.5);
        EXPECT_LE(q, 4.5);
    }
    EXPECT_LT(rep.value.back(), 2e-4);
}

TEST(LiftedResidual, NegativeControl)
{
    auto W = mollified(cusp_drift(0.5));
    auto op = build_stage(4, W, std::nullopt, std::nullopt, kNoCert);
    BaseRule u = [](const Point& x) { return x[0] * x[0]; };
    const double eps = W->epsilon();
    auto pts = residual_points(*W, 0.5, eps + 4 * eps / 8, 12, 3);
    auto rep = lifted_residual(lift_solution(u, op), op, {eps / 8, eps / 16, eps / 32}, pts);
    for (double v : rep.value) EXPECT_GT(v, 1.0);
    EXPECT_NEAR(rep.value[2] / rep.value[0], 1.0, 1e-2);
}

TEST(LiftedResidual, ManufacturedCuspDriftConvergesAtOrderTwo)
{
    for (double beta0 : {0.3, 0.8}) {
        auto W = mollified(cusp_drift(beta0));
        auto op4 = build_stage(4, W, std::nullopt, std::nullopt, kNoCert);
        auto op1 = build_stage(1, W, std::nullopt, std::nullopt, kNoCert);
        const double eps = W->epsilon();
        std::vector<double> hs{eps / 8, eps / 16, eps / 32};
        auto pts = residual_points(*W, 0.5, eps + 4 * hs[0], 16, 7);
        auto r4 = lifted_residual(lift_solution(exp_solution, op4), op4, hs, pts);
        auto r1 = stage1_identity(op1, exp_solution, hs, pts);
        for (std::size_t i = 0; i < r4.ratio.size(); ++i) {
            EXPECT_GE(r4.ratio[i], 3.5);
            EXPECT_LE(r4.ratio[i], 4.5);
            EXPECT_GE(r1.ratio[i], 3.5);
            EXPECT_LE(r1.ratio[i], 4.5);
        }
    }
}

TEST(LiftedResidual, FiniteDifferenceSolution)
{
    const auto Wf = cusp_drift(0.5);
    auto W = mollified(Wf);
    auto op = build_stage(4, W, std::nullopt, std::nullopt, kNoCert);
    CubeGrid coarse{2, 1.0, 129};
    std::vector<Point> pts;
    for (std::size_t i = 0; i < coarse.size(); i += 97) {
        Point p = coarse.coord(i);
        double r = norm(p, 2);
        if (r < 0.5 && r > W->epsilon() + 8 * coarse.h()) pts.push_back(p);
    }
    ASSERT_GE(pts.size(), 8u);
    std::vector<double> res;
    for (int P : {129, 257}) {
        auto u = solve_dirichlet(OperatorSpec::drift(Wf), exp_solution, CubeGrid{2, 1.0, P});
        auto lf = lift_solution(u, op);
        double m = 0.0;
        for (const auto& p : pts) m = std::max(m, std::abs(lifted_residual_at(op, lf.u, p, u.grid.h())));
        res.push_back(m);
    }
    EXPECT_GE(res[0] / res[1], 3.5);
    EXPECT_LE(res[0] / res[1], 4.5);
    auto u = solve_dirichlet(OperatorSpec::drift(Wf), exp_solution, CubeGrid{2, 1.0, 129});
    EXPECT_THROW(lift_solution(u, op).u(Point{0.001, 0.0, 0.0}), DomainError);
}

TEST(NormSandwich, UnitFunctionClosedForm)
{
    auto op = build_stage(4, zero_drift(), std::nullopt, std::nullopt, kNoCert);
    BallNorm unit = [](double r) { return std::sqrt(kPi * r * r); };
    auto rows = norm_sandwich_check(unit, op, {0.1, 0.3, 0.6});
    const double LB = op.L * op.B(), k3 = op.L1 * std::sqrt(op.Bhat());
    for (const auto& row : rows) {
        const double r = row.r;
        double f = std::pow(std::sinh(2 * LB * r) / (2 * LB * r), 2) * std::sinh(2 * k3 * r) / (2 * k3 * r);
        EXPECT_NEAR(row.log_lifted_sq, std::log(f * kPi * r * r), 1e-12);
        EXPECT_GE(row.log_lower_slack, 0.0);
        EXPECT_GE(row.log_upper_slack, 0.0);
        EXPECT_TRUE(row.pass);
    }
    EXPECT_THROW(build_stage(4, zero_drift(), 0.0, 0.0), AdmissibilityError);
}

TEST(NormSandwich, CuspDriftSolution)
{
    auto op = build_stage(4, mollified(cusp_drift(0.5)), std::nullopt, std::nullopt, kNoCert);
    auto q = BallQuadrature::closed_form(2, [](const Point& x) { return FieldSample{exp_solution(x), {}, 0.0}; },
                                         PotentialModel::zero());
    for (const auto& row : norm_sandwich_check(ball_norm_of(q), op, {0.05, 0.2, 0.4})) {
        EXPECT_TRUE(row.pass);
        EXPECT_GT(row.log_upper - row.log_lower, 1000.0 * row.r);
    }
}

TEST(DriftEpsilon, ExamplesAndAudit)
{
    EXPECT_DOUBLE_EQ(drift_epsilon_choice(1.0, 0.5, 1.0).epsilon, 1.0);
    EXPECT_DOUBLE_EQ(drift_epsilon_choice(16.0, 1.0, 1.0).epsilon, 0.25);
    std::mt19937_64 rng(17);
    for (int i = 0; i < 200; ++i) {
        double K = std::exp(uniform01(rng) * std::log(1e4));
        double b0 = 0.05 + 0.9 * uniform01(rng);
        double R = 1.0 + 9.0 * uniform01(rng);
        auto e = drift_epsilon_choice(K, b0, R);
        EXPECT_LE(e.relative_gap, 1e-12) << K << " " << b0 << " " << R;
        EXPECT_FALSE(e.out_of_regime);
    }
}

TEST(Describe, CarriesScalars)
{
    auto op = build_stage(3, zero_drift(), 7.0, 2.0, kNoCert);
    auto text = op.describe();
    EXPECT_NE(text.find("L=7\n"), std::string::npos);
    EXPECT_NE(text.find("L1=2\n"), std::string::npos);
    EXPECT_NE(text.find("stage=3\n"), std::string::npos);
    EXPECT_EQ(certificate_csv_header(), "stage,min_eig,lipschitz_bound,residual_h,residual_value");
}
