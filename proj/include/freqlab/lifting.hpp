#ifndef FREQLAB_LIFTING_HPP
#define FREQLAB_LIFTING_HPP

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "core.hpp"
#include "fields.hpp"
#include "mollify.hpp"
#include "solve.hpp"
#include "threeball.hpp"

namespace freqlab {

using cplx = std::complex<double>;

// W, its mollification W_eps and certified sup bounds:
// B = ||W_eps||_{C^1} + 1, Bhat = ||W_eps||_{C^2} + 1.
class DriftMollification {
public:
    struct Sample {
        Point w{};                          // W_eps
        Point g{};                          // W_eps - W
        std::array<Point, kMaxDim> grad{};  // grad[c][i] = d_i (W_eps)_c
        std::array<Mat, kMaxDim> hess{};
        double div = 0.0;
    };

    DriftMollification(const HolderField& W, double eps, int nodes_per_axis = 64)
        : moll_(check(W), eps, std::make_shared<MollifierKernel>(W.n, nodes_per_axis))
    {
        const auto& k = moll_.kernel();
        grad_sup_ = W.M0 * std::pow(eps, W.beta - 1.0) * k.derivative_moment(W.beta, 1);
        hess_sup_ = W.M0 * std::pow(eps, W.beta - 2.0) * k.derivative_moment(W.beta, 2);
        B_ = W.M + grad_sup_ + 1.0;
        Bhat_ = B_ + hess_sup_;
    }

    const HolderField& field() const { return moll_.field(); }
    int n() const { return moll_.field().n; }
    double epsilon() const { return moll_.epsilon(); }
    double B() const { return B_; }
    double Bhat() const { return Bhat_; }
    double grad_sup() const { return grad_sup_; }  // certified sup of |grad W_eps|_F
    double hess_sup() const { return hess_sup_; }  // certified sup of |grad^2 W_eps|_F
    double div_sup() const { return std::sqrt(double(n())) * grad_sup_; }
    double domain_radius() const { return field().R - epsilon(); }

    Sample at(const Point& x, bool want_hess = false) const
    {
        auto m = moll_.sample(x, true, want_hess);
        Sample s;
        s.w = m.value;
        s.g = m.defect;
        s.grad = m.grad;
        s.hess = m.hess;
        for (int i = 0; i < n(); ++i) s.div += m.grad[i][i];
        return s;
    }

private:
    Mollifier moll_;
    double grad_sup_ = 0.0, hess_sup_ = 0.0, B_ = 1.0, Bhat_ = 1.0;

    static const HolderField& check(const HolderField& W)
    {
        if (!W.vector_valued) throw ParameterError("drift field must be vector-valued");
        return W;
    }
};

// b = (W_eps + B I)/(L B) with the certified bound (sqrt(n)+1)/L.
struct BRule {
    std::shared_ptr<const DriftMollification> W;
    double L = 0.0;
    double certified_bound = 0.0;

    Point at(const DriftMollification::Sample& s) const
    {
        Point b{0.0, 0.0, 0.0};
        for (int i = 0; i < W->n(); ++i) b[i] = (s.w[i] + W->B()) / (L * W->B());
        return b;
    }
    Point at(const Point& x) const { return at(W->at(x)); }
};

inline double certified_b_bound(int n, double L) { return (std::sqrt(double(n)) + 1.0) / L; }

inline BRule build_b(std::shared_ptr<const DriftMollification> W, double L)
{
    if (!(L > 0.0)) throw ParameterError("L must be positive");
    BRule r;
    r.certified_bound = certified_b_bound(W->n(), L);
    r.W = std::move(W);
    r.L = L;
    return r;
}

inline double default_L(int n) { return 2.0 * (std::sqrt(double(n)) + 1.0); }

// Smallest L1 >= 1 with 1/(2 L1) <= a_yy <= 1 for every |div W_eps| <= d.
inline double minimal_L1(double d, double Bhat)
{
    const double q = d / Bhat;
    return std::max({1.0, 0.5 * (1.0 + std::sqrt(1.0 + 2.0 * q)), q});
}

struct StageCertificate {
    int stage = 0;
    int samples = 0;
    double min_eig = 0.0;            // sampled
    double certified_min_eig = 0.0;  // closed-form lower bound
    double max_eig = 0.0;
    bool symmetric = true;
    double lipschitz_sampled = 0.0;  // max |A(x)-A(y)|_F / |x-y|
    double lipschitz_bound = 0.0;
    double g_sup = 0.0;              // sup |g_eps| over samples and the singular point
    double a_yy_min = 0.0, a_yy_max = 0.0;
    double a_yy_grad_sampled = 0.0;  // difference quotients of a_yy
};

struct CertifyOptions {
    int samples = 1000;
    std::uint64_t seed = 20240601;
    double radius = 0.0;  // sample ball radius; 0 means R - eps - 0.05
};

// Coordinates ordered (x, t, s, y, z); b enters the x-t block, 1/L the x-s block.
inline Eigen::MatrixXd assemble_lifted_matrix(int n, int stage, const Point& b, double L, double a_yy)
{
    const int d = n + stage;
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(d, d);
    const int t = n, s = n + 1, y = n + 2;
    for (int i = 0; i < n; ++i) {
        M(i, t) = M(t, i) = -0.5 * b[i];
        if (stage >= 2) M(i, s) = M(s, i) = 0.5 / L;
    }
    if (stage >= 3) M(y, y) = a_yy;
    return M;
}

class LiftedOperator {
public:
    int n = 2;
    int stage = 4;
    double L = 0.0, L1 = 0.0;
    std::shared_ptr<const DriftMollification> W;
    BRule b;
    StageCertificate cert;

    int dim() const { return n + stage; }
    double B() const { return W->B(); }
    double Bhat() const { return W->Bhat(); }
    double omega() const { return std::sqrt(2.0 * L * L * B() * B() + L1 * Bhat()); }

    double a_yy(const DriftMollification::Sample& s) const
    {
        return (L1 * Bhat() + 0.5 * s.div) / (L1 * L1 * Bhat());
    }

    Eigen::MatrixXd A(const DriftMollification::Sample& s) const
    {
        return assemble_lifted_matrix(n, stage, b.at(s), L, stage >= 3 ? a_yy(s) : 1.0);
    }
    Eigen::MatrixXd A(const Point& x) const { return A(W->at(x)); }

    // Rates of the exponential factor along t, s, y, z.
    std::vector<cplx> rates() const
    {
        std::vector<cplx> k{cplx(L * B()), cplx(L * B()), cplx(L1 * std::sqrt(Bhat())), cplx(0.0, omega())};
        k.resize(stage);
        return k;
    }

    // Lower-order terms of -div(A grad v) = drift . grad v + potential v.
    Eigen::VectorXd drift(const DriftMollification::Sample& s) const
    {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(dim());
        for (int i = 0; i < n; ++i) d(i) = s.g[i] + (stage == 1 ? B() : 0.0);
        return d;
    }

    double potential(const DriftMollification::Sample& s) const
    {
        const double LB2 = L * L * B() * B();
        switch (stage) {
        case 1: return -LB2 + 0.5 * s.div;
        case 2: return -2.0 * LB2 + 0.5 * s.div;
        case 3: return -(2.0 * LB2 + L1 * Bhat());
        default: return 0.0;
        }
    }

    // key=value text; together with the drift field and kernel it rebuilds the rule exactly.
    std::string describe() const
    {
        return "stage=" + std::to_string(stage) + "\nn=" + std::to_string(n) + "\neps=" + fmt17(W->epsilon()) +
               "\nL=" + fmt17(L) + "\nL1=" + fmt17(L1) + "\nB=" + fmt17(B()) + "\nBhat=" + fmt17(Bhat()) + "\n";
    }
};

namespace detail {

inline std::vector<Point> sample_points(int n, double radius, int count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<Point> pts(count);
    for (auto& p : pts) p = random_in_ball(rng, n, radius);
    return pts;
}

inline double frob(const Eigen::MatrixXd& M) { return M.norm(); }

}  // namespace detail

inline void certify(LiftedOperator& op, const CertifyOptions& opt)
{
    const auto& W = *op.W;
    const int n = op.n;
    StageCertificate& c = op.cert;
    c = StageCertificate{};
    c.stage = op.stage;
    c.samples = opt.samples;
    const double rad = opt.radius > 0.0 ? opt.radius : W.domain_radius() - 0.05;
    if (!(rad > 0.0) || rad > W.domain_radius()) throw ParameterError("certificate radius outside B_{R-eps}");

    // Closed-form bounds: the x-(t,s) coupling is a rank-2 perturbation of I
    // with singular value at most sqrt(|b|^2 + |bhat|^2)/2.
    const double bsup = op.b.certified_bound, bhat = op.stage >= 2 ? std::sqrt(double(n)) / op.L : 0.0;
    double eig = 1.0 - 0.5 * std::sqrt(bsup * bsup + bhat * bhat);
    const double lb = W.grad_sup() / (op.L * op.B());
    double lip2 = 0.5 * lb * lb;
    if (op.stage >= 3) {
        const double d = W.div_sup();
        eig = std::min(eig, 1.0 / op.L1 - d / (2.0 * op.L1 * op.L1 * op.Bhat()));
        const double la = std::sqrt(double(n)) * W.hess_sup() / (2.0 * op.L1 * op.L1 * op.Bhat());
        lip2 += la * la;
    }
    c.certified_min_eig = eig;
    c.lipschitz_bound = std::sqrt(lip2);

    auto pts = detail::sample_points(n, rad, opt.samples, opt.seed);
    std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<Point> partner(pts.size());
    const double step = 0.5 * W.epsilon();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        Point p = add(pts[i], scale(random_direction(rng, n), step * (0.05 + 0.95 * uniform01(rng))));
        if (norm(p, n) > rad) p = scale(pts[i], 1.0 - step / rad);
        partner[i] = p;
    }

    struct Local {
        double min_eig, max_eig, lip, g, ayy_min, ayy_max, ayy_grad;
        bool sym;
    };
    std::vector<Local> loc(pts.size());
    parallel_for(pts.size(), [&](std::size_t i) {
        auto s = W.at(pts[i]), s2 = W.at(partner[i]);
        Eigen::MatrixXd A = op.A(s), A2 = op.A(s2);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
        Local& l = loc[i];
        l.min_eig = es.eigenvalues()(0);
        l.max_eig = es.eigenvalues()(A.rows() - 1);
        l.sym = (A - A.transpose()).cwiseAbs().maxCoeff() == 0.0;
        const double sep = norm(sub(pts[i], partner[i]), n);
        l.lip = sep > 0.0 ? detail::frob(A - A2) / sep : 0.0;
        l.g = norm(s.g, n);
        l.ayy_min = l.ayy_max = l.ayy_grad = 0.0;
        if (op.stage >= 3) {
            l.ayy_min = l.ayy_max = op.a_yy(s);
            l.ayy_grad = sep > 0.0 ? std::fabs(op.a_yy(s) - op.a_yy(s2)) / sep : 0.0;
        }
    });
    const double inf = std::numeric_limits<double>::infinity();
    c.min_eig = inf;
    c.max_eig = -inf;
    c.a_yy_min = op.stage >= 3 ? inf : 0.0;
    c.a_yy_max = op.stage >= 3 ? -inf : 0.0;
    for (const auto& l : loc) {
        c.min_eig = std::min(c.min_eig, l.min_eig);
        c.max_eig = std::max(c.max_eig, l.max_eig);
        c.symmetric = c.symmetric && l.sym;
        c.lipschitz_sampled = std::max(c.lipschitz_sampled, l.lip);
        c.g_sup = std::max(c.g_sup, l.g);
        if (op.stage >= 3) {
            c.a_yy_min = std::min(c.a_yy_min, l.ayy_min);
            c.a_yy_max = std::max(c.a_yy_max, l.ayy_max);
            c.a_yy_grad_sampled = std::max(c.a_yy_grad_sampled, l.ayy_grad);
        }
    }
    // The defect peaks at the singular point of a cusp.
    const auto& f = W.field();
    if (f.kind == FieldKind::cusp && norm(f.center, n) < W.domain_radius())
        c.g_sup = std::max(c.g_sup, norm(W.at(f.center).g, n));
}

// Unset L, L1 select the defaults 2(sqrt(n)+1) and minimal_L1.
inline LiftedOperator build_stage(int stage, std::shared_ptr<const DriftMollification> W,
                                  std::optional<double> Lopt = std::nullopt, std::optional<double> L1opt = std::nullopt,
                                  const CertifyOptions& opt = {})
{
    if (stage < 1 || stage > 4) throw ParameterError("stage must be 1..4");
    const int n = W->n();
    const double Lmin = default_L(n), L1min = minimal_L1(W->div_sup(), W->Bhat());
    const double L = Lopt.value_or(Lmin), L1 = L1opt.value_or(L1min);
    if (!(L > 0.0) || (stage >= 3 && !(L1 > 0.0)))
        throw AdmissibilityError("L and L1 must be positive (minimal L = " + fmt17(Lmin) + ", minimal L1 = " +
                                 fmt17(L1min) + ")");
    if (certified_b_bound(n, L) > 0.5 * (1.0 + 1e-15))
        throw AdmissibilityError("|b| <= 1/2 not certified: (sqrt(n)+1)/L = " + fmt17(certified_b_bound(n, L)) +
                                 "; minimal L = " + fmt17(Lmin));
    if (stage >= 3 && L1 < L1min * (1.0 - 1e-15))
        throw AdmissibilityError("1/(2 L1) <= a_yy <= 1 not certified for L1 = " + fmt17(L1) + "; minimal L1 = " +
                                 fmt17(L1min));
    LiftedOperator op;
    op.n = n;
    op.stage = stage;
    op.L = L;
    op.L1 = stage >= 3 ? L1 : 0.0;
    op.b = build_b(W, L);
    op.W = std::move(W);
    if (opt.samples > 0) certify(op, opt);
    return op;
}

inline std::string certificate_csv_header() { return "stage,min_eig,lipschitz_bound,residual_h,residual_value"; }

using BaseRule = std::function<double(const Point&)>;

// u(x) times exp(L B (s+t) + L1 sqrt(Bhat) y + i omega z), truncated to the stage's coordinates.
struct LiftedFunction {
    BaseRule u;
    int n = 2;
    int stage = 4;
    std::vector<cplx> rates;

    cplx factor(const std::vector<double>& aux) const
    {
        cplx e = 0.0;
        for (int a = 0; a < stage; ++a) e += rates[a] * (a < static_cast<int>(aux.size()) ? aux[a] : 0.0);
        return std::exp(e);
    }

    cplx operator()(const Point& x, const std::vector<double>& aux = {}) const { return factor(aux) * u(x); }
};

inline LiftedFunction lift_solution(BaseRule u, const LiftedOperator& op)
{
    return LiftedFunction{std::move(u), op.n, op.stage, op.rates()};
}

// Node lookup on a solved grid; stencils must land on nodes.
inline LiftedFunction lift_solution(const GridField<double>& u, const LiftedOperator& op)
{
    auto grid = u.grid;
    auto values = std::make_shared<std::vector<double>>(u.values);
    BaseRule rule = [grid, values](const Point& x) {
        const double h = grid.h();
        std::array<int, kMaxDim> m{0, 0, 0};
        for (int d = 0; d < grid.n; ++d) {
            double q = (x[d] + grid.R) / h;
            long r = std::lround(q);
            if (std::fabs(q - r) > 1e-6 || r < 0 || r >= grid.P) throw DomainError("lifted stencil off the grid nodes");
            m[d] = static_cast<int>(r);
        }
        return (*values)[grid.index(m)];
    };
    return lift_solution(rule, op);
}

namespace detail {

inline Point central_gradient(const BaseRule& u, const Point& x, double h, int n)
{
    Point g{0.0, 0.0, 0.0};
    for (int q = 0; q < n; ++q) {
        Point a = x, b = x;
        a[q] += h;
        b[q] -= h;
        g[q] = (u(a) - u(b)) / (2.0 * h);
    }
    return g;
}

// div(A grad v)/E at aux = 0 with x-derivatives by nested central differences of step h.
inline cplx lifted_divergence(const LiftedOperator& op, const BaseRule& u, const Point& x, double h,
                              const DriftMollification::Sample& s0)
{
    const int n = op.n;
    auto kap = op.rates();
    auto flux = [&](const Point& p, const Eigen::MatrixXd& A, int row) {
        const double up = u(p);
        Point g = central_gradient(u, p, h, n);
        cplx f = 0.0;
        for (int q = 0; q < n; ++q) f += A(row, q) * g[q];
        for (int a = 0; a < op.stage; ++a) f += A(row, n + a) * kap[a] * up;
        return f;
    };
    cplx div = 0.0;
    for (int i = 0; i < n; ++i) {
        Point a = x, b = x;
        a[i] += h;
        b[i] -= h;
        div += (flux(a, op.A(a), i) - flux(b, op.A(b), i)) / (2.0 * h);
    }
    Eigen::MatrixXd A0 = op.A(s0);
    for (int a = 0; a < op.stage; ++a) div += kap[a] * flux(x, A0, n + a);
    return div;
}

}  // namespace detail

// div(A grad v) + drift . grad v + potential v, divided by the exponential factor, at aux = 0.
inline cplx lifted_residual_at(const LiftedOperator& op, const BaseRule& u, const Point& x, double h)
{
    auto s = op.W->at(x);
    cplx r = detail::lifted_divergence(op, u, x, h, s);
    Point g = detail::central_gradient(u, x, h, op.n);
    auto dr = op.drift(s);
    for (int i = 0; i < op.n; ++i) r += dr(i) * g[i];
    r += op.potential(s) * u(x);
    return r;
}

// -div(A1 grad u^) minus the expanded form -d_tt - Lap + b.grad d_t + (div b/2) d_t, over E.
inline double stage1_identity_at(const LiftedOperator& op1, const BaseRule& u, const Point& x, double h)
{
    if (op1.stage != 1) throw ParameterError("stage-1 identity needs the stage-1 operator");
    const int n = op1.n;
    auto s = op1.W->at(x);
    const double LB = op1.L * op1.B(), u0 = u(x);
    double lhs = -detail::lifted_divergence(op1, u, x, h, s).real();
    double lap = 0.0;
    for (int i = 0; i < n; ++i) {
        Point a = x, b = x;
        a[i] += h;
        b[i] -= h;
        lap += (u(a) - 2.0 * u0 + u(b)) / (h * h);
    }
    Point g = detail::central_gradient(u, x, h, n);
    Point bb = op1.b.at(s);
    const double divb = s.div / LB;
    double rhs = -LB * LB * u0 - lap + LB * dot(bb, g, n) + 0.5 * divb * LB * u0;
    return lhs - rhs;
}

struct ConvergenceReport {
    std::vector<double> h;
    std::vector<double> value;  // sup over sample points
    std::vector<double> ratio;  // value[i-1]/value[i]
    std::size_t points = 0;
};

inline ConvergenceReport convergence_study(const std::vector<double>& h_list, const std::vector<Point>& points,
                                           const std::function<double(const Point&, double)>& local)
{
    if (h_list.empty() || points.empty()) throw ParameterError("convergence study needs spacings and points");
    ConvergenceReport r;
    r.h = h_list;
    r.points = points.size();
    for (double h : h_list) {
        std::vector<double> vals(points.size());
        parallel_for(points.size(), [&](std::size_t i) { vals[i] = local(points[i], h); });
        r.value.push_back(*std::max_element(vals.begin(), vals.end()));
    }
    for (std::size_t i = 1; i < r.value.size(); ++i) r.ratio.push_back(r.value[i - 1] / r.value[i]);
    return r;
}

inline ConvergenceReport lifted_residual(const LiftedFunction& lf, const LiftedOperator& op4,
                                         const std::vector<double>& h_list, const std::vector<Point>& points)
{
    return convergence_study(h_list, points,
                             [&](const Point& x, double h) { return std::abs(lifted_residual_at(op4, lf.u, x, h)); });
}

inline ConvergenceReport stage1_identity(const LiftedOperator& op1, const BaseRule& u, const std::vector<double>& h_list,
                                         const std::vector<Point>& points)
{
    return convergence_study(h_list, points,
                             [&](const Point& x, double h) { return std::fabs(stage1_identity_at(op1, u, x, h)); });
}

// Interior points at least `clearance` away from the drift's singular point.
inline std::vector<Point> residual_points(const DriftMollification& W, double radius, double clearance, int count,
                                          std::uint64_t seed)
{
    const int n = W.n();
    std::mt19937_64 rng(seed);
    const auto& f = W.field();
    std::vector<Point> pts;
    for (int tries = 0; static_cast<int>(pts.size()) < count; ++tries) {
        if (tries > 1000 * count) throw ParameterError("no residual points outside the clearance zone");
        Point p = random_in_ball(rng, n, radius);
        if (f.kind == FieldKind::cusp && norm(sub(p, f.center), n) <= clearance) continue;
        pts.push_back(p);
    }
    return pts;
}

// Lifted norm over the cylinder B_r x [-r, r]^stage, normalized by (2r)^stage.
// Exponents reach e^{1000} for cusp drifts, so everything is kept in logs.
struct SandwichRow {
    double r = 0.0;
    double base_sq = 0.0;        // int_{B_r} u^2
    double log_lifted_sq = 0.0;  // log of the normalized lifted integral
    double log_lower = 0.0, log_upper = 0.0;
    double log_lower_slack = 0.0, log_upper_slack = 0.0;  // >= 0 when the bounds hold
    bool pass = false;
};

inline SandwichRow norm_sandwich_row(const LiftedOperator& op, double r, double base_sq)
{
    if (!(op.L > 0.0) || (op.stage >= 3 && !(op.L1 > 0.0))) throw AdmissibilityError("lift with L, L1 <= 0");
    if (!(base_sq > 0.0)) throw DegenerateError("u vanishes on the sandwich ball");
    // log of (1/2r) int_{-r}^{r} e^{c t} dt = log(sinh(x)/x), x = c r
    auto log_avg = [r](double c) {
        const double x = c * r;
        if (x < 1e-4) return x * x / 6.0;
        return x + std::log1p(-std::exp(-2.0 * x)) - std::log(2.0 * x);
    };
    auto kap = op.rates();
    double lf = 0.0;
    for (int a = 0; a < op.stage && a < 3; ++a) lf += log_avg(2.0 * kap[a].real());
    SandwichRow row;
    row.r = r;
    row.base_sq = base_sq;
    const double lb = std::log(base_sq);
    row.log_lifted_sq = lf + lb;
    const double ex = 2.0 * r * op.L * op.B() * std::min(op.stage, 2) +
                      (op.stage >= 3 ? 2.0 * r * op.L1 * std::sqrt(op.Bhat()) : 0.0);
    row.log_lower = lb - ex;
    row.log_upper = lb + ex;
    row.log_lower_slack = row.log_lifted_sq - row.log_lower;
    row.log_upper_slack = row.log_upper - row.log_lifted_sq;
    row.pass = row.log_lower_slack >= 0.0 && row.log_upper_slack >= 0.0;
    return row;
}

inline std::vector<SandwichRow> norm_sandwich_check(const BallNorm& base, const LiftedOperator& op,
                                                    const std::vector<double>& radii)
{
    std::vector<SandwichRow> rows;
    for (double r : radii) {
        double nb = base(r);
        rows.push_back(norm_sandwich_row(op, r, nb * nb));
    }
    return rows;
}

struct EpsilonChoice {
    double epsilon = 0.0;
    double gradient_term = 0.0;  // K eps^{beta0 - 1}
    double drift_term = 0.0;     // K^2 eps^{2 beta0} R
    double relative_gap = 0.0;
    bool out_of_regime = false;
};

inline EpsilonChoice drift_epsilon_choice(double K, double beta0, double R)
{
    auto p = optimal_parameters(BallVariant::drift, K, beta0, R);
    EpsilonChoice e;
    e.epsilon = p.epsilon;
    e.out_of_regime = p.out_of_regime;
    e.gradient_term = K * std::pow(e.epsilon, beta0 - 1.0);
    e.drift_term = K * K * std::pow(e.epsilon, 2.0 * beta0) * R;
    e.relative_gap = std::fabs(e.gradient_term - e.drift_term) / std::max(e.gradient_term, e.drift_term);
    return e;
}

}  // namespace freqlab

#endif  // FREQLAB_LIFTING_HPP
