#ifndef FREQLAB_FREQUENCY_HPP
#define FREQLAB_FREQUENCY_HPP

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "core.hpp"
#include "fields.hpp"
#include "mollify.hpp"
#include "solve.hpp"

namespace freqlab {

struct WeightSpec {
    double alpha = 2.0;
    double r = 1.0;
};

inline double weight_e(double r, const Point& x, int n) { return r * r - norm2(x, n); }

// u, grad u and div(A grad u) at a point.
struct FieldSample {
    double u = 0.0;
    Point grad{0.0, 0.0, 0.0};
    double div_agrad = 0.0;
};

using PointSampler = std::function<FieldSample(const Point&)>;

inline PointSampler sampler_from(const ClosedFormSolution& s)
{
    return [s](const Point& x) {
        FieldSample f;
        f.u = s.value(x);
        f.grad = s.gradient(x);
        f.div_agrad = s.potential(x) * f.u;
        return f;
    };
}

// V_eps, grad V_eps and f_eps = V_eps - V at a point.
struct PotentialSample {
    double v_eps = 0.0;
    Point grad{0.0, 0.0, 0.0};
    double defect = 0.0;
};

class PotentialModel {
public:
    double M = 0.0, M0 = 0.0, beta = 1.0, eps = 1.0;
    std::string label = "zero";

    static PotentialModel zero()
    {
        PotentialModel p;
        p.rule_ = [](const Point&) { return PotentialSample{}; };
        return p;
    }

    // V smooth enough to be used as its own regularization (f_eps = 0).
    static PotentialModel exact(std::function<double(const Point&)> V, std::function<Point(const Point&)> gradV,
                                double M)
    {
        PotentialModel p;
        p.M = M;
        p.label = "exact";
        p.rule_ = [V, gradV](const Point& x) {
            PotentialSample s;
            s.v_eps = V(x);
            s.grad = gradV ? gradV(x) : Point{0.0, 0.0, 0.0};
            return s;
        };
        return p;
    }

    static PotentialModel constant(double c)
    {
        auto p = exact([c](const Point&) { return c; }, nullptr, std::fabs(c));
        p.label = "constant";
        return p;
    }

    // Mollified Hoelder potential; radial cusps about the origin use a
    // tabulated profile, everything else the pointwise quadrature.
    static PotentialModel mollified(const HolderField& V, double eps)
    {
        if (V.vector_valued) throw ParameterError("potential must be scalar");
        PotentialModel p;
        p.M = V.M;
        p.M0 = V.M0;
        p.beta = V.beta;
        p.eps = eps;
        p.label = "mollified";
        const int n = V.n;
        const bool radial = V.kind == FieldKind::constant ||
                            (V.kind == FieldKind::cusp && norm(V.center, n) == 0.0 && norm(V.offset, n) == 0.0);
        if (radial) {
            auto table = std::make_shared<const RadialMollifiedTable>(V, eps);
            p.rule_ = [table, V, n](const Point& x) {
                PotentialSample s;
                double r = norm(x, n);
                s.v_eps = table->value(r);
                double d = r > 0.0 ? table->derivative(r) / r : 0.0;
                s.grad = scale(x, d);
                s.defect = s.v_eps - V.eval_unchecked(x)[0];
                return s;
            };
        } else {
            auto mol = std::make_shared<const Mollifier>(V, eps);
            p.rule_ = [mol](const Point& x) {
                auto m = mol->sample(x, true, false);
                PotentialSample s;
                s.v_eps = m.value[0];
                s.grad = m.grad[0];
                s.defect = m.defect[0];
                return s;
            };
        }
        return p;
    }

    PotentialModel negated() const
    {
        PotentialModel p = *this;
        p.label = "negated " + label;
        p.rule_ = [rule = rule_](const Point& x) {
            PotentialSample s = rule(x);
            s.v_eps = -s.v_eps;
            s.grad = scale(s.grad, -1.0);
            s.defect = -s.defect;
            return s;
        };
        return p;
    }

    PotentialSample operator()(const Point& x) const { return rule_(x); }

private:
    std::function<PotentialSample(const Point&)> rule_;
};

// nu = x.Ax/|x|^2 and omega = Ax/nu; nu(0) := 1 by convention.
struct NuOmega {
    double nu = 1.0;
    Point omega{0.0, 0.0, 0.0};
};

inline NuOmega nu_omega(const Mat& A, const Point& x, int n)
{
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (A[i][j] != A[j][i]) throw ParameterError("coefficient matrix not symmetric");
    NuOmega r;
    double x2 = norm2(x, n);
    if (x2 == 0.0) return r;
    Point ax = matvec(A, x, n);
    r.nu = dot(x, ax, n) / x2;
    r.omega = scale(ax, 1.0 / r.nu);
    return r;
}

// Geometric data of A entering the variable-coefficient error terms.
struct CoefficientGeometry {
    Mat a{};
    double nu = 1.0;
    Point omega{0.0, 0.0, 0.0};
    double div_ax = 0.0;    // div(A x)
    double div_omega = 0.0;
    Mat domega{};           // domega[i][k] = d_i omega_k
    std::array<Mat, kMaxDim> da{};
};

inline CoefficientGeometry coefficient_geometry(const CoefficientField& A, const Point& x, int n)
{
    CoefficientGeometry g;
    g.a = A.A(x);
    for (int k = 0; k < n; ++k) g.da[k] = A.dA(x, k);
    Point ax = matvec(g.a, x, n);
    // d_i (Ax)_k = sum_j (d_i a_kj) x_j + a_ki
    Mat dax{};
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            double s = g.a[k][i];
            for (int j = 0; j < n; ++j) s += g.da[i][k][j] * x[j];
            dax[i][k] = s;
        }
    for (int k = 0; k < n; ++k) g.div_ax += dax[k][k];
    const double x2 = norm2(x, n);
    if (x2 == 0.0) {
        g.nu = 1.0;
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) g.domega[i][k] = g.a[k][i];
        for (int k = 0; k < n; ++k) g.div_omega += g.domega[k][k];
        return g;
    }
    const double q = dot(x, ax, n);
    g.nu = q / x2;
    g.omega = scale(ax, 1.0 / g.nu);
    Point dnu{0.0, 0.0, 0.0};
    for (int i = 0; i < n; ++i) {
        double dq = 2.0 * ax[i];
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) dq += g.da[i][j][l] * x[j] * x[l];
        dnu[i] = dq / x2 - 2.0 * q * x[i] / (x2 * x2);
    }
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) g.domega[i][k] = (dax[i][k] * g.nu - ax[k] * dnu[i]) / (g.nu * g.nu);
    for (int k = 0; k < n; ++k) g.div_omega += g.domega[k][k];
    return g;
}

// All ball integrals at one radius.
struct IntegralSet {
    double r = 0.0, alpha = 0.0;
    double H = 0.0;        // int u^2 nu e^{a-1}
    double H_plain = 0.0;  // int u^2 e^{a-1}
    double D = 0.0, L = 0.0, E = 0.0;
    double I0 = 0.0;       // 2 alpha int u (A grad u . x) e^{a-1}
    double Jx = 0.0;       // int u (A grad u . x) e^{a-1}
    double EH = 0.0, ED = 0.0;
    double BV_raw = 0.0;   // int V_eps u ((x.grad u) - (A grad u . x)/nu) e^a
    double Q1 = 0.0;       // int (A grad u . x)^2 / nu e^{a-1}
    double Q2 = 0.0;       // int (A grad u . x) / nu div(A grad u) e^a
    double h = 0.0;        // int u^2
    double cells = 0.0;    // int e^{a-1}, for degeneracy scale
    std::array<double, 3> G{}, xG{};  // G in {1, |x|^2, u^2}: int G e^a, int x.grad G e^a
};

struct NodeData {
    Point x{0.0, 0.0, 0.0};
    FieldSample f;
    PotentialSample p;
};

inline void accumulate(IntegralSet& acc, const NodeData& d, const CoefficientField& A, bool variable, int n,
                       double vol)
{
    const double e = weight_e(acc.r, d.x, n);
    if (!(e > 0.0)) return;
    const double e1 = std::pow(e, acc.alpha - 1.0) * vol, ea = e1 * e;
    const double u = d.f.u, u2 = u * u;
    const Point& g = d.f.grad;
    const double xg = dot(d.x, g, n);
    double nu = 1.0, div_ax = static_cast<double>(n), ag_x = xg, aqq = norm2(g, n);
    double ed = 0.0;
    if (variable) {
        CoefficientGeometry cg = coefficient_geometry(A, d.x, n);
        nu = cg.nu;
        div_ax = cg.div_ax;
        Point ag = matvec(cg.a, g, n);
        ag_x = dot(ag, d.x, n);
        aqq = dot(ag, g, n);
        // (div omega - n) a grad u . grad u + 2 a_ij d_i u d_k u (delta_jk - d_j omega_k)
        // + (d_k a_ij) d_i u d_j u omega_k
        ed = (cg.div_omega - n) * aqq;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) ed += 2.0 * ag[j] * g[k] * ((j == k ? 1.0 : 0.0) - cg.domega[j][k]);
        for (int k = 0; k < n; ++k) {
            Point dag = matvec(cg.da[k], g, n);
            ed += dot(dag, g, n) * cg.omega[k];
        }
    }
    acc.H += u2 * nu * e1;
    acc.H_plain += u2 * e1;
    acc.D += aqq * ea;
    acc.L += d.p.v_eps * u2 * ea;
    acc.E += d.p.defect * u2 * ea;
    acc.Jx += u * ag_x * e1;
    acc.EH += u2 * (div_ax - n * nu) * e1;
    acc.ED += ed * ea;
    acc.BV_raw += d.p.v_eps * u * (xg - ag_x / nu) * ea;
    acc.Q1 += ag_x * ag_x / nu * e1;
    acc.Q2 += ag_x / nu * d.f.div_agrad * ea;
    acc.h += u2 * vol;
    acc.cells += e1;
    const double x2 = norm2(d.x, n);
    acc.G[0] += ea;
    acc.G[1] += x2 * ea;
    acc.xG[1] += 2.0 * x2 * ea;
    acc.G[2] += u2 * ea;
    acc.xG[2] += 2.0 * u * xg * ea;
}

// Midpoint quadrature over B_r, either on a lattice scaled with r (closed
// forms) or on the nodes of a solved grid field.
class BallQuadrature {
public:
    static BallQuadrature closed_form(int n, PointSampler u, PotentialModel pot,
                                      CoefficientField A = CoefficientField::identity(2), int cells = 0)
    {
        if (n < 2 || n > 3) throw ParameterError("dimension must be 2 or 3");
        BallQuadrature q;
        q.n_ = n;
        q.sampler_ = std::move(u);
        q.pot_ = std::move(pot);
        A.n = n;
        q.A_ = A;
        q.cells_ = cells > 0 ? cells : (n == 2 ? 256 : 64);
        q.max_r_ = std::numeric_limits<double>::infinity();
        return q;
    }

    // Nodes of u inside B_{max_r}; div(A grad u) from the discrete flux-form operator.
    static BallQuadrature grid(const GridField<double>& u, PotentialModel pot, const CoefficientField& A, double max_r)
    {
        const CubeGrid& g = u.grid;
        const double h = g.h();
        if (!(max_r > 0.0) || max_r > g.R - h * (1.0 - 1e-9))
            throw ParameterError("radius exceeds grid half-width");
        BallQuadrature q;
        q.n_ = g.n;
        q.pot_ = std::move(pot);
        q.A_ = A;
        q.A_.n = g.n;
        q.max_r_ = max_r;
        q.vol_ = std::pow(h, g.n);
        GridField<double> w = u;
        if (!w.gradient) w.compute_gradient();
        auto level = detail::build_level(OperatorSpec::divergence(q.A_, nullptr, g.n), g, false);
        std::vector<double> mdiv;
        level.apply(w.values, mdiv);
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (norm(g.coord(i), g.n) < max_r) idx.push_back(i);
        q.nodes_.resize(idx.size());
        parallel_for(idx.size(), [&](std::size_t j) {
            std::size_t i = idx[j];
            NodeData d;
            d.x = g.coord(i);
            d.f.u = w.values[i];
            for (int k = 0; k < g.n; ++k) d.f.grad[k] = (*w.gradient)[i][k];
            d.f.div_agrad = -mdiv[i];
            d.p = q.pot_(d.x);
            q.nodes_[j] = d;
        });
        std::stable_sort(q.nodes_.begin(), q.nodes_.end(),
                         [n = g.n](const NodeData& a, const NodeData& b) { return norm2(a.x, n) < norm2(b.x, n); });
        q.spacing_ = h;
        return q;
    }

    int n() const { return n_; }
    bool on_grid() const { return sampler_ == nullptr; }
    double spacing(double r) const { return on_grid() ? spacing_ : 2.0 * r / cells_; }
    double max_radius() const { return max_r_; }
    const CoefficientField& coefficients() const { return A_; }
    const PotentialModel& potential() const { return pot_; }
    bool variable() const { return !A_.is_identity(); }

    IntegralSet integrals(double r, double alpha) const
    {
        if (!(r > 0.0) || r > max_r_ * (1.0 + 1e-12)) throw ParameterError("radius outside the quadrature domain");
        IntegralSet acc;
        acc.r = r;
        acc.alpha = alpha;
        visit(r, [&](const NodeData& d, double vol) { accumulate(acc, d, A_, variable(), n_, vol); });
        acc.I0 = 2.0 * alpha * acc.Jx;
        return acc;
    }

    // Generic weighted integral of G over B_r with weight e_r^power.
    double weighted(const std::function<double(const Point&, const FieldSample&)>& G, double r, double power) const
    {
        if (!(r > 0.0) || r > max_r_ * (1.0 + 1e-12)) throw ParameterError("radius outside the quadrature domain");
        double s = 0.0;
        visit(r, [&](const NodeData& d, double vol) {
            double e = weight_e(r, d.x, n_);
            if (e > 0.0) s += G(d.x, d.f) * std::pow(e, power) * vol;
        });
        return s;
    }

    // sqrt(int_{B_r} u^2); boundary-straddling cells subsampled 4^n times on lattices.
    double ball_norm(double r) const
    {
        if (!(r > 0.0) || r > max_r_ * (1.0 + 1e-12)) throw ParameterError("radius outside the quadrature domain");
        double s = 0.0;
        if (on_grid()) {
            for (const auto& d : nodes_) {
                if (norm(d.x, n_) >= r) break;
                s += d.f.u * d.f.u * vol_;
            }
            return std::sqrt(s);
        }
        const double h = 2.0 * r / cells_, vol = std::pow(h, n_), half = 0.5 * h * std::sqrt(double(n_));
        const int total = ipow(cells_, n_);
        for (int j = 0; j < total; ++j) {
            Point x = lattice_point(j, r);
            double rho = norm(x, n_);
            if (rho + half < r) {
                double u = sampler_(x).u;
                s += u * u * vol;
            } else if (rho - half < r) {
                const int sub = 4, cnt = ipow(sub, n_);
                for (int q = 0; q < cnt; ++q) {
                    Point y = x;
                    int rem = q;
                    for (int d = 0; d < n_; ++d) {
                        y[d] += ((rem % sub) + 0.5 - 0.5 * sub) * h / sub;
                        rem /= sub;
                    }
                    if (norm(y, n_) < r) {
                        double u = sampler_(y).u;
                        s += u * u * vol / cnt;
                    }
                }
            }
        }
        return std::sqrt(s);
    }

private:
    int n_ = 2;
    PointSampler sampler_;
    PotentialModel pot_ = PotentialModel::zero();
    CoefficientField A_ = CoefficientField::identity(2);
    int cells_ = 256;
    double max_r_ = 0.0, vol_ = 0.0, spacing_ = 0.0;
    std::vector<NodeData> nodes_;

    Point lattice_point(int j, double r) const
    {
        const double h = 2.0 * r / cells_;
        Point x{0.0, 0.0, 0.0};
        for (int d = n_ - 1; d >= 0; --d) {
            x[d] = -r + (j % cells_ + 0.5) * h;
            j /= cells_;
        }
        return x;
    }

    template <typename F>
    void visit(double r, F&& f) const
    {
        if (on_grid()) {
            for (const auto& d : nodes_) {
                if (norm(d.x, n_) >= r) break;
                f(d, vol_);
            }
            return;
        }
        const double h = 2.0 * r / cells_, vol = std::pow(h, n_);
        const int total = ipow(cells_, n_);
        for (int j = 0; j < total; ++j) {
            NodeData d;
            d.x = lattice_point(j, r);
            if (!(weight_e(r, d.x, n_) > 0.0)) continue;
            d.f = sampler_(d.x);
            d.p = pot_(d.x);
            f(d, vol);
        }
    }
};

inline double weighted_integral(const BallQuadrature& q, const std::function<double(const Point&, const FieldSample&)>& G,
                                double r, double alpha_power)
{
    return q.weighted(G, r, alpha_power);
}

enum class Variant { constant_coef, variable_coef };

inline std::string to_string(Variant v) { return v == Variant::constant_coef ? "constant-coef" : "variable-coef"; }

// P(r) = (a1/2) r^2 + (a2/3) r^3 + (a3/4) r^4 + (b2/3) r^3 + (b3/4) r^4 with
// a1 = 2M, a2 = C M0 eps^{beta-1}, a3 = C M0^2 eps^{2 beta}/(4 alpha),
// b2 = C L_A M, b3 = C L_A M0 eps^{beta-1}.
inline double correction_P(double r, double M, double M0, double eps, double beta, double alpha, double L_A,
                           double C)
{
    const double a1 = 2.0 * M;
    const double a2 = C * M0 * std::pow(eps, beta - 1.0);
    const double a3 = C * M0 * M0 * std::pow(eps, 2.0 * beta) / (4.0 * alpha);
    const double b2 = C * L_A * M;
    const double b3 = C * L_A * M0 * std::pow(eps, beta - 1.0);
    const double r2 = r * r, r3 = r2 * r, r4 = r3 * r;
    return a1 / 2.0 * r2 + a2 / 3.0 * r3 + a3 / 4.0 * r4 + b2 / 3.0 * r3 + b3 / 4.0 * r4;
}

struct CorrectionSpec {
    double M = 0.0, M0 = 0.0, eps = 1.0, beta = 1.0, L_A = 0.0;
    double C = 10.0, c0 = 10.0;
    Variant variant = Variant::constant_coef;
    double sign = 1.0;  // -1 only for the negated-P control
};

struct ProfileRow {
    double r = 0.0, alpha = 0.0;
    double H = 0.0, D = 0.0, L = 0.0, E_def = 0.0, I0 = 0.0, I = 0.0;
    double J_integral = 0.0, J_identity = 0.0, N = 0.0, P = 0.0, Ntilde = 0.0;
    double E_H = 0.0, E_D = 0.0, B_V = 0.0;
    double h = 0.0;
};

inline double corrected_frequency(double N, double P, double r, Variant variant, double c0, double L_A)
{
    if (variant == Variant::constant_coef) return N + P;
    return std::exp(c0 * L_A * r) * (N + P);
}

inline ProfileRow profile_row(const IntegralSet& s, const CorrectionSpec& c)
{
    if (!(s.H > 1e-30 * s.cells)) throw DegenerateError("H below 1e-30 of the weight mass at r = " + fmt17(s.r));
    ProfileRow row;
    row.r = s.r;
    row.alpha = s.alpha;
    row.H = s.H;
    row.D = s.D;
    row.L = s.L;
    row.E_def = s.E;
    row.I0 = s.I0;
    row.I = s.D + s.L;
    row.J_integral = s.Jx + s.E / (4.0 * s.alpha);
    row.J_identity = (2.0 * row.I - s.E) / (4.0 * s.alpha);
    row.N = row.I / row.H;
    const double LA = c.variant == Variant::constant_coef ? 0.0 : c.L_A;
    row.P = c.sign * correction_P(s.r, c.M, c.M0, c.eps, c.beta, s.alpha, LA, c.C);
    row.Ntilde = corrected_frequency(row.N, row.P, s.r, c.variant, c.c0, LA);
    row.E_H = s.EH;
    row.E_D = s.ED;
    row.B_V = 2.0 / s.r * s.BV_raw;
    row.h = s.h;
    return row;
}

inline ProfileRow compute_profile(const BallQuadrature& q, const WeightSpec& w, const CorrectionSpec& c)
{
    if (!(w.alpha >= 1.0)) throw ParameterError("alpha must be >= 1");
    return profile_row(q.integrals(w.r, w.alpha), c);
}

inline std::vector<ProfileRow> compute_profiles(const BallQuadrature& q, const std::vector<double>& radii, double alpha,
                                                const CorrectionSpec& c)
{
    std::vector<ProfileRow> rows(radii.size());
    parallel_for(radii.size(), [&](std::size_t i) { rows[i] = compute_profile(q, {alpha, radii[i]}, c); });
    return rows;
}

inline std::string profile_csv(const std::vector<ProfileRow>& rows)
{
    std::string s = "r,H,D,L,E_def,I0,I,J_integral,J_identity,N,P,Ntilde,E_H,E_D,B_V\n";
    for (const auto& r : rows) {
        const double v[] = {r.r, r.H, r.D, r.L, r.E_def, r.I0, r.I, r.J_integral, r.J_identity, r.N, r.P,
                            r.Ntilde, r.E_H, r.E_D, r.B_V};
        for (std::size_t i = 0; i < std::size(v); ++i) s += (i ? "," : "") + fmt17(v[i]);
        s += "\n";
    }
    return s;
}

struct IdentityResidual {
    std::string name;
    double lhs = 0.0, rhs = 0.0, relative = 0.0;
};

struct IdentityReport {
    double r = 0.0, alpha = 0.0, tol = 1e-6;
    std::vector<IdentityResidual> items;
    // fitted constants of the bound checks (f)
    double EH_ratio = 0.0, ED_ratio = 0.0, BV_ratio = 0.0;

    const IdentityResidual& get(const std::string& name) const
    {
        for (const auto& i : items)
            if (i.name == name) return i;
        throw UsageError("unknown identity '" + name + "'");
    }

    double max_relative() const
    {
        double m = 0.0;
        for (const auto& i : items) m = std::max(m, i.relative);
        return m;
    }
};

// |lhs - rhs| / max(|lhs|, sum of |rhs terms|)
inline IdentityResidual make_residual(const std::string& name, double lhs, const std::vector<double>& terms)
{
    IdentityResidual r;
    r.name = name;
    r.lhs = lhs;
    double sum_abs = 0.0;
    for (double t : terms) {
        r.rhs += t;
        sum_abs += std::fabs(t);
    }
    const double mag = std::max(std::fabs(lhs), sum_abs);
    r.relative = mag > 0.0 ? std::fabs(lhs - r.rhs) / mag : 0.0;
    return r;
}

// Identities (a)-(f) at radius r. r-derivatives use 5-point central
// differences in log r with relative step delta.
inline IdentityReport identity_suite(const BallQuadrature& q, const WeightSpec& w, double delta = 0.0,
                                     const CorrectionSpec& c = {})
{
    const double r = w.r, a = w.alpha;
    const int n = q.n();
    if (delta <= 0.0) delta = q.on_grid() ? 1e-3 : 2e-4;
    const double rmax = r * std::exp(2.0 * delta);
    if (!(r * std::exp(-2.0 * delta) > 0.0) || rmax > q.max_radius() * (1.0 + 1e-12))
        throw ParameterError("radius stencil leaves (0, R)");
    std::array<IntegralSet, 5> s;
    parallel_for(5, [&](std::size_t j) { s[j] = q.integrals(r * std::exp((static_cast<int>(j) - 2) * delta), a); });
    auto deriv = [&](auto get) {
        double dt = (get(s[0]) - 8.0 * get(s[1]) + 8.0 * get(s[3]) - get(s[4])) / (12.0 * delta);
        return dt / r;
    };
    const IntegralSet& m = s[2];
    IdentityReport rep;
    rep.r = r;
    rep.alpha = a;
    const double I = m.D + m.L;
    rep.items.push_back(make_residual("a:I0=I-E", m.I0, {I, -m.E}));
    const char* gname[3] = {"b:diffF(G=1)", "b:diffF(G=|x|^2)", "b:diffF(G=u^2)"};
    for (int k = 0; k < 3; ++k) {
        double lhs = deriv([k](const IntegralSet& t) { return t.G[k]; });
        rep.items.push_back(make_residual(gname[k], lhs, {(2 * a + n) / r * m.G[k], m.xG[k] / r}));
    }
    if (!q.variable()) {
        double lhs = deriv([](const IntegralSet& t) { return t.H_plain; });
        rep.items.push_back(make_residual("c:Hprime", lhs, {(2 * a + n - 2) / r * m.H_plain, m.I0 / (a * r)}));
    } else {
        double lhs = deriv([](const IntegralSet& t) { return t.H; });
        rep.items.push_back(
            make_residual("c:Hprime(variable)", lhs, {(2 * a + n - 2) / r * m.H, m.I0 / (a * r), m.EH / r}));
    }
    {
        double lhs = deriv([](const IntegralSet& t) { return t.D; });
        std::vector<double> terms = {(2 * a + n - 2) / r * m.D, 4 * a / r * m.Q1, -2.0 / r * m.Q2};
        if (q.variable()) terms.push_back(m.ED / r);
        rep.items.push_back(make_residual(q.variable() ? "d:Dprime(variable)" : "d:Dprime", lhs, terms));
    }
    rep.items.push_back(make_residual("e:J", m.Jx + m.E / (4 * a), {(2 * I - m.E) / (4 * a)}));
    const double LA = q.coefficients().lipschitz_bound();
    if (LA > 0.0) {
        rep.EH_ratio = std::fabs(m.EH) / (LA * r * m.H);
        rep.ED_ratio = m.D > 0.0 ? std::fabs(m.ED) / (LA * r * m.D) : 0.0;
        const double bv = 2.0 / r * m.BV_raw;
        const double scale_bv = LA * (c.M * r * r + c.M0 * std::pow(c.eps, c.beta - 1.0) * r * r * r) * m.H;
        rep.BV_ratio = scale_bv > 0.0 ? std::fabs(bv) / scale_bv : 0.0;
    }
    const double hq = q.spacing(r) / r;
    rep.tol = std::max(1e-6, 5.0 * hq * hq);
    return rep;
}

struct MonotonicityReport {
    double min_increment = std::numeric_limits<double>::infinity();
    std::vector<double> violating_radii;
    bool pass = true;
    double delta = 1e-2;
};

inline MonotonicityReport monotonicity_check(const std::vector<double>& radii, const std::vector<double>& Ntilde,
                                             double delta = 1e-2)
{
    if (radii.size() != Ntilde.size() || radii.size() < 2) throw ParameterError("need matching radii and values");
    MonotonicityReport rep;
    rep.delta = delta;
    for (std::size_t j = 0; j + 1 < radii.size(); ++j) {
        if (!(radii[j + 1] > radii[j])) throw ParameterError("radii must increase");
        double inc = Ntilde[j + 1] - Ntilde[j];
        rep.min_increment = std::min(rep.min_increment, inc);
        if (!(inc >= -delta * (1.0 + std::fabs(Ntilde[j])))) {
            rep.pass = false;
            rep.violating_radii.push_back(radii[j + 1]);
        }
    }
    return rep;
}

inline MonotonicityReport monotonicity_check(const std::vector<ProfileRow>& rows, double delta = 1e-2)
{
    std::vector<double> r, v;
    for (const auto& row : rows) {
        r.push_back(row.r);
        v.push_back(row.Ntilde);
    }
    return monotonicity_check(r, v, delta);
}

}  // namespace freqlab

#endif  // FREQLAB_FREQUENCY_HPP
