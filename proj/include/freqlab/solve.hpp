#ifndef FREQLAB_SOLVE_HPP
#define FREQLAB_SOLVE_HPP

#include <complex>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "core.hpp"
#include "fields.hpp"

namespace freqlab {

// Uniform grid over [-R, R]^n with P points per axis, row-major with the
// last axis fastest.
struct CubeGrid {
    int n = 2;
    double R = 1.0;
    int P = 65;

    double h() const { return 2.0 * R / (P - 1); }
    std::size_t size() const { return static_cast<std::size_t>(ipow(P, n)); }

    std::size_t index(const std::array<int, kMaxDim>& i) const
    {
        std::size_t idx = 0;
        for (int d = 0; d < n; ++d) idx = idx * P + i[d];
        return idx;
    }

    std::array<int, kMaxDim> multi(std::size_t idx) const
    {
        std::array<int, kMaxDim> i{0, 0, 0};
        for (int d = n - 1; d >= 0; --d) {
            i[d] = static_cast<int>(idx % P);
            idx /= P;
        }
        return i;
    }

    Point coord(std::size_t idx) const
    {
        auto i = multi(idx);
        Point x{0.0, 0.0, 0.0};
        for (int d = 0; d < n; ++d) x[d] = -R + i[d] * h();
        return x;
    }

    bool interior(const std::array<int, kMaxDim>& i) const
    {
        for (int d = 0; d < n; ++d)
            if (i[d] == 0 || i[d] == P - 1) return false;
        return true;
    }

    std::size_t stride(int d) const { return static_cast<std::size_t>(ipow(P, n - 1 - d)); }

    bool operator==(const CubeGrid& o) const { return n == o.n && R == o.R && P == o.P; }

    void validate() const
    {
        if (n < 2 || n > 3) throw ParameterError("grid dimension must be 2 or 3");
        if (!(R > 0.0)) throw ParameterError("grid half-width must be positive");
        if (P < 65) throw ParameterError("grid needs P >= 65 points per axis");
    }
};

template <typename T = double>
struct GridField {
    CubeGrid grid;
    std::vector<T> values;
    // Centred differences at interior nodes, one-sided second order on the boundary.
    std::optional<std::vector<std::array<T, kMaxDim>>> gradient;

    GridField() = default;
    explicit GridField(const CubeGrid& g) : grid(g), values(g.size(), T{}) {}

    T& operator[](std::size_t i) { return values[i]; }
    const T& operator[](std::size_t i) const { return values[i]; }

    void compute_gradient()
    {
        const double h = grid.h();
        std::vector<std::array<T, kMaxDim>> g(values.size());
        for (std::size_t idx = 0; idx < values.size(); ++idx) {
            auto i = grid.multi(idx);
            for (int d = 0; d < grid.n; ++d) {
                const std::size_t s = grid.stride(d);
                if (i[d] == 0)
                    g[idx][d] = (-3.0 * values[idx] + 4.0 * values[idx + s] - values[idx + 2 * s]) / (2.0 * h);
                else if (i[d] == grid.P - 1)
                    g[idx][d] = (3.0 * values[idx] - 4.0 * values[idx - s] + values[idx - 2 * s]) / (2.0 * h);
                else
                    g[idx][d] = (values[idx + s] - values[idx - s]) / (2.0 * h);
            }
        }
        gradient = std::move(g);
    }

    double sup_abs() const
    {
        double m = 0.0;
        for (const auto& v : values) m = std::max(m, static_cast<double>(std::abs(v)));
        return m;
    }
};

template <typename T>
GridField<T> sample_grid(const CubeGrid& g, const std::function<T(const Point&)>& f)
{
    GridField<T> out(g);
    parallel_for(out.values.size(), [&](std::size_t i) { out.values[i] = f(g.coord(i)); });
    return out;
}

enum class OperatorClass { schrodinger, drift, divergence, general };

inline std::string to_string(OperatorClass c)
{
    switch (c) {
    case OperatorClass::schrodinger: return "schrodinger";
    case OperatorClass::drift: return "drift";
    case OperatorClass::divergence: return "divergence";
    case OperatorClass::general: return "general";
    }
    return "?";
}

// L u = -div(A grad u) + W . grad u + V u, with source f on the right.
struct OperatorSpec {
    OperatorClass cls = OperatorClass::schrodinger;
    int n = 2;
    CoefficientField A = CoefficientField::identity(2);
    std::function<Point(const Point&)> W;
    std::function<double(const Point&)> V;
    std::function<double(const Point&)> source;
    double lambda = 1.0, Lambda = 1.0, L_A = 0.0;

    double V_at(const Point& x) const { return V ? V(x) : 0.0; }
    Point W_at(const Point& x) const { return W ? W(x) : Point{0.0, 0.0, 0.0}; }
    double f_at(const Point& x) const { return source ? source(x) : 0.0; }

    static OperatorSpec schrodinger(std::function<double(const Point&)> V, int n)
    {
        OperatorSpec op;
        op.cls = OperatorClass::schrodinger;
        op.n = n;
        op.A = CoefficientField::identity(n);
        op.V = std::move(V);
        return op;
    }

    static OperatorSpec drift(std::function<Point(const Point&)> W, int n)
    {
        OperatorSpec op;
        op.cls = OperatorClass::drift;
        op.n = n;
        op.A = CoefficientField::identity(n);
        op.W = std::move(W);
        return op;
    }

    static OperatorSpec divergence(const CoefficientField& A, std::function<double(const Point&)> V, int n)
    {
        OperatorSpec op;
        op.cls = OperatorClass::divergence;
        op.n = n;
        op.A = A;
        op.V = std::move(V);
        op.lambda = A.lambda_lower();
        op.Lambda = A.lambda_upper();
        op.L_A = A.lipschitz_bound();
        return op;
    }

    static OperatorSpec general(const CoefficientField& A, std::function<Point(const Point&)> W,
                                std::function<double(const Point&)> V, int n)
    {
        OperatorSpec op = divergence(A, std::move(V), n);
        op.cls = OperatorClass::general;
        op.W = std::move(W);
        return op;
    }

    static OperatorSpec schrodinger(const HolderField& V)
    {
        return schrodinger([V](const Point& x) { return V.eval_unchecked(x)[0]; }, V.n);
    }

    static OperatorSpec drift(const HolderField& W)
    {
        if (!W.vector_valued) throw ParameterError("drift field must be vector valued");
        return drift([W](const Point& x) { return W.eval_unchecked(x); }, W.n);
    }
};

// Continuous operator applied to a function with known derivatives; used to
// manufacture sources.
inline double continuous_operator(const OperatorSpec& op, const Point& x, double u, const Point& grad,
                                  const Mat& hess)
{
    const int n = op.n;
    Mat a = op.A.A(x);
    double div = 0.0;
    for (int j = 0; j < n; ++j) {
        Mat da = op.A.dA(x, j);
        for (int i = 0; i < n; ++i) div += da[i][j] * grad[i] + a[i][j] * hess[i][j];
    }
    Point w = op.W_at(x);
    return -div + dot(w, grad, n) + op.V_at(x) * u;
}

// 17 directions per point at 10^3 random grid nodes; also checks symmetry.
inline void check_ellipticity(const OperatorSpec& op, const CubeGrid& g, std::uint64_t seed = 17)
{
    if (op.A.is_identity()) return;
    const int n = op.n;
    std::mt19937_64 rng(seed);
    std::vector<Point> xi;
    for (int j = 0; j < 17; ++j) {
        if (n == 2) {
            double t = kPi * j / 17.0;
            xi.push_back({std::cos(t), std::sin(t), 0.0});
        } else {
            xi.push_back(random_direction(rng, n));
        }
    }
    if (!(op.lambda > 0.0)) throw ParameterError("coefficient matrix is not elliptic (lambda <= 0)");
    for (int s = 0; s < 1000; ++s) {
        std::size_t idx = static_cast<std::size_t>(uniform01(rng) * g.size()) % g.size();
        Point x = g.coord(idx);
        Mat a = op.A.A(x);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (a[i][j] != a[j][i]) throw ParameterError("coefficient matrix not symmetric");
        for (const auto& e : xi) {
            double q = dot(e, matvec(a, e, n), n);
            if (!(q >= op.lambda * (1.0 - 1e-12)) || !(q <= op.Lambda * (1.0 + 1e-12)))
                throw ParameterError("coefficient matrix violates the ellipticity bounds");
        }
    }
}

namespace detail {

// Stencil operator on one grid level: per interior node, coefficients over a
// fixed offset list (centre first). Boundary rows are absent.
struct Level {
    CubeGrid grid;
    std::vector<std::ptrdiff_t> offsets;
    int S = 0;
    std::vector<double> coef;           // node-major, S per node
    std::vector<std::size_t> interior;  // lexicographic

    double c(std::size_t node, int k) const { return coef[node * S + k]; }

    void apply(const std::vector<double>& x, std::vector<double>& y) const
    {
        y.assign(x.size(), 0.0);
        parallel_for(interior.size(), [&](std::size_t j) {
            std::size_t i = interior[j];
            const double* cc = &coef[i * S];
            double s = 0.0;
            for (int k = 0; k < S; ++k) s += cc[k] * x[i + offsets[k]];
            y[i] = s;
        });
    }

    void gauss_seidel(std::vector<double>& x, const std::vector<double>& b, bool forward) const
    {
        const std::size_t m = interior.size();
        for (std::size_t jj = 0; jj < m; ++jj) {
            std::size_t i = interior[forward ? jj : m - 1 - jj];
            const double* cc = &coef[i * S];
            double s = b[i];
            for (int k = 1; k < S; ++k) s -= cc[k] * x[i + offsets[k]];
            x[i] = s / cc[0];
        }
    }
};

inline Level build_level(const OperatorSpec& op, const CubeGrid& g, bool upwind)
{
    const int n = g.n;
    const double h = g.h(), ih2 = 1.0 / (h * h);
    Level L;
    L.grid = g;
    std::vector<std::array<int, kMaxDim>> offs;
    offs.push_back({0, 0, 0});
    for (int d = 0; d < n; ++d)
        for (int s : {-1, 1}) {
            std::array<int, kMaxDim> o{0, 0, 0};
            o[d] = s;
            offs.push_back(o);
        }
    for (int d = 0; d < n; ++d)
        for (int e = d + 1; e < n; ++e)
            for (int s : {-1, 1})
                for (int t : {-1, 1}) {
                    std::array<int, kMaxDim> o{0, 0, 0};
                    o[d] = s;
                    o[e] = t;
                    offs.push_back(o);
                }
    L.S = static_cast<int>(offs.size());
    auto slot = [&](const std::array<int, kMaxDim>& o) {
        for (int k = 0; k < L.S; ++k)
            if (offs[k] == o) return k;
        return -1;
    };
    for (const auto& o : offs) {
        std::ptrdiff_t off = 0;
        for (int d = 0; d < n; ++d) off += o[d] * static_cast<std::ptrdiff_t>(g.stride(d));
        L.offsets.push_back(off);
    }
    const std::size_t N = g.size();
    // Coefficients sampled at every node.
    std::vector<Mat> a(N);
    std::vector<Point> w(N);
    std::vector<double> v(N);
    parallel_for(N, [&](std::size_t i) {
        Point x = g.coord(i);
        a[i] = op.A.A(x);
        w[i] = op.W_at(x);
        v[i] = op.V_at(x);
    });
    L.coef.assign(N * L.S, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        auto mi = g.multi(i);
        if (!g.interior(mi)) continue;
        L.interior.push_back(i);
    }
    parallel_for(L.interior.size(), [&](std::size_t j) {
        const std::size_t i = L.interior[j];
        double* cc = &L.coef[i * L.S];
        for (int d = 0; d < n; ++d) {
            const std::size_t s = g.stride(d);
            double ap = 0.5 * (a[i][d][d] + a[i + s][d][d]);
            double am = 0.5 * (a[i][d][d] + a[i - s][d][d]);
            std::array<int, kMaxDim> op_{0, 0, 0}, om{0, 0, 0};
            op_[d] = 1;
            om[d] = -1;
            cc[slot(op_)] -= ap * ih2;
            cc[slot(om)] -= am * ih2;
            cc[0] += (ap + am) * ih2;
        }
        for (int d = 0; d < n; ++d)
            for (int e = 0; e < n; ++e) {
                if (d == e) continue;
                const std::size_t sd = g.stride(d);
                double apd = a[i + sd][d][e] * 0.25 * ih2, amd = a[i - sd][d][e] * 0.25 * ih2;
                for (int sdir : {-1, 1})
                    for (int t : {-1, 1}) {
                        std::array<int, kMaxDim> o{0, 0, 0};
                        o[d] = sdir;
                        o[e] = t;
                        double coeff = (sdir > 0 ? apd : amd);
                        // -(1/4h^2)[a+(u_{++} - u_{+-}) - a-(u_{-+} - u_{--})]
                        cc[slot(o)] -= coeff * sdir * t;
                    }
            }
        for (int d = 0; d < n; ++d) {
            std::array<int, kMaxDim> op_{0, 0, 0}, om{0, 0, 0};
            op_[d] = 1;
            om[d] = -1;
            const double wd = w[i][d];
            if (!upwind) {
                cc[slot(op_)] += wd / (2.0 * h);
                cc[slot(om)] -= wd / (2.0 * h);
            } else if (wd > 0.0) {
                cc[0] += wd / h;
                cc[slot(om)] -= wd / h;
            } else {
                cc[slot(op_)] += wd / h;
                cc[0] -= wd / h;
            }
        }
        cc[0] += v[i];
    });
    return L;
}

}  // namespace detail

struct SolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
    double max_residual = 0.0;
    int levels = 0;
};

// Right-preconditioned BiCGSTAB with a geometric multigrid V-cycle
// (symmetric Gauss-Seidel, full weighting, multilinear prolongation,
// rediscretized coarse operators, dense LU on the coarsest level).
class DirichletSolver {
public:
    DirichletSolver(const OperatorSpec& op, const CubeGrid& g) : op_(op)
    {
        g.validate();
        if (op.n != g.n) throw GridMismatchError("operator and grid dimensions differ");
        if (op.cls == OperatorClass::divergence || op.cls == OperatorClass::general) check_ellipticity(op, g);
        const int coarse_limit = g.n == 2 ? 17 : 9;
        const int coarse_max = g.n == 2 ? 33 : 17;
        CubeGrid cur = g;
        levels_.push_back(detail::build_level(op, cur, false));
        while ((cur.P - 1) % 2 == 0 && cur.P > coarse_limit) {
            cur.P = (cur.P - 1) / 2 + 1;
            levels_.push_back(detail::build_level(op, cur, true));
        }
        if (cur.P > coarse_max)
            throw ParameterError("points per axis must have the form 2^m c + 1 with a small c");
        factor_coarsest();
    }

    const detail::Level& fine() const { return levels_.front(); }
    int level_count() const { return static_cast<int>(levels_.size()); }

    GridField<double> solve(const std::function<double(const Point&)>& boundary, double tol = 1e-8,
                            SolveStats* stats = nullptr) const
    {
        const detail::Level& L0 = levels_.front();
        const CubeGrid& g = L0.grid;
        const std::size_t N = g.size();
        GridField<double> u(g);
        std::vector<double> gb(N, 0.0), b(N, 0.0), f(N, 0.0);
        std::vector<char> is_int(N, 0);
        for (auto i : L0.interior) is_int[i] = 1;
        double sup_g = 0.0, sup_f = 0.0, sup_v = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            Point x = g.coord(i);
            if (!is_int[i]) {
                gb[i] = boundary(x);
                if (!std::isfinite(gb[i])) throw ParameterError("boundary data not finite");
                sup_g = std::max(sup_g, std::fabs(gb[i]));
            } else {
                f[i] = op_.f_at(x);
                sup_f = std::max(sup_f, std::fabs(f[i]));
                sup_v = std::max(sup_v, std::fabs(op_.V_at(x)));
            }
        }
        std::vector<double> Ag;
        L0.apply(gb, Ag);
        for (auto i : L0.interior) b[i] = f[i] - Ag[i];
        const double scale = std::max(sup_g * (1.0 + sup_v), sup_f);
        std::vector<double> e(N, 0.0);
        SolveStats st = bicgstab(e, b, tol, scale);
        st.levels = level_count();
        for (std::size_t i = 0; i < N; ++i) u.values[i] = is_int[i] ? e[i] : gb[i];
        if (stats) *stats = st;
        return u;
    }

    // max over interior nodes of |L_h u - f|
    double residual(const GridField<double>& u) const
    {
        const detail::Level& L0 = levels_.front();
        if (!(u.grid == L0.grid)) throw GridMismatchError("field grid differs from operator grid");
        std::vector<double> y;
        L0.apply(u.values, y);
        double m = 0.0;
        for (auto i : L0.interior) m = std::max(m, std::fabs(y[i] - op_.f_at(L0.grid.coord(i))));
        return m;
    }

    // L_h u at interior nodes (zero on the boundary).
    std::vector<double> apply(const GridField<double>& u) const
    {
        std::vector<double> y;
        levels_.front().apply(u.values, y);
        return y;
    }

private:
    OperatorSpec op_;
    std::vector<detail::Level> levels_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    std::vector<std::size_t> coarse_nodes_;

    void factor_coarsest()
    {
        const detail::Level& Lc = levels_.back();
        coarse_nodes_ = Lc.interior;
        const std::size_t m = coarse_nodes_.size();
        std::vector<std::ptrdiff_t> pos(Lc.grid.size(), -1);
        for (std::size_t j = 0; j < m; ++j) pos[coarse_nodes_[j]] = static_cast<std::ptrdiff_t>(j);
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
        for (std::size_t j = 0; j < m; ++j) {
            std::size_t i = coarse_nodes_[j];
            for (int k = 0; k < Lc.S; ++k) {
                std::ptrdiff_t p = pos[i + Lc.offsets[k]];
                if (p >= 0) A(j, p) += Lc.c(i, k);
            }
        }
        lu_.compute(A);
    }

    void vcycle(std::size_t l, std::vector<double>& x, const std::vector<double>& b) const
    {
        const detail::Level& L = levels_[l];
        if (l + 1 == levels_.size()) {
            Eigen::VectorXd rhs(coarse_nodes_.size());
            for (std::size_t j = 0; j < coarse_nodes_.size(); ++j) rhs(j) = b[coarse_nodes_[j]];
            Eigen::VectorXd sol = lu_.solve(rhs);
            for (std::size_t j = 0; j < coarse_nodes_.size(); ++j) x[coarse_nodes_[j]] = sol(j);
            return;
        }
        L.gauss_seidel(x, b, true);
        L.gauss_seidel(x, b, false);
        std::vector<double> Ax;
        L.apply(x, Ax);
        const detail::Level& C = levels_[l + 1];
        const CubeGrid &fg = L.grid, &cg = C.grid;
        std::vector<double> bc(cg.size(), 0.0), xc(cg.size(), 0.0);
        const int n = fg.n;
        for (auto ic : C.interior) {
            auto mi = cg.multi(ic);
            std::array<int, kMaxDim> fi{0, 0, 0};
            for (int d = 0; d < n; ++d) fi[d] = 2 * mi[d];
            double s = 0.0;
            const int span = ipow(3, n);
            for (int q = 0; q < span; ++q) {
                int rem = q;
                std::array<int, kMaxDim> o{0, 0, 0};
                double w = 1.0;
                for (int d = 0; d < n; ++d) {
                    o[d] = rem % 3 - 1;
                    rem /= 3;
                    w *= o[d] == 0 ? 0.5 : 0.25;
                }
                std::array<int, kMaxDim> p = fi;
                for (int d = 0; d < n; ++d) p[d] += o[d];
                std::size_t pi = fg.index(p);
                s += w * (b[pi] - Ax[pi]);
            }
            bc[ic] = s;
        }
        vcycle(l + 1, xc, bc);
        for (auto i : L.interior) {
            auto mi = fg.multi(i);
            double s = 0.0;
            const int span = 1 << n;
            for (int q = 0; q < span; ++q) {
                std::array<int, kMaxDim> c{0, 0, 0};
                double w = 1.0;
                bool ok = true;
                for (int d = 0; d < n; ++d) {
                    int bit = (q >> d) & 1;
                    if (mi[d] % 2 == 0) {
                        if (bit) {
                            ok = false;
                            break;
                        }
                        c[d] = mi[d] / 2;
                    } else {
                        c[d] = (mi[d] - 1) / 2 + bit;
                        w *= 0.5;
                    }
                }
                if (ok) s += w * xc[cg.index(c)];
            }
            x[i] += s;
        }
        L.gauss_seidel(x, b, true);
        L.gauss_seidel(x, b, false);
    }

    void precondition(const std::vector<double>& r, std::vector<double>& z) const
    {
        z.assign(r.size(), 0.0);
        vcycle(0, z, r);
    }

    static double dotv(const std::vector<double>& a, const std::vector<double>& b)
    {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    }

    static double maxabs(const std::vector<double>& a)
    {
        double m = 0.0;
        for (double v : a) m = std::max(m, std::fabs(v));
        return m;
    }

    // Converged when ||r||_2 <= tol ||b||_2 and max|r| <= tol * scale.
    SolveStats bicgstab(std::vector<double>& x, const std::vector<double>& b, double tol, double scale) const
    {
        const detail::Level& L0 = levels_.front();
        const std::size_t N = x.size();
        SolveStats st;
        const double bnorm = std::sqrt(dotv(b, b));
        const double abs_target = tol * scale;
        std::vector<double> r = b, rhat, p(N, 0.0), v(N, 0.0), y, z, s(N), t, Ax;
        if (bnorm == 0.0) return st;
        auto converged = [&](const std::vector<double>& res) {
            return std::sqrt(dotv(res, res)) <= tol * bnorm && maxabs(res) <= abs_target;
        };
        rhat = r;
        double rho = 1.0, alpha = 1.0, omega = 1.0;
        double checkpoint = std::sqrt(dotv(r, r));
        const int window = 500, max_iter = 20000;
        int restarts = 0;
        for (int it = 1; it <= max_iter; ++it) {
            double rho_new = dotv(rhat, r);
            if (!std::isfinite(rho_new)) throw NearSingularError("Krylov iteration produced non-finite values");
            if (std::fabs(rho_new) < 1e-300 || std::fabs(omega) < 1e-300) {
                if (++restarts > 20) throw NearSingularError("repeated Krylov breakdown");
                L0.apply(x, Ax);
                for (std::size_t i = 0; i < N; ++i) r[i] = b[i] - Ax[i];
                rhat = r;
                std::fill(p.begin(), p.end(), 0.0);
                std::fill(v.begin(), v.end(), 0.0);
                rho = alpha = omega = 1.0;
                continue;
            }
            double beta = (rho_new / rho) * (alpha / omega);
            for (std::size_t i = 0; i < N; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
            precondition(p, y);
            L0.apply(y, v);
            alpha = rho_new / dotv(rhat, v);
            for (std::size_t i = 0; i < N; ++i) s[i] = r[i] - alpha * v[i];
            precondition(s, z);
            L0.apply(z, t);
            double tt = dotv(t, t);
            omega = tt > 0.0 ? dotv(t, s) / tt : 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                x[i] += alpha * y[i] + omega * z[i];
                r[i] = s[i] - omega * t[i];
            }
            rho = rho_new;
            st.iterations = it;
            if (converged(r)) {
                L0.apply(x, Ax);
                for (auto i : L0.interior) r[i] = b[i] - Ax[i];
                if (converged(r)) {
                    st.relative_residual = std::sqrt(dotv(r, r)) / bnorm;
                    st.max_residual = maxabs(r);
                    return st;
                }
            }
            if (it % window == 0) {
                double now = std::sqrt(dotv(r, r));
                if (!(now <= 0.1 * checkpoint))
                    throw NearSingularError("no tenfold residual drop over " + std::to_string(window) +
                                            " iterations");
                checkpoint = now;
            }
        }
        throw NearSingularError("iteration limit reached");
    }
};

inline GridField<double> solve_dirichlet(const OperatorSpec& op, const std::function<double(const Point&)>& boundary,
                                         const CubeGrid& g, SolveStats* stats = nullptr)
{
    DirichletSolver s(op, g);
    return s.solve(boundary, 1e-8, stats);
}

inline double residual(const GridField<double>& u, const OperatorSpec& op)
{
    if (u.grid.n != op.n) throw GridMismatchError("field and operator dimensions differ");
    DirichletSolver s(op, u.grid);
    return s.residual(u);
}

// Oracle family with prescribed vanishing order k for -Delta u + V u = 0.
inline ClosedFormSolution radial_solve(std::function<double(double)> V_radial, int k, int n, double R)
{
    double sup = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        double v = V_radial(R * i / 1000.0);
        if (!std::isfinite(v)) throw ParameterError("radial potential unbounded on [0, R]");
        sup = std::max(sup, std::fabs(v));
    }
    return make_radial(std::make_shared<RadialOde>(std::move(V_radial), k, n, R, sup));
}

// .grid text format: "n R P" header, then one value per line in row-major
// order with 17 significant digits; complex values are written "re im".
template <typename T>
std::string grid_to_string(const GridField<T>& u)
{
    std::string s = std::to_string(u.grid.n) + " " + fmt17(u.grid.R) + " " + std::to_string(u.grid.P) + "\n";
    for (const auto& v : u.values) {
        if constexpr (std::is_same_v<T, std::complex<double>>)
            s += fmt17(v.real()) + " " + fmt17(v.imag()) + "\n";
        else
            s += fmt17(v) + "\n";
    }
    return s;
}

template <typename T = double>
GridField<T> grid_from_string(const std::string& text)
{
    std::istringstream in(text);
    CubeGrid g;
    if (!(in >> g.n >> g.R >> g.P)) throw UsageError("malformed .grid header");
    if (g.n < 1 || g.n > kMaxDim || g.P < 2) throw UsageError("invalid .grid header");
    GridField<T> u(g);
    for (auto& v : u.values) {
        if constexpr (std::is_same_v<T, std::complex<double>>) {
            double re, im;
            if (!(in >> re >> im)) throw UsageError("truncated .grid data");
            v = {re, im};
        } else {
            if (!(in >> v)) throw UsageError("truncated .grid data");
        }
    }
    return u;
}

template <typename T>
void write_grid(const GridField<T>& u, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write " + path);
    out << grid_to_string(u);
}

template <typename T = double>
GridField<T> read_grid(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return grid_from_string<T>(ss.str());
}

}  // namespace freqlab

#endif  // FREQLAB_SOLVE_HPP
