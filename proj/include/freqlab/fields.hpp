#ifndef FREQLAB_FIELDS_HPP
#define FREQLAB_FIELDS_HPP

#include <complex>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core.hpp"
#include "kv.hpp"
#include "special.hpp"

namespace freqlab {

enum class FieldKind { cusp, cosine_pack, weierstrass, constant, custom_grid };

inline std::string to_string(FieldKind k)
{
    switch (k) {
    case FieldKind::cusp: return "cusp";
    case FieldKind::cosine_pack: return "cosine-pack";
    case FieldKind::weierstrass: return "weierstrass";
    case FieldKind::constant: return "constant";
    case FieldKind::custom_grid: return "custom-grid";
    }
    return "?";
}

inline FieldKind field_kind_from(const std::string& s)
{
    if (s == "cusp") return FieldKind::cusp;
    if (s == "cosine-pack") return FieldKind::cosine_pack;
    if (s == "weierstrass") return FieldKind::weierstrass;
    if (s == "constant") return FieldKind::constant;
    if (s == "custom-grid") return FieldKind::custom_grid;
    throw UsageError("unknown field kind '" + s + "'");
}

struct CosineMode {
    double amplitude = 0.0;
    Point wave{0.0, 0.0, 0.0};
    double phase = 0.0;
};

// Potential or drift with certified Hoelder data. Scalar fields use
// component 0 of eval(); vector fields return n components.
class HolderField {
public:
    int n = 2;
    FieldKind kind = FieldKind::constant;
    double beta = 1.0;
    double M = 0.0;
    double M0 = 0.0;
    double R = 1.0;
    bool vector_valued = false;

    // cusp: offset + direction * amplitude * |x - center|^beta
    double amplitude = 0.0;
    Point center{0.0, 0.0, 0.0};
    Point offset{0.0, 0.0, 0.0};
    Point direction{1.0, 0.0, 0.0};
    // cosine-pack
    std::vector<CosineMode> modes;
    // weierstrass: amplitude * sum_{j<terms} base^{-j beta} cos(base^j omega.x)
    double base = 2.0;
    int terms = 0;
    Point omega{1.0, 0.0, 0.0};
    // custom-grid: P^n samples over [-R, R]^n, row-major, multilinear interpolation
    int grid_points = 0;
    std::vector<double> grid_values;

    int components() const { return vector_valued ? n : 1; }

    bool inside(const Point& x) const
    {
        const double tol = 1e-12 * R;
        for (int i = 0; i < n; ++i)
            if (!(std::fabs(x[i]) <= R + tol)) return false;
        return true;
    }

    Point eval(const Point& x) const
    {
        if (!inside(x)) throw DomainError("point outside [-R,R]^n");
        return eval_unchecked(x);
    }

    double value(const Point& x) const { return eval(x)[0]; }

    Point eval_unchecked(const Point& x) const
    {
        Point out{0.0, 0.0, 0.0};
        switch (kind) {
        case FieldKind::constant:
            for (int c = 0; c < components(); ++c) out[c] = offset[c];
            break;
        case FieldKind::cusp: {
            double s = amplitude * std::pow(norm(sub(x, center), n), beta);
            for (int c = 0; c < components(); ++c)
                out[c] = offset[c] + (vector_valued ? direction[c] : 1.0) * s;
            break;
        }
        case FieldKind::cosine_pack: {
            double s = 0.0;
            for (const auto& m : modes) s += m.amplitude * std::cos(dot(m.wave, x, n) + m.phase);
            for (int c = 0; c < components(); ++c)
                out[c] = offset[c] + (vector_valued ? direction[c] : 1.0) * s;
            break;
        }
        case FieldKind::weierstrass: {
            double s = 0.0, f = 1.0;
            const double arg = dot(omega, x, n);
            for (int j = 0; j < terms; ++j) {
                s += std::pow(f, -beta) * std::cos(f * arg);
                f *= base;
            }
            s *= amplitude;
            for (int c = 0; c < components(); ++c)
                out[c] = offset[c] + (vector_valued ? direction[c] : 1.0) * s;
            break;
        }
        case FieldKind::custom_grid:
            out[0] = interpolate(x);
            break;
        }
        return out;
    }

    // Points where the seminorm sup is approached; used to anchor sampling.
    std::vector<Point> feature_points() const
    {
        if (kind == FieldKind::cusp) return {center};
        return {};
    }

    std::string to_block() const
    {
        KvBlock kv;
        auto pt = [&](const std::string& key, const Point& p) {
            std::vector<std::string> v;
            for (int i = 0; i < n; ++i) v.push_back(fmt17(p[i]));
            kv.set_list(key, v);
        };
        kv.set("kind", to_string(kind));
        kv.set("n", std::to_string(n));
        kv.set("beta", fmt17(beta));
        kv.set("R", fmt17(R));
        kv.set("M", fmt17(M));
        kv.set("M0", fmt17(M0));
        kv.set("vector", vector_valued ? "1" : "0");
        pt("offset", offset);
        if (vector_valued) pt("direction", direction);
        switch (kind) {
        case FieldKind::cusp:
            kv.set("amplitude", fmt17(amplitude));
            pt("center", center);
            break;
        case FieldKind::cosine_pack:
            for (const auto& m : modes) {
                std::string s = fmt17(m.amplitude) + " " + fmt17(m.phase);
                for (int i = 0; i < n; ++i) s += " " + fmt17(m.wave[i]);
                kv.add("mode", s);
            }
            break;
        case FieldKind::weierstrass:
            kv.set("amplitude", fmt17(amplitude));
            kv.set("base", fmt17(base));
            kv.set("terms", std::to_string(terms));
            pt("omega", omega);
            break;
        case FieldKind::custom_grid: {
            kv.set("grid_points", std::to_string(grid_points));
            std::vector<std::string> v;
            for (double g : grid_values) v.push_back(fmt17(g));
            kv.set_list("value", v);
            break;
        }
        case FieldKind::constant: break;
        }
        return kv.emit();
    }

    static HolderField from_block(const std::string& text);

private:
    double interpolate(const Point& x) const
    {
        const int P = grid_points;
        const double h = 2.0 * R / (P - 1);
        std::array<int, kMaxDim> i0{};
        std::array<double, kMaxDim> t{};
        for (int d = 0; d < n; ++d) {
            double u = (x[d] + R) / h;
            int i = std::clamp(static_cast<int>(std::floor(u)), 0, P - 2);
            i0[d] = i;
            t[d] = u - i;
        }
        double s = 0.0;
        for (int corner = 0; corner < (1 << n); ++corner) {
            double w = 1.0;
            std::size_t idx = 0;
            for (int d = 0; d < n; ++d) {
                int bit = (corner >> d) & 1;
                w *= bit ? t[d] : 1.0 - t[d];
                idx = idx * P + (i0[d] + bit);
            }
            s += w * grid_values[idx];
        }
        return s;
    }
};

inline void check_beta(double beta)
{
    if (!(beta > 0.0 && beta <= 1.0)) throw ParameterError("beta must lie in (0,1]");
}

inline void check_dim(int n)
{
    if (n < 1 || n > kMaxDim) throw ParameterError("dimension must be 1..3");
}

inline HolderField make_constant(double c, int n, double R)
{
    check_dim(n);
    HolderField f;
    f.n = n;
    f.kind = FieldKind::constant;
    f.beta = 1.0;
    f.R = R;
    f.offset = {c, 0.0, 0.0};
    f.M = std::fabs(c);
    f.M0 = 0.0;
    return f;
}

inline HolderField make_constant_vector(const Point& c, int n, double R)
{
    HolderField f = make_constant(0.0, n, R);
    f.vector_valued = true;
    f.offset = c;
    f.M = norm(c, n);
    return f;
}

// V(x) = M_amp |x - center|^beta, exact seminorm M_amp on R^n.
inline HolderField make_cusp(double M_amp, double beta, const Point& center, double R, int n)
{
    check_beta(beta);
    check_dim(n);
    if (!(M_amp > 0.0)) throw ParameterError("cusp amplitude must be positive");
    if (!(R > 0.0)) throw ParameterError("R must be positive");
    HolderField f;
    f.n = n;
    f.kind = FieldKind::cusp;
    f.beta = beta;
    f.R = R;
    f.amplitude = M_amp;
    f.center = center;
    f.M0 = M_amp;
    f.M = M_amp * std::pow(R + norm(center, n), beta);
    return f;
}

// W(x) = offset + direction * M_amp |x - center|^beta with a unit direction.
inline HolderField make_cusp_vector(double M_amp, double beta, const Point& center, const Point& offset,
                                    const Point& direction, double R, int n)
{
    HolderField f = make_cusp(M_amp, beta, center, R, n);
    double dn = norm(direction, n);
    if (!(dn > 0.0)) throw ParameterError("drift direction must be nonzero");
    f.vector_valued = true;
    f.direction = scale(direction, 1.0 / dn);
    f.offset = offset;
    f.M = norm(offset, n) + f.M;
    return f;
}

// |cos a - cos b| <= min(2, |a-b|) <= 2^{1-beta} |a-b|^beta
inline HolderField make_cosine_pack(const std::vector<CosineMode>& modes, double beta, double R, int n)
{
    check_beta(beta);
    check_dim(n);
    HolderField f;
    f.n = n;
    f.kind = FieldKind::cosine_pack;
    f.beta = beta;
    f.R = R;
    f.modes = modes;
    for (const auto& m : modes) {
        f.M += std::fabs(m.amplitude);
        f.M0 += std::fabs(m.amplitude) * std::pow(2.0, 1.0 - beta) * std::pow(norm(m.wave, n), beta);
    }
    return f;
}

// Truncated Weierstrass sum with |omega| = 1. Splitting the series at
// base^j |x-y| = 1 gives the seminorm bound used for M0.
inline HolderField make_weierstrass(double amplitude, double base, int terms, double beta, const Point& omega,
                                    double R, int n)
{
    check_beta(beta);
    check_dim(n);
    if (!(base > 1.0) || terms < 1) throw ParameterError("weierstrass needs base > 1 and terms >= 1");
    HolderField f;
    f.n = n;
    f.kind = FieldKind::weierstrass;
    f.beta = beta;
    f.R = R;
    f.amplitude = amplitude;
    f.base = base;
    f.terms = terms;
    double on = norm(omega, n);
    if (!(on > 0.0)) throw ParameterError("omega must be nonzero");
    f.omega = scale(omega, 1.0 / on);
    double sup = 0.0;
    for (int j = 0; j < terms; ++j) sup += std::pow(base, -j * beta);
    f.M = std::fabs(amplitude) * sup;
    double per_term = std::fabs(amplitude) * terms * std::pow(2.0, 1.0 - beta);
    if (beta < 1.0) {
        double split = std::fabs(amplitude) *
                       (1.0 / (1.0 - std::pow(base, beta - 1.0)) + 2.0 / (1.0 - std::pow(base, -beta)));
        f.M0 = std::min(split, per_term);
    } else {
        f.M0 = std::fabs(amplitude) * terms;
    }
    return f;
}

// Samples on the P^n grid over [-R,R]^n. The multilinear interpolant has
// [V]_beta <= (2M)^{1-beta} Lip^beta.
inline HolderField make_custom_grid(const std::vector<double>& values, int P, double beta, double R, int n)
{
    check_beta(beta);
    check_dim(n);
    if (P < 2 || values.size() != static_cast<std::size_t>(ipow(P, n)))
        throw ParameterError("custom-grid value count must be P^n");
    HolderField f;
    f.n = n;
    f.kind = FieldKind::custom_grid;
    f.beta = beta;
    f.R = R;
    f.grid_points = P;
    f.grid_values = values;
    const double h = 2.0 * R / (P - 1);
    double sup = 0.0, lip2 = 0.0;
    for (double v : values) sup = std::max(sup, std::fabs(v));
    std::vector<double> dmax(n, 0.0);
    std::size_t total = values.size();
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rem = idx, stride = 1;
        std::array<int, kMaxDim> c{};
        for (int d = n - 1; d >= 0; --d) {
            c[d] = static_cast<int>(rem % P);
            rem /= P;
        }
        for (int d = n - 1; d >= 0; --d) {
            if (c[d] + 1 < P) dmax[d] = std::max(dmax[d], std::fabs(values[idx + stride] - values[idx]) / h);
            stride *= P;
        }
    }
    for (double d : dmax) lip2 += d * d;
    f.M = sup;
    f.M0 = std::pow(2.0 * sup, 1.0 - beta) * std::pow(std::sqrt(lip2), beta);
    return f;
}

inline HolderField HolderField::from_block(const std::string& text)
{
    KvBlock kv = KvBlock::parse(text);
    int n = kv.integer("n", 2);
    check_dim(n);
    auto pt = [&](const std::string& key, Point fallback) {
        if (!kv.has(key)) return fallback;
        auto v = kv.nums(key);
        if (static_cast<int>(v.size()) != n) throw UsageError("key '" + key + "' needs n components");
        Point p{0.0, 0.0, 0.0};
        for (int i = 0; i < n; ++i) p[i] = v[i];
        return p;
    };
    FieldKind kind = field_kind_from(kv.str("kind"));
    double R = kv.num("R", 1.0);
    double beta = kv.num("beta", 1.0);
    bool vec = kv.integer("vector", 0) != 0;
    Point offset = pt("offset", {0.0, 0.0, 0.0});
    Point direction = pt("direction", {1.0, 0.0, 0.0});
    HolderField f;
    switch (kind) {
    case FieldKind::constant:
        f = vec ? make_constant_vector(offset, n, R) : make_constant(offset[0], n, R);
        break;
    case FieldKind::cusp:
        if (vec)
            f = make_cusp_vector(kv.num("amplitude"), beta, pt("center", {0, 0, 0}), offset, direction, R, n);
        else {
            f = make_cusp(kv.num("amplitude"), beta, pt("center", {0, 0, 0}), R, n);
            f.offset = offset;
            f.M += std::fabs(offset[0]);
        }
        break;
    case FieldKind::cosine_pack: {
        std::vector<CosineMode> modes;
        for (const auto& s : kv.list("mode")) {
            std::istringstream in(s);
            CosineMode m;
            in >> m.amplitude >> m.phase;
            for (int i = 0; i < n; ++i) in >> m.wave[i];
            if (!in) throw UsageError("malformed cosine mode '" + s + "'");
            modes.push_back(m);
        }
        f = make_cosine_pack(modes, beta, R, n);
        break;
    }
    case FieldKind::weierstrass:
        f = make_weierstrass(kv.num("amplitude"), kv.num("base", 2.0), kv.integer("terms", 8), beta,
                             pt("omega", {1, 0, 0}), R, n);
        break;
    case FieldKind::custom_grid:
        f = make_custom_grid(kv.nums("value"), kv.integer("grid_points", 0), beta, R, n);
        break;
    }
    if (vec && kind != FieldKind::constant && kind != FieldKind::cusp) {
        f.vector_valued = true;
        f.direction = scale(direction, 1.0 / norm(direction, n));
        f.offset = offset;
        f.M += norm(offset, n);
    } else if (!vec && kind != FieldKind::constant && kind != FieldKind::cusp && offset[0] != 0.0) {
        f.offset = offset;
        f.M += std::fabs(offset[0]);
    }
    return f;
}

// Deterministic uniform in [0,1) from the raw 64-bit stream.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline Point random_direction(std::mt19937_64& rng, int n)
{
    for (;;) {
        Point d{0.0, 0.0, 0.0};
        for (int i = 0; i < n; ++i) d[i] = 2.0 * uniform01(rng) - 1.0;
        double r = norm(d, n);
        if (r > 1e-3 && r <= 1.0) return scale(d, 1.0 / r);
    }
}

inline Point random_in_ball(std::mt19937_64& rng, int n, double R)
{
    for (;;) {
        Point d{0.0, 0.0, 0.0};
        for (int i = 0; i < n; ++i) d[i] = R * (2.0 * uniform01(rng) - 1.0);
        if (norm(d, n) <= R) return d;
    }
}

// Sampled max of |V(x)-V(y)| / |x-y|^beta over pairs in B_R. Half of the
// pairs are anchored at feature points; separations are log-uniform.
inline double holder_seminorm_estimate(const HolderField& f, double beta, int pair_count, std::uint64_t seed)
{
    if (pair_count < 1000) throw ParameterError("pair_count must be >= 1000");
    std::mt19937_64 rng(seed);
    const auto features = f.feature_points();
    const int n = f.n;
    const double lo = std::log(1e-6 * f.R), hi = std::log(2.0 * f.R);
    double best = 0.0;
    int done = 0;
    while (done < pair_count) {
        Point x;
        if (!features.empty() && (done % 2 == 0)) {
            x = features[static_cast<std::size_t>(uniform01(rng) * features.size())];
            if (norm(x, n) > f.R) x = random_in_ball(rng, n, f.R);
        } else {
            x = random_in_ball(rng, n, f.R);
        }
        double d = std::exp(lo + (hi - lo) * uniform01(rng));
        Point y = add(x, scale(random_direction(rng, n), d));
        if (norm(y, n) > f.R) continue;
        ++done;
        Point a = f.eval_unchecked(x), b = f.eval_unchecked(y);
        double diff = norm(sub(a, b), f.components());
        double sep = norm(sub(x, y), n);
        if (sep > 0.0) best = std::max(best, diff / std::pow(sep, beta));
    }
    return best;
}

// Ascending eigenvalues of the leading n x n block of a symmetric matrix.
inline std::vector<double> sym_eigenvalues(const Mat& A, int n)
{
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = A[i][j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = es.eigenvalues()(i);
    return ev;
}

// Matrix coefficient field for the divergence class.
// sinusoid: a_ij = delta_ij + gamma sin(kappa (x_i + x_j)), so A(0) = I.
class CoefficientField {
public:
    enum class Kind { identity, constant, sinusoid };
    int n = 2;
    Kind kind = Kind::identity;
    Mat constant_matrix = identity_mat(kMaxDim);
    double gamma = 0.0;
    double kappa = 1.0;

    static CoefficientField identity(int n)
    {
        CoefficientField c;
        c.n = n;
        return c;
    }

    static CoefficientField constant(const Mat& A, int n)
    {
        CoefficientField c;
        c.n = n;
        c.kind = Kind::constant;
        c.constant_matrix = A;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (A[i][j] != A[j][i]) throw ParameterError("coefficient matrix not symmetric");
        return c;
    }

    static CoefficientField sinusoid(double gamma, double kappa, int n)
    {
        if (!(gamma >= 0.0) || gamma * n >= 1.0) throw ParameterError("sinusoid needs 0 <= gamma < 1/n");
        CoefficientField c;
        c.n = n;
        c.kind = Kind::sinusoid;
        c.gamma = gamma;
        c.kappa = kappa;
        return c;
    }

    bool is_identity() const { return kind == Kind::identity; }

    Mat A(const Point& x) const
    {
        switch (kind) {
        case Kind::identity: return identity_mat(n);
        case Kind::constant: return constant_matrix;
        case Kind::sinusoid: {
            Mat a{};
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    a[i][j] = (i == j ? 1.0 : 0.0) + gamma * std::sin(kappa * (x[i] + x[j]));
            return a;
        }
        }
        return identity_mat(n);
    }

    // d/dx_k of A
    Mat dA(const Point& x, int k) const
    {
        Mat d{};
        if (kind != Kind::sinusoid) return d;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double m = (i == k ? 1.0 : 0.0) + (j == k ? 1.0 : 0.0);
                if (m != 0.0) d[i][j] = gamma * kappa * m * std::cos(kappa * (x[i] + x[j]));
            }
        return d;
    }

    // Exact spectrum for constant matrices, Gershgorin bounds for the sinusoid.
    double lambda_lower() const
    {
        if (kind == Kind::sinusoid) return 1.0 - gamma * n;
        if (kind == Kind::identity) return 1.0;
        return sym_eigenvalues(constant_matrix, n).front();
    }

    double lambda_upper() const
    {
        if (kind == Kind::sinusoid) return 1.0 + gamma * n;
        if (kind == Kind::identity) return 1.0;
        return sym_eigenvalues(constant_matrix, n).back();
    }

    // sup of the Frobenius norm of (d_k a_ij)_{ijk}
    double lipschitz_bound() const
    {
        if (kind != Kind::sinusoid) return 0.0;
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s += (i == j) ? 4.0 : 2.0;
        return gamma * kappa * std::sqrt(s);
    }
};

// phi(s) from phi'' + ((2k+n-1)/s) phi' = V(s) phi, phi(0) = 1, so that
// w = s^k phi solves the radial equation of the degree-k mode.
class RadialOde {
public:
    RadialOde(std::function<double(double)> V, int k, int n, double R, double V_sup)
        : V_(std::move(V)), k_(k), n_(n), R_(R)
    {
        if (k < 0) throw ParameterError("k must be >= 0");
        if (!(R > 0.0)) throw ParameterError("R must be positive");
        if (!std::isfinite(V_sup)) throw ParameterError("radial potential unbounded");
        double h = 1e-4 * R;
        if (V_sup > 0.0) h = std::min(h, 0.02 / std::sqrt(V_sup));
        int steps = static_cast<int>(std::ceil(R / h));
        h_ = R / steps;
        const double c = 2.0 * k + n - 1.0;
        a_ = V_(0.0) / (2.0 * (2.0 * k + n));
        for (int i = 0; i <= steps; ++i) {
            double s = i * h_;
            if (!std::isfinite(V_(s))) throw ParameterError("radial potential not finite");
        }
        s0_ = h_;
        phi_.resize(steps + 1);
        dphi_.resize(steps + 1);
        phi_[0] = 1.0;
        dphi_[0] = 0.0;
        phi_[1] = 1.0 + a_ * s0_ * s0_;
        dphi_[1] = 2.0 * a_ * s0_;
        auto rhs = [&](double s, double p, double q, double& dp, double& dq) {
            dp = q;
            dq = V_(s) * p - (c / s) * q;
        };
        for (int i = 1; i < steps; ++i) {
            double s = i * h_, p = phi_[i], q = dphi_[i];
            double k1p, k1q, k2p, k2q, k3p, k3q, k4p, k4q;
            rhs(s, p, q, k1p, k1q);
            rhs(s + 0.5 * h_, p + 0.5 * h_ * k1p, q + 0.5 * h_ * k1q, k2p, k2q);
            rhs(s + 0.5 * h_, p + 0.5 * h_ * k2p, q + 0.5 * h_ * k2q, k3p, k3q);
            rhs(s + h_, p + h_ * k3p, q + h_ * k3q, k4p, k4q);
            phi_[i + 1] = p + h_ / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
            dphi_[i + 1] = q + h_ / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q);
        }
    }

    int k() const { return k_; }
    int n() const { return n_; }
    double R() const { return R_; }
    double potential(double s) const { return V_(s); }

    // (phi, phi'/s); the series is used inside the first step.
    std::pair<double, double> eval(double s) const
    {
        if (s > R_ * (1.0 + 1e-12)) throw DomainError("radius beyond radial solve");
        if (s < s0_) return {1.0 + a_ * s * s, 2.0 * a_};
        double u = s / h_;
        std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(u), phi_.size() - 2);
        double t = u - i;
        double p0 = phi_[i], p1 = phi_[i + 1], m0 = dphi_[i] * h_, m1 = dphi_[i + 1] * h_;
        double t2 = t * t, t3 = t2 * t;
        double phi = (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * m1;
        double dphi = ((6 * t2 - 6 * t) * p0 + (3 * t2 - 4 * t + 1) * m0 + (-6 * t2 + 6 * t) * p1 +
                       (3 * t2 - 2 * t) * m1) /
                      h_;
        return {phi, dphi / s};
    }

    double w(double s) const { return std::pow(s, k_) * eval(s).first; }

private:
    std::function<double(double)> V_;
    int k_, n_;
    double R_, h_ = 0.0, s0_ = 0.0, a_ = 0.0;
    std::vector<double> phi_, dphi_;
};

enum class Family { harmonic, bessel, radial };

// u = Phi(|x|) Re((x1 + i x2)^k) with Phi from the family.
class ClosedFormSolution {
public:
    Family family = Family::harmonic;
    int n = 2;
    int k = 0;
    double lambda = 0.0;
    std::shared_ptr<const RadialOde> radial;

    std::string describe() const
    {
        switch (family) {
        case Family::harmonic: return "harmonic-polynomial(k=" + std::to_string(k) + ")";
        case Family::bessel: return "bessel-mode(k=" + std::to_string(k) + ",lambda=" + fmt17(lambda) + ")";
        case Family::radial: return "radial-ode(k=" + std::to_string(k) + ")";
        }
        return "?";
    }

    double value(const Point& x) const
    {
        auto [phi, dphi_s] = profile(x);
        (void)dphi_s;
        return phi * angular(x).first;
    }

    Point gradient(const Point& x) const
    {
        auto [phi, dphi_s] = profile(x);
        auto [p, gp] = angular(x);
        Point g{0.0, 0.0, 0.0};
        for (int i = 0; i < n; ++i) g[i] = phi * gp[i] + p * dphi_s * x[i];
        return g;
    }

    // Potential V with Delta u = V u.
    double potential(const Point& x) const
    {
        switch (family) {
        case Family::harmonic: return 0.0;
        case Family::bessel: return -lambda;
        case Family::radial: return radial->potential(norm(x, n));
        }
        return 0.0;
    }

    double laplacian(const Point& x) const { return potential(x) * value(x); }

private:
    std::pair<double, double> profile(const Point& x) const
    {
        switch (family) {
        case Family::harmonic: return {1.0, 0.0};
        case Family::bessel: {
            const double nu = k + 0.5 * n - 1.0;
            const double kap = std::sqrt(lambda);
            const double s = norm(x, n);
            const double c = std::pow(2.0, nu) * std::tgamma(nu + 1.0);
            double phi = c * bessel_q(nu, kap * s);
            // (1/s) d/ds q_nu(kap s) = -kap^2 q_{nu+1}(kap s)
            double dphi_s = -c * kap * kap * bessel_q(nu + 1.0, kap * s);
            return {phi, dphi_s};
        }
        case Family::radial: return radial->eval(norm(x, n));
        }
        return {1.0, 0.0};
    }

    std::pair<double, Point> angular(const Point& x) const
    {
        Point g{0.0, 0.0, 0.0};
        if (k == 0) return {1.0, g};
        std::complex<double> z(x[0], x[1]);
        std::complex<double> zk1 = 1.0;
        for (int i = 0; i < k - 1; ++i) zk1 *= z;
        std::complex<double> zk = zk1 * z;
        std::complex<double> d = static_cast<double>(k) * zk1;
        g[0] = d.real();
        g[1] = -d.imag();
        return {zk.real(), g};
    }
};

inline ClosedFormSolution make_harmonic(int k, int n)
{
    if (n < 2 || n > 3) throw ParameterError("harmonic-polynomial needs n in {2,3}");
    if (k < 0) throw ParameterError("k must be >= 0");
    ClosedFormSolution s;
    s.family = Family::harmonic;
    s.n = n;
    s.k = k;
    return s;
}

inline ClosedFormSolution make_bessel(int k, double lambda, int n)
{
    if (n < 2 || n > 3) throw ParameterError("bessel-mode needs n in {2,3}");
    if (k < 0 || !(lambda >= 0.0)) throw ParameterError("bessel-mode needs k >= 0, lambda >= 0");
    ClosedFormSolution s;
    s.family = Family::bessel;
    s.n = n;
    s.k = k;
    s.lambda = lambda;
    return s;
}

inline ClosedFormSolution make_radial(std::shared_ptr<const RadialOde> ode)
{
    if (!ode) throw ParameterError("radial-ode needs a profile");
    if (ode->n() < 2 || ode->n() > 3) throw ParameterError("radial-ode needs n in {2,3}");
    ClosedFormSolution s;
    s.family = Family::radial;
    s.n = ode->n();
    s.k = ode->k();
    s.radial = std::move(ode);
    return s;
}

}  // namespace freqlab

#endif  // FREQLAB_FIELDS_HPP
