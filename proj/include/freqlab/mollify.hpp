#ifndef FREQLAB_MOLLIFY_HPP
#define FREQLAB_MOLLIFY_HPP

#include <limits>
#include <string>
#include <vector>

#include "core.hpp"
#include "fields.hpp"

namespace freqlab {

// Canonical bump exp(-1/(1-|z|^2)) on the unit ball, normalized so that the
// module's own midpoint rule integrates it to exactly one. Nodes are stored
// as antipodal pairs; summing each pair before accumulation makes constants
// and linear fields exact.
class MollifierKernel {
public:
    struct PairNode {
        Point z;
        double rho;   // weight * rho(z)
        Point drho;   // weight * grad rho(z)
        Mat d2rho;    // weight * hess rho(z)
    };

    explicit MollifierKernel(int n, int nodes_per_axis = 48) : n_(n), per_axis_(nodes_per_axis)
    {
        check_dim(n);
        if (nodes_per_axis < 32 || nodes_per_axis % 2) throw ParameterError("need an even count >= 32 per axis");
        const double h = 2.0 / per_axis_;
        const double w = std::pow(h, n);
        const int total = ipow(per_axis_, n);
        double mass = 0.0;
        for (int j = 0; j < total; ++j) {
            int mirror = total - 1 - j;
            if (j > mirror) break;
            Point z{0.0, 0.0, 0.0};
            int rem = j;
            for (int d = n - 1; d >= 0; --d) {
                z[d] = -1.0 + (rem % per_axis_ + 0.5) * h;
                rem /= per_axis_;
            }
            double q = norm2(z, n);
            if (q >= 1.0) continue;
            PairNode p{};
            p.z = z;
            const double om = 1.0 - q;
            const double r = std::exp(-1.0 / om);
            const double g1 = -1.0 / (om * om);      // d/dq of -1/(1-q)
            const double g2 = -2.0 / (om * om * om);  // d2/dq2
            p.rho = w * r;
            for (int i = 0; i < n; ++i) {
                p.drho[i] = w * r * 2.0 * g1 * z[i];
                for (int k = 0; k < n; ++k)
                    p.d2rho[i][k] = w * r * ((4.0 * g1 * g1 + 4.0 * g2) * z[i] * z[k] + (i == k ? 2.0 * g1 : 0.0));
            }
            mass += 2.0 * p.rho;
            nodes_.push_back(p);
        }
        // Moment matching: derivative weights are rescaled so that linear
        // (gradient) and quadratic (hessian) fields are reproduced exactly
        // under the same rule, as the mass normalization does for constants.
        double g1 = 0.0, g2d = 0.0, g2o = 0.0;
        for (const auto& p : nodes_) {
            g1 -= 2.0 * p.drho[0] * p.z[0];
            g2d += p.d2rho[0][0] * p.z[0] * p.z[0];
            if (n > 1) g2o += 2.0 * p.d2rho[0][1] * p.z[0] * p.z[1];
        }
        for (auto& p : nodes_) {
            p.rho /= mass;
            p.drho = scale(p.drho, 1.0 / g1);
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k) p.d2rho[i][k] /= (i == k ? g2d : g2o);
        }
        raw_mass_ = mass;
    }

    int n() const { return n_; }
    int nodes_per_axis() const { return per_axis_; }
    const std::vector<PairNode>& pairs() const { return nodes_; }
    // Integral of the unnormalized bump under the midpoint rule.
    double raw_mass() const { return raw_mass_; }

    double total_mass() const
    {
        double s = 0.0;
        for (const auto& p : nodes_) s += 2.0 * p.rho;
        return s;
    }

    // Normalized rho_eps(x) for a point x (zero outside B_eps).
    double density(const Point& x, double eps) const
    {
        Point z = scale(x, 1.0 / eps);
        double q = norm2(z, n_);
        if (q >= 1.0) return 0.0;
        return std::exp(-1.0 / (1.0 - q)) / (raw_mass_ * std::pow(eps, n_));
    }

    // sum_i int |d_i rho| |z|^beta (order 1) or sum_ik int |d_ik rho| |z|^beta (order 2).
    double derivative_moment(double beta, int order) const
    {
        double s = 0.0;
        for (const auto& p : nodes_) {
            double zb = std::pow(norm(p.z, n_), beta);
            for (int i = 0; i < n_; ++i) {
                if (order == 1) s += 2.0 * std::fabs(p.drho[i]) * zb;
                else
                    for (int k = 0; k < n_; ++k) s += 2.0 * std::fabs(p.d2rho[i][k]) * zb;
            }
        }
        return s;
    }

private:
    int n_, per_axis_;
    std::vector<PairNode> nodes_;
    double raw_mass_ = 1.0;
};

struct MollifiedSample {
    Point value{};                  // V_eps components
    Point defect{};                 // V_eps - V components
    std::array<Point, kMaxDim> grad{};  // grad[c][i] = d_i (V_eps)_c
    std::array<Mat, kMaxDim> hess{};    // hess[c][i][k]
};

// Pointwise V_eps and its derivatives from kernel-derivative convolutions in
// the subtracted form int eps^{-1} grad rho(z) (V(x - eps z) - V(x)) dz.
class Mollifier {
public:
    Mollifier(const HolderField& field, double eps, std::shared_ptr<const MollifierKernel> kernel = nullptr)
        : field_(field), eps_(eps), kernel_(kernel ? std::move(kernel) : std::make_shared<MollifierKernel>(field.n))
    {
        if (!(eps > 0.0)) throw ParameterError("epsilon must be positive");
        if (!(eps < field.R)) throw ParameterError("epsilon must be smaller than R");
        if (kernel_->n() != field.n) throw ParameterError("kernel dimension mismatch");
    }

    const HolderField& field() const { return field_; }
    double epsilon() const { return eps_; }
    const MollifierKernel& kernel() const { return *kernel_; }

    MollifiedSample sample(const Point& x, bool want_grad = true, bool want_hess = false) const
    {
        const int n = field_.n, nc = field_.components();
        if (norm(x, n) > field_.R - eps_ + 1e-12 * field_.R)
            throw DomainError("mollifier evaluated outside B_{R-eps}");
        MollifiedSample out;
        const Point v0 = field_.eval_unchecked(x);
        const double ie = 1.0 / eps_, ie2 = ie * ie;
        for (const auto& p : kernel_->pairs()) {
            Point ez = scale(p.z, eps_);
            Point vm = field_.eval_unchecked(sub(x, ez));
            Point vp = field_.eval_unchecked(add(x, ez));
            for (int c = 0; c < nc; ++c) {
                double dm = vm[c] - v0[c], dp = vp[c] - v0[c];
                out.defect[c] += p.rho * (dm + dp);
                if (want_grad) {
                    double odd = (dm - dp) * ie;
                    for (int i = 0; i < n; ++i) out.grad[c][i] += p.drho[i] * odd;
                }
                if (want_hess) {
                    double even = (dm + dp) * ie2;
                    for (int i = 0; i < n; ++i)
                        for (int k = 0; k < n; ++k) out.hess[c][i][k] += p.d2rho[i][k] * even;
                }
            }
        }
        for (int c = 0; c < nc; ++c) out.value[c] = v0[c] + out.defect[c];
        return out;
    }

    double value(const Point& x) const { return sample(x, false, false).value[0]; }

private:
    HolderField field_;
    double eps_;
    std::shared_ptr<const MollifierKernel> kernel_;
};

// Symmetric lattice {i h : |i h| <= R - eps} restricted to B_{R-eps}.
struct GridSpec {
    int n = 2;
    double h = 0.0;
};

struct MollifiedField {
    HolderField base;
    double epsilon = 0.0;
    GridSpec grid;
    std::vector<Point> points;
    std::vector<MollifiedSample> samples;
    bool has_hessian = false;
    double sup_value = 0.0;
    double sup_defect = 0.0;
    double sup_grad = 0.0;
    double sup_hess = 0.0;
    bool defect_exact_zero = true;
};

inline std::vector<Point> ball_lattice(int n, double h, double radius)
{
    std::vector<Point> pts;
    const int m = static_cast<int>(std::floor(radius / h + 1e-9));
    const int side = 2 * m + 1;
    const int total = ipow(side, n);
    for (int j = 0; j < total; ++j) {
        Point x{0.0, 0.0, 0.0};
        int rem = j;
        for (int d = n - 1; d >= 0; --d) {
            x[d] = (rem % side - m) * h;
            rem /= side;
        }
        if (norm(x, n) <= radius) pts.push_back(x);
    }
    return pts;
}

inline MollifiedField mollify(const HolderField& field, double eps, const GridSpec& grid, bool want_hess = false,
                              std::shared_ptr<const MollifierKernel> kernel = nullptr)
{
    if (!(eps > 0.0) || !(eps < field.R)) throw ParameterError("need 0 < epsilon < R");
    if (grid.n != field.n) throw ParameterError("grid dimension mismatch");
    if (!(grid.h > 0.0) || grid.h > eps / 8.0 * (1.0 + 1e-12))
        throw ResolutionError("grid spacing must satisfy h <= epsilon/8");
    Mollifier mol(field, eps, std::move(kernel));
    MollifiedField out;
    out.base = field;
    out.epsilon = eps;
    out.grid = grid;
    out.has_hessian = want_hess;
    out.points = ball_lattice(field.n, grid.h, field.R - eps);
    out.samples.resize(out.points.size());
    parallel_for(out.points.size(), [&](std::size_t i) { out.samples[i] = mol.sample(out.points[i], true, want_hess); });
    const int n = field.n, nc = field.components();
    for (const auto& s : out.samples) {
        double g2 = 0.0, h2 = 0.0;
        for (int c = 0; c < nc; ++c) {
            for (int i = 0; i < n; ++i) {
                g2 += s.grad[c][i] * s.grad[c][i];
                for (int k = 0; k < n; ++k) h2 += s.hess[c][i][k] * s.hess[c][i][k];
            }
            if (s.defect[c] != 0.0) out.defect_exact_zero = false;
        }
        out.sup_value = std::max(out.sup_value, norm(s.value, nc));
        out.sup_defect = std::max(out.sup_defect, norm(s.defect, nc));
        out.sup_grad = std::max(out.sup_grad, std::sqrt(g2));
        out.sup_hess = std::max(out.sup_hess, std::sqrt(h2));
    }
    return out;
}

struct RateReport {
    std::vector<double> epsilons, defect_sup, grad_sup, grad2_sup;
    bool has_grad2 = false;
    bool defect_exact_zero = false;
    double defect_slope = std::numeric_limits<double>::quiet_NaN();
    double grad_slope = std::numeric_limits<double>::quiet_NaN();
    double grad2_slope = std::numeric_limits<double>::quiet_NaN();
    // smallest C with sup <= C M0 eps^{beta - j} at every epsilon
    double defect_C = std::numeric_limits<double>::quiet_NaN();
    double grad_C = std::numeric_limits<double>::quiet_NaN();
    double grad2_C = std::numeric_limits<double>::quiet_NaN();

    std::string to_csv() const
    {
        std::string s = "epsilon,defect_sup,grad_sup,grad2_sup\n";
        for (std::size_t i = 0; i < epsilons.size(); ++i)
            s += fmt17(epsilons[i]) + "," + fmt17(defect_sup[i]) + "," + fmt17(grad_sup[i]) + "," +
                 (has_grad2 ? fmt17(grad2_sup[i]) : std::string("nan")) + "\n";
        auto f = [](double v) { return std::isnan(v) ? std::string("nan") : fmt17(v); };
        s += "slope," + (defect_exact_zero ? std::string("exact-zero") : f(defect_slope)) + "," + f(grad_slope) +
             "," + f(grad2_slope) + "\n";
        s += "constant," + f(defect_C) + "," + f(grad_C) + "," + f(grad2_C) + "\n";
        return s;
    }
};

// Grid spacing eps/8 on the symmetric lattice; for a cusp centred at a
// lattice point this makes the sampled sup exactly self-similar in eps.
inline RateReport verify_mollify_rates(const HolderField& field, const std::vector<double>& epsilons,
                                       bool with_second = false)
{
    if (epsilons.size() < 4) throw ParameterError("need at least 4 epsilons");
    for (std::size_t i = 1; i < epsilons.size(); ++i) {
        double q0 = epsilons[1] / epsilons[0], q = epsilons[i] / epsilons[i - 1];
        if (std::fabs(q - q0) > 1e-9 * std::fabs(q0)) throw ParameterError("epsilons must be geometric");
    }
    auto kernel = std::make_shared<const MollifierKernel>(field.n);
    RateReport rep;
    rep.has_grad2 = with_second;
    rep.defect_exact_zero = true;
    for (double eps : epsilons) {
        MollifiedField mf = mollify(field, eps, GridSpec{field.n, eps / 8.0}, with_second, kernel);
        rep.epsilons.push_back(eps);
        rep.defect_sup.push_back(mf.sup_defect);
        rep.grad_sup.push_back(mf.sup_grad);
        rep.grad2_sup.push_back(with_second ? mf.sup_hess : std::numeric_limits<double>::quiet_NaN());
        if (!mf.defect_exact_zero) rep.defect_exact_zero = false;
    }
    auto fit = [&](const std::vector<double>& v) {
        std::vector<double> lx, ly;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!(v[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
            lx.push_back(std::log(rep.epsilons[i]));
            ly.push_back(std::log(v[i]));
        }
        return fit_line(lx, ly).slope;
    };
    auto constant = [&](const std::vector<double>& v, double power) {
        if (!(field.M0 > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        double c = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            c = std::max(c, v[i] / (field.M0 * std::pow(rep.epsilons[i], power)));
        return c;
    };
    if (!rep.defect_exact_zero) rep.defect_slope = fit(rep.defect_sup);
    rep.grad_slope = fit(rep.grad_sup);
    rep.defect_C = constant(rep.defect_sup, field.beta);
    rep.grad_C = constant(rep.grad_sup, field.beta - 1.0);
    if (with_second) {
        rep.grad2_slope = fit(rep.grad2_sup);
        rep.grad2_C = constant(rep.grad2_sup, field.beta - 2.0);
    }
    return rep;
}

// Radially symmetric V_eps tabulated on [0, R - eps] with cubic Hermite
// interpolation; the slope comes from the kernel-derivative convolution.
class RadialMollifiedTable {
public:
    RadialMollifiedTable(const HolderField& field, double eps, int intervals = 4096)
        : field_(field), eps_(eps)
    {
        Mollifier mol(field, eps);
        smax_ = field.R - eps;
        ds_ = smax_ / intervals;
        v_.resize(intervals + 1);
        dv_.resize(intervals + 1);
        parallel_for(v_.size(), [&](std::size_t i) {
            Point x{i * ds_, 0.0, 0.0};
            if (i == v_.size() - 1) x[0] = smax_;
            auto s = mol.sample(x, true, false);
            v_[i] = s.value[0];
            dv_[i] = s.grad[0][0];
        });
    }

    double epsilon() const { return eps_; }
    double max_radius() const { return smax_; }

    double value(double s) const
    {
        if (s > smax_ * (1.0 + 1e-12)) throw DomainError("radius beyond R - eps");
        double u = std::min(s / ds_, static_cast<double>(v_.size() - 1));
        std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(u), v_.size() - 2);
        double t = u - i, t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * v_[i] + (t3 - 2 * t2 + t) * dv_[i] * ds_ + (-2 * t3 + 3 * t2) * v_[i + 1] +
               (t3 - t2) * dv_[i + 1] * ds_;
    }

    // d/ds of the interpolant
    double derivative(double s) const
    {
        if (s > smax_ * (1.0 + 1e-12)) throw DomainError("radius beyond R - eps");
        double u = std::min(s / ds_, static_cast<double>(v_.size() - 1));
        std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(u), v_.size() - 2);
        double t = u - i, t2 = t * t;
        return ((6 * t2 - 6 * t) * v_[i] + (3 * t2 - 4 * t + 1) * dv_[i] * ds_ + (-6 * t2 + 6 * t) * v_[i + 1] +
                (3 * t2 - 2 * t) * dv_[i + 1] * ds_) /
               ds_;
    }

private:
    HolderField field_;
    double eps_, smax_, ds_;
    std::vector<double> v_, dv_;
};

}  // namespace freqlab

#endif  // FREQLAB_MOLLIFY_HPP
