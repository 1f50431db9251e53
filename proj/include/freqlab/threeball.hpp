#ifndef FREQLAB_THREEBALL_HPP
#define FREQLAB_THREEBALL_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "core.hpp"
#include "frequency.hpp"

namespace freqlab {

enum class BallVariant { holder_v, drift, variable_coef, general };

inline std::string to_string(BallVariant v)
{
    switch (v) {
    case BallVariant::holder_v: return "holder-V";
    case BallVariant::drift: return "drift";
    case BallVariant::variable_coef: return "variable-coef";
    case BallVariant::general: return "general";
    }
    return "?";
}

inline BallVariant ball_variant_from(const std::string& s)
{
    if (s == "holder-V") return BallVariant::holder_v;
    if (s == "drift") return BallVariant::drift;
    if (s == "variable-coef") return BallVariant::variable_coef;
    if (s == "general") return BallVariant::general;
    throw UsageError("unknown three-ball variant '" + s + "'");
}

// Candidate values for the universal constants.
inline const std::vector<double>& calibration_grid()
{
    static const std::vector<double> g{1, 2, 5, 10, 20, 50, 100};
    return g;
}

struct Radii {
    double r1 = 0.5, r2 = 1.0, r3 = 4.0;

    void validate() const
    {
        if (!(r1 > 0.0) || !(r1 < r2) || !(2.0 * r2 < r3))
            throw ParameterError("radii must satisfy 0 < r1 < r2 < 2 r2 < r3");
    }
};

inline Radii scaled(const Radii& r, double s) { return {s * r.r1, s * r.r2, s * r.r3}; }

// Interpolation exponent; `lipschitz` is L_A for variable-coef and ignored elsewhere.
inline double theta(BallVariant v, const Radii& rr, double lipschitz = 0.0, double C = 1.0)
{
    rr.validate();
    const double outer = std::log(rr.r3) - std::log(2.0 * rr.r2);
    const double inner = std::log(2.0 * rr.r2) - std::log(rr.r1);
    switch (v) {
    case BallVariant::holder_v: return std::log(rr.r3 / (2.0 * rr.r2)) / std::log(rr.r3 / rr.r1);
    case BallVariant::drift:
    case BallVariant::general: return outer / (outer + C * std::exp(C * (rr.r3 - rr.r1)) * inner);
    case BallVariant::variable_coef: return outer / (outer + C * std::exp(C * lipschitz * (rr.r3 - rr.r1)) * inner);
    }
    return 0.0;
}

struct BudgetInputs {
    double M = 1.0;      // Hölder norm of V
    double beta = 0.5;
    double K = 1.0;      // Hölder norm of W
    double beta0 = 0.5;
    double L_A = 0.0;
    double R = 10.0;
};

// The exponent expression multiplying the universal constant.
inline double exponent_budget(BallVariant v, const BudgetInputs& in, const Radii& rr)
{
    const double lg = std::log(rr.r3 / (2.0 * rr.r2));
    const double mterm_v = std::pow(in.M, 2.0 / (in.beta + 3.0));
    const double kterm = std::pow(in.K, 2.0 / (in.beta0 + 1.0));
    switch (v) {
    case BallVariant::holder_v: return mterm_v * std::pow(in.R, (4.0 + 2.0 * in.beta) / (in.beta + 3.0));
    case BallVariant::drift: return kterm * std::pow(in.R, 2.0 / (in.beta0 + 1.0)) * (1.0 + lg);
    case BallVariant::variable_coef:
        return mterm_v * std::pow(in.R, 4.0 * (in.beta + 1.0) / (in.beta + 3.0)) * (lg + 1.0);
    case BallVariant::general:
        return (mterm_v * std::pow(in.R, 4.0 * (in.beta + 1.0) / (in.beta + 3.0)) + kterm) * (1.0 + 2.0 * lg);
    }
    return 0.0;
}

struct OptimalParameters {
    double epsilon = 0.0;
    double alpha = std::numeric_limits<double>::quiet_NaN();  // NaN for drift
    bool out_of_regime = false;
};

// `strength` is M (holder-V, variable-coef) or K (drift); `b` the matching exponent.
inline OptimalParameters optimal_parameters(BallVariant v, double strength, double b, double R)
{
    if (!(strength > 0.0) || !(R > 0.0) || !(b > 0.0) || b > 1.0)
        throw ParameterError("optimal parameters need strength > 0, R > 0, exponent in (0,1]");
    OptimalParameters p;
    p.out_of_regime = strength < 1.0 || R < 1.0;
    switch (v) {
    case BallVariant::holder_v:
        p.alpha = std::pow(strength, 2.0 / (b + 3.0)) * std::pow(R, (4.0 + 2.0 * b) / (b + 3.0));
        p.epsilon = std::pow(p.alpha / (strength * R), 1.0 / (b + 1.0));
        break;
    case BallVariant::variable_coef:
    case BallVariant::general:
        p.alpha = std::pow(strength, 2.0 / (b + 3.0)) * std::pow(R, 4.0 * (b + 1.0) / (b + 3.0));
        p.epsilon = std::pow(p.alpha / strength, 1.0 / (b + 1.0));
        break;
    case BallVariant::drift: p.epsilon = std::pow(R * strength, -1.0 / (b + 1.0)); break;
    }
    return p;
}

struct ThreeBallReport {
    BallVariant variant = BallVariant::holder_v;
    Radii radii;
    double norm1 = 0.0, norm2 = 0.0, norm3 = 0.0;
    double theta = 0.0;
    double exponent = 0.0;  // budget expression without C
    double C = 1.0;
    double implied_logC = 0.0;
    bool pass = false;

    double budget() const { return C * exponent; }
};

inline std::string three_ball_csv_header()
{
    return "variant,r1,r2,r3,norm1,norm2,norm3,theta,exponent,C,implied_logC,pass";
}

inline std::string three_ball_csv_row(const ThreeBallReport& t)
{
    return to_string(t.variant) + "," + fmt17(t.radii.r1) + "," + fmt17(t.radii.r2) + "," + fmt17(t.radii.r3) + "," +
           fmt17(t.norm1) + "," + fmt17(t.norm2) + "," + fmt17(t.norm3) + "," + fmt17(t.theta) + "," +
           fmt17(t.exponent) + "," + fmt17(t.C) + "," + fmt17(t.implied_logC) + "," + (t.pass ? "1" : "0");
}

using BallNorm = std::function<double(double)>;

inline BallNorm ball_norm_of(const BallQuadrature& q)
{
    return [&q](double r) { return q.ball_norm(r); };
}

// `theta_C` is the constant inside the drift/variable-coef theta, `C` the budget constant.
inline ThreeBallReport three_ball_check(const BallNorm& norm_fn, BallVariant v, const Radii& rr,
                                        const BudgetInputs& in, double C = 1.0, double theta_C = 1.0)
{
    rr.validate();
    if (!(rr.r3 < 0.5 * in.R)) throw ParameterError("three-ball radii need r3 < R/2");
    ThreeBallReport t;
    t.variant = v;
    t.radii = rr;
    t.norm1 = norm_fn(rr.r1);
    t.norm2 = norm_fn(rr.r2);
    t.norm3 = norm_fn(rr.r3);
    if (!(t.norm1 > 1e-30)) throw DegenerateError("u vanishes on the inner ball");
    t.theta = theta(v, rr, in.L_A, theta_C);
    t.exponent = exponent_budget(v, in, rr);
    t.C = C;
    t.implied_logC = std::log(t.norm2) - t.theta * std::log(t.norm1) - (1.0 - t.theta) * std::log(t.norm3);
    t.pass = t.implied_logC <= t.budget();
    return t;
}

inline ThreeBallReport three_ball_check(const BallQuadrature& q, BallVariant v, const Radii& rr, const BudgetInputs& in,
                                        double C = 1.0, double theta_C = 1.0)
{
    return three_ball_check(ball_norm_of(q), v, rr, in, C, theta_C);
}

struct FittedConstant {
    double C = 0.0;          // smallest grid value passing every case; NaN if none
    double raw_ratio = 0.0;  // max implied_logC / exponent
    std::size_t worst = 0;   // index of the case attaining raw_ratio
};

inline FittedConstant fit_constant(const std::vector<ThreeBallReport>& cases)
{
    if (cases.empty()) throw ParameterError("no cases to calibrate");
    FittedConstant f;
    f.raw_ratio = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cases.size(); ++i) {
        double q = cases[i].implied_logC / cases[i].exponent;
        if (q > f.raw_ratio) {
            f.raw_ratio = q;
            f.worst = i;
        }
    }
    f.C = std::numeric_limits<double>::quiet_NaN();
    for (double c : calibration_grid())
        if (f.raw_ratio <= c) {
            f.C = c;
            break;
        }
    return f;
}

struct VanishingFit {
    double order = 0.0;
    double residual = 0.0;
    std::vector<double> radii, norms;
    std::size_t used = 0;
    bool truncated = false;  // small radii dropped below the underflow floor
};

// Least-squares slope of log ball_norm against log r, minus n/2.
inline VanishingFit vanishing_order(const BallNorm& norm_fn, double r_min, double r_max, int n, int count = 8)
{
    if (count < 8) throw ParameterError("vanishing order needs >= 8 radii");
    VanishingFit f;
    f.radii = geometric_ladder(r_min, r_max, count);
    f.norms.resize(f.radii.size());
    for (std::size_t i = 0; i < f.radii.size(); ++i) f.norms[i] = norm_fn(f.radii[i]);
    const double top = f.norms.back();
    if (!(top > 0.0)) throw DegenerateError("ball norm vanishes at r_max");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < f.radii.size(); ++i) {
        if (f.norms[i] < 1e-14 * top) {
            f.truncated = true;
            continue;
        }
        lx.push_back(std::log(f.radii[i]));
        ly.push_back(std::log(f.norms[i]));
    }
    f.used = lx.size();
    if (f.used < 2) throw DegenerateError("ball norm underflows on the whole ladder");
    auto line = fit_line(lx, ly);
    f.order = line.slope - 0.5 * n;
    f.residual = line.residual;
    return f;
}

inline VanishingFit vanishing_order(const BallQuadrature& q, double r_min, double r_max, int count = 8)
{
    return vanishing_order(ball_norm_of(q), r_min, r_max, q.n(), count);
}

// Exponent of M (or K) in the vanishing-order bound.
inline double vanishing_exponent(BallVariant v, double b)
{
    return v == BallVariant::drift ? 2.0 / (b + 1.0) : 2.0 / (b + 3.0);
}

inline double vanishing_bound(BallVariant v, double strength, double b, double C = 1.0)
{
    return C * std::pow(strength, vanishing_exponent(v, b));
}

struct SweepPoint {
    double M = 0.0;
    double value = 0.0;
    bool skipped = false;
    std::string note;
};

struct SweepReport {
    std::vector<SweepPoint> points;
    double slope = 0.0;
    double residual = 0.0;
    double bound_exponent = 0.0;
    double C = 0.0;  // smallest grid constant with value <= C M^exponent on every member; NaN if none
    bool below_bound = false;
    std::size_t skipped = 0;
};

// Fits log(measure(M)) against log M; degenerate members are skipped and flagged.
inline SweepReport exponent_sweep(const std::vector<double>& Ms, const std::function<double(double)>& measure,
                                  BallVariant v, double b)
{
    if (Ms.size() < 4) throw ParameterError("exponent sweep needs >= 4 values of M");
    auto [lo, hi] = std::minmax_element(Ms.begin(), Ms.end());
    if (!(*lo > 0.0) || *hi / *lo < 100.0 * (1.0 - 1e-12)) throw ParameterError("exponent sweep needs >= 2 decades of M");
    SweepReport s;
    s.bound_exponent = vanishing_exponent(v, b);
    std::vector<double> sorted = Ms;
    std::sort(sorted.begin(), sorted.end());
    s.points.resize(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        auto& p = s.points[i];
        p.M = sorted[i];
        try {
            p.value = measure(p.M);
            if (!(p.value > 0.0)) throw DegenerateError("non-positive measurement");
        } catch (const DegenerateError& e) {
            p.skipped = true;
            p.note = e.what();
            ++s.skipped;
        }
    }
    std::vector<double> lx, ly;
    double worst = 0.0;
    for (const auto& p : s.points) {
        if (p.skipped) continue;
        lx.push_back(std::log(p.M));
        ly.push_back(std::log(p.value));
        worst = std::max(worst, p.value / std::pow(p.M, s.bound_exponent));
    }
    if (lx.size() < 2) throw DegenerateError("fewer than two usable sweep members");
    auto line = fit_line(lx, ly);
    s.slope = line.slope;
    s.residual = line.residual;
    s.C = std::numeric_limits<double>::quiet_NaN();
    for (double c : calibration_grid())
        if (worst <= c) {
            s.C = c;
            break;
        }
    s.below_bound = s.slope <= s.bound_exponent && !std::isnan(s.C);
    return s;
}

// Log-log plot of ball_norm against r with the fitted line.
inline std::string vanishing_svg(const VanishingFit& f, int n)
{
    const double W = 480, H = 360, pad = 40;
    double x0 = std::log(f.radii.front()), x1 = std::log(f.radii.back());
    double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
    for (double v : f.norms)
        if (v > 0.0) {
            y0 = std::min(y0, std::log(v));
            y1 = std::max(y1, std::log(v));
        }
    if (!(y1 > y0)) y1 = y0 + 1.0;
    auto px = [&](double lx) { return pad + (lx - x0) / (x1 - x0) * (W - 2 * pad); };
    auto py = [&](double ly) { return H - pad - (ly - y0) / (y1 - y0) * (H - 2 * pad); };
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"360\">\n";
    s += "<rect width=\"480\" height=\"360\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < f.radii.size(); ++i) {
        if (!(f.norms[i] > 0.0)) continue;
        char buf[128];
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"black\"/>\n",
                      px(std::log(f.radii[i])), py(std::log(f.norms[i])));
        s += buf;
    }
    const double slope = f.order + 0.5 * n;
    const double ly_end = std::log(f.norms.back());
    char buf[200];
    std::snprintf(buf, sizeof buf, "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"red\"/>\n", px(x0),
                  py(ly_end - slope * (x1 - x0)), px(x1), py(ly_end));
    s += buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"20\" font-size=\"12\">order %.4f</text>\n", int(pad), f.order);
    s += buf;
    s += "</svg>\n";
    return s;
}

}  // namespace freqlab

#endif  // FREQLAB_THREEBALL_HPP
