#ifndef FREQLAB_BATTERY_HPP
#define FREQLAB_BATTERY_HPP

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "freqlab/core.hpp"
#include "freqlab/fields.hpp"
#include "freqlab/frequency.hpp"
#include "freqlab/kv.hpp"
#include "freqlab/solve.hpp"
#include "freqlab/threeball.hpp"

namespace freqlab {

// Oracle cases shared by the monotonicity, three-ball and calibration suites.
// A case is written "family key=value ..." on one line, e.g.
//   bessel k=1 lambda=100 alpha=4
//   fd-cusp amp=1000 beta=0.5 P=257
//   fd-variable gamma=0.2 kappa=2 amp=10 P=257
enum class CaseFamily { harmonic, bessel, radial, fd_cusp, fd_variable };

inline std::string to_string(CaseFamily f)
{
    switch (f) {
    case CaseFamily::harmonic: return "harmonic";
    case CaseFamily::bessel: return "bessel";
    case CaseFamily::radial: return "radial";
    case CaseFamily::fd_cusp: return "fd-cusp";
    case CaseFamily::fd_variable: return "fd-variable";
    }
    return "?";
}

inline CaseFamily case_family_from(const std::string& s)
{
    if (s == "harmonic") return CaseFamily::harmonic;
    if (s == "bessel") return CaseFamily::bessel;
    if (s == "radial") return CaseFamily::radial;
    if (s == "fd-cusp") return CaseFamily::fd_cusp;
    if (s == "fd-variable") return CaseFamily::fd_variable;
    throw UsageError("unknown case family '" + s + "'");
}

struct CaseSpec {
    CaseFamily family = CaseFamily::harmonic;
    int n = 2;
    int k = 1;
    double lambda = 0.0;
    double amp = 0.0;  // cusp amplitude; radial cases use V = -amp |x|^beta
    double beta = 0.5;
    double eps = 0.05;
    double alpha = 4.0;
    double gamma = 0.2, kappa = 2.0;
    int P = 257;
    bool negate = false;  // negated-P control, expected to fail monotonicity

    bool on_grid() const { return family == CaseFamily::fd_cusp || family == CaseFamily::fd_variable; }
    bool closed_on_large_ball() const { return family == CaseFamily::harmonic || family == CaseFamily::bessel; }

    static CaseSpec parse(const std::string& text)
    {
        std::istringstream in(text);
        std::string fam, tok;
        if (!(in >> fam)) throw UsageError("empty case descriptor");
        CaseSpec c;
        c.family = case_family_from(fam);
        if (c.family == CaseFamily::radial) c.k = 0;
        while (in >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos || eq == 0) throw UsageError("case '" + text + "': expected key=value");
            const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
            const double v = KvBlock::to_double("case." + key, val);
            if (key == "n") c.n = static_cast<int>(v);
            else if (key == "k") c.k = static_cast<int>(v);
            else if (key == "lambda") c.lambda = v;
            else if (key == "amp") c.amp = v;
            else if (key == "beta") c.beta = v;
            else if (key == "eps") c.eps = v;
            else if (key == "alpha") c.alpha = v;
            else if (key == "gamma") c.gamma = v;
            else if (key == "kappa") c.kappa = v;
            else if (key == "P") c.P = static_cast<int>(v);
            else if (key == "negate") c.negate = v != 0.0;
            else throw UsageError("case '" + text + "': unknown key '" + key + "'");
        }
        return c;
    }

    // Normalized descriptor: only the keys the family reads.
    std::string str() const
    {
        std::string s = to_string(family);
        auto add = [&s](const char* key, double v) { s += std::string(" ") + key + "=" + fmt_short(v); };
        switch (family) {
        case CaseFamily::harmonic:
            add("n", n);
            add("k", k);
            break;
        case CaseFamily::bessel:
            add("n", n);
            add("k", k);
            add("lambda", lambda);
            break;
        case CaseFamily::radial:
            add("k", k);
            add("amp", amp);
            add("beta", beta);
            add("eps", eps);
            break;
        case CaseFamily::fd_cusp:
            add("amp", amp);
            add("beta", beta);
            add("eps", eps);
            add("P", P);
            break;
        case CaseFamily::fd_variable:
            add("gamma", gamma);
            add("kappa", kappa);
            add("amp", amp);
            add("beta", beta);
            add("eps", eps);
            add("P", P);
            break;
        }
        add("alpha", alpha);
        if (negate) s += " negate=1";
        return s;
    }

    BallVariant ball_variant() const
    {
        return family == CaseFamily::fd_variable ? BallVariant::variable_coef : BallVariant::holder_v;
    }
};

// Harmonic, Bessel (lambda <= 1e4), radial-ODE, FD cusp (M0 <= 1e3) and one
// variable-coefficient case, then the negated-P control.
inline std::vector<std::string> default_monotonicity_battery()
{
    return {"harmonic k=1",
            "harmonic k=3",
            "harmonic n=3 k=2",
            "bessel k=1 lambda=100",
            "bessel k=3 lambda=1000",
            "bessel k=2 lambda=10000",
            "radial amp=20 beta=0.5",
            "radial amp=1000 beta=0.3",
            "fd-cusp amp=10 beta=0.5",
            "fd-cusp amp=100 beta=0.8",
            "fd-cusp amp=1000 beta=0.3",
            "fd-variable gamma=0.2 kappa=2 amp=10 beta=0.5",
            "bessel k=1 lambda=100 negate=1"};
}

inline std::vector<std::string> default_three_ball_battery()
{
    return {"harmonic k=2",
            "bessel k=1 lambda=10",
            "bessel k=2 lambda=100",
            "bessel k=3 lambda=1000",
            "fd-cusp amp=10 beta=0.5",
            "fd-cusp amp=100 beta=0.5",
            "fd-cusp amp=1000 beta=0.5",
            "fd-variable gamma=0.2 kappa=2 amp=10 beta=0.5"};
}

inline std::vector<CaseSpec> parse_cases(const std::vector<std::string>& lines)
{
    std::vector<CaseSpec> out;
    for (const auto& l : lines) out.push_back(CaseSpec::parse(l));
    return out;
}

inline std::uint64_t battery_hash(const std::vector<CaseSpec>& cases)
{
    std::string s;
    for (const auto& c : cases) s += c.str() + "\n";
    return fnv1a(s);
}

// Built case: quadrature, correction inputs and the radius schedule.
struct BuiltCase {
    CaseSpec spec;
    std::shared_ptr<BallQuadrature> quad;
    CorrectionSpec correction;
    BudgetInputs budget;
    double r_min = 0.05, r_max = 0.9;
    std::vector<Radii> three_ball_radii;
};

inline GridField<double> fd_case_solution(const CaseSpec& c, const HolderField& V)
{
    auto boundary = [](const Point& x) { return std::exp(x[0]) * std::cos(x[1]) + 0.5; };
    auto Vf = [V](const Point& x) { return V.eval_unchecked(x)[0]; };
    if (c.family == CaseFamily::fd_cusp)
        return solve_dirichlet(OperatorSpec::schrodinger(Vf, 2), boundary, CubeGrid{2, 1.0, c.P});
    auto A = CoefficientField::sinusoid(c.gamma, c.kappa, 2);
    return solve_dirichlet(OperatorSpec::divergence(A, Vf, 2), boundary, CubeGrid{2, 1.0, c.P});
}

inline BuiltCase build_case(const CaseSpec& c)
{
    if (!(c.alpha >= 1.0)) throw ParameterError("case alpha must be >= 1");
    BuiltCase b;
    b.spec = c;
    b.correction.sign = c.negate ? -1.0 : 1.0;
    switch (c.family) {
    case CaseFamily::harmonic:
        b.quad = std::make_shared<BallQuadrature>(
            BallQuadrature::closed_form(c.n, sampler_from(make_harmonic(c.k, c.n)), PotentialModel::zero()));
        b.budget = {1.0, c.beta, 1.0, 0.5, 0.0, 10.0};
        break;
    case CaseFamily::bessel:
        if (!(c.lambda > 0.0)) throw ParameterError("bessel case needs lambda > 0");
        b.quad = std::make_shared<BallQuadrature>(BallQuadrature::closed_form(
            c.n, sampler_from(make_bessel(c.k, c.lambda, c.n)), PotentialModel::constant(-c.lambda)));
        b.correction.M = c.lambda;
        b.budget = {c.lambda, c.beta, 1.0, 0.5, 0.0, 10.0};
        break;
    case CaseFamily::radial: {
        auto V = make_cusp(c.amp, c.beta, {0, 0, 0}, 1.0, 2);
        auto u = radial_solve([V](double s) { return -V.value({s, 0, 0}); }, c.k, 2, 1.0);
        b.quad = std::make_shared<BallQuadrature>(
            BallQuadrature::closed_form(2, sampler_from(u), PotentialModel::mollified(V, c.eps).negated()));
        b.correction = {V.M, V.M0, c.eps, c.beta, 0.0, 10.0, 10.0, Variant::constant_coef, b.correction.sign};
        b.budget = {V.M + V.M0, c.beta, 1.0, 0.5, 0.0, 1.0};
        b.r_max = 0.6;
        break;
    }
    case CaseFamily::fd_cusp:
    case CaseFamily::fd_variable: {
        auto V = make_cusp(c.amp, c.beta, {0, 0, 0}, 1.0, 2);
        auto A = c.family == CaseFamily::fd_cusp ? CoefficientField::identity(2)
                                                 : CoefficientField::sinusoid(c.gamma, c.kappa, 2);
        b.quad = std::make_shared<BallQuadrature>(
            BallQuadrature::grid(fd_case_solution(c, V), PotentialModel::mollified(V, c.eps), A, 0.9));
        const bool var = c.family == CaseFamily::fd_variable;
        b.correction = {V.M,
                        V.M0,
                        c.eps,
                        c.beta,
                        A.lipschitz_bound(),
                        10.0,
                        10.0,
                        var ? Variant::variable_coef : Variant::constant_coef,
                        b.correction.sign};
        b.budget = {V.M + V.M0, c.beta, 1.0, 0.5, A.lipschitz_bound(), 1.0};
        b.r_max = 0.6;
        break;
    }
    }
    if (b.budget.R == 10.0)
        b.three_ball_radii = {Radii{0.05, 0.1, 0.4}, Radii{0.5, 1.0, 4.0}};
    else
        b.three_ball_radii = {Radii{0.05, 0.1, 0.4}};
    return b;
}

struct MonotonicityCase {
    std::string descriptor;
    double C = 0.0, c0 = 0.0;
    MonotonicityReport report;
    bool expected_pass = true;
    bool ok() const { return report.pass == expected_pass; }
};

inline std::vector<ProfileRow> case_profiles(const BuiltCase& b, double C, double c0, int count)
{
    CorrectionSpec c = b.correction;
    c.C = C;
    c.c0 = c0;
    return compute_profiles(*b.quad, geometric_ladder(b.r_min, b.r_max, count), b.spec.alpha, c);
}

inline MonotonicityCase run_monotonicity(const BuiltCase& b, double C, double c0, int count = 20, double delta = 1e-2)
{
    MonotonicityCase m;
    m.descriptor = b.spec.str();
    m.C = C;
    m.c0 = c0;
    m.expected_pass = !b.spec.negate;
    m.report = monotonicity_check(case_profiles(b, C, c0, count), delta);
    return m;
}

inline std::vector<ThreeBallReport> run_three_ball(const BuiltCase& b, double C)
{
    std::vector<ThreeBallReport> out;
    for (const auto& rr : b.three_ball_radii)
        out.push_back(three_ball_check(*b.quad, b.spec.ball_variant(), rr, b.budget, C, C));
    return out;
}

struct CalibrationResult {
    BallVariant variant = BallVariant::holder_v;
    double C = 0.0, c0 = 0.0;
    std::size_t cases = 0;
    double three_ball_ratio = 0.0;  // max implied_logC / exponent at the chosen C
    double min_increment = 0.0;     // smallest Ntilde increment at the chosen C, c0
};

// Smallest (C, c0) on the calibration grid, C first, passing every
// monotonicity and three-ball case of each variant present. c0 only enters
// the variable-coefficient correction, so other variants report c0 = 1.
inline std::vector<CalibrationResult> calibrate(const std::vector<BuiltCase>& built)
{
    std::vector<CalibrationResult> out;
    for (BallVariant v : {BallVariant::holder_v, BallVariant::drift, BallVariant::variable_coef,
                          BallVariant::general}) {
        std::vector<const BuiltCase*> group;
        for (const auto& b : built) {
            if (b.spec.negate) throw UsageError("control cases cannot be used for calibration");
            if (b.spec.ball_variant() == v) group.push_back(&b);
        }
        if (group.empty()) continue;
        const std::vector<double> c0_grid =
            v == BallVariant::variable_coef ? calibration_grid() : std::vector<double>{calibration_grid().front()};
        bool found = false;
        std::string worst;
        double worst_score = -std::numeric_limits<double>::infinity();
        for (double C : calibration_grid()) {
            for (double c0 : c0_grid) {
                CalibrationResult r{v, C, c0, group.size(), -std::numeric_limits<double>::infinity(),
                                    std::numeric_limits<double>::infinity()};
                bool ok = true;
                for (const BuiltCase* b : group) {
                    auto m = run_monotonicity(*b, C, c0);
                    r.min_increment = std::min(r.min_increment, m.report.min_increment);
                    double score = m.report.pass ? 0.0 : -m.report.min_increment;
                    for (const auto& t : run_three_ball(*b, C)) {
                        r.three_ball_ratio = std::max(r.three_ball_ratio, t.implied_logC / t.exponent);
                        if (!t.pass) score = std::max(score, t.implied_logC / t.budget());
                    }
                    if (score > 0.0) {
                        ok = false;
                        if (score > worst_score) {
                            worst_score = score;
                            worst = b->spec.str();
                        }
                    }
                }
                if (ok) {
                    out.push_back(r);
                    found = true;
                    break;
                }
            }
            if (found) break;
        }
        if (!found)
            throw CalibrationError("no grid value passes for " + to_string(v) + "; worst case '" + worst + "'");
    }
    return out;
}

}  // namespace freqlab

#endif  // FREQLAB_BATTERY_HPP
