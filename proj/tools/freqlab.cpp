#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "freqlab/battery.hpp"
#include "freqlab/config.hpp"
#include "freqlab/frequency.hpp"
#include "freqlab/lifting.hpp"
#include "freqlab/mollify.hpp"
#include "freqlab/threeball.hpp"

using namespace freqlab;

namespace {

// Raw command-line overrides, applied on top of the config file.
struct Overrides {
    std::string config_file;
    std::vector<std::string> set;
    std::vector<std::string> cases;
    std::vector<double> radii;
    std::string ladder;
    std::map<std::string, std::vector<double>> params;
    std::string which, variant, svg, output, calibration, seed;
    bool second = false;
    bool dry_run = false;
};

struct Artifact {
    std::string name;  // file name inside the output directory
    std::string body;
};

struct Outcome {
    std::vector<Artifact> artifacts;
    std::string summary;
    bool pass = true;
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<double> parse_ladder(const std::string& spec)
{
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ',');) parts.push_back(p);
    if (parts.size() != 3) throw UsageError("key 'ladder' expects lo,hi,count");
    const double lo = KvBlock::to_double("ladder", parts[0]), hi = KvBlock::to_double("ladder", parts[1]);
    const double cnt = KvBlock::to_double("ladder", parts[2]);
    if (cnt != std::floor(cnt) || cnt < 0) throw UsageError("key 'ladder': count must be a non-negative integer");
    if (cnt == 0) throw UsageError("key 'radius': empty radius ladder");
    if (!(lo > 0.0) || !(hi >= lo)) throw UsageError("key 'ladder' needs 0 < lo <= hi");
    if (cnt == 1) return {lo};
    return geometric_ladder(lo, hi, static_cast<int>(cnt));
}

ExperimentConfig resolve(const std::string& sub, const Overrides& o)
{
    KvBlock kv;
    if (!o.config_file.empty()) kv = KvBlock::parse(read_file(o.config_file));
    for (const auto& s : o.set) {
        auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
        kv.erase(s.substr(0, eq));
    }
    for (const auto& s : o.set) {
        auto eq = s.find('=');
        kv.add(KvBlock::trim(s.substr(0, eq)), KvBlock::trim(s.substr(eq + 1)));
    }
    if (kv.has("subcommand") && kv.str("subcommand") != sub)
        throw UsageError("key 'subcommand': config is for '" + kv.str("subcommand") + "'");
    kv.set("subcommand", sub);
    auto put_list = [&kv](const std::string& key, const std::vector<double>& v) {
        std::vector<std::string> s;
        for (double x : v) s.push_back(fmt_short(x));
        kv.set_list(key, s);
    };
    if (!o.cases.empty()) kv.set_list("case", o.cases);
    if (!o.ladder.empty()) put_list("radius", parse_ladder(o.ladder));
    if (!o.radii.empty()) put_list("radius", o.radii);
    for (const auto& [k, v] : o.params)
        if (!v.empty()) put_list(k, v);
    if (!o.which.empty()) kv.set("which", o.which);
    if (!o.variant.empty()) kv.set("variant", o.variant);
    if (!o.svg.empty()) kv.set("svg", o.svg);
    if (o.second) kv.set("second", "1");
    if (!o.output.empty()) kv.set("output", o.output);
    if (!o.calibration.empty()) kv.set("calibration", o.calibration);
    if (!o.seed.empty()) kv.set("seed", o.seed);
    if (kv.has("radius") && kv.list("radius").empty()) throw UsageError("key 'radius': empty radius ladder");
    for (const auto& r : kv.list("radius"))
        if (r.empty()) throw UsageError("key 'radius': empty radius ladder");
    return ExperimentConfig::from_kv(kv);
}

std::string csv(const ExperimentConfig& cfg, const std::string& body)
{
    return "# config-hash=" + cfg.hash() + "\n# calibration-hash=" +
           hex64(fnv1a(CalibrationStore::load(cfg.calibration_path).emit())) + "\n" + body;
}

std::string yes(bool b) { return b ? "1" : "0"; }

// Finite-difference cases without an explicit P use the config's grid size.
std::vector<CaseSpec> cases_or(const ExperimentConfig& cfg, const std::vector<std::string>& fallback)
{
    const auto& lines = cfg.cases.empty() ? fallback : cfg.cases;
    std::vector<CaseSpec> out;
    for (const auto& l : lines) {
        CaseSpec c = CaseSpec::parse(l);
        if ((" " + l).find(" P=") == std::string::npos) c.P = cfg.P;
        out.push_back(c);
    }
    return out;
}

// Calibrated (C, c0) for a variant unless the config pins them.
std::pair<double, double> constants(const ExperimentConfig& cfg, BallVariant v)
{
    auto e = CalibrationStore::load(cfg.calibration_path).get(v);
    return {cfg.scalar("C", e.C), cfg.scalar("c0", e.c0)};
}

HolderField config_field(const ExperimentConfig& cfg, const std::string& fallback)
{
    KvBlock kv = cfg.field.map().empty() ? KvBlock::parse(fallback) : cfg.field;
    if (!kv.has("n")) kv.set("n", std::to_string(cfg.n));
    if (!kv.has("R")) kv.set("R", fmt_short(cfg.R));
    return HolderField::from_block(kv.emit());
}

std::vector<std::string> default_cases(const std::string& sub)
{
    if (sub == "freq-profile") return {"harmonic k=2"};
    if (sub == "identity-check") return {"harmonic k=2", "bessel k=2 lambda=200"};
    if (sub == "monotonicity") return default_monotonicity_battery();
    if (sub == "three-ball") return default_three_ball_battery();
    if (sub == "recalibrate") {
        std::vector<std::string> out = default_three_ball_battery();
        for (const auto& s : default_monotonicity_battery())
            if (s.find("negate") == std::string::npos) out.push_back(s);
        return out;
    }
    return {};
}

const char* const kRateField = "kind=cusp\nbeta=0.5\namplitude=1\nR=0.25\n";

std::string drift_field_default(double beta0)
{
    return "kind=cusp\nvector=1\namplitude=20\nbeta=" + fmt_short(beta0) +
           "\noffset=1\noffset=0.5\ndirection=-0.5\ndirection=1\n";
}

// The resolved plan: normalized config plus the defaults it implies.
std::string plan(const ExperimentConfig& cfg)
{
    const std::string& sub = cfg.subcommand;
    std::string s = "# dry run: nothing computed\n# config-hash=" + cfg.hash() + "\n" + cfg.emit();
    s += "# plan: " + sub + "\n";
    for (const auto& c : cases_or(cfg, default_cases(sub)))
        s += "#   case " + c.str() + "\n";
    if (sub == "mollify-report" || sub == "lift-check") {
        std::string fb = sub == "lift-check" ? drift_field_default(cfg.scalar("beta0", 0.5)) : kRateField;
        KvBlock kv = cfg.field.map().empty() ? KvBlock::parse(fb) : cfg.field;
        for (const auto& [k, vs] : kv.map())
            for (const auto& v : vs) s += "#   field." + k + "=" + v + "\n";
    }
    s += "#   radii: " + (cfg.radii.empty() ? std::string("subcommand default") : std::to_string(cfg.radii.size())) +
         "\n";
    s += "#   calibration: " + (cfg.calibration_path.empty() ? std::string("built-in defaults") : cfg.calibration_path) +
         "\n";
    s += "#   output: " + (cfg.output_dir.empty() ? std::string("stdout") : cfg.output_dir + "/" + sub + ".csv") + "\n";
    return s;
}

// ---- subcommands ----

Outcome mollify_report(const ExperimentConfig& cfg)
{
    HolderField f = config_field(cfg, kRateField);
    auto eps = cfg.list_or("eps", {0.125, 0.0625, 0.03125, 0.015625, 0.0078125});
    auto rep = verify_mollify_rates(f, eps, cfg.option("second") == "1");
    Outcome o;
    o.artifacts.push_back({"mollify-report.csv", csv(cfg, rep.to_csv())});
    o.summary = "defect slope " + fmt17(rep.defect_slope) + ", gradient slope " + fmt17(rep.grad_slope);
    return o;
}

Outcome freq_profile(const ExperimentConfig& cfg)
{
    auto cases = cases_or(cfg, default_cases("freq-profile"));
    if (cases.size() != 1) throw UsageError("key 'case': freq-profile takes exactly one case");
    CaseSpec c = cases[0];
    c.alpha = cfg.scalar("alpha", c.alpha);
    auto b = build_case(c);
    auto radii = cfg.radii.empty() ? geometric_ladder(b.r_min, b.r_max, 20) : cfg.radii;
    auto [C, c0] = constants(cfg, c.ball_variant());
    CorrectionSpec corr = b.correction;
    corr.C = C;
    corr.c0 = c0;
    auto rows = compute_profiles(*b.quad, radii, c.alpha, corr);
    Outcome o;
    o.artifacts.push_back({"freq-profile.csv", csv(cfg, profile_csv(rows))});
    o.summary = c.str() + ": " + std::to_string(rows.size()) + " radii";
    return o;
}

Outcome identity_check(const ExperimentConfig& cfg)
{
    static const std::map<std::string, std::string> prefix{{"all", ""},      {"I0", "a:"},     {"diffF", "b:"},
                                                           {"Hprime", "c:"}, {"Dprime", "d:"}, {"J", "e:"}};
    const std::string which = cfg.option("which", "all");
    auto it = prefix.find(which);
    if (it == prefix.end()) throw UsageError("key 'which': expected all, I0, diffF, Hprime, Dprime or J");
    auto cases = cases_or(cfg, default_cases("identity-check"));
    auto radii = cfg.radii.empty() ? std::vector<double>{0.3, 0.5, 0.7} : cfg.radii;
    std::string body = "case,r,alpha,identity,lhs,rhs,relative,tol,pass\n";
    Outcome o;
    std::size_t rows = 0, bad = 0;
    for (CaseSpec c : cases) {
        c.alpha = cfg.scalar("alpha", c.alpha);
        auto b = build_case(c);
        for (double r : radii) {
            auto rep = identity_suite(*b.quad, {c.alpha, r});
            for (const auto& item : rep.items) {
                if (item.name.rfind(it->second, 0) != 0) continue;
                const bool ok = item.relative <= rep.tol;
                body += c.str() + "," + fmt17(r) + "," + fmt17(c.alpha) + "," + item.name + "," + fmt17(item.lhs) +
                        "," + fmt17(item.rhs) + "," + fmt17(item.relative) + "," + fmt17(rep.tol) + "," + yes(ok) +
                        "\n";
                ++rows;
                if (!ok) ++bad;
            }
        }
    }
    o.artifacts.push_back({"identity-check.csv", csv(cfg, body)});
    o.pass = bad == 0;
    o.summary = std::to_string(rows) + " residuals, " + std::to_string(bad) + " above tolerance";
    return o;
}

Outcome monotonicity(const ExperimentConfig& cfg)
{
    auto cases = cases_or(cfg, default_cases("monotonicity"));
    const double delta = 1e-2;
    std::string body = "case,variant,C,c0,alpha,min_increment,violations,expected,observed,ok\n";
    Outcome o;
    std::size_t bad = 0;
    for (CaseSpec c : cases) {
        c.alpha = cfg.scalar("alpha", c.alpha);
        auto b = build_case(c);
        auto [C, c0] = constants(cfg, c.ball_variant());
        MonotonicityCase m;
        m.descriptor = c.str();
        m.C = C;
        m.c0 = c0;
        m.expected_pass = !c.negate;
        if (cfg.radii.empty()) {
            m = run_monotonicity(b, C, c0, 20, delta);
        } else {
            CorrectionSpec corr = b.correction;
            corr.C = C;
            corr.c0 = c0;
            m.report = monotonicity_check(compute_profiles(*b.quad, cfg.radii, c.alpha, corr), delta);
        }
        body += c.str() + "," + to_string(c.ball_variant()) + "," + fmt17(C) + "," + fmt17(c0) + "," +
                fmt17(c.alpha) + "," + fmt17(m.report.min_increment) + "," +
                std::to_string(m.report.violating_radii.size()) + "," + (m.expected_pass ? "pass" : "fail") + "," +
                (m.report.pass ? "pass" : "fail") + "," + yes(m.ok()) + "\n";
        if (!m.ok()) ++bad;
    }
    o.artifacts.push_back({"monotonicity.csv", csv(cfg, body)});
    o.pass = bad == 0;
    o.summary = std::to_string(cases.size()) + " cases, " + std::to_string(bad) + " unexpected verdicts";
    return o;
}

std::vector<Radii> radius_triples(const ExperimentConfig& cfg)
{
    std::vector<Radii> out;
    if (cfg.radii.size() % 3 != 0) throw UsageError("key 'radius': three-ball radii come in triples r1 r2 r3");
    for (std::size_t i = 0; i < cfg.radii.size(); i += 3) {
        Radii r{cfg.radii[i], cfg.radii[i + 1], cfg.radii[i + 2]};
        try {
            r.validate();
        } catch (const Error&) {
            throw UsageError("key 'radius': triples need 0 < r1 < r2 < 2 r2 < r3");
        }
        out.push_back(r);
    }
    return out;
}

Outcome three_ball(const ExperimentConfig& cfg)
{
    auto cases = cases_or(cfg, default_cases("three-ball"));
    auto triples = radius_triples(cfg);
    std::string body = "case," + three_ball_csv_header() + "\n";
    Outcome o;
    std::size_t count = 0, bad = 0;
    std::optional<VanishingFit> first_fit;
    for (const CaseSpec& c : cases) {
        auto b = build_case(c);
        if (!triples.empty()) b.three_ball_radii = triples;
        auto [C, c0] = constants(cfg, c.ball_variant());
        (void)c0;
        for (const auto& t : run_three_ball(b, C)) {
            body += c.str() + "," + three_ball_csv_row(t) + "\n";
            ++count;
            if (!t.pass) ++bad;
        }
        if (!first_fit && !cfg.option("svg").empty()) {
            const Radii& rr = b.three_ball_radii.front();
            first_fit = vanishing_order(*b.quad, rr.r1, rr.r3);
        }
    }
    o.artifacts.push_back({"three-ball.csv", csv(cfg, body)});
    if (first_fit) o.artifacts.push_back({cfg.option("svg"), vanishing_svg(*first_fit, 2)});
    o.pass = bad == 0;
    o.summary = std::to_string(count) + " reports, " + std::to_string(bad) + " failing";
    return o;
}

// Bessel family with order round(sqrt(M)/2) and lambda = M on B_{0.5/sqrt(M)}.
Outcome vanish_sweep(const ExperimentConfig& cfg)
{
    const double s = std::sqrt(10.0);
    auto Ms = cfg.list_or("M", {1e2, 1e2 * s, 1e3, 1e3 * s, 1e4});
    auto betas = cfg.list_or("beta", {0.3, 0.5, 0.8});
    const BallVariant v = ball_variant_from(cfg.option("variant", "holder-V"));
    std::map<double, VanishingFit> fits;
    std::map<double, int> orders;
    auto measure = [&](double M) {
        auto it = fits.find(M);
        if (it != fits.end()) return it->second.order;
        const int k = static_cast<int>(std::lround(0.5 * std::sqrt(M)));
        const double rmax = 0.5 / std::sqrt(M);
        auto q = BallQuadrature::closed_form(2, sampler_from(make_bessel(k, M, 2)), PotentialModel::constant(-M));
        auto f = vanishing_order(q, rmax * std::pow(10.0, -12.0 / (k + 1.0)), rmax);
        fits[M] = f;
        orders[M] = k;
        return f.order;
    };
    std::string body = "variant,beta,M,k,order,bound,slope,bound_exponent,C,below_bound\n";
    Outcome o;
    std::size_t bad = 0;
    for (double beta : betas) {
        auto rep = exponent_sweep(Ms, measure, v, beta);
        for (const auto& p : rep.points) {
            body += to_string(v) + "," + fmt17(beta) + "," + fmt17(p.M) + "," +
                    (p.skipped ? std::string("nan") : std::to_string(orders[p.M])) + "," + fmt17(p.value) + "," +
                    fmt17(rep.C * std::pow(p.M, rep.bound_exponent)) + "," + fmt17(rep.slope) + "," + fmt17(rep.bound_exponent) + "," +
                    fmt17(rep.C) + "," + yes(rep.below_bound) + "\n";
        }
        if (!rep.below_bound) ++bad;
    }
    o.artifacts.push_back({"vanish-sweep.csv", csv(cfg, body)});
    if (!cfg.option("svg").empty() && !fits.empty())
        o.artifacts.push_back({cfg.option("svg"), vanishing_svg(fits.rbegin()->second, 2)});
    o.pass = bad == 0;
    o.summary = std::to_string(betas.size()) + " exponents swept, " + std::to_string(bad) + " above the bound";
    return o;
}

// Drift W = a + amp |x|^beta0 a_perp with the manufactured solution u = exp(a.x).
Outcome lift_check(const ExperimentConfig& cfg)
{
    const double beta0 = cfg.scalar("beta0", 0.5);
    HolderField W = config_field(cfg, drift_field_default(beta0));
    if (!W.vector_valued || W.kind != FieldKind::cusp)
        throw UsageError("key 'field.kind': lift-check needs a vector cusp drift");
    const int n = W.n;
    if (std::fabs(dot(W.offset, W.direction, n)) > 1e-12 * norm(W.offset, n))
        throw UsageError("key 'field.direction': must be orthogonal to field.offset for the manufactured solution");
    const Point a = W.offset;
    const double K = W.M + W.M0;
    const double eps = cfg.scalar("eps", drift_epsilon_choice(K, W.beta, W.R).epsilon);
    auto moll = std::make_shared<DriftMollification>(W, eps);
    std::optional<double> L, L1;
    if (cfg.has("L")) L = cfg.scalar("L", 0.0);
    if (cfg.has("L1")) L1 = cfg.scalar("L1", 0.0);
    auto stages = cfg.list_or("stage", {1, 2, 3, 4});
    auto hs = cfg.list_or("h", {eps / 8.0, eps / 16.0, eps / 32.0});
    CertifyOptions opt;
    opt.seed = cfg.seed;
    BaseRule u = [a, n](const Point& x) { return std::exp(dot(a, x, n)); };
    auto pts = residual_points(*moll, 0.5, eps + 4.0 * hs.front(), 16, cfg.seed);
    std::string body = certificate_csv_header() + "\n";
    Outcome o;
    bool ok = true;
    for (double sd : stages) {
        if (sd != std::floor(sd) || sd < 1 || sd > 4) throw UsageError("key 'stage' must be 1..4");
        auto op = build_stage(static_cast<int>(sd), moll, L, L1, opt);
        auto rep = lifted_residual(lift_solution(u, op), op, hs, pts);
        for (std::size_t i = 0; i < hs.size(); ++i)
            body += std::to_string(op.stage) + "," + fmt17(op.cert.min_eig) + "," + fmt17(op.cert.lipschitz_bound) +
                    "," + fmt17(hs[i]) + "," + fmt17(rep.value[i]) + "\n";
        ok = ok && op.cert.min_eig >= 0.5 && op.cert.min_eig >= op.cert.certified_min_eig;
        for (double r : rep.ratio) ok = ok && r >= 3.5 && r <= 4.5;
    }
    o.artifacts.push_back({"lift-check.csv", csv(cfg, body)});
    o.pass = ok;
    o.summary = "eps " + fmt17(eps) + ", K " + fmt17(K) + (ok ? ", certified" : ", certificate or order check failed");
    return o;
}

Outcome recalibrate(const ExperimentConfig& cfg)
{
    if (cfg.calibration_path.empty()) throw UsageError("key 'calibration': recalibrate needs a calibration file path");
    auto cases = cases_or(cfg, default_cases("recalibrate"));
    std::vector<BuiltCase> built;
    for (const auto& c : cases) built.push_back(build_case(c));
    auto results = calibrate(built);
    CalibrationStore store = CalibrationStore::load(cfg.calibration_path);
    const std::string run = "run-" + cfg.hash(), battery = hex64(battery_hash(cases));
    std::string body = "variant,C,c0,run,battery,cases,three_ball_ratio,min_increment\n";
    for (const auto& r : results) {
        store.recalibrate(r.variant, {r.C, r.c0, run, battery});
        body += to_string(r.variant) + "," + fmt17(r.C) + "," + fmt17(r.c0) + "," + run + "," + battery + "," +
                std::to_string(r.cases) + "," + fmt17(r.three_ball_ratio) + "," + fmt17(r.min_increment) + "\n";
    }
    Outcome o;
    o.artifacts.push_back({"recalibrate.csv", csv(cfg, body)});
    o.artifacts.push_back({"", store.emit()});  // calibration file, written to its own path
    o.summary = std::to_string(results.size()) + " variants calibrated";
    return o;
}

Outcome dispatch(const ExperimentConfig& cfg)
{
    const std::string& s = cfg.subcommand;
    if (s == "mollify-report") return mollify_report(cfg);
    if (s == "freq-profile") return freq_profile(cfg);
    if (s == "identity-check") return identity_check(cfg);
    if (s == "monotonicity") return monotonicity(cfg);
    if (s == "three-ball") return three_ball(cfg);
    if (s == "vanish-sweep") return vanish_sweep(cfg);
    if (s == "lift-check") return lift_check(cfg);
    if (s == "recalibrate") return recalibrate(cfg);
    throw UsageError("unknown subcommand '" + s + "'");
}

void write_file(const std::string& path, const std::string& body)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + path);
    out << body;
    if (!out) throw UsageError("cannot write " + path);
}

// Everything is computed before the first byte is written.
void emit(const ExperimentConfig& cfg, const Outcome& o)
{
    namespace fs = std::filesystem;
    if (!cfg.output_dir.empty()) {
        std::error_code ec;
        fs::create_directories(cfg.output_dir, ec);
        if (ec) throw UsageError("key 'output': cannot create " + cfg.output_dir);
    }
    for (const auto& a : o.artifacts) {
        if (a.name.empty()) {
            write_file(cfg.calibration_path, a.body);
        } else if (a.name.size() > 4 && a.name.compare(a.name.size() - 4, 4, ".csv") == 0) {
            if (cfg.output_dir.empty())
                std::cout << a.body;
            else
                write_file((fs::path(cfg.output_dir) / a.name).string(), a.body);
        } else {
            fs::path p(a.name);
            if (p.is_relative() && !cfg.output_dir.empty()) p = fs::path(cfg.output_dir) / p;
            write_file(p.string(), a.body);
        }
    }
    std::cout.flush();
}

void add_common(CLI::App* sub, Overrides& o)
{
    sub->add_option("-c,--config", o.config_file, "key=value config file");
    sub->add_option("--set", o.set, "override a config key (key=value, repeatable)");
    sub->add_option("--case", o.cases, "oracle case, e.g. \"bessel k=1 lambda=100\" (repeatable)");
    sub->add_option("--radius", o.radii, "radius (repeatable)");
    sub->add_option("--ladder", o.ladder, "geometric radius ladder lo,hi,count");
    for (const char* key : {"M", "K", "beta", "beta0", "eps", "alpha", "L_A", "L", "L1", "C", "c0", "stage"})
        sub->add_option(std::string("--") + key, o.params[key], std::string("values of ") + key)->delimiter(',');
    sub->add_option("--step", o.params["h"], "finite-difference steps of the lifted residual")->delimiter(',');
    sub->add_option("-o,--output", o.output, "output directory (CSV goes to stdout when unset)");
    sub->add_option("--calibration", o.calibration, "calibration file");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--svg", o.svg, "optional SVG plot path");
    sub->add_flag("--dry-run", o.dry_run, "print the resolved plan without computing");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"freqlab: frequency-function and three-ball experiment harness"};
    app.require_subcommand(1);
    Overrides o;
    const std::map<std::string, std::string> about{
        {"mollify-report", "mollification defect and gradient rates of a Holder field"},
        {"freq-profile", "frequency function profile on a radius ladder"},
        {"identity-check", "residuals of the frequency identities"},
        {"monotonicity", "corrected frequency monotonicity over a case battery"},
        {"three-ball", "three-ball inequality check over a case battery"},
        {"vanish-sweep", "vanishing order exponent sweep against the bound"},
        {"lift-check", "lifted operator certificates and residual convergence"},
        {"recalibrate", "recalibrate universal constants into a calibration file"}};
    for (const auto& name : subcommands()) {
        auto* sub = app.add_subcommand(name, about.at(name));
        add_common(sub, o);
        if (name == "identity-check") sub->add_option("--which", o.which, "all, I0, diffF, Hprime, Dprime or J");
        if (name == "vanish-sweep" || name == "three-ball") sub->add_option("--variant", o.variant, "ball variant");
        if (name == "mollify-report") sub->add_flag("--second", o.second, "include second gradients");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    try {
        const std::string sub = app.get_subcommands().front()->get_name();
        ExperimentConfig cfg = resolve(sub, o);
        if (o.dry_run) {
            std::cout << plan(cfg);
            return 0;
        }
        Outcome out = dispatch(cfg);
        emit(cfg, out);
        std::cerr << sub << ": " << out.summary << (out.pass ? "" : " [FAIL]") << "\n";
        return out.pass ? 0 : 3;
    } catch (const Error& e) {
        std::cerr << "freqlab: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "freqlab: error: " << e.what() << "\n";
        return 2;
    }
}
