#ifndef FREQLAB_CONFIG_HPP
#define FREQLAB_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "freqlab/core.hpp"
#include "freqlab/kv.hpp"
#include "freqlab/threeball.hpp"

namespace freqlab {

inline const std::vector<std::string>& subcommands()
{
    static const std::vector<std::string> s{"mollify-report", "freq-profile", "identity-check", "monotonicity",
                                            "three-ball",     "vanish-sweep", "lift-check",     "recalibrate"};
    return s;
}

// Flat key=value experiment description; repeated keys form lists.
// Field descriptors use the "field." prefix, oracle cases the "case" key.
struct ExperimentConfig {
    std::string subcommand;
    KvBlock field;                   // HolderField block without the prefix
    std::vector<std::string> cases;  // normalized case descriptors
    int n = 2;
    double R = 1.0;
    int P = 257;
    std::vector<double> radii;
    std::map<std::string, std::vector<double>> params;  // M K beta beta0 eps alpha L_A L L1 C c0 h
    std::map<std::string, std::string> options;         // which, variant, second, svg
    std::uint64_t seed = 1;
    std::string output_dir;
    std::string calibration_path;

    static const std::set<std::string>& param_keys()
    {
        static const std::set<std::string> k{"M", "K", "beta", "beta0", "eps", "alpha", "L_A", "L",
                                             "L1", "C", "c0", "h", "stage"};
        return k;
    }

    static const std::set<std::string>& option_keys()
    {
        static const std::set<std::string> k{"which", "variant", "second", "svg"};
        return k;
    }

    bool has(const std::string& key) const { return params.count(key) != 0; }

    const std::vector<double>& list(const std::string& key) const
    {
        static const std::vector<double> empty;
        auto it = params.find(key);
        return it == params.end() ? empty : it->second;
    }

    std::vector<double> list_or(const std::string& key, std::vector<double> fallback) const
    {
        return has(key) ? list(key) : fallback;
    }

    double scalar(const std::string& key, double fallback) const
    {
        if (!has(key)) return fallback;
        const auto& v = list(key);
        if (v.size() != 1) throw UsageError("key '" + key + "' expects a single value");
        return v[0];
    }

    std::string option(const std::string& key, const std::string& fallback = "") const
    {
        auto it = options.find(key);
        return it == options.end() ? fallback : it->second;
    }

    static ExperimentConfig from_kv(const KvBlock& kv)
    {
        ExperimentConfig c;
        for (const auto& [key, values] : kv.map()) {
            auto single = [&]() -> const std::string& {
                if (values.size() != 1) throw UsageError("key '" + key + "' given more than once");
                return values[0];
            };
            if (key == "subcommand") c.subcommand = single();
            else if (key.rfind("field.", 0) == 0) c.field.set_list(key.substr(6), values);
            else if (key == "case") c.cases = values;
            else if (key == "n") c.n = kv.integer("n", 2);
            else if (key == "R") c.R = KvBlock::to_double(key, single());
            else if (key == "P") c.P = kv.integer("P", 257);
            else if (key == "radius") c.radii = kv.nums("radius");
            else if (key == "seed") {
                const std::string& s = single();
                if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
                    throw UsageError("key 'seed' expects a non-negative integer");
                c.seed = std::stoull(s);
            } else if (key == "output") c.output_dir = single();
            else if (key == "calibration") c.calibration_path = single();
            else if (param_keys().count(key)) c.params[key] = kv.nums(key);
            else if (option_keys().count(key)) c.options[key] = single();
            else throw UsageError("unknown config key '" + key + "'");
        }
        c.validate();
        return c;
    }

    static ExperimentConfig parse(const std::string& text) { return from_kv(KvBlock::parse(text)); }

    KvBlock to_kv() const
    {
        KvBlock kv;
        if (!subcommand.empty()) kv.set("subcommand", subcommand);
        for (const auto& [k, v] : field.map()) kv.set_list("field." + k, v);
        if (!cases.empty()) kv.set_list("case", cases);
        kv.set("n", std::to_string(n));
        kv.set("R", fmt_short(R));
        kv.set("P", std::to_string(P));
        auto nums = [](const std::vector<double>& v) {
            std::vector<std::string> s;
            for (double x : v) s.push_back(fmt_short(x));
            return s;
        };
        if (!radii.empty()) kv.set_list("radius", nums(radii));
        for (const auto& [k, v] : params) kv.set_list(k, nums(v));
        for (const auto& [k, v] : options) kv.set(k, v);
        kv.set("seed", std::to_string(seed));
        if (!output_dir.empty()) kv.set("output", output_dir);
        if (!calibration_path.empty()) kv.set("calibration", calibration_path);
        return kv;
    }

    std::string emit() const { return to_kv().emit(); }

    // Hash of the normalized form without the output and calibration paths;
    // the calibration content is hashed separately.
    std::string hash() const
    {
        ExperimentConfig c = *this;
        c.output_dir.clear();
        c.calibration_path.clear();
        return hex64(fnv1a(c.emit()));
    }

    void validate() const
    {
        if (!subcommand.empty()) {
            bool known = false;
            for (const auto& s : subcommands()) known = known || s == subcommand;
            if (!known) throw UsageError("key 'subcommand': unknown subcommand '" + subcommand + "'");
        }
        if (n < 2 || n > 3) throw UsageError("key 'n' must be 2 or 3");
        if (!(R > 0.0)) throw UsageError("key 'R' must be positive");
        if (P < 65) throw UsageError("key 'P' must be >= 65");
        for (double r : radii)
            if (!(r > 0.0)) throw UsageError("key 'radius' must be strictly positive");
        for (const char* key : {"M", "K", "eps", "alpha", "h", "C", "c0"})
            for (double v : list(key))
                if (!(v > 0.0)) throw UsageError(std::string("key '") + key + "' must be strictly positive");
        for (const char* key : {"beta", "beta0"})
            for (double v : list(key))
                if (!(v > 0.0 && v <= 1.0)) throw UsageError(std::string("key '") + key + "' must lie in (0,1]");
    }
};

// Per-variant universal constants with provenance. Reads never modify the
// store; only recalibrate() replaces entries.
class CalibrationStore {
public:
    struct Entry {
        double C = 10.0;
        double c0 = 10.0;
        std::string run_id = "default";
        std::string battery_hash = "none";
        bool operator==(const Entry& o) const
        {
            return C == o.C && c0 == o.c0 && run_id == o.run_id && battery_hash == o.battery_hash;
        }
    };

    static CalibrationStore defaults() { return CalibrationStore{}; }

    static CalibrationStore parse(const std::string& text)
    {
        CalibrationStore s;
        KvBlock kv = KvBlock::parse(text);
        for (const auto& [key, vals] : kv.map()) {
            auto dot = key.find('.');
            if (dot == std::string::npos) throw UsageError("calibration key '" + key + "': expected variant.field");
            BallVariant v = ball_variant_from(key.substr(0, dot));
            const std::string f = key.substr(dot + 1);
            Entry& e = s.entries_[v];
            if (f == "C") e.C = kv.num(key);
            else if (f == "c0") e.c0 = kv.num(key);
            else if (f == "run") e.run_id = kv.str(key);
            else if (f == "battery") e.battery_hash = kv.str(key);
            else throw UsageError("calibration key '" + key + "': unknown field");
        }
        return s;
    }

    static CalibrationStore load(const std::string& path)
    {
        if (path.empty()) return defaults();
        std::ifstream in(path, std::ios::binary);
        if (!in) return defaults();
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    Entry get(BallVariant v) const
    {
        auto it = entries_.find(v);
        return it == entries_.end() ? Entry{} : it->second;
    }

    void recalibrate(BallVariant v, const Entry& e)
    {
        if (!(e.C > 0.0) || !(e.c0 > 0.0)) throw ParameterError("calibration constants must be positive");
        entries_[v] = e;
    }

    std::string emit() const
    {
        std::string s = "# freqlab calibration\n";
        for (BallVariant v : {BallVariant::holder_v, BallVariant::drift, BallVariant::variable_coef,
                              BallVariant::general}) {
            Entry e = get(v);
            const std::string p = to_string(v) + ".";
            s += p + "C=" + fmt_short(e.C) + "\n" + p + "c0=" + fmt_short(e.c0) + "\n" + p + "run=" + e.run_id +
                 "\n" + p + "battery=" + e.battery_hash + "\n";
        }
        return s;
    }

    void save(const std::string& path) const
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw UsageError("cannot write calibration file " + path);
        out << emit();
        if (!out) throw UsageError("cannot write calibration file " + path);
    }

    bool operator==(const CalibrationStore& o) const { return emit() == o.emit(); }

private:
    std::map<BallVariant, Entry> entries_;
};

}  // namespace freqlab

#endif  // FREQLAB_CONFIG_HPP
