#ifndef FREQLAB_KV_HPP
#define FREQLAB_KV_HPP

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"

namespace freqlab {

// Flat key=value text: one pair per line, '#' starts a comment line,
// repeated keys accumulate into a list in file order.
class KvBlock {
public:
    using Map = std::map<std::string, std::vector<std::string>>;

    static std::string trim(const std::string& s)
    {
        auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static KvBlock parse(const std::string& text)
    {
        KvBlock kv;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            auto eq = t.find('=');
            if (eq == std::string::npos || eq == 0)
                throw UsageError("line " + std::to_string(lineno) + ": expected key=value");
            kv.add(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        }
        return kv;
    }

    void add(const std::string& key, const std::string& value) { map_[key].push_back(value); }
    void set(const std::string& key, const std::string& value) { map_[key] = {value}; }
    void set_list(const std::string& key, const std::vector<std::string>& v) { map_[key] = v; }
    void erase(const std::string& key) { map_.erase(key); }

    bool has(const std::string& key) const { return map_.count(key) != 0; }

    const std::vector<std::string>& list(const std::string& key) const
    {
        static const std::vector<std::string> empty;
        auto it = map_.find(key);
        return it == map_.end() ? empty : it->second;
    }

    std::string str(const std::string& key) const
    {
        const auto& v = list(key);
        if (v.empty()) throw UsageError("missing key '" + key + "'");
        if (v.size() != 1) throw UsageError("key '" + key + "' expects a single value");
        return v.front();
    }

    std::string str(const std::string& key, const std::string& fallback) const
    {
        return has(key) ? str(key) : fallback;
    }

    static double to_double(const std::string& key, const std::string& s)
    {
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw UsageError("key '" + key + "': not a number: '" + s + "'");
        }
    }

    double num(const std::string& key) const { return to_double(key, str(key)); }
    double num(const std::string& key, double fallback) const { return has(key) ? num(key) : fallback; }

    int integer(const std::string& key, int fallback) const
    {
        if (!has(key)) return fallback;
        double v = num(key);
        if (v != std::floor(v)) throw UsageError("key '" + key + "' expects an integer");
        return static_cast<int>(v);
    }

    std::vector<double> nums(const std::string& key) const
    {
        std::vector<double> out;
        for (const auto& s : list(key)) out.push_back(to_double(key, s));
        return out;
    }

    // Sorted keys, list order preserved: the normalized form.
    std::string emit() const
    {
        std::string out;
        for (const auto& [k, vs] : map_)
            for (const auto& v : vs) out += k + "=" + v + "\n";
        return out;
    }

    const Map& map() const { return map_; }
    bool operator==(const KvBlock& o) const { return map_ == o.map_; }

private:
    Map map_;
};

}  // namespace freqlab

#endif  // FREQLAB_KV_HPP
