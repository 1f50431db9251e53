#ifndef FREQLAB_CORE_HPP
#define FREQLAB_CORE_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace freqlab {

// Exit codes follow the CLI contract: 1 usage, 2 math/degenerate, 3 suite failure.
class Error : public std::runtime_error {
public:
    Error(const std::string& what, int code) : std::runtime_error(what), code_(code) {}
    int exit_code() const { return code_; }

private:
    int code_;
};

struct UsageError : Error {
    explicit UsageError(const std::string& w) : Error("usage error: " + w, 1) {}
};
struct ParameterError : Error {
    explicit ParameterError(const std::string& w) : Error("parameter error: " + w, 2) {}
};
struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error("domain error: " + w, 2) {}
};
struct ResolutionError : Error {
    explicit ResolutionError(const std::string& w) : Error("resolution error: " + w, 2) {}
};
struct DegenerateError : Error {
    explicit DegenerateError(const std::string& w) : Error("degenerate solution: " + w, 2) {}
};
struct NearSingularError : Error {
    explicit NearSingularError(const std::string& w) : Error("near-singular operator: " + w, 2) {}
};
struct AdmissibilityError : Error {
    explicit AdmissibilityError(const std::string& w) : Error("admissibility failure: " + w, 2) {}
};
struct GridMismatchError : Error {
    explicit GridMismatchError(const std::string& w) : Error("grid mismatch: " + w, 2) {}
};
struct CalibrationError : Error {
    explicit CalibrationError(const std::string& w) : Error("calibration failure: " + w, 3) {}
};

constexpr int kMaxDim = 3;
constexpr double kPi = 3.14159265358979323846;

// Points carry up to three coordinates; unused trailing entries stay zero.
using Point = std::array<double, kMaxDim>;
using Mat = std::array<std::array<double, kMaxDim>, kMaxDim>;

inline double dot(const Point& a, const Point& b, int n)
{
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Point& a, int n) { return dot(a, a, n); }
inline double norm(const Point& a, int n) { return std::sqrt(norm2(a, n)); }

inline Point sub(const Point& a, const Point& b)
{
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Point add(const Point& a, const Point& b)
{
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

inline Point scale(const Point& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }

inline Point matvec(const Mat& A, const Point& x, int n)
{
    Point y{0.0, 0.0, 0.0};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) y[i] += A[i][j] * x[j];
    return y;
}

inline Mat identity_mat(int n)
{
    Mat A{};
    for (int i = 0; i < n; ++i) A[i][i] = 1.0;
    return A;
}

inline int ipow(int base, int e)
{
    int r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

// 17 significant digits, the CSV contract.
inline std::string fmt17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Shortest text that parses back to the same double; used in config files.
inline std::string fmt_short(double v)
{
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Static contiguous chunks; each index writes only its own slot, so results
// do not depend on the thread count.
template <typename F>
void parallel_for(std::size_t count, F&& f)
{
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    std::size_t workers = std::min<std::size_t>(hw, count / 64 + 1);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk, hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &f] {
            for (std::size_t i = lo; i < hi; ++i) f(i);
        });
    }
    for (auto& t : pool) t.join();
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // rms of fit residuals
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw ParameterError("line fit needs >= 2 points");
    const double m = static_cast<double>(x.size());
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw ParameterError("line fit with coincident abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double e = y[i] - (f.intercept + f.slope * x[i]);
        ss += e * e;
    }
    f.residual = std::sqrt(ss / m);
    return f;
}

inline std::vector<double> geometric_ladder(double lo, double hi, int count)
{
    if (count < 2 || !(lo > 0.0) || !(hi > lo)) throw ParameterError("invalid geometric ladder");
    std::vector<double> r(count);
    double q = std::log(hi / lo) / (count - 1);
    for (int i = 0; i < count; ++i) r[i] = lo * std::exp(q * i);
    r.back() = hi;
    return r;
}

}  // namespace freqlab

#endif  // FREQLAB_CORE_HPP
