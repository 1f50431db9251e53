#ifndef FREQLAB_SPECIAL_HPP
#define FREQLAB_SPECIAL_HPP

#include <cmath>

#include "core.hpp"

namespace freqlab {

// q_nu(x) = x^{-nu} J_nu(x), entire in x. Power series near the origin,
// library Bessel function elsewhere.
inline double bessel_q(double nu, double x)
{
    x = std::fabs(x);
    if (x <= 2.0) {
        const double h = 0.25 * x * x;
        double term = 1.0 / std::tgamma(nu + 1.0);
        double sum = term;
        for (int m = 1; m < 60; ++m) {
            term *= -h / (m * (m + nu));
            sum += term;
            if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
        }
        return sum * std::pow(0.5, nu);
    }
    return std::cyl_bessel_j(nu, x) / std::pow(x, nu);
}

// Normalized so that 2^nu Gamma(nu+1) q_nu(0) = 1.
inline double bessel_q_normalized(double nu, double x)
{
    return std::pow(2.0, nu) * std::tgamma(nu + 1.0) * bessel_q(nu, x);
}

}  // namespace freqlab

#endif  // FREQLAB_SPECIAL_HPP
