#include "ccs/finite_difference.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ccs {

NoiseEstimate estimate_noise(const std::function<double(double)>& f, double x, double h, int m)
{
    std::vector<double> fv(m + 1);
    for (int i = 0; i <= m; ++i)
        fv[i] = f(x + (i - m / 2) * h);

    const double fmin = *std::min_element(fv.begin(), fv.end());
    const double fmax = *std::max_element(fv.begin(), fv.end());
    NoiseEstimate out;
    if (fmax - fmin == 0.0) {
        out.ok = true;  // constant at this resolution; noise below one ulp of f
        out.noise = 0.0;
        return out;
    }

    std::vector<double> level(m + 1, 0.0);
    std::vector<int> sign_change(m + 1, 0);
    double gamma = 1.0;
    std::vector<double> diff = fv;
    for (int k = 1; k <= m; ++k) {
        for (int i = 0; i + k <= m; ++i) diff[i] = diff[i + 1] - diff[i];
        const int n = m + 1 - k;
        double ss = 0.0;
        double dmin = diff[0], dmax = diff[0];
        for (int i = 0; i < n; ++i) {
            ss += diff[i] * diff[i];
            dmin = std::min(dmin, diff[i]);
            dmax = std::max(dmax, diff[i]);
        }
        sign_change[k] = (dmin < 0.0 && dmax > 0.0);
        gamma *= 0.5 * k / (2.0 * k - 1.0);  // (k!)^2 / (2k)!
        level[k] = std::sqrt(gamma * ss / n);
    }

    for (int k = 1; k <= m - 2; ++k) {
        const double lo = std::min({level[k], level[k + 1], level[k + 2]});
        const double hi = std::max({level[k], level[k + 1], level[k + 2]});
        if (hi <= 4.0 * lo && sign_change[k]) {
            out.noise = level[k];
            out.order = k;
            out.ok = true;
            return out;
        }
    }
    return out;
}

NoisyDerivative noise_aware_derivative(const std::function<double(double)>& f, double x,
                                       double probe_step)
{
    NoisyDerivative out;
    const NoiseEstimate est = estimate_noise(f, x, probe_step);
    const double f0 = f(x);
    double noise = est.ok ? est.noise : 0.0;
    noise = std::max(noise, std::abs(f0) * 1e-16);
    out.noise = noise;

    // Curvature from a second difference at a step large relative to the noise.
    const double h2 = std::max(std::pow(noise, 0.25), probe_step);
    const double curvature =
        std::abs(f(x + h2) - 2.0 * f0 + f(x - h2)) / (h2 * h2);

    double h;
    if (curvature > 0.0 && noise > 0.0)
        h = std::pow(8.0, 0.25) * std::sqrt(noise / curvature);
    else
        h = 1e-6 * std::max(1.0, std::abs(x));
    out.step = h;
    out.value = (f(x + h) - f0) / h;
    return out;
}

double central_difference(const std::function<double(double)>& f, double x, double h)
{
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace ccs
