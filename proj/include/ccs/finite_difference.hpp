#pragma once

#include <functional>

namespace ccs {

// Noise level of a computed function, estimated from a difference table of
// m + 1 equally spaced evaluations around x (More and Wild's ECnoise).
struct NoiseEstimate {
    double noise = 0.0;
    int order = 0;      // difference order at which the estimate stabilised
    bool ok = false;    // false when h is too small or too large for a stable estimate
};

NoiseEstimate estimate_noise(const std::function<double(double)>& f, double x, double h, int m = 8);

// Forward difference with the step chosen from the estimated noise and a
// second-derivative estimate. Falls back to a relative step when the noise
// estimate fails.
struct NoisyDerivative {
    double value = 0.0;
    double step = 0.0;
    double noise = 0.0;
};

NoisyDerivative noise_aware_derivative(const std::function<double(double)>& f, double x,
                                       double probe_step);

double central_difference(const std::function<double(double)>& f, double x, double h);

} // namespace ccs
