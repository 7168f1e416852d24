#pragma once

#include <map>
#include <utility>
#include <vector>

#include "mkv/contrast.hpp"
#include "mkv/model.hpp"
#include "mkv/simulate.hpp"

namespace mkv {

// Plug-in estimate of the block-diagonal asymptotic covariance: a p1 x p1
// drift block and a p2 x p2 diffusion block, both symmetrized.
struct SigmaEstimate {
    std::size_t p1 = 0, p2 = 0;
    std::vector<double> sigma1; // row-major p1 x p1
    std::vector<double> sigma2; // row-major p2 x p2
};

// Riemann/empirical-measure plug-in over the panel, evaluated at `theta`
// (typically the estimate):
//   sigma1[k][l] = (2 delta_n / N) sum_{i,j} d_k b d_l b / c
//   sigma2[k][l] = (delta_n / N) sum_{i,j} d_k c d_l c / c^2.
SigmaEstimate estimate_sigma(const ModelSpec& model, const ThetaVector& theta,
                             const TrajectoryPanel& panel);

// Standard errors under the two-rate normalization: sqrt(2 inv(sigma1)_kk / N)
// for drift components, sqrt(2 inv(sigma2)_kk delta_n / N) for diffusion
// components. Blocks are inverted with a condition-number guard of 1e12.
std::vector<double> standard_errors(const SigmaEstimate& sigma, std::size_t N, double delta_n);

// Two-sided test of no interaction (theta_{1,2} = 0) in the linear model.
struct TestReport {
    double z = 0.0;       // Z = theta12_hat sqrt(N / V)
    double v = 0.0;       // variance estimate V = theta2_hat D / ((D - C) C)
    double p_value = 1.0; // 2 (1 - Phi(|z|))
    double theta12_hat = 0.0;
    std::map<double, bool> reject_at;
};

TestReport noninteraction_test(const TrajectoryPanel& panel, double alpha);

// Monte Carlo approximation of the identifiability functionals: simulate one
// panel at theta0 under cfg/grid (large N recommended) and evaluate
//   I(theta)  = (delta_n/N) sum (b(theta1) - b(theta0_1))^2 / c(theta2)
//   J(theta2) = (delta_n/N) sum [ c(theta0_2)/c(theta2) + log c(theta2) ]
// over left grid endpoints. Returns (I, J).
std::pair<double, double> identifiability_functionals(const ModelSpec& model,
                                                      const ThetaVector& theta,
                                                      const ThetaVector& theta0,
                                                      const SimConfig& cfg,
                                                      const ObservationGrid& grid);

} // namespace mkv
