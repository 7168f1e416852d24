#pragma once

#include <functional>
#include <span>
#include <vector>

namespace mkv {

// A particle cloud at one instant; the empirical measure is the uniform
// atom measure over `positions`.
struct ParticleState {
    std::vector<double> positions;
    double time = 0.0;

    std::size_t size() const { return positions.size(); }
};

// (1/N) sum positions[i]^p. Pairwise reduction above 10^4 atoms so long
// Monte Carlo accumulations do not drift.
double moment(std::span<const double> positions, int p);
double moment(const ParticleState& state, int p);

// (1/N) sum_j K(x, positions[j]).
double kernel_mean(std::span<const double> positions,
                   const std::function<double(double, double)>& kernel, double x);
double kernel_mean(const ParticleState& state,
                   const std::function<double(double, double)>& kernel, double x);

// Wasserstein-2 distance between two equal-size equal-weight atom clouds:
// sqrt((1/N) sum (a_(i) - b_(i))^2) over sorted positions, which realizes the
// optimal coupling in one dimension. Unequal sizes are rejected.
double w2_empirical(const ParticleState& a, const ParticleState& b);

// W2 distance to the point mass at zero: sqrt of the second moment.
double w2_to_dirac0(const ParticleState& state);

} // namespace mkv
