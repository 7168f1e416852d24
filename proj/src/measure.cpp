#include "mkv/measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mkv/errors.hpp"
#include "mkv/stats.hpp"

namespace mkv {

namespace {

double check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw error(std::string(what) + ": non-finite value");
    return v;
}

} // namespace

double moment(std::span<const double> positions, int p) {
    if (positions.empty()) throw dimension_error("moment: empty particle state");
    if (p < 1) throw std::invalid_argument("moment: order must be >= 1");
    const std::size_t n = positions.size();
    if (n < 10000) {
        double s = 0.0;
        for (double x : positions) s += std::pow(x, p);
        return check_finite(s / static_cast<double>(n), "moment");
    }
    std::vector<double> powers(n);
    for (std::size_t i = 0; i < n; ++i) powers[i] = std::pow(positions[i], p);
    return check_finite(pairwise_sum(powers) / static_cast<double>(n), "moment");
}

double moment(const ParticleState& state, int p) { return moment(state.positions, p); }

double kernel_mean(std::span<const double> positions,
                   const std::function<double(double, double)>& kernel, double x) {
    if (positions.empty()) throw dimension_error("kernel_mean: empty particle state");
    double s = 0.0;
    for (double y : positions) s += kernel(x, y);
    return check_finite(s / static_cast<double>(positions.size()), "kernel_mean");
}

double kernel_mean(const ParticleState& state,
                   const std::function<double(double, double)>& kernel, double x) {
    return kernel_mean(state.positions, kernel, x);
}

double w2_empirical(const ParticleState& a, const ParticleState& b) {
    if (a.size() != b.size())
        throw dimension_error("w2_empirical: clouds have different sizes (" +
                              std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    if (a.size() == 0) throw dimension_error("w2_empirical: empty clouds");
    std::vector<double> sa = a.positions, sb = b.positions;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    double s = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) {
        const double d = sa[i] - sb[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(sa.size()));
}

double w2_to_dirac0(const ParticleState& state) { return std::sqrt(moment(state, 2)); }

} // namespace mkv
