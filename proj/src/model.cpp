#include "mkv/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mkv/errors.hpp"

namespace mkv {

std::vector<double> ThetaVector::flat() const {
    std::vector<double> out;
    out.reserve(size());
    out.insert(out.end(), theta1.begin(), theta1.end());
    out.insert(out.end(), theta2.begin(), theta2.end());
    return out;
}

ThetaVector ThetaVector::from_flat(std::span<const double> values, std::size_t p1, std::size_t p2) {
    if (values.size() != p1 + p2)
        throw dimension_error("ThetaVector::from_flat: expected " + std::to_string(p1 + p2) +
                              " components, got " + std::to_string(values.size()));
    ThetaVector t;
    t.theta1.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(p1));
    t.theta2.assign(values.begin() + static_cast<std::ptrdiff_t>(p1), values.end());
    return t;
}

void ParamBox::validate() const {
    if (lower.size() != upper.size() || lower.empty())
        throw dimension_error("ParamBox: bound vectors must be nonempty and equal length");
    for (std::size_t k = 0; k < lower.size(); ++k)
        if (!(lower[k] < upper[k]))
            throw dimension_error("ParamBox: lower[" + std::to_string(k) + "] must be < upper[" +
                                  std::to_string(k) + "]");
}

bool ParamBox::contains(std::span<const double> flat) const {
    if (flat.size() != lower.size()) return false;
    for (std::size_t k = 0; k < flat.size(); ++k)
        if (flat[k] < lower[k] || flat[k] > upper[k]) return false;
    return true;
}

std::vector<double> ParamBox::clip(std::span<const double> flat) const {
    if (flat.size() != lower.size())
        throw dimension_error("ParamBox::clip: dimension mismatch");
    std::vector<double> out(flat.begin(), flat.end());
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (out[k] < lower[k]) out[k] = lower[k];
        if (out[k] > upper[k]) out[k] = upper[k];
    }
    return out;
}

bool ParamBox::on_boundary(std::span<const double> flat) const {
    for (std::size_t k = 0; k < flat.size(); ++k) {
        const double tol = 1e-9 * (upper[k] - lower[k]);
        if (flat[k] - lower[k] <= tol || upper[k] - flat[k] <= tol) return true;
    }
    return false;
}

std::vector<double> ParamBox::center() const {
    std::vector<double> c(lower.size());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = 0.5 * (lower[k] + upper[k]);
    return c;
}

// ---------------------------------------------------------------------------
// Evaluation wrappers
// ---------------------------------------------------------------------------

namespace {

void check_eval_inputs(const ModelSpec& model, std::span<const double> theta, std::size_t len,
                       std::size_t i, const ParticleState& particles, const char* what) {
    if (theta.size() != len)
        throw dimension_error(std::string(what) + ": theta block has length " +
                              std::to_string(theta.size()) + ", model '" + model.name +
                              "' expects " + std::to_string(len));
    if (i >= particles.size())
        throw dimension_error(std::string(what) + ": particle index " + std::to_string(i) +
                              " out of range (N=" + std::to_string(particles.size()) + ")");
}

std::string format_theta(std::span<const double> theta) {
    std::ostringstream os;
    os << "(";
    for (std::size_t k = 0; k < theta.size(); ++k) os << (k ? "," : "") << theta[k];
    os << ")";
    return os.str();
}

} // namespace

double eval_drift(const ModelSpec& model, std::span<const double> theta1, std::size_t i,
                  const ParticleState& particles) {
    check_eval_inputs(model, theta1, static_cast<std::size_t>(model.p1), i, particles, "eval_drift");
    const double b = model.drift(theta1, particles.positions[i], particles.positions);
    if (!std::isfinite(b))
        throw model_eval_error("eval_drift: non-finite drift for model '" + model.name +
                                   "' at theta1=" + format_theta(theta1) + ", particle " +
                                   std::to_string(i),
                               static_cast<int>(i));
    return b;
}

double eval_diffusion(const ModelSpec& model, std::span<const double> theta2, std::size_t i,
                      const ParticleState& particles) {
    check_eval_inputs(model, theta2, static_cast<std::size_t>(model.p2), i, particles,
                      "eval_diffusion");
    const double a = model.diffusion(theta2, particles.positions[i], particles.positions);
    if (!std::isfinite(a) || a <= 0.0)
        throw assumption_violation("eval_diffusion: diffusion coefficient not strictly positive for model '" +
                                   model.name + "' at theta2=" + format_theta(theta2) +
                                   ", particle " + std::to_string(i) + " (a=" + std::to_string(a) + ")");
    return a;
}

void eval_drift_all(const ModelSpec& model, std::span<const double> theta1,
                    std::span<const double> particles, std::span<double> out) {
    if (out.size() != particles.size())
        throw dimension_error("eval_drift_all: output span size mismatch");
    if (model.drift_column) {
        model.drift_column(theta1, particles, out);
        return;
    }
    for (std::size_t i = 0; i < particles.size(); ++i)
        out[i] = model.drift(theta1, particles[i], particles);
}

void eval_diffusion_all(const ModelSpec& model, std::span<const double> theta2,
                        std::span<const double> particles, std::span<double> out) {
    if (out.size() != particles.size())
        throw dimension_error("eval_diffusion_all: output span size mismatch");
    if (model.diffusion_column) {
        model.diffusion_column(theta2, particles, out);
        return;
    }
    for (std::size_t i = 0; i < particles.size(); ++i)
        out[i] = model.diffusion(theta2, particles[i], particles);
}

void fd_grad_drift(const ModelSpec& model, std::span<const double> theta1, double x,
                   std::span<const double> particles, std::span<double> out) {
    std::vector<double> t(theta1.begin(), theta1.end());
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double h = 1e-6 * (1.0 + std::abs(t[k]));
        const double saved = t[k];
        t[k] = saved + h;
        const double up = model.drift(t, x, particles);
        t[k] = saved - h;
        const double dn = model.drift(t, x, particles);
        t[k] = saved;
        out[k] = (up - dn) / (2.0 * h);
    }
}

void fd_grad_csq(const ModelSpec& model, std::span<const double> theta2, double x,
                 std::span<const double> particles, std::span<double> out) {
    std::vector<double> t(theta2.begin(), theta2.end());
    const auto csq = [&](std::span<const double> th) {
        const double a = model.diffusion(th, x, particles);
        return a * a;
    };
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double h = 1e-6 * (1.0 + std::abs(t[k]));
        const double saved = t[k];
        t[k] = saved + h;
        const double up = csq(t);
        t[k] = saved - h;
        const double dn = csq(t);
        t[k] = saved;
        out[k] = (up - dn) / (2.0 * h);
    }
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

namespace {

double mean_of(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double mean_sq_of(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x * x;
    return s / static_cast<double>(xs.size());
}

// Smooth bump exp(-0.01 / (1 - (u - center)^2)) on (center-1, center+1),
// extended by 0 outside; the underflow guard keeps value*gradient free of
// 0 * inf at the window edge.
double bump(double u, double center) {
    const double v = u - center;
    const double w = 1.0 - v * v;
    if (w <= 0.0) return 0.0;
    return std::exp(-0.01 / w);
}

double bump_dcenter(double u, double center) {
    const double v = u - center;
    const double w = 1.0 - v * v;
    if (w <= 0.0) return 0.0;
    const double e = std::exp(-0.01 / w);
    if (e == 0.0) return 0.0;
    return e * 0.02 * v / (w * w);
}

ModelSpec make_linear() {
    ModelSpec m;
    m.name = "linear";
    m.p1 = 2;
    m.p2 = 1;
    m.closed_form = ClosedForm::linear_model;
    m.has_analytic_grads = true;
    m.drift = [](std::span<const double> th, double x, std::span<const double> ps) {
        return -(th[0] * x + th[1] * (x - mean_of(ps)));
    };
    m.drift_column = [](std::span<const double> th, std::span<const double> ps,
                        std::span<double> out) {
        const double mean = mean_of(ps);
        for (std::size_t i = 0; i < ps.size(); ++i)
            out[i] = -(th[0] * ps[i] + th[1] * (ps[i] - mean));
    };
    m.diffusion = [](std::span<const double> th, double, std::span<const double>) {
        return std::sqrt(th[0]);
    };
    m.grad_drift_theta1 = [](std::span<const double>, double x, std::span<const double> ps,
                             std::span<double> out) {
        out[0] = -x;
        out[1] = -(x - mean_of(ps));
    };
    m.grad_csq_theta2 = [](std::span<const double>, double, std::span<const double>,
                           std::span<double> out) { out[0] = 1.0; };
    m.c_zero = [](double, std::span<const double>) { return 1.0; };
    m.kernel_form = [](std::vector<double> th2) {
        KernelDiffusionSpec k;
        k.kernel = [](double, double) { return 0.0; };
        k.a_tilde = [th2](double, double) { return std::sqrt(th2[0]); };
        return k;
    };
    return m;
}

ModelSpec make_kuramoto() {
    ModelSpec m;
    m.name = "kuramoto";
    m.p1 = 1;
    m.p2 = 1;
    m.has_analytic_grads = true;
    m.drift = [](std::span<const double> th, double x, std::span<const double> ps) {
        double s = 0.0;
        for (double y : ps) s += std::sin(x - y);
        return -th[0] * s / static_cast<double>(ps.size());
    };
    m.drift_column = [](std::span<const double> th, std::span<const double> ps,
                        std::span<double> out) {
        const std::size_t n = ps.size();
        for (auto& v : out) v = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = i + 1; k < n; ++k) {
                const double s = std::sin(ps[i] - ps[k]);
                out[i] += s;
                out[k] -= s;
            }
        const double scale = -th[0] / static_cast<double>(n);
        for (auto& v : out) v *= scale;
    };
    m.diffusion = [](std::span<const double> th, double, std::span<const double>) {
        return th[0];
    };
    m.grad_drift_theta1 = [](std::span<const double>, double x, std::span<const double> ps,
                             std::span<double> out) {
        double s = 0.0;
        for (double y : ps) s += std::sin(x - y);
        out[0] = -s / static_cast<double>(ps.size());
    };
    m.grad_csq_theta2 = [](std::span<const double> th, double, std::span<const double>,
                           std::span<double> out) { out[0] = 2.0 * th[0]; };
    return m;
}

ModelSpec make_pearson() {
    ModelSpec m;
    m.name = "pearson_meanfield";
    m.p1 = 3;
    m.p2 = 1;
    m.has_analytic_grads = true;
    m.drift = [](std::span<const double> th, double x, std::span<const double> ps) {
        return th[0] + th[1] * mean_of(ps) - th[2] * x;
    };
    m.drift_column = [](std::span<const double> th, std::span<const double> ps,
                        std::span<double> out) {
        const double mean = mean_of(ps);
        for (std::size_t i = 0; i < ps.size(); ++i) out[i] = th[0] + th[1] * mean - th[2] * ps[i];
    };
    m.diffusion = [](std::span<const double> th, double x, std::span<const double>) {
        return th[0] * std::sqrt(1.0 + x * x);
    };
    m.grad_drift_theta1 = [](std::span<const double>, double x, std::span<const double> ps,
                             std::span<double> out) {
        out[0] = 1.0;
        out[1] = mean_of(ps);
        out[2] = -x;
    };
    m.grad_csq_theta2 = [](std::span<const double> th, double x, std::span<const double>,
                           std::span<double> out) { out[0] = 2.0 * th[0] * (1.0 + x * x); };
    m.kernel_form = [](std::vector<double> th2) {
        KernelDiffusionSpec k;
        k.kernel = [](double, double) { return 0.0; };
        k.a_tilde = [th2](double x, double) { return th2[0] * std::sqrt(1.0 + x * x); };
        return k;
    };
    return m;
}

ModelSpec make_meanfield_ou() {
    ModelSpec m;
    m.name = "meanfield_ou";
    m.p1 = 3;
    m.p2 = 2;
    m.has_analytic_grads = true;
    m.drift = [](std::span<const double> th, double x, std::span<const double> ps) {
        return th[0] + th[1] * mean_of(ps) - th[2] * x;
    };
    m.drift_column = [](std::span<const double> th, std::span<const double> ps,
                        std::span<double> out) {
        const double mean = mean_of(ps);
        for (std::size_t i = 0; i < ps.size(); ++i) out[i] = th[0] + th[1] * mean - th[2] * ps[i];
    };
    m.diffusion = [](std::span<const double> th, double, std::span<const double> ps) {
        return th[0] + th[1] * std::sqrt(mean_sq_of(ps));
    };
    m.diffusion_column = [](std::span<const double> th, std::span<const double> ps,
                            std::span<double> out) {
        const double a = th[0] + th[1] * std::sqrt(mean_sq_of(ps));
        for (auto& v : out) v = a;
    };
    m.grad_drift_theta1 = [](std::span<const double>, double x, std::span<const double> ps,
                             std::span<double> out) {
        out[0] = 1.0;
        out[1] = mean_of(ps);
        out[2] = -x;
    };
    m.grad_csq_theta2 = [](std::span<const double> th, double, std::span<const double> ps,
                           std::span<double> out) {
        const double root = std::sqrt(mean_sq_of(ps));
        const double a = th[0] + th[1] * root;
        out[0] = 2.0 * a;
        out[1] = 2.0 * a * root;
    };
    m.kernel_form = [](std::vector<double> th2) {
        KernelDiffusionSpec k;
        k.kernel = [](double, double y) { return y * y; };
        k.a_tilde = [th2](double, double z) { return th2[0] + th2[1] * std::sqrt(z); };
        return k;
    };
    return m;
}

ModelSpec make_opinion_smooth() {
    ModelSpec m;
    m.name = "opinion_smooth";
    m.p1 = 2;
    m.p2 = 1;
    m.closed_form = ClosedForm::multiplicative_theta2;
    m.has_analytic_grads = true;
    // phi(u) = theta12 * bump(u, theta11) on [theta11 - 1, theta11 + 1].
    m.drift = [](std::span<const double> th, double x, std::span<const double> ps) {
        double s = 0.0;
        for (double y : ps) {
            const double d = x - y;
            s += bump(std::abs(d), th[0]) * d;
        }
        return -th[1] * s / static_cast<double>(ps.size());
    };
    m.drift_column = [](std::span<const double> th, std::span<const double> ps,
                        std::span<double> out) {
        const std::size_t n = ps.size();
        const double center = th[0];
        for (auto& v : out) v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double xi = ps[i];
            for (std::size_t k = i + 1; k < n; ++k) {
                const double d = xi - ps[k];
                const double w = bump(std::abs(d), center) * d;
                out[i] += w;
                out[k] -= w;
            }
        }
        const double scale = -th[1] / static_cast<double>(n);
        for (auto& v : out) v *= scale;
    };
    m.diffusion = [](std::span<const double> th, double, std::span<const double>) {
        return std::sqrt(th[0]);
    };
    m.grad_drift_theta1 = [](std::span<const double> th, double x, std::span<const double> ps,
                             std::span<double> out) {
        double s = 0.0, ds = 0.0;
        for (double y : ps) {
            const double d = x - y;
            const double u = std::abs(d);
            s += bump(u, th[0]) * d;
            ds += bump_dcenter(u, th[0]) * d;
        }
        const double n = static_cast<double>(ps.size());
        out[0] = -th[1] * ds / n;
        out[1] = -s / n;
    };
    m.grad_csq_theta2 = [](std::span<const double>, double, std::span<const double>,
                           std::span<double> out) { out[0] = 1.0; };
    m.c_zero = [](double, std::span<const double>) { return 1.0; };
    return m;
}

} // namespace

ModelSpec opinion_indicator_model(double width) {
    if (width < 0.0) throw std::invalid_argument("opinion_indicator_model: width must be >= 0");
    ModelSpec m;
    m.name = "opinion_indicator";
    m.p1 = 2;
    m.p2 = 1;
    m.fd_gradients_ok = width > 0.0;
    // phi(u) = theta11 * 1[0, theta12](u); width > 0 swaps the indicator for a
    // logistic step so the contrast becomes differentiable in theta12.
    const auto influence = [width](std::span<const double> th, double u) {
        if (width == 0.0) return u <= th[1] ? th[0] : 0.0;
        return th[0] / (1.0 + std::exp((u - th[1]) / width));
    };
    m.drift = [influence](std::span<const double> th, double x, std::span<const double> ps) {
        double s = 0.0;
        for (double y : ps) {
            const double d = x - y;
            s += influence(th, std::abs(d)) * d;
        }
        return -s / static_cast<double>(ps.size());
    };
    m.drift_column = [influence](std::span<const double> th, std::span<const double> ps,
                                 std::span<double> out) {
        const std::size_t n = ps.size();
        for (auto& v : out) v = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = i + 1; k < n; ++k) {
                const double d = ps[i] - ps[k];
                const double w = influence(th, std::abs(d)) * d;
                out[i] += w;
                out[k] -= w;
            }
        for (auto& v : out) v /= -static_cast<double>(n);
    };
    m.diffusion = [](std::span<const double> th, double, std::span<const double>) {
        return th[0];
    };
    m.grad_csq_theta2 = [](std::span<const double> th, double, std::span<const double>,
                           std::span<double> out) { out[0] = 2.0 * th[0]; };
    if (width > 0.0) {
        m.has_analytic_grads = true;
        m.grad_drift_theta1 = [width](std::span<const double> th, double x,
                                      std::span<const double> ps, std::span<double> out) {
            double s0 = 0.0, s1 = 0.0;
            for (double y : ps) {
                const double d = x - y;
                const double u = std::abs(d);
                const double sig = 1.0 / (1.0 + std::exp((u - th[1]) / width));
                s0 += sig * d;
                s1 += th[0] * sig * (1.0 - sig) / width * d;
            }
            const double n = static_cast<double>(ps.size());
            out[0] = -s0 / n;
            out[1] = -s1 / n;
        };
    }
    return m;
}

ModelSpec builtin_model(const std::string& name) {
    if (name == "linear") return make_linear();
    if (name == "kuramoto") return make_kuramoto();
    if (name == "pearson_meanfield") return make_pearson();
    if (name == "meanfield_ou") return make_meanfield_ou();
    if (name == "opinion_smooth") return make_opinion_smooth();
    if (name == "opinion_indicator") return opinion_indicator_model(0.0);
    throw std::invalid_argument("builtin_model: unknown model '" + name + "'");
}

std::vector<std::string> builtin_model_names() {
    return {"linear", "kuramoto", "opinion_indicator", "opinion_smooth", "pearson_meanfield",
            "meanfield_ou"};
}

} // namespace mkv
