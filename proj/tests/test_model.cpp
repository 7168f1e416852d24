#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "mkv/errors.hpp"
#include "mkv/model.hpp"
#include "mkv/montecarlo.hpp"

using namespace mkv;

namespace {

std::vector<double> random_in_box(const ParamBox& box, std::mt19937_64& gen) {
    std::vector<double> x(box.dim());
    for (std::size_t k = 0; k < x.size(); ++k) {
        std::uniform_real_distribution<double> u(box.lower[k], box.upper[k]);
        x[k] = u(gen);
    }
    return x;
}

ParticleState random_state(std::size_t n, std::mt19937_64& gen, double lo = -2.0,
                           double hi = 2.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    ParticleState s;
    for (std::size_t i = 0; i < n; ++i) s.positions.push_back(u(gen));
    return s;
}

} // namespace

TEST_CASE("catalog dimensions and closed-form flags") {
    const ModelSpec linear = builtin_model("linear");
    CHECK(linear.p1 == 2);
    CHECK(linear.p2 == 1);
    CHECK(linear.closed_form == ClosedForm::linear_model);
    CHECK(linear.has_analytic_grads);

    const ModelSpec opinion = builtin_model("opinion_smooth");
    CHECK(opinion.p1 == 2);
    CHECK(opinion.p2 == 1);
    CHECK(opinion.closed_form == ClosedForm::multiplicative_theta2);
    CHECK(opinion.has_analytic_grads);

    const ModelSpec kuramoto = builtin_model("kuramoto");
    CHECK(kuramoto.p1 == 1);
    CHECK(kuramoto.p2 == 1);
    CHECK(kuramoto.closed_form == ClosedForm::none);

    CHECK(builtin_model("meanfield_ou").p2 == 2);
    CHECK_THROWS_AS(builtin_model("no_such_model"), std::invalid_argument);
}

TEST_CASE("drift evaluations match hand values") {
    const ModelSpec linear = builtin_model("linear");
    ParticleState s{{1.0, 3.0}, 0.0};
    // -(0.5*1 + 1*(1 - 2)) = 0.5
    CHECK(eval_drift(linear, std::vector<double>{0.5, 1.0}, 0, s) ==
          doctest::Approx(0.5).epsilon(1e-15));

    const ModelSpec kuramoto = builtin_model("kuramoto");
    ParticleState aligned{{0.7, 0.7, 0.7}, 0.0};
    CHECK(eval_drift(kuramoto, std::vector<double>{2.0}, 1, aligned) == 0.0);

    // Outside the interaction window the opinion drift vanishes.
    const ModelSpec opinion = builtin_model("opinion_smooth");
    ParticleState split{{0.0, 10.0}, 0.0};
    CHECK(eval_drift(opinion, std::vector<double>{-0.5, 2.0}, 0, split) == 0.0);
    CHECK(eval_drift(opinion, std::vector<double>{-0.5, 2.0}, 1, split) == 0.0);

    const ModelSpec indicator = builtin_model("opinion_indicator");
    ParticleState near{{0.0, 0.3}, 0.0};
    // phi(u) = 2 * 1[u <= 0.5]; b(0) = -(1/2) * 2 * (0 - 0.3) = 0.3
    CHECK(eval_drift(indicator, std::vector<double>{2.0, 0.5}, 0, near) ==
          doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("diffusion evaluations match hand values and enforce positivity") {
    const ModelSpec linear = builtin_model("linear");
    ParticleState s{{1.0, 3.0}, 0.0};
    CHECK(eval_diffusion(linear, std::vector<double>{1.0}, 0, s) == 1.0);
    CHECK_THROWS_AS(eval_diffusion(linear, std::vector<double>{-1.0}, 0, s),
                    assumption_violation);

    const ModelSpec ou = builtin_model("meanfield_ou");
    ParticleState t{{3.0, 4.0}, 0.0};
    CHECK(eval_diffusion(ou, std::vector<double>{1.0, 2.0}, 0, t) ==
          doctest::Approx(1.0 + 2.0 * std::sqrt(12.5)).epsilon(1e-15));

    const ModelSpec pearson = builtin_model("pearson_meanfield");
    ParticleState origin{{0.0, 1.0}, 0.0};
    CHECK(eval_diffusion(pearson, std::vector<double>{2.0}, 0, origin) == 2.0);

    CHECK_THROWS_AS(eval_drift(linear, std::vector<double>{0.5}, 0, s), dimension_error);
    CHECK_THROWS_AS(eval_drift(linear, std::vector<double>{0.5, 1.0}, 5, s), dimension_error);
}

TEST_CASE("analytic gradients match central finite differences") {
    std::mt19937_64 gen(314159);
    for (const char* name :
         {"linear", "kuramoto", "opinion_smooth", "pearson_meanfield", "meanfield_ou"}) {
        const ModelSpec model = builtin_model(name);
        REQUIRE(model.has_analytic_grads);
        const ParamBox box = default_box(model);
        for (int trial = 0; trial < 20; ++trial) {
            const ParticleState state = random_state(8, gen);
            const std::vector<double> flat = random_in_box(box, gen);
            const ThetaVector theta =
                ThetaVector::from_flat(flat, model.p1, model.p2);
            const double x = state.positions[3];

            if (model.name == "opinion_smooth") {
                // The bump kernel's higher derivatives blow up at the window
                // edge, which breaks the fixed-step difference oracle; keep
                // the sample away from it.
                bool ill_conditioned = false;
                for (double y : state.positions) {
                    const double v = std::abs(x - y) - theta.theta1[0];
                    if (std::abs(1.0 - std::abs(v)) < 0.15) ill_conditioned = true;
                }
                if (ill_conditioned) continue;
            }

            std::vector<double> analytic(model.p1), fd(model.p1);
            model.grad_drift_theta1(theta.theta1, x, state.positions, analytic);
            fd_grad_drift(model, theta.theta1, x, state.positions, fd);
            for (int k = 0; k < model.p1; ++k)
                CHECK(std::abs(analytic[k] - fd[k]) <=
                      1e-6 * (1.0 + std::abs(analytic[k])));

            std::vector<double> analytic2(model.p2), fd2(model.p2);
            model.grad_csq_theta2(theta.theta2, x, state.positions, analytic2);
            fd_grad_csq(model, theta.theta2, x, state.positions, fd2);
            for (int k = 0; k < model.p2; ++k)
                CHECK(std::abs(analytic2[k] - fd2[k]) <=
                      1e-6 * (1.0 + std::abs(analytic2[k])));
        }
    }
}

TEST_CASE("mollified indicator gradients match finite differences") {
    const ModelSpec model = opinion_indicator_model(0.05);
    REQUIRE(model.has_analytic_grads);
    std::mt19937_64 gen(99);
    for (int trial = 0; trial < 20; ++trial) {
        const ParticleState state = random_state(6, gen);
        std::uniform_real_distribution<double> u1(-3.0, 3.0), u2(0.2, 2.0);
        const std::vector<double> theta1 = {u1(gen), u2(gen)};
        const double x = state.positions[0];
        std::vector<double> analytic(2), fd(2);
        model.grad_drift_theta1(theta1, x, state.positions, analytic);
        fd_grad_drift(model, theta1, x, state.positions, fd);
        for (int k = 0; k < 2; ++k)
            CHECK(std::abs(analytic[k] - fd[k]) <= 1e-5 * (1.0 + std::abs(analytic[k])));
    }
    CHECK_FALSE(builtin_model("opinion_indicator").fd_gradients_ok);
}

TEST_CASE("kernel-convolution form reproduces the diffusion evaluator") {
    std::mt19937_64 gen(7);
    for (const char* name : {"linear", "pearson_meanfield", "meanfield_ou"}) {
        const ModelSpec model = builtin_model(name);
        REQUIRE(model.kernel_form);
        const ParamBox box = default_box(model);
        for (int trial = 0; trial < 100; ++trial) {
            const ParticleState state = random_state(7, gen);
            const std::vector<double> flat = random_in_box(box, gen);
            const ThetaVector theta = ThetaVector::from_flat(flat, model.p1, model.p2);
            const KernelDiffusionSpec kernel = model.kernel_form(theta.theta2);
            const double x = state.positions[2];
            const double km = kernel_mean(state, kernel.kernel, x);
            const double direct = model.diffusion(theta.theta2, x, state.positions);
            CHECK(kernel.a_tilde(x, km) == doctest::Approx(direct).epsilon(1e-15));
        }
    }
}

TEST_CASE("coefficients are permutation equivariant") {
    std::mt19937_64 gen(12);
    for (const std::string& name : builtin_model_names()) {
        const ModelSpec model = builtin_model(name);
        const ParamBox box = default_box(model);
        for (int trial = 0; trial < 10; ++trial) {
            ParticleState state = random_state(9, gen);
            const std::vector<double> flat = random_in_box(box, gen);
            const ThetaVector theta = ThetaVector::from_flat(flat, model.p1, model.p2);
            const std::size_t i = 4;
            const double b = eval_drift(model, theta.theta1, i, state);
            const double a = eval_diffusion(model, theta.theta2, i, state);

            // Permute atoms, tracking where particle i went.
            ParticleState permuted = state;
            std::vector<std::size_t> perm(state.size());
            for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = k;
            std::shuffle(perm.begin(), perm.end(), gen);
            std::size_t new_i = 0;
            for (std::size_t k = 0; k < perm.size(); ++k) {
                permuted.positions[k] = state.positions[perm[k]];
                if (perm[k] == i) new_i = k;
            }
            const double b_perm = eval_drift(model, theta.theta1, new_i, permuted);
            const double a_perm = eval_diffusion(model, theta.theta2, new_i, permuted);
            // Equivariant through the empirical measure; summation order may
            // differ, so compare at accumulation accuracy.
            CHECK(b_perm == doctest::Approx(b).epsilon(1e-12));
            CHECK(a_perm == doctest::Approx(a).epsilon(1e-12));
        }
    }
}

TEST_CASE("batch column evaluators agree with per-particle calls") {
    std::mt19937_64 gen(5);
    for (const std::string& name : builtin_model_names()) {
        const ModelSpec model = builtin_model(name);
        const ParamBox box = default_box(model);
        const ParticleState state = random_state(11, gen);
        const std::vector<double> flat = random_in_box(box, gen);
        const ThetaVector theta = ThetaVector::from_flat(flat, model.p1, model.p2);
        std::vector<double> batch(state.size());
        eval_drift_all(model, theta.theta1, state.positions, batch);
        for (std::size_t i = 0; i < state.size(); ++i)
            CHECK(batch[i] ==
                  doctest::Approx(eval_drift(model, theta.theta1, i, state)).epsilon(1e-12));
    }
}

TEST_CASE("evaluators are pure") {
    const ModelSpec model = builtin_model("opinion_smooth");
    ParticleState state{{0.1, -0.4, 0.8}, 0.0};
    const std::vector<double> theta1 = {-0.5, 2.0};
    const double first = eval_drift(model, theta1, 1, state);
    const double second = eval_drift(model, theta1, 1, state);
    CHECK(first == second);
}
