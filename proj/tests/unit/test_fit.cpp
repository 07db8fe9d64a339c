#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "robgasp/errors.hpp"
#include "robgasp/fit.hpp"
#include "robgasp/lhd.hpp"
#include "robgasp/optimizer.hpp"

using namespace robgasp;

namespace {

GaSPModel toy(Eigen::Index n, const Kernel1D& k, bool nugget, std::uint64_t seed = 2) {
    const DesignMatrix d = maximin_lhd(n, 2, seed);
    const Eigen::MatrixXd& x = d.points();
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = std::sin(5 * x(i, 0)) * std::exp(x(i, 1)) + 0.3 * x(i, 1);
    return GaSPModel(d, y, MeanBasis::constant(), CorrelationSpec::uniform(k, 2), nugget);
}

}  // namespace

TEST_SUITE("fit") {

TEST_CASE("box-constrained L-BFGS") {
    auto rosen = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        const double a = 1 - x(0), b = x(1) - x(0) * x(0);
        if (g) {
            g->resize(2);
            (*g)(0) = -2 * a - 400 * x(0) * b;
            (*g)(1) = 200 * b;
        }
        return a * a + 100 * b * b;
    };
    const Eigen::Vector2d x0(-1.2, 1.0);
    const OptimizerResult r = minimize_lbfgs(rosen, x0, Eigen::Vector2d(-5, -5), Eigen::Vector2d(5, 5));
    CHECK(r.converged);
    CHECK((r.x - Eigen::Vector2d(1, 1)).norm() < 1e-5);

    const OptimizerResult b = minimize_lbfgs(rosen, x0, Eigen::Vector2d(-5, -5), Eigen::Vector2d(0.5, 5));
    CHECK(b.x(0) == doctest::Approx(0.5));
    CHECK(b.x(1) == doctest::Approx(0.25).epsilon(1e-4));
}

TEST_CASE("JR posterior gradient matches finite differences") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (const Kernel1D& k : {Kernel1D::matern(2.5), Kernel1D::power_exponential(1.9)}) {
        for (bool nugget : {false, true}) {
            const GaSPModel m = toy(12, k, nugget);
            const PriorSpec prior = PriorSpec::jointly_robust(jr_default_params(m.design(), FitContext::Emulation), nugget);
            for (Parameterization t : {Parameterization::Gamma, Parameterization::Xi, Parameterization::Beta}) {
                Eigen::VectorXd xi(2);
                xi << u(rng), u(rng);
                const RangeParams p = RangeParams::from_xi(xi).to(t);
                const bool logn = nugget_in_log_space(t);
                const double eta = nugget ? 0.02 : 0.0;
                Eigen::VectorXd v(nugget ? 3 : 2);
                v.head(2) = p.values;
                if (nugget) v(2) = logn ? std::log(eta) : eta;
                auto f = [&](const Eigen::VectorXd& w) {
                    RangeParams q{w.head(2), t};
                    const double e = nugget ? (logn ? std::exp(w(2)) : w(2)) : 0.0;
                    return log_posterior(m, prior, q, e, false).value;
                };
                const PosteriorValue pv = log_posterior(m, prior, p, eta, true);
                const Eigen::VectorXd fd = oracle::central_diff(f, v, 1e-6);
                CHECK((pv.grad - fd).norm() / fd.norm() < 1e-5);
            }
        }
    }
}

TEST_CASE("fit interpolates and is deterministic under seed") {
    const GaSPModel m = toy(20, Kernel1D::matern(2.5), false);
    const FitConfig cfg = default_fit_config(m);
    const FitResult a = fit_mode(m, cfg);
    const FitResult b = fit_mode(m, cfg);
    CHECK(a.log_posterior == b.log_posterior);
    CHECK(a.beta == b.beta);
    CHECK(a.trace.best_start >= 0);
    CHECK((a.gamma.array() * a.beta.array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK((a.xi - a.beta.array().log().matrix()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_FALSE(a.diagnostics.flag_near_identity);
    CHECK_FALSE(a.diagnostics.flag_near_ones);
    const Eigen::VectorXd yhat = make_predictor(m, a).predict_mean(m.design().points());
    CHECK((yhat - m.outputs()).cwiseAbs().maxCoeff() < 1e-6 * std::sqrt((m.outputs().array() - m.outputs().mean()).square().mean()));
}

TEST_CASE("fitted mode is a stationary point") {
    const GaSPModel m = toy(20, Kernel1D::matern(2.5), false, 5);
    const FitResult f = fit_mode(m, default_fit_config(m));
    if (!f.trace.at_bound) {
        const PosteriorValue pv = log_posterior(m, f.prior, RangeParams::from_beta(f.beta).to(Parameterization::Xi), 0.0, true);
        CHECK(pv.grad.cwiseAbs().maxCoeff() < 1e-3);
    }
}

TEST_CASE("forbidden prior and parameterization pairs") {
    const GaSPModel m = toy(10, Kernel1D::matern(2.5), false);
    FitConfig cfg = default_fit_config(m, Parameterization::Beta);
    cfg.prior = PriorSpec::reference(false);
    CHECK_THROWS_AS(cfg.validate(2, false), ConfigError);
    CHECK_THROWS_AS((void)fit_mode(m, cfg), ConfigError);
    JRPriorParams p = jr_default_params(m.design(), FitContext::Emulation);
    p.a = -0.5;
    cfg.prior = PriorSpec::jointly_robust(p, false);
    CHECK_THROWS_AS(cfg.validate(2, false), ConfigError);
    cfg.parameterization = Parameterization::Xi;
    CHECK_NOTHROW(cfg.validate(2, false));
}

TEST_CASE("reference prior fit agrees with JR on a smooth function") {
    const GaSPModel m = toy(20, Kernel1D::matern(2.5), false);
    FitConfig cfg = default_fit_config(m);
    cfg.prior = PriorSpec::reference(false);
    const FitResult r = fit_mode(m, cfg);
    const FitResult j = fit_mode(m, default_fit_config(m));
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd xt = oracle::uniform_points(200, 2, rng);
    const Eigen::VectorXd pr = make_predictor(m, r).predict_mean(xt);
    const Eigen::VectorXd pj = make_predictor(m, j).predict_mean(xt);
    CHECK((pr - pj).cwiseAbs().maxCoeff() < 0.2 * (m.outputs().maxCoeff() - m.outputs().minCoeff()));
    CHECK(std::isfinite(r.log_posterior));
}

TEST_CASE("nugget fit on noisy data") {
    const DesignMatrix d = maximin_lhd(40, 1, 3);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> eps(0.0, 0.2);
    Eigen::VectorXd y(40);
    for (Eigen::Index i = 0; i < 40; ++i) y(i) = std::sin(6 * d.points()(i, 0)) + eps(rng);
    const GaSPModel m(d, y, MeanBasis::constant(), CorrelationSpec::uniform(Kernel1D::matern(2.5), 1), true);
    const FitResult f = fit_mode(m, default_fit_config(m));
    CHECK(f.eta > 1e-3);
    CHECK(f.eta < 1.0);
}

TEST_CASE("robustness diagnostics") {
    const GaSPModel m = toy(15, Kernel1D::matern(2.5), false);
    const auto near_id = robustness_check(m, RangeParams::from_beta(Eigen::VectorXd::Constant(2, 1e5)), 0.0);
    CHECK(near_id.flag_near_identity);
    const auto near_one = robustness_check(m, RangeParams::from_beta(Eigen::VectorXd::Constant(2, 1e-6)), 0.0);
    CHECK(near_one.flag_near_ones);
    const auto mid = robustness_check(m, RangeParams::from_beta(Eigen::VectorXd::Constant(2, 2.0)), 0.0);
    CHECK_FALSE(mid.flag_near_identity);
    CHECK_FALSE(mid.flag_near_ones);
}

}
