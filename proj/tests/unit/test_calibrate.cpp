#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "robgasp/bench.hpp"
#include "robgasp/calibrate.hpp"
#include "robgasp/errors.hpp"
#include "robgasp/test_functions.hpp"

using namespace robgasp;

namespace {

Eigen::MatrixXd working_cov(const GaSPModel& m, double xi, double eta) {
    Eigen::MatrixXd c = product_correlation(m.spec(), m.distances(), Eigen::VectorXd::Constant(1, std::exp(xi)));
    c.diagonal().array() += eta;
    return c;
}

Eigen::VectorXd resid(const CalibrationProblem& prob, double theta) {
    Eigen::VectorXd z = prob.field_outputs();
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) -= ex4_computer_model(prob.field_inputs()(i, 0), theta);
    return z;
}

}  // namespace

TEST_SUITE("calibrate") {

TEST_CASE("Gibbs conditionals match explicit normal and inverse-gamma densities") {
    const Ex4Data data = ex4_data(3);
    const CalibrationProblem prob = ex4_problem(data, PriorKind::JR);
    for (double theta : {0.5, 1.7}) {
        for (double xi : {-1.0, 0.8}) {
            const double eta = 0.07;
            const NigConditional nig = gibbs_conditionals(prob, Eigen::VectorXd::Constant(1, theta),
                                                          Eigen::VectorXd::Constant(1, xi), eta);
            const oracle::ExplicitNig ex(working_cov(prob.discrepancy(), xi, eta), prob.discrepancy().mean_basis(),
                                         resid(prob, theta));
            CHECK(nig.S2 == doctest::Approx(ex.S2).epsilon(1e-10));
            CHECK(std::abs(nig.theta_hat(0) - ex.theta_hat(0)) < 1e-10);
            for (double s2 : {0.05, 0.3, 1.0, 4.0}) {
                CHECK(std::abs(nig.collapsed_sigma2_log_density(s2) - ex.collapsed_sigma2(s2)) < 1e-8);
                for (double tm : {-1.0, 0.0, 0.9, 2.5}) {
                    const Eigen::VectorXd v = Eigen::VectorXd::Constant(1, tm);
                    CHECK(std::abs(nig.sigma2_log_density(s2, v) - ex.sigma2_given(s2, v)) < 1e-8);
                    CHECK(std::abs(nig.theta_m_log_density(v, s2) - ex.theta_m_given(v, s2)) < 1e-8);
                }
            }
        }
    }
}

TEST_CASE("fixed-hyperparameter chain reproduces the normal-inverse-gamma moments") {
    const Ex4Data data = ex4_data(3);
    const CalibrationProblem prob = ex4_problem(data, PriorKind::JR);
    McmcOptions o;
    o.S = 21000;
    o.S0 = 1000;
    o.update_theta = false;
    o.update_range = false;
    o.init_theta = Eigen::VectorXd::Constant(1, 1.3);
    o.init_xi = Eigen::VectorXd::Constant(1, 0.2);
    o.init_eta = 0.1;
    const PosteriorChain ch = run_mcmc(prob, o);
    const oracle::ExplicitNig ex(working_cov(prob.discrepancy(), 0.2, 0.1), prob.discrepancy().mean_basis(),
                                 resid(prob, 1.3));
    const double alpha = 0.5 * static_cast<double>(ex.z.size() - 1);
    const double mean_s2 = 0.5 * ex.S2 / (alpha - 1.0);
    const double var_s2 = mean_s2 * mean_s2 / (alpha - 2.0);
    const double var_tm = mean_s2 / ex.gram(0, 0);
    const int N = ch.retained();
    const Eigen::VectorXd s2 = ch.sigma2.tail(N);
    const Eigen::VectorXd tm = ch.theta_m.col(0).tail(N);
    CHECK(std::abs(s2.mean() - mean_s2) < 3.0 * std::sqrt(var_s2 / N));
    CHECK(std::abs(tm.mean() - ex.theta_hat(0)) < 3.0 * std::sqrt(var_tm / N));
    CHECK((ch.theta.col(0).array() == 1.3).all());
}

TEST_CASE("chains are deterministic under seed and adapt to a sensible acceptance rate") {
    const Ex4Data data = ex4_data(1);
    const CalibrationProblem prob = ex4_problem(data, PriorKind::JR);
    McmcOptions o;
    o.S = 4000;
    o.S0 = 1500;
    o.seed = 17;
    const PosteriorChain a = run_mcmc(prob, o);
    const PosteriorChain b = run_mcmc(prob, o);
    CHECK(a.theta == b.theta);
    CHECK(a.sigma2 == b.sigma2);
    CHECK(a.xi == b.xi);
    CHECK(a.accept_theta > 0.1);
    CHECK(a.accept_theta < 0.6);
    CHECK(a.accept_range > 0.1);
    CHECK(a.accept_range < 0.6);
    CHECK(a.theta.minCoeff() >= 0.0);
    CHECK(a.theta.maxCoeff() <= 5.0);
    o.seed = 18;
    CHECK(run_mcmc(prob, o).theta != a.theta);

    const IntervalPrediction p = predict_calibrated(prob, a, data.x_test, PredictionMode::ModelPlusDiscrepancy, 1, 500);
    CHECK(p.mean.size() == data.x_test.rows());
    CHECK((p.lower.array() <= p.mean.array()).all());
    CHECK((p.mean.array() <= p.upper.array()).all());
    const IntervalPrediction q = predict_calibrated(prob, a, data.x_test, PredictionMode::ModelOnly, 1, 500);
    CHECK((q.lower.array() <= q.upper.array()).all());
}

TEST_CASE("propriety preconditions") {
    const Eigen::MatrixXd H = Eigen::MatrixXd::Ones(5, 1);
    CHECK_FALSE(check_propriety_preconditions(H, Eigen::VectorXd::Constant(5, 3.0)).pass);
    CHECK(check_propriety_preconditions(H, Eigen::VectorXd::LinSpaced(5, 0, 1)).pass);
    CHECK_FALSE(check_propriety_preconditions(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1)).pass);

    Ex4Data data = ex4_data(1);
    data.y.setConstant(2.0);
    CHECK_THROWS_AS((void)ex4_problem(data, PriorKind::JR), DataError);
}

TEST_CASE("invalid sampler settings") {
    const CalibrationProblem prob = ex4_problem(ex4_data(1), PriorKind::JR);
    McmcOptions o;
    o.S = 100;
    o.S0 = 100;
    CHECK_THROWS_AS((void)run_mcmc(prob, o), ConfigError);
    o.S0 = 10;
    o.init_theta = Eigen::VectorXd::Constant(1, 9.0);
    CHECK_THROWS_AS((void)run_mcmc(prob, o), ConfigError);
}

TEST_CASE("profile-likelihood calibration") {
    const Ex4Data data = ex4_data(1);
    const CalibrationProblem prob = ex4_problem(data, PriorKind::JR);
    const MleCalibration m = calibrate_mle(prob, 1);
    CHECK(m.theta(0) >= 0.0);
    CHECK(m.theta(0) <= 5.0);
    CHECK(m.sigma2 > 0.0);
    CHECK(std::isfinite(m.log_lik));
    const IntervalPrediction p = predict_mle(prob, m, data.x, PredictionMode::ModelPlusDiscrepancy);
    const double sd = std::sqrt((data.y.array() - data.y.mean()).square().mean());
    CHECK(std::sqrt((p.mean - data.y).squaredNorm() / static_cast<double>(data.y.size())) < sd);
}

TEST_CASE("modular emulator reproduces the computer model") {
    const auto emu = ex4_emulator(1);
    Eigen::MatrixXd pts(3, 2);
    pts << 1.0, 0.5, 2.5, 1.5, 4.0, 3.0;
    const PredictiveDistribution pd = emu->predictor.predict(pts);
    for (int i = 0; i < 3; ++i) {
        const double err = std::abs(pd.mean(i) - ex4_computer_model(pts(i, 0), pts(i, 1)));
        CHECK(err < 0.05);
        CHECK(err < 3.0 * pd.scale(i));
    }

    const CalibrationProblem prob = ex4_problem(ex4_data(1), PriorKind::JR, emu);
    CHECK(prob.modular());
}

}
