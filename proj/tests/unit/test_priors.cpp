#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "robgasp/errors.hpp"
#include "robgasp/gasp.hpp"
#include "robgasp/priors.hpp"

using namespace robgasp;

namespace {

JRPriorParams jr(double a, double b, std::initializer_list<double> c) {
    JRPriorParams p;
    p.a = a;
    p.b = b;
    p.C.resize(static_cast<Eigen::Index>(c.size()));
    Eigen::Index i = 0;
    for (double v : c) p.C(i++) = v;
    return p;
}

}  // namespace

TEST_SUITE("priors") {

TEST_CASE("JR density integrates to one") {
    CHECK(oracle::jr_total_mass(jr(0.2, 1.0, {0.7}), false) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(oracle::jr_total_mass(jr(0.2, 1.0, {0.7}), true) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(oracle::jr_total_mass(jr(-1.5, 1.0, {0.7}), true) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(oracle::jr_total_mass(jr(-0.5, 2.0, {0.3, 1.4}), false, 0.25) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("JR moments agree with exact sampling") {
    std::mt19937_64 rng(5);
    const JRPriorParams p = jr(0.2, 1.0, {0.5, 2.0});
    const JRMoments mom = jr_moments(p);
    const int N = 200000;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(3), s2 = Eigen::VectorXd::Zero(3);
    for (int i = 0; i < N; ++i) {
        const Eigen::VectorXd v = oracle::jr_draw(p, rng);
        s1 += v;
        s2 += v.cwiseAbs2();
    }
    const Eigen::VectorXd mean = s1 / N;
    const Eigen::VectorXd var = s2 / N - mean.cwiseAbs2();
    Eigen::VectorXd em(3), ev(3);
    em << mom.mean_beta, mom.mean_eta;
    ev << mom.var_beta, mom.var_eta;
    for (int k = 0; k < 3; ++k) {
        CHECK(std::abs(mean(k) - em(k)) < 4.0 * std::sqrt(ev(k) / N));
        CHECK(var(k) == doctest::Approx(ev(k)).epsilon(0.03));
    }
}

TEST_CASE("JR gradient matches finite differences") {
    const JRPriorParams p = jr(0.2, 1.3, {0.4, 1.1, 2.5});
    Eigen::VectorXd x(4);
    x << 0.3, 1.2, 0.05, 0.4;
    auto f = [&](const Eigen::VectorXd& v) { return jr_log_density(p, v.head(3), v(3)); };
    const Eigen::VectorXd g = jr_log_density_grad(p, x.head(3), x(3));
    CHECK((g - oracle::central_diff(f, x, 1e-7)).cwiseAbs().maxCoeff() < 1e-6);
    auto f2 = [&](const Eigen::VectorXd& v) { return jr_log_density(p, v); };
    const Eigen::VectorXd g2 = jr_log_density_grad(p, x.head(3));
    CHECK((g2 - oracle::central_diff(f2, x.head(3), 1e-7)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("JR density at the origin") {
    CHECK(jr_log_density(jr(0.2, 1.0, {1.0}), Eigen::VectorXd::Zero(1)) == -std::numeric_limits<double>::infinity());
    CHECK(jr_log_density(jr(-0.5, 1.0, {1.0}), Eigen::VectorXd::Zero(1)) == std::numeric_limits<double>::infinity());
}

TEST_CASE("JR hyperparameter validation") {
    CHECK_THROWS_AS(jr(-1.0, 1.0, {1.0}).validate(false), ConfigError);
    CHECK_NOTHROW(jr(-1.0, 1.0, {1.0}).validate(true));
    CHECK_THROWS_AS(jr(-2.0, 1.0, {1.0}).validate(true), ConfigError);
    CHECK_THROWS_AS(jr(0.2, 0.0, {1.0}).validate(false), ConfigError);
    CHECK_THROWS_AS(jr(0.2, 1.0, {1.0, -1.0}).validate(false), ConfigError);
    CHECK_THROWS_AS(PriorSpec::jointly_robust(jr(-3.0, 1.0, {1.0, 1.0}), false), ConfigError);
}

TEST_CASE("default JR hyperparameters") {
    Eigen::MatrixXd x(16, 2);
    for (int i = 0; i < 16; ++i) x.row(i) << i / 15.0, 2.0 + 4.0 * ((i * 7) % 16) / 15.0;
    const DesignMatrix d(x);
    const JRPriorParams e = jr_default_params(d, FitContext::Emulation);
    CHECK(e.a == doctest::Approx(0.2));
    CHECK(e.b == 1.0);
    CHECK(e.C(0) == doctest::Approx(0.25));
    CHECK(e.C(1) == doctest::Approx(1.0));
    CHECK(jr_default_params(d, FitContext::Calibration).a == doctest::Approx(-1.5));
    Eigen::MatrixXd flat = x;
    flat.col(1).setConstant(3.0);
    CHECK_THROWS_AS((void)jr_default_params(DesignMatrix(flat), FitContext::Emulation), ConfigError);
}

TEST_CASE("prior kind names") {
    CHECK(parse_prior_kind("jr") == PriorKind::JR);
    CHECK(parse_prior_kind("reference") == PriorKind::Reference);
    CHECK_THROWS_AS((void)parse_prior_kind("flat"), ConfigError);
    CHECK(std::string(to_string(PriorKind::JR)) == "jr");
}

TEST_CASE("reference prior is half the log determinant of the Fisher information") {
    std::mt19937_64 rng(8);
    const Eigen::MatrixXd x = oracle::uniform_points(8, 2, rng);
    const GaSPModel m(DesignMatrix(x), x.col(0) + x.col(1).cwiseAbs2(), MeanBasis::constant(),
                      CorrelationSpec::uniform(Kernel1D::matern(2.5), 2), false);
    Eigen::VectorXd gamma(2);
    gamma << 0.6, 1.4;
    for (Parameterization t : {Parameterization::Gamma, Parameterization::Xi, Parameterization::Beta}) {
        const RangeParams p = RangeParams::from_gamma(gamma).to(t);
        const Eigen::MatrixXd info = fisher_info(m, p, 0.0);
        CHECK(reference_log_density(m, p, 0.0) == doctest::Approx(0.5 * std::log(info.determinant())).epsilon(1e-9));
    }
    // Change of variables: xi density = gamma density times |d gamma / d xi| = gamma.
    const double lg = reference_log_density(m, RangeParams::from_gamma(gamma), 0.0);
    const double lx = reference_log_density(m, RangeParams::from_gamma(gamma).to(Parameterization::Xi), 0.0);
    CHECK(lx == doctest::Approx(lg + gamma.array().log().sum()).epsilon(1e-9));
}

TEST_CASE("Fisher determinant policy") {
    Eigen::Matrix2d pd;
    pd << 2, 1, 1, 2;
    CHECK(half_log_det_fisher(pd) == doctest::Approx(0.5 * std::log(3.0)));
    Eigen::Matrix2d sing;
    sing << 1, 0, 0, 0;
    CHECK(half_log_det_fisher(sing) == -std::numeric_limits<double>::infinity());
    Eigen::Matrix2d indef;
    indef << 1, 3, 3, 1;
    CHECK_THROWS_AS((void)half_log_det_fisher(indef), NumericalError);
}

}
