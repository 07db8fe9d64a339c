#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "robgasp/design.hpp"
#include "robgasp/errors.hpp"
#include "robgasp/kernels.hpp"

using namespace robgasp;

TEST_SUITE("kernels") {

TEST_CASE("half-integer matern agrees with the Bessel form") {
    for (double nu : {0.5, 1.5, 2.5}) {
        const Kernel1D k = Kernel1D::matern(nu);
        for (double d : {0.0, 0.01, 0.3, 1.0, 2.7}) {
            for (double beta : {0.05, 0.8, 3.0, 20.0}) {
                const double expect = oracle::matern_bessel(d, beta, nu);
                CHECK(k.corr_inverse_range(d, beta) == doctest::Approx(expect).epsilon(1e-12).scale(1.0));
            }
        }
    }
}

TEST_CASE("power exponential closed form") {
    for (double alpha : {1.0, 1.9, 2.0}) {
        const Kernel1D k = Kernel1D::power_exponential(alpha);
        for (double d : {0.0, 0.2, 1.5}) {
            for (double gamma : {0.1, 1.0, 7.0}) {
                CHECK(corr1d(k, d, gamma) == doctest::Approx(std::exp(-std::pow(d / gamma, alpha))));
            }
        }
    }
}

TEST_CASE("roughness outside the supported set is rejected") {
    CHECK_THROWS_AS(Kernel1D::power_exponential(2.5), ConfigError);
    CHECK_THROWS_AS(Kernel1D::power_exponential(0.0), ConfigError);
    CHECK_THROWS_AS(Kernel1D::matern(2.0), ConfigError);
}

TEST_CASE("log-correlation derivative matches finite differences") {
    for (const Kernel1D& k : {Kernel1D::matern(0.5), Kernel1D::matern(1.5), Kernel1D::matern(2.5),
                              Kernel1D::power_exponential(1.9), Kernel1D::power_exponential(1.0)}) {
        for (double d : {0.1, 0.7, 1.9}) {
            for (double beta : {0.3, 1.0, 4.0}) {
                const double h = 1e-6 * beta;
                const double fd =
                    (k.log_corr_inverse_range(d, beta + h) - k.log_corr_inverse_range(d, beta - h)) / (2.0 * h);
                CHECK(k.dlog_corr_dbeta(d, beta) == doctest::Approx(fd).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("correlation is one at zero distance and decreasing in distance") {
    const Kernel1D k = Kernel1D::matern(2.5);
    CHECK(k.corr_inverse_range(0.0, 5.0) == 1.0);
    double prev = 1.0;
    for (double d = 0.1; d < 3.0; d += 0.1) {
        const double c = k.corr_inverse_range(d, 1.3);
        CHECK(c < prev);
        CHECK(c > 0.0);
        prev = c;
    }
}

TEST_CASE("parameterizations round trip") {
    Eigen::VectorXd g(3);
    g << 0.01, 1.0, 250.0;
    const RangeParams p = RangeParams::from_gamma(g);
    for (Parameterization t : {Parameterization::Gamma, Parameterization::Xi, Parameterization::Beta}) {
        const RangeParams q = p.to(t);
        CHECK(q.parameterization == t);
        CHECK((q.gamma() - g).cwiseAbs().maxCoeff() < 1e-12 * 250.0);
        CHECK((q.beta().array() * g.array() - 1.0).abs().maxCoeff() < 1e-14);
        CHECK((q.xi().array() + g.array().log()).abs().maxCoeff() < 1e-13);
    }
    CHECK(parse_parameterization("xi") == Parameterization::Xi);
    CHECK(parse_parameterization("beta") == Parameterization::Beta);
    CHECK(parse_parameterization("gamma") == Parameterization::Gamma);
    CHECK_THROWS_AS((void)parse_parameterization("rho"), ConfigError);
}

TEST_CASE("dbeta/dvalue matches finite differences in every parameterization") {
    Eigen::VectorXd b(2);
    b << 0.4, 3.0;
    for (Parameterization t : {Parameterization::Gamma, Parameterization::Xi, Parameterization::Beta}) {
        const RangeParams p = RangeParams::from_beta(b).to(t);
        const Eigen::VectorXd d = p.dbeta_dvalue();
        for (Eigen::Index l = 0; l < 2; ++l) {
            const double h = 1e-6 * std::max(1.0, std::abs(p.values(l)));
            RangeParams pp = p, pm = p;
            pp.values(l) += h;
            pm.values(l) -= h;
            CHECK(d(l) == doctest::Approx((pp.beta()(l) - pm.beta()(l)) / (2 * h)).epsilon(1e-6));
        }
    }
}

TEST_CASE("product correlation is the Hadamard product of coordinate correlations") {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd x = oracle::uniform_points(7, 3, rng);
    const DesignMatrix design(x);
    const CorrelationSpec spec = CorrelationSpec::uniform(Kernel1D::matern(2.5), 3);
    Eigen::VectorXd beta(3);
    beta << 0.5, 2.0, 9.0;
    const Eigen::MatrixXd R = corr_matrix(spec, design, RangeParams::from_beta(beta));
    for (Eigen::Index i = 0; i < 7; ++i) {
        for (Eigen::Index j = 0; j < 7; ++j) {
            double expect = 1.0;
            for (Eigen::Index l = 0; l < 3; ++l) {
                expect *= oracle::matern_bessel(std::abs(x(i, l) - x(j, l)), beta(l), 2.5);
            }
            CHECK(R(i, j) == doctest::Approx(expect).epsilon(1e-11).scale(1.0));
        }
    }
    CHECK((R - R.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((product_correlation(spec, coordinate_distances(x), beta) - R).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("correlation matrix derivative matches finite differences") {
    std::mt19937_64 rng(4);
    const DesignMatrix design(oracle::uniform_points(6, 2, rng));
    const CorrelationSpec spec = CorrelationSpec::uniform(Kernel1D::power_exponential(1.9), 2);
    Eigen::VectorXd beta(2);
    beta << 1.2, 0.3;
    for (Parameterization t : {Parameterization::Gamma, Parameterization::Xi, Parameterization::Beta}) {
        const RangeParams p = RangeParams::from_beta(beta).to(t);
        for (Eigen::Index l = 0; l < 2; ++l) {
            const double h = 1e-6 * std::max(1.0, std::abs(p.values(l)));
            RangeParams pp = p, pm = p;
            pp.values(l) += h;
            pm.values(l) -= h;
            const Eigen::MatrixXd fd = (corr_matrix(spec, design, pp) - corr_matrix(spec, design, pm)) / (2 * h);
            CHECK((corr_matrix_deriv(spec, design, p, l) - fd).cwiseAbs().maxCoeff() < 1e-7);
        }
    }
}

TEST_CASE("cross distances") {
    Eigen::MatrixXd a(2, 2), b(3, 2);
    a << 0, 0, 1, 2;
    b << 0.5, 0.5, 1, 1, 3, -1;
    const auto d = cross_distances(a, b);
    REQUIRE(d.size() == 2);
    CHECK(d[0].rows() == 2);
    CHECK(d[0].cols() == 3);
    CHECK(d[0](1, 2) == 2.0);
    CHECK(d[1](1, 2) == 3.0);
    CHECK(d[1](0, 0) == 0.5);
}

TEST_CASE("design bounds and extrapolation") {
    Eigen::MatrixXd x(3, 2);
    x << 0, 1, 2, 5, 1, 3;
    const DesignMatrix d(x);
    CHECK(d.data_min()(1) == 1.0);
    CHECK(d.data_max()(0) == 2.0);
    Eigen::RowVectorXd in(2), out(2);
    in << 1.0, 4.0;
    out << 2.5, 4.0;
    CHECK_FALSE(d.outside_bounds(in));
    CHECK(d.outside_bounds(out));
}

}
