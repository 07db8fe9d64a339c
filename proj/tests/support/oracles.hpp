#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "robgasp/priors.hpp"

namespace oracle {

// Central differences with a step relative to each coordinate.
inline Eigen::VectorXd central_diff(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                    double rel = 1e-5) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = rel * std::max(1.0, std::abs(x(i)));
        Eigen::VectorXd xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        g(i) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

// Matern correlation through the modified Bessel function, with r = sqrt(2 nu) d beta.
inline double matern_bessel(double d, double beta, double nu) {
    const double r = std::sqrt(2.0 * nu) * d * beta;
    if (r == 0.0) return 1.0;
    return std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(r, nu) * std::cyl_bessel_k(nu, r);
}

// Restricted log likelihood from an explicit inverse, without any Cholesky reuse.
inline double dense_log_marginal_lik(const Eigen::MatrixXd& C, const Eigen::MatrixXd& H, const Eigen::VectorXd& y) {
    const Eigen::MatrixXd Ci = C.inverse();
    const Eigen::MatrixXd G = H.transpose() * Ci * H;
    const Eigen::MatrixXd Q = Ci - Ci * H * G.inverse() * H.transpose() * Ci;
    const double S2 = y.dot(Q * y);
    const double n = static_cast<double>(y.size());
    const double q = static_cast<double>(H.cols());
    return -0.5 * std::log(C.determinant()) - 0.5 * std::log(G.determinant()) - 0.5 * (n - q) * std::log(S2);
}

inline Eigen::MatrixXd uniform_points(Eigen::Index n, Eigen::Index p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) x(i, j) = u(rng);
    return x;
}

// Integral of the JR density by the trapezoid rule in log coordinates, u in [lo, hi]^d.
inline double jr_total_mass(const robgasp::JRPriorParams& p, bool nugget, double h = 0.2, double lo = -40.0,
                            double hi = 6.0) {
    const Eigen::Index px = p.C.size();
    const Eigen::Index d = px + (nugget ? 1 : 0);
    const int m = static_cast<int>(std::round((hi - lo) / h)) + 1;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    Eigen::VectorXd beta(px);
    double total = 0.0;
    while (true) {
        double logjac = 0.0;
        double eta = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) {
            const double u = lo + h * idx[static_cast<std::size_t>(k)];
            logjac += u;
            if (k < px) beta(k) = std::exp(u);
            else eta = std::exp(u);
        }
        const double ld = nugget ? robgasp::jr_log_density(p, beta, eta) : robgasp::jr_log_density(p, beta);
        total += std::exp(ld + logjac);
        Eigen::Index k = 0;
        while (k < d && ++idx[static_cast<std::size_t>(k)] == m) idx[static_cast<std::size_t>(k++)] = 0;
        if (k == d) break;
    }
    return total * std::pow(h, static_cast<double>(d));
}

// Exact draw from the nugget-form JR density: t ~ Gamma(a + p + 1, b), split by a flat Dirichlet.
inline Eigen::VectorXd jr_draw(const robgasp::JRPriorParams& p, std::mt19937_64& rng) {
    const Eigen::Index k = p.C.size() + 1;
    std::gamma_distribution<double> gt(p.a + static_cast<double>(k), 1.0 / p.b);
    std::exponential_distribution<double> ex(1.0);
    Eigen::VectorXd w(k);
    for (Eigen::Index i = 0; i < k; ++i) w(i) = ex(rng);
    w *= gt(rng) / w.sum();
    w.head(k - 1).array() /= p.C.array();
    return w;
}

inline double inv_gamma_logpdf(double x, double shape, double scale) {
    return shape * std::log(scale) - boost::math::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

// Normal-inverse-gamma pieces built from an explicit inverse of C = R + eta I.
struct ExplicitNig {
    Eigen::MatrixXd Ci;
    Eigen::MatrixXd H;
    Eigen::VectorXd z;
    Eigen::MatrixXd gram;
    Eigen::VectorXd theta_hat;
    double S2 = 0.0;

    ExplicitNig(const Eigen::MatrixXd& C, Eigen::MatrixXd h, Eigen::VectorXd resid)
        : Ci(C.inverse()), H(std::move(h)), z(std::move(resid)) {
        gram = H.transpose() * Ci * H;
        theta_hat = gram.inverse() * H.transpose() * Ci * z;
        const Eigen::VectorXd r = z - H * theta_hat;
        S2 = r.dot(Ci * r);
    }
    double collapsed_sigma2(double s2) const {
        return inv_gamma_logpdf(s2, 0.5 * static_cast<double>(z.size() - H.cols()), 0.5 * S2);
    }
    double sigma2_given(double s2, const Eigen::VectorXd& tm) const {
        const Eigen::VectorXd r = z - H * tm;
        return inv_gamma_logpdf(s2, 0.5 * static_cast<double>(z.size()), 0.5 * r.dot(Ci * r));
    }
    double theta_m_given(const Eigen::VectorXd& tm, double s2) const {
        const Eigen::MatrixXd cov = s2 * gram.inverse();
        const Eigen::VectorXd d = tm - theta_hat;
        const double q = static_cast<double>(tm.size());
        return -0.5 * q * std::log(2.0 * M_PI) - 0.5 * std::log(cov.determinant()) - 0.5 * d.dot(cov.inverse() * d);
    }
};

}  // namespace oracle
