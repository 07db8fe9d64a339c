#include "robgasp/fit.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "robgasp/errors.hpp"
#include "robgasp/optimizer.hpp"

namespace robgasp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Design scale n^{-1/p} (max - min) per coordinate; independent of the prior.
Eigen::VectorXd design_scale(const GaSPModel& model) {
    return jr_default_params(model.design(), FitContext::Emulation).C;
}

double jacobian_range(Parameterization p, const Eigen::VectorXd& beta) {
    switch (p) {
        case Parameterization::Beta: return 0.0;
        case Parameterization::Xi: return beta.array().log().sum();
        case Parameterization::Gamma: return 2.0 * beta.array().log().sum();
    }
    return 0.0;
}

// d theta / d xi for the range coordinates, and d nu / d log eta for the nugget coordinate.
Eigen::VectorXd dtheta_du(Parameterization p, const Eigen::VectorXd& beta, double eta, bool nugget) {
    const Eigen::Index px = beta.size();
    Eigen::VectorXd j(px + (nugget ? 1 : 0));
    switch (p) {
        case Parameterization::Xi: j.head(px).setOnes(); break;
        case Parameterization::Beta: j.head(px) = beta; break;
        case Parameterization::Gamma: j.head(px) = -beta.array().inverse(); break;
    }
    if (nugget) j(px) = nugget_in_log_space(p) ? 1.0 : eta;
    return j;
}

RangeParams params_from_xi(Parameterization p, const Eigen::VectorXd& xi) {
    return RangeParams::from_xi(xi).to(p);
}

double reference_term(const GaSPModel& model, const RangeParams& params, double eta, const LikelihoodState* st) {
    std::optional<double> scale;
    if (model.nugget_enabled()) scale = nugget_in_log_space(params.parameterization) ? eta : 1.0;
    if (st) return half_log_det_fisher(st->fisher(corr_derivatives(model, *st, params), scale));
    const LikelihoodState fresh(model, params.beta(), eta, true);
    return half_log_det_fisher(fresh.fisher(corr_derivatives(model, fresh, params), scale));
}

void check_prior(const GaSPModel& model, const PriorSpec& prior) {
    prior.validate();
    if (prior.nugget_included != model.nugget_enabled()) {
        throw ConfigError("prior nugget setting does not match the model nugget setting");
    }
    if (prior.kind == PriorKind::JR && prior.jr->C.size() != model.dim()) {
        throw ConfigError("JR prior has " + std::to_string(prior.jr->C.size()) + " scale constants but the model has " +
                          std::to_string(model.dim()) + " inputs");
    }
}

}  // namespace

bool nugget_in_log_space(Parameterization p) noexcept { return p == Parameterization::Xi; }

void FitConfig::validate(Eigen::Index dim, bool nugget) const {
    prior.validate();
    if (max_iter < 0) throw ConfigError("fit.max_iter must be nonnegative");
    if (!(grad_tol > 0.0)) throw ConfigError("fit.tol must be positive");
    if (multistart < 1) throw ConfigError("fit.multistart must be at least 1");
    if (parameterization == Parameterization::Beta) {
        if (prior.kind == PriorKind::Reference) {
            throw ConfigError("the reference prior cannot be used with the beta parameterization "
                              "(its posterior mode degenerates to R = 1 1^T)");
        }
        if (!(prior.jr->a > 0.0)) throw ConfigError("the beta parameterization requires a JR prior with a > 0");
    }
    const Eigen::Index k = dim + (nugget ? 1 : 0);
    if ((lower && lower->size() != k) || (upper && upper->size() != k)) {
        throw ConfigError("fit bounds must have " + std::to_string(k) + " entries");
    }
}

FitConfig default_fit_config(const GaSPModel& model, Parameterization param) {
    FitConfig cfg;
    cfg.parameterization = param;
    cfg.prior = PriorSpec::jointly_robust(jr_default_params(model.design(), FitContext::Emulation),
                                          model.nugget_enabled());
    return cfg;
}

PosteriorValue log_posterior(const GaSPModel& model, const PriorSpec& prior, const RangeParams& params, double eta,
                             bool with_grad) {
    check_prior(model, prior);
    const Parameterization p = params.parameterization;
    const bool nugget = model.nugget_enabled();
    const bool log_nugget = nugget_in_log_space(p);
    if (params.size() != model.dim()) throw DataError("range parameter length does not match the model");
    if (!nugget && eta != 0.0) throw DataError("nugget given for a model without nugget");
    if (nugget && log_nugget && !(eta > 0.0)) throw DataError("log-nugget coordinate requires eta > 0");

    const Eigen::VectorXd beta = params.beta();
    const bool reference = prior.kind == PriorKind::Reference;
    const LikelihoodState st(model, beta, eta, with_grad || reference);

    PosteriorValue out;
    out.value = st.log_marginal_lik();
    if (reference) {
        out.value += reference_term(model, params, eta, &st);
    } else {
        out.value += jr_log_density(*prior.jr, beta, nugget ? std::optional<double>(eta) : std::nullopt);
        out.value += jacobian_range(p, beta);
        if (nugget && log_nugget) out.value += std::log(eta);
    }
    if (!with_grad) return out;

    std::optional<double> scale;
    if (nugget) scale = log_nugget ? eta : 1.0;
    out.grad = st.grad_log_lik(corr_derivatives(model, st, params), scale);
    const Eigen::Index px = model.dim();

    if (!reference) {
        const JRPriorParams& jr = *prior.jr;
        const Eigen::VectorXd g = jr_log_density_grad(jr, beta, nugget ? std::optional<double>(eta) : std::nullopt);
        const Eigen::VectorXd chain = params.dbeta_dvalue();
        out.grad.head(px).array() += g.head(px).array() * chain.array();
        if (p == Parameterization::Xi) out.grad.head(px).array() += 1.0;
        if (p == Parameterization::Gamma) out.grad.head(px).array() -= 2.0 * beta.array();
        if (nugget) out.grad(px) += log_nugget ? g(px) * eta + 1.0 : g(px);
        return out;
    }

    // Central differences of the reference term in u = (xi, log eta), mapped back to theta.
    Eigen::VectorXd u(px + (nugget ? 1 : 0));
    u.head(px) = params.xi();
    if (nugget) u(px) = std::log(eta);
    const Eigen::VectorXd jac = dtheta_du(p, beta, eta, nugget);
    for (Eigen::Index k = 0; k < u.size(); ++k) {
        const double h = 1e-4 * std::max(1.0, std::abs(u(k)));
        double f[2];
        for (int side = 0; side < 2; ++side) {
            Eigen::VectorXd v = u;
            v(k) += side == 0 ? h : -h;
            const double e = nugget ? std::exp(v(px)) : 0.0;
            f[side] = reference_term(model, params_from_xi(p, v.head(px)), e, nullptr);
        }
        out.grad(k) += (f[0] - f[1]) / (2.0 * h) / jac(k);
    }
    return out;
}

RobustnessDiagnostics robustness_check(const GaSPModel& model, const RangeParams& params, double /*eta*/) {
    RobustnessDiagnostics d;
    d.min_offdiag_corr = std::numeric_limits<double>::quiet_NaN();
    d.max_offdiag_corr = std::numeric_limits<double>::quiet_NaN();
    try {
        const Eigen::MatrixXd r = product_correlation(model.spec(), model.distances(), params.beta());
        const Eigen::Index n = r.rows();
        if (n < 2) return d;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = j + 1; i < n; ++i) {
                lo = std::min(lo, r(i, j));
                hi = std::max(hi, r(i, j));
            }
        }
        d.min_offdiag_corr = lo;
        d.max_offdiag_corr = hi;
        d.flag_near_identity = hi < 1e-8;
        d.flag_near_ones = lo > 1.0 - 1e-8;
    } catch (const std::exception&) {
    }
    return d;
}

FitResult fit_mode(const GaSPModel& model, const FitConfig& cfg) {
    const bool nugget = model.nugget_enabled();
    cfg.validate(model.dim(), nugget);
    check_prior(model, cfg.prior);

    {
        const Eigen::MatrixXd& h = model.mean_basis();
        const Eigen::VectorXd& y = model.outputs();
        const Eigen::VectorXd resid = y - h * h.colPivHouseholderQr().solve(y);
        if (!(resid.norm() > 1e-12 * y.norm())) {
            throw DegenerateOutputError("outputs lie in the column space of the mean basis; nothing to fit");
        }
    }

    const auto t0 = std::chrono::steady_clock::now();
    const long fact0 = model.factorizations();
    const Parameterization p = cfg.parameterization;
    const Eigen::Index px = model.dim();
    const Eigen::Index k = px + (nugget ? 1 : 0);
    const Eigen::VectorXd scale = design_scale(model);

    Eigen::VectorXd lower(k);
    Eigen::VectorXd upper(k);
    lower.head(px) = (1e-8 * scale.array().inverse()).log();
    upper.head(px) = (1e4 * scale.array().inverse()).log();
    if (nugget) {
        lower(px) = std::log(1e-12);
        upper(px) = std::log(1e4);
    }
    if (cfg.lower) lower = *cfg.lower;
    if (cfg.upper) upper = *cfg.upper;

    std::vector<Eigen::VectorXd> starts;
    const double base[3] = {1.0, 0.1, 10.0};
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(std::log(0.05), std::log(20.0));
    std::uniform_real_distribution<double> unif_eta(std::log(1e-4), std::log(1.0));
    for (int s = 0; s < cfg.multistart; ++s) {
        Eigen::VectorXd u(k);
        for (Eigen::Index l = 0; l < px; ++l) {
            const double c = s < 3 ? std::log(base[s]) : unif(rng);
            u(l) = c - std::log(scale(l));
        }
        if (nugget) u(px) = s < 3 ? std::log(1e-2) : unif_eta(rng);
        starts.push_back(u.cwiseMax(lower).cwiseMin(upper));
    }

    long n_fail = 0;
    ObjectiveFunction objective = [&](const Eigen::VectorXd& u, Eigen::VectorXd* grad) -> double {
        const double eta = nugget ? std::exp(u(px)) : 0.0;
        const RangeParams params = params_from_xi(p, u.head(px));
        try {
            const PosteriorValue pv = log_posterior(model, cfg.prior, params, eta, grad != nullptr);
            if (grad) {
                const Eigen::VectorXd beta = params.beta();
                *grad = -(pv.grad.array() * dtheta_du(p, beta, eta, nugget).array()).matrix();
            }
            return -pv.value;
        } catch (const NumericalError&) {
            ++n_fail;
            return std::numeric_limits<double>::infinity();
        }
    };

    OptimizerOptions opts;
    opts.max_iter = cfg.max_iter;
    opts.grad_tol = cfg.grad_tol;

    OptimizerTrace trace;
    trace.starts = cfg.multistart;
    OptimizerResult best;
    best.f = std::numeric_limits<double>::infinity();
    for (int s = 0; s < cfg.multistart; ++s) {
        OptimizerResult r = minimize_lbfgs(objective, starts[static_cast<std::size_t>(s)], lower, upper, opts);
        trace.n_objective += r.n_objective;
        trace.n_gradient += r.n_gradient;
        trace.iterations += r.iterations;
        if (!std::isfinite(r.f)) {
            ++trace.failed_starts;
            continue;
        }
        if (r.f < best.f) {
            best = std::move(r);
            trace.best_start = s;
        }
    }
    if (trace.best_start < 0) {
        if (n_fail > 0) throw NumericalError("posterior mode search failed: covariance factorization failed at every start");
        throw ConfigError("log posterior is non-finite at every start");
    }

    Eigen::VectorXd beta = params_from_xi(Parameterization::Beta, best.x.head(px)).values;
    double eta = nugget ? std::exp(best.x(px)) : 0.0;
    double value = -best.f;
    trace.converged = best.converged;
    trace.status = best.status;
    for (Eigen::Index i = 0; i < k; ++i) {
        if (best.x(i) <= lower(i) || best.x(i) >= upper(i)) trace.at_bound = true;
    }

    // Beta mode: coordinates pinned at the lower bound may sit exactly at beta_l = 0.
    if (p == Parameterization::Beta) {
        for (Eigen::Index l = 0; l < px; ++l) {
            if (best.x(l) > lower(l)) continue;
            Eigen::VectorXd trial = beta;
            trial(l) = 0.0;
            try {
                const double v = log_posterior(model, cfg.prior, RangeParams::from_beta(trial), eta, false).value;
                if (v >= value) {
                    beta = trial;
                    value = v;
                }
            } catch (const NumericalError&) {
            }
        }
    }

    FitResult out;
    out.parameterization = p;
    out.prior = cfg.prior;
    out.beta = beta;
    out.gamma = beta.array().inverse();
    out.xi = beta.array().log();
    out.eta = eta;
    out.log_posterior = value;
    const LikelihoodState st(model, beta, eta, false);
    out.theta_m = st.theta_hat();
    out.sigma2 = st.S2() / static_cast<double>(model.n() - model.q());
    out.diagnostics = robustness_check(model, out.params(), eta);
    trace.n_factorizations = model.factorizations() - fact0;
    trace.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.trace = trace;
    return out;
}

TimingProfile profile_timings(const GaSPModel& model, const FitConfig& cfg) {
    const FitResult r = fit_mode(model, cfg);
    return {r.trace.seconds, r.trace.n_objective, r.trace.n_gradient, r.trace.n_factorizations};
}

Predictor make_predictor(const GaSPModel& model, const FitResult& fit) {
    return Predictor(model, fit.params(), fit.eta);
}

}  // namespace robgasp
