#include "robgasp/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "robgasp/errors.hpp"
#include "robgasp/optimizer.hpp"

namespace robgasp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kZ975 = 1.959963984540054;

GaSPModel make_discrepancy_model(DesignMatrix design, Eigen::VectorXd y, MeanBasis basis, CorrelationSpec spec,
                                 const PriorSpec& prior) {
    if (y.size() != design.rows()) {
        throw DataError("field outputs have " + std::to_string(y.size()) + " entries but there are " +
                        std::to_string(design.rows()) + " field inputs");
    }
    const Eigen::MatrixXd h = basis.evaluate(design.points());
    const ProprietyReport rep = check_propriety_preconditions(h, y);
    if (!rep.pass) throw DataError("posterior propriety precondition fails: " + rep.message);
    return GaSPModel(std::move(design), std::move(y), std::move(basis), std::move(spec), prior.nugget_included);
}

Eigen::MatrixXd emulator_inputs(const Eigen::MatrixXd& x, const Eigen::VectorXd& theta) {
    Eigen::MatrixXd e(x.rows(), x.cols() + theta.size());
    e.leftCols(x.cols()) = x;
    e.rightCols(theta.size()) = theta.transpose().replicate(x.rows(), 1);
    return e;
}

// Box on (xi, [log eta]) shared with the mode search.
std::pair<Eigen::VectorXd, Eigen::VectorXd> range_box(const GaSPModel& model) {
    const Eigen::VectorXd scale = jr_default_params(model.design(), FitContext::Emulation).C;
    const Eigen::Index px = model.dim();
    const Eigen::Index k = px + (model.nugget_enabled() ? 1 : 0);
    Eigen::VectorXd lo(k);
    Eigen::VectorXd hi(k);
    lo.head(px) = (1e-8 * scale.array().inverse()).log();
    hi.head(px) = (1e4 * scale.array().inverse()).log();
    if (model.nugget_enabled()) {
        lo(px) = std::log(1e-12);
        hi(px) = std::log(1e4);
    }
    return {lo, hi};
}

bool has_intercept(const Eigen::MatrixXd& h) {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(h.rows());
    const Eigen::VectorXd fit = h * h.colPivHouseholderQr().solve(ones);
    return (fit - ones).norm() <= 1e-8 * std::sqrt(static_cast<double>(h.rows()));
}

std::string describe_state(const Eigen::VectorXd& theta, const Eigen::VectorXd& u, Eigen::Index px) {
    std::ostringstream os;
    os << "theta = (" << theta.transpose() << "), xi = (" << u.head(px).transpose() << ")";
    if (u.size() > px) os << ", log eta = " << u(px);
    return os.str();
}

}  // namespace

double ThetaPrior::log_pdf(const Eigen::VectorXd& theta) const {
    if (theta.size() != lower.size()) throw DataError("theta has the wrong dimension");
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        if (!(theta(k) >= lower(k) && theta(k) <= upper(k))) return kNegInf;
    }
    return log_density ? log_density(theta) : 0.0;
}

std::shared_ptr<const ModularEmulator> fit_emulator_modular(const Eigen::MatrixXd& runs,
                                                            const Eigen::VectorXd& outputs, Eigen::Index px,
                                                            std::uint64_t seed) {
    if (px < 1 || px >= runs.cols()) {
        throw ConfigError("emulator runs need at least one x column and one theta column");
    }
    if (runs.rows() != outputs.size()) throw DataError("emulator runs and outputs differ in length");
    if (runs.rows() <= 1) throw DataError("a modular emulator needs more runs than mean-basis columns");
    GaSPModel model(DesignMatrix(runs), outputs, MeanBasis::constant(),
                    CorrelationSpec::uniform(Kernel1D::matern(2.5), runs.cols()), false);
    FitConfig cfg = default_fit_config(model);
    cfg.seed = seed;
    FitResult fit = fit_mode(model, cfg);
    Predictor pred = make_predictor(model, fit);
    return std::make_shared<const ModularEmulator>(ModularEmulator{std::move(model), std::move(fit), std::move(pred), px});
}

ProprietyReport check_propriety_preconditions(const Eigen::MatrixXd& H, const Eigen::VectorXd& y) {
    ProprietyReport rep;
    rep.n = H.rows();
    rep.q = H.cols();
    if (y.size() != H.rows()) {
        rep.message = "H has " + std::to_string(H.rows()) + " rows but y has " + std::to_string(y.size()) + " entries";
        return rep;
    }
    Eigen::MatrixXd hy(H.rows(), H.cols() + 1);
    hy << H, y;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(hy);
    const Eigen::VectorXd sv = svd.singularValues();
    const double tol = 1e-10 * (sv.size() > 0 ? sv(0) : 0.0);
    rep.rank = (sv.array() > tol).count();
    const bool rank_ok = rep.rank == rep.q + 1;
    const bool size_ok = rep.n >= rep.q + 1;
    rep.pass = rank_ok && size_ok;
    std::ostringstream os;
    os << "rank(H, y) = " << rep.rank << " (need " << rep.q + 1 << "), n = " << rep.n << " vs q + 1 = " << rep.q + 1;
    if (!rank_ok) os << "; y is collinear with the mean basis";
    if (!size_ok) os << "; too few observations";
    rep.message = os.str();
    return rep;
}

CalibrationProblem::CalibrationProblem(DesignMatrix field_inputs, Eigen::VectorXd y, ComputerModel model,
                                       ThetaPrior theta_prior, MeanBasis basis, CorrelationSpec spec, PriorSpec prior)
    : model_(make_discrepancy_model(std::move(field_inputs), std::move(y), std::move(basis), std::move(spec), prior)),
      computer_(std::move(model)),
      theta_prior_(std::move(theta_prior)),
      prior_(std::move(prior)) {
    if (!computer_) throw ConfigError("calibration needs a computer model");
    validate();
}

CalibrationProblem::CalibrationProblem(DesignMatrix field_inputs, Eigen::VectorXd y,
                                       std::shared_ptr<const ModularEmulator> emulator, ThetaPrior theta_prior,
                                       MeanBasis basis, CorrelationSpec spec, PriorSpec prior)
    : model_(make_discrepancy_model(std::move(field_inputs), std::move(y), std::move(basis), std::move(spec), prior)),
      emulator_(std::move(emulator)),
      theta_prior_(std::move(theta_prior)),
      prior_(std::move(prior)) {
    if (!emulator_) throw ConfigError("modular calibration needs a fitted emulator");
    if (emulator_->px != model_.dim()) {
        throw ConfigError("emulator has " + std::to_string(emulator_->px) + " x columns but the field data has " +
                          std::to_string(model_.dim()));
    }
    if (emulator_->model.dim() != model_.dim() + theta_prior_.lower.size()) {
        throw ConfigError("emulator input dimension does not match x plus theta");
    }
    validate();
}

void CalibrationProblem::validate() {
    const Eigen::Index pt = theta_prior_.lower.size();
    if (pt < 1 || theta_prior_.upper.size() != pt) throw ConfigError("theta prior bounds are missing or inconsistent");
    for (Eigen::Index k = 0; k < pt; ++k) {
        if (!std::isfinite(theta_prior_.lower(k)) || !std::isfinite(theta_prior_.upper(k)) ||
            !(theta_prior_.lower(k) < theta_prior_.upper(k))) {
            throw ConfigError("theta prior bounds for coordinate " + std::to_string(k + 1) +
                              " must be finite with lower < upper");
        }
    }
    prior_.validate();
    if (prior_.kind == PriorKind::JR && prior_.jr->C.size() != model_.dim()) {
        throw ConfigError("JR prior scale constants do not match the number of field inputs");
    }
}

ProprietyReport CalibrationProblem::propriety() const {
    return check_propriety_preconditions(model_.mean_basis(), model_.outputs());
}

Eigen::VectorXd CalibrationProblem::model_mean(const Eigen::MatrixXd& x, const Eigen::VectorXd& theta) const {
    if (!emulator_) {
        Eigen::VectorXd f = computer_(x, theta);
        if (f.size() != x.rows()) throw DataError("computer model returned the wrong number of outputs");
        return f;
    }
    return emulator_->predictor.predict_mean(emulator_inputs(x, theta));
}

Eigen::VectorXd CalibrationProblem::model_draw(const Eigen::MatrixXd& x, const Eigen::VectorXd& theta,
                                               std::mt19937_64& rng) const {
    if (!emulator_) return model_mean(x, theta);
    const Eigen::MatrixXd e = emulator_inputs(x, theta);
    const Eigen::VectorXd mean = emulator_->predictor.predict_mean(e);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(emulator_->predictor.predictive_covariance(e));
    std::normal_distribution<double> nd;
    Eigen::VectorXd z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = nd(rng);
    const Eigen::VectorXd sd = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return mean + eig.eigenvectors() * sd.cwiseProduct(z);
}

std::vector<bool> CalibrationProblem::extrapolation_flags(const Eigen::MatrixXd& x) const {
    std::vector<bool> out(static_cast<std::size_t>(x.rows()), false);
    if (!emulator_) return out;
    const DesignMatrix& d = emulator_->model.design();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index l = 0; l < x.cols(); ++l) {
            if (x(i, l) < d.lower()(l) || x(i, l) > d.upper()(l)) out[static_cast<std::size_t>(i)] = true;
        }
    }
    return out;
}

double CalibrationProblem::log_range_prior(const LikelihoodState& st) const {
    const bool nugget = model_.nugget_enabled();
    const Eigen::VectorXd& beta = st.beta();
    if (prior_.kind == PriorKind::JR) {
        double v = nugget ? jr_log_density(*prior_.jr, beta, st.eta()) : jr_log_density(*prior_.jr, beta);
        v += beta.array().log().sum();
        if (nugget) v += std::log(st.eta());
        return v;
    }
    std::vector<Eigen::MatrixXd> dr;
    dr.reserve(static_cast<std::size_t>(beta.size()));
    for (Eigen::Index l = 0; l < beta.size(); ++l) dr.push_back(st.dR_dxi(model_, l));
    return half_log_det_fisher(st.fisher(dr, nugget ? std::optional<double>(st.eta()) : std::nullopt));
}

double NigConditional::collapsed_sigma2_log_density(double sigma2) const {
    if (!(sigma2 > 0.0)) return kNegInf;
    const double shape = 0.5 * static_cast<double>(n - q);
    const double scale = 0.5 * S2;
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(sigma2) - scale / sigma2;
}

double NigConditional::sigma2_log_density(double sigma2, const Eigen::VectorXd& theta_m) const {
    if (!(sigma2 > 0.0)) return kNegInf;
    const Eigen::VectorXd d = theta_m - theta_hat;
    const double shape = 0.5 * static_cast<double>(n);
    const double scale = 0.5 * (S2 + d.dot(gram * d));
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(sigma2) - scale / sigma2;
}

double NigConditional::theta_m_log_density(const Eigen::VectorXd& theta_m, double sigma2) const {
    const Eigen::VectorXd d = theta_m - theta_hat;
    const double qd = static_cast<double>(q);
    return -0.5 * qd * std::log(2.0 * M_PI * sigma2) + 0.5 * state->logdet_gram() - 0.5 * d.dot(gram * d) / sigma2;
}

void NigConditional::draw(std::mt19937_64& rng, double& sigma2, Eigen::VectorXd& theta_m) const {
    std::gamma_distribution<double> gd(0.5 * static_cast<double>(n - q), 1.0);
    sigma2 = 0.5 * S2 / gd(rng);
    std::normal_distribution<double> nd;
    Eigen::VectorXd e(q);
    for (Eigen::Index k = 0; k < q; ++k) e(k) = nd(rng);
    theta_m = theta_hat + std::sqrt(sigma2) * state->gram_chol().matrixU().solve(e);
}

NigConditional gibbs_conditionals(const CalibrationProblem& prob, const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& xi, double eta) {
    const GaSPModel& m = prob.discrepancy();
    NigConditional c;
    c.z = prob.field_outputs() - prob.model_mean(prob.field_inputs(), theta);
    const Eigen::VectorXd beta = xi.array().exp();
    c.state = std::make_shared<const LikelihoodState>(m, c.z, beta, m.nugget_enabled() ? eta : 0.0, false);
    c.n = m.n();
    c.q = m.q();
    c.S2 = c.state->S2();
    c.theta_hat = c.state->theta_hat();
    c.gram = c.state->gram_chol().reconstructedMatrix();
    return c;
}

PosteriorChain run_mcmc(const CalibrationProblem& prob, const McmcOptions& opts) {
    if (opts.S < 1 || opts.S0 < 0 || opts.S0 >= opts.S) {
        throw ConfigError("MCMC needs S > S0 >= 0 (got S = " + std::to_string(opts.S) +
                          ", S0 = " + std::to_string(opts.S0) + ")");
    }
    if (!(opts.target_accept > 0.0 && opts.target_accept < 1.0)) throw ConfigError("target acceptance must lie in (0, 1)");
    if (!(opts.init_scale > 0.0)) throw ConfigError("initial proposal scale must be positive");
    const GaSPModel& model = prob.discrepancy();
    if (prob.prior().kind == PriorKind::Reference && !has_intercept(model.mean_basis())) {
        throw ConfigError("the reference prior in calibration requires an intercept in the mean basis");
    }

    const ThetaPrior& tp = prob.theta_prior();
    const Eigen::Index pt = prob.theta_dim();
    const Eigen::Index px = model.dim();
    const bool nugget = model.nugget_enabled();
    const Eigen::Index ku = px + (nugget ? 1 : 0);
    const auto [ulo, uhi] = range_box(model);
    const Eigen::MatrixXd& x = prob.field_inputs();
    const Eigen::VectorXd& y = prob.field_outputs();
    const bool need_q = prob.prior().kind == PriorKind::Reference;

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Eigen::VectorXd theta = opts.init_theta ? *opts.init_theta : Eigen::VectorXd(0.5 * (tp.lower + tp.upper));
    if (theta.size() != pt) throw ConfigError("initial theta has the wrong dimension");
    Eigen::VectorXd u(ku);
    if (opts.init_xi) {
        if (opts.init_xi->size() != px) throw ConfigError("initial xi has the wrong dimension");
        u.head(px) = *opts.init_xi;
    } else {
        u.head(px) = -jr_default_params(model.design(), FitContext::Calibration).C.array().log();
    }
    if (nugget) u(px) = std::log(opts.init_eta.value_or(0.1));

    auto eval = [&](const Eigen::VectorXd& z, const Eigen::VectorXd& uu, bool form_q) {
        const Eigen::VectorXd beta = uu.head(px).array().exp();
        return std::make_shared<const LikelihoodState>(model, z, beta, nugget ? std::exp(uu(px)) : 0.0, form_q);
    };

    Eigen::VectorXd f_cur = prob.model_draw(x, theta, rng);
    std::shared_ptr<const LikelihoodState> cur;
    double lp_range = kNegInf;
    try {
        cur = eval(y - f_cur, u, need_q);
        lp_range = prob.log_range_prior(*cur);
    } catch (const Error& e) {
        throw NumericalError(std::string("MCMC initial state is not evaluable (") + e.what() + "); " +
                             describe_state(theta, u, px));
    }
    double lp_theta = tp.log_pdf(theta);
    if (!std::isfinite(lp_range) || !std::isfinite(lp_theta)) {
        throw ConfigError("MCMC initial state has zero prior density; " + describe_state(theta, u, px));
    }
    double ll = cur->log_marginal_lik();

    Eigen::VectorXd log_s_theta = (opts.init_scale * (tp.upper - tp.lower)).array().log();
    Eigen::VectorXd log_s_u = Eigen::VectorXd::Constant(ku, std::log(opts.init_scale));

    PosteriorChain ch;
    ch.S = opts.S;
    ch.S0 = opts.S0;
    ch.seed = opts.seed;
    ch.theta.resize(opts.S, pt);
    ch.theta_m.resize(opts.S, model.q());
    ch.sigma2.resize(opts.S);
    ch.xi.resize(opts.S, px);
    ch.log_eta = Eigen::VectorXd::Zero(opts.S);

    long acc_t = 0;
    long prop_t = 0;
    long acc_u = 0;
    long prop_u = 0;
    int failures = 0;
    auto failed = [&](const std::string& what) {
        if (++failures > opts.max_consecutive_failures) {
            throw NumericalError("MCMC: more than " + std::to_string(opts.max_consecutive_failures) +
                                 " consecutive covariance failures (" + what + "); state " +
                                 describe_state(theta, u, px));
        }
    };
    auto adapt = [&](double& log_s, bool accepted, int it) {
        if (it >= opts.S0) return;
        const double gain = 1.0 / std::pow(static_cast<double>(it) + 1.0, 0.6);
        log_s += gain * ((accepted ? 1.0 : 0.0) - opts.target_accept);
    };

    for (int it = 0; it < opts.S; ++it) {
        const bool counting = it >= opts.S0;
        if (opts.update_theta) {
            for (Eigen::Index k = 0; k < pt; ++k) {
                Eigen::VectorXd prop = theta;
                prop(k) += std::exp(log_s_theta(k)) * nd(rng);
                bool accepted = false;
                const double lpt = tp.log_pdf(prop);
                if (std::isfinite(lpt)) {
                    try {
                        const Eigen::VectorXd f = prob.model_draw(x, prop, rng);
                        auto st = eval(y - f, u, false);
                        failures = 0;
                        const double ll_new = st->log_marginal_lik();
                        if (std::log(unif(rng)) < ll_new + lpt - ll - lp_theta) {
                            theta = prop;
                            f_cur = f;
                            cur = st;
                            ll = ll_new;
                            lp_theta = lpt;
                            accepted = true;
                        }
                    } catch (const Error& e) {
                        failed(e.what());
                    }
                }
                adapt(log_s_theta(k), accepted, it);
                if (counting) {
                    ++prop_t;
                    if (accepted) ++acc_t;
                }
            }
        }
        if (opts.update_range) {
            for (Eigen::Index j = 0; j < ku; ++j) {
                Eigen::VectorXd prop = u;
                prop(j) += std::exp(log_s_u(j)) * nd(rng);
                bool accepted = false;
                if (prop(j) >= ulo(j) && prop(j) <= uhi(j)) {
                    try {
                        auto st = eval(y - f_cur, prop, need_q);
                        const double lpr = prob.log_range_prior(*st);
                        failures = 0;
                        const double ll_new = st->log_marginal_lik();
                        if (std::isfinite(lpr) && std::log(unif(rng)) < ll_new + lpr - ll - lp_range) {
                            u = prop;
                            cur = st;
                            ll = ll_new;
                            lp_range = lpr;
                            accepted = true;
                        }
                    } catch (const Error& e) {
                        failed(e.what());
                    }
                }
                adapt(log_s_u(j), accepted, it);
                if (counting) {
                    ++prop_u;
                    if (accepted) ++acc_u;
                }
            }
        }

        NigConditional nig;
        nig.n = model.n();
        nig.q = model.q();
        nig.S2 = cur->S2();
        nig.theta_hat = cur->theta_hat();
        nig.state = cur;
        double s2 = 0.0;
        Eigen::VectorXd tm;
        nig.draw(rng, s2, tm);

        ch.theta.row(it) = theta.transpose();
        ch.theta_m.row(it) = tm.transpose();
        ch.sigma2(it) = s2;
        ch.xi.row(it) = u.head(px).transpose();
        if (nugget) ch.log_eta(it) = u(px);
    }
    ch.accept_theta = prop_t > 0 ? static_cast<double>(acc_t) / static_cast<double>(prop_t) : 0.0;
    ch.accept_range = prop_u > 0 ? static_cast<double>(acc_u) / static_cast<double>(prop_u) : 0.0;
    return ch;
}

IntervalPrediction predict_calibrated(const CalibrationProblem& prob, const PosteriorChain& chain,
                                      const Eigen::MatrixXd& new_inputs, PredictionMode mode, std::uint64_t seed,
                                      int max_samples) {
    const GaSPModel& model = prob.discrepancy();
    if (chain.retained() <= 0 || chain.theta.rows() != chain.S) throw DataError("posterior chain has no retained samples");
    if (new_inputs.cols() != model.dim()) throw DataError("prediction inputs have the wrong number of columns");
    if (max_samples < 1) throw ConfigError("prediction needs at least one posterior sample");

    const int r = chain.retained();
    const int ns = std::min(r, max_samples);
    const Eigen::Index m = new_inputs.rows();
    const Eigen::MatrixXd hs = model.basis().evaluate(new_inputs);
    const Eigen::MatrixXd& x = prob.field_inputs();
    const auto cross = cross_distances(x, new_inputs);
    const bool nugget = model.nugget_enabled();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd draws(ns, m);
    Eigen::VectorXd mean_sum = Eigen::VectorXd::Zero(m);
    for (int k = 0; k < ns; ++k) {
        const int s = chain.S0 + static_cast<int>(static_cast<long>(k) * r / ns);
        const Eigen::VectorXd theta = chain.theta.row(s).transpose();
        const Eigen::VectorXd tm = chain.theta_m.row(s).transpose();
        Eigen::VectorXd mu = prob.model_mean(new_inputs, theta) + hs * tm;
        if (mode == PredictionMode::ModelOnly) {
            draws.row(k) = mu.transpose();
            mean_sum += mu;
            continue;
        }
        const Eigen::VectorXd beta = chain.xi.row(s).transpose().array().exp();
        const double eta = nugget ? std::exp(chain.log_eta(s)) : 0.0;
        const Eigen::VectorXd z = prob.field_outputs() - prob.model_mean(x, theta);
        const LikelihoodState st(model, z, beta, eta, false);
        const Eigen::MatrixXd rs = product_correlation(model.spec(), cross, beta);
        const Eigen::VectorXd w = st.chol().solve(z - model.mean_basis() * tm);
        const Eigen::MatrixXd lr = st.chol().matrixL().solve(rs);
        mu += rs.transpose() * w;
        const Eigen::ArrayXd var = chain.sigma2(s) * (1.0 - lr.colwise().squaredNorm().transpose().array()).max(0.0);
        mean_sum += mu;
        for (Eigen::Index j = 0; j < m; ++j) draws(k, j) = mu(j) + std::sqrt(var(j)) * nd(rng);
    }

    IntervalPrediction out;
    out.mean = mean_sum / static_cast<double>(ns);
    out.lower.resize(m);
    out.upper.resize(m);
    std::vector<double> col(static_cast<std::size_t>(ns));
    for (Eigen::Index j = 0; j < m; ++j) {
        for (int k = 0; k < ns; ++k) col[static_cast<std::size_t>(k)] = draws(k, j);
        out.lower(j) = quantile(col, 0.025);
        out.upper(j) = quantile(col, 0.975);
    }
    out.extrapolated = prob.extrapolation_flags(new_inputs);
    return out;
}

MleCalibration calibrate_mle(const CalibrationProblem& prob, std::uint64_t seed) {
    const GaSPModel& model = prob.discrepancy();
    const ThetaPrior& tp = prob.theta_prior();
    const Eigen::Index pt = prob.theta_dim();
    const Eigen::Index px = model.dim();
    const bool nugget = model.nugget_enabled();
    const Eigen::Index ku = px + (nugget ? 1 : 0);
    const Eigen::Index dim = pt + ku;
    const auto [ulo, uhi] = range_box(model);
    const double nd = static_cast<double>(model.n());
    const Eigen::MatrixXd& x = prob.field_inputs();

    Eigen::VectorXd lo(dim);
    Eigen::VectorXd hi(dim);
    lo << tp.lower, ulo;
    hi << tp.upper, uhi;

    auto profile = [&](const Eigen::VectorXd& v) {
        const Eigen::VectorXd z = prob.field_outputs() - prob.model_mean(x, v.head(pt));
        const Eigen::VectorXd beta = v.segment(pt, px).array().exp();
        const LikelihoodState st(model, z, beta, nugget ? std::exp(v(pt + px)) : 0.0, false);
        return -0.5 * st.logdet_C() - 0.5 * nd * std::log(st.S2() / nd) - 0.5 * nd;
    };
    const ObjectiveFunction obj = [&](const Eigen::VectorXd& v, Eigen::VectorXd* grad) -> double {
        try {
            const double f = -profile(v);
            if (grad) {
                grad->resize(dim);
                for (Eigen::Index i = 0; i < dim; ++i) {
                    const double h = 1e-5 * std::max(1.0, std::abs(v(i)));
                    Eigen::VectorXd a = v;
                    Eigen::VectorXd b = v;
                    a(i) = std::min(v(i) + h, hi(i));
                    b(i) = std::max(v(i) - h, lo(i));
                    (*grad)(i) = (-profile(a) + profile(b)) / (a(i) - b(i));
                }
            }
            return f;
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    const Eigen::VectorXd scale = jr_default_params(model.design(), FitContext::Emulation).C;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    OptimizerResult best;
    best.f = std::numeric_limits<double>::infinity();
    constexpr int kStarts = 5;
    for (int s = 0; s < kStarts; ++s) {
        Eigen::VectorXd v0(dim);
        for (Eigen::Index k = 0; k < pt; ++k) {
            const double frac = (static_cast<double>(s) + 0.5) / kStarts;
            v0(k) = tp.lower(k) + frac * (tp.upper(k) - tp.lower(k));
        }
        for (Eigen::Index l = 0; l < px; ++l) v0(pt + l) = std::log(std::exp(2.0 * unif(rng) - 1.0) / scale(l));
        if (nugget) v0(pt + px) = std::log(0.1);
        OptimizerResult res = minimize_lbfgs(obj, v0.cwiseMax(lo).cwiseMin(hi), lo, hi, OptimizerOptions{});
        if (res.f < best.f) best = std::move(res);
    }
    if (!std::isfinite(best.f)) throw NumericalError("MLE calibration: profile likelihood is non-finite at every start");

    MleCalibration out;
    out.theta = best.x.head(pt);
    out.xi = best.x.segment(pt, px);
    out.eta = nugget ? std::exp(best.x(pt + px)) : 0.0;
    const Eigen::VectorXd z = prob.field_outputs() - prob.model_mean(x, out.theta);
    const LikelihoodState st(model, z, out.xi.array().exp().matrix(), out.eta, false);
    out.theta_m = st.theta_hat();
    out.sigma2 = st.S2() / nd;
    out.log_lik = -best.f;
    return out;
}

IntervalPrediction predict_mle(const CalibrationProblem& prob, const MleCalibration& mle,
                               const Eigen::MatrixXd& new_inputs, PredictionMode mode) {
    const GaSPModel& model = prob.discrepancy();
    if (new_inputs.cols() != model.dim()) throw DataError("prediction inputs have the wrong number of columns");
    const Eigen::MatrixXd hs = model.basis().evaluate(new_inputs);
    const Eigen::VectorXd beta = mle.xi.array().exp();
    const Eigen::VectorXd z = prob.field_outputs() - prob.model_mean(prob.field_inputs(), mle.theta);
    const LikelihoodState st(model, z, beta, mle.eta, false);

    Eigen::VectorXd mean = prob.model_mean(new_inputs, mle.theta) + hs * mle.theta_m;
    Eigen::ArrayXd var;
    if (mode == PredictionMode::ModelOnly) {
        const Eigen::MatrixXd g = st.gram_chol().matrixL().solve(hs.transpose());
        var = mle.sigma2 * g.colwise().squaredNorm().transpose().array();
    } else {
        const Eigen::MatrixXd rs = product_correlation(model.spec(), cross_distances(prob.field_inputs(), new_inputs), beta);
        mean += rs.transpose() * st.chol().solve(z - model.mean_basis() * mle.theta_m);
        const Eigen::MatrixXd lr = st.chol().matrixL().solve(rs);
        var = mle.sigma2 * (1.0 - lr.colwise().squaredNorm().transpose().array()).max(0.0);
    }
    IntervalPrediction out;
    out.mean = mean;
    out.lower = mean.array() - kZ975 * var.sqrt();
    out.upper = mean.array() + kZ975 * var.sqrt();
    out.extrapolated = prob.extrapolation_flags(new_inputs);
    return out;
}

}  // namespace robgasp
