#include "robgasp/gasp.hpp"

#include <cmath>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "robgasp/errors.hpp"

namespace robgasp {

MeanBasis MeanBasis::constant() { return {}; }

MeanBasis MeanBasis::linear() {
    MeanBasis b;
    b.kind_ = Kind::Linear;
    b.name_ = "linear";
    b.columns_ = -1;
    return b;
}

MeanBasis MeanBasis::custom(std::string name, Eigen::Index columns, RowFunction h) {
    if (columns < 1) throw ConfigError("mean basis needs at least one column");
    if (!h) throw ConfigError("mean basis function is empty");
    MeanBasis b;
    b.kind_ = Kind::Custom;
    b.name_ = std::move(name);
    b.columns_ = columns;
    b.custom_ = std::move(h);
    return b;
}

Eigen::Index MeanBasis::columns(Eigen::Index input_dim) const {
    return kind_ == Kind::Linear ? input_dim + 1 : columns_;
}

Eigen::MatrixXd MeanBasis::evaluate(const Eigen::MatrixXd& points) const {
    const Eigen::Index m = points.rows();
    switch (kind_) {
        case Kind::Constant: return Eigen::MatrixXd::Ones(m, 1);
        case Kind::Linear: {
            Eigen::MatrixXd h(m, points.cols() + 1);
            h.col(0).setOnes();
            h.rightCols(points.cols()) = points;
            return h;
        }
        case Kind::Custom: {
            Eigen::MatrixXd h(m, columns_);
            for (Eigen::Index i = 0; i < m; ++i) {
                Eigen::RowVectorXd row = custom_(points.row(i));
                if (row.size() != columns_) {
                    throw ConfigError("mean basis '" + name_ + "' returned " + std::to_string(row.size()) +
                                      " columns, expected " + std::to_string(columns_));
                }
                h.row(i) = row;
            }
            return h;
        }
    }
    return Eigen::MatrixXd::Ones(m, 1);
}

GaSPModel::GaSPModel(DesignMatrix design, Eigen::VectorXd y, MeanBasis basis, CorrelationSpec spec,
                     bool nugget_enabled)
    : design_(std::move(design)), y_(std::move(y)), basis_(std::move(basis)), spec_(std::move(spec)),
      nugget_(nugget_enabled) {
    if (y_.size() != design_.rows()) {
        throw DataError("design has " + std::to_string(design_.rows()) + " rows but there are " +
                        std::to_string(y_.size()) + " outputs");
    }
    if (!y_.allFinite()) throw DataError("outputs contain non-finite values");
    if (spec_.dim() != design_.dim()) {
        throw DataError("correlation spec has " + std::to_string(spec_.dim()) + " kernels but the design has " +
                        std::to_string(design_.dim()) + " columns");
    }
    h_ = basis_.evaluate(design_.points());
    if (h_.rows() >= 1 && !(n() > q())) {
        throw DataError("need more observations than mean-basis columns (n = " + std::to_string(n()) +
                        ", q = " + std::to_string(q()) + ")");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(h_);
    if (qr.rank() < h_.cols()) {
        throw RankError("mean basis matrix H has rank " + std::to_string(qr.rank()) + " < " +
                        std::to_string(h_.cols()));
    }
    dist_ = coordinate_distances(design_.points());
}

GaSPModel::GaSPModel(const GaSPModel& other)
    : design_(other.design_), y_(other.y_), basis_(other.basis_), h_(other.h_), spec_(other.spec_),
      nugget_(other.nugget_), dist_(other.dist_), factorizations_(other.factorizations_.load()) {}

GaSPModel& GaSPModel::operator=(const GaSPModel& other) {
    if (this != &other) {
        design_ = other.design_;
        y_ = other.y_;
        basis_ = other.basis_;
        h_ = other.h_;
        spec_ = other.spec_;
        nugget_ = other.nugget_;
        dist_ = other.dist_;
        factorizations_.store(other.factorizations_.load());
    }
    return *this;
}

GaSPModel::GaSPModel(GaSPModel&& other) noexcept
    : design_(std::move(other.design_)), y_(std::move(other.y_)), basis_(std::move(other.basis_)),
      h_(std::move(other.h_)), spec_(std::move(other.spec_)), nugget_(other.nugget_),
      dist_(std::move(other.dist_)), factorizations_(other.factorizations_.load()) {}

GaSPModel& GaSPModel::operator=(GaSPModel&& other) noexcept {
    design_ = std::move(other.design_);
    y_ = std::move(other.y_);
    basis_ = std::move(other.basis_);
    h_ = std::move(other.h_);
    spec_ = std::move(other.spec_);
    nugget_ = other.nugget_;
    dist_ = std::move(other.dist_);
    factorizations_.store(other.factorizations_.load());
    return *this;
}

GaSPModel::~GaSPModel() = default;

GaSPModel GaSPModel::with_outputs(Eigen::VectorXd y) const {
    GaSPModel copy(*this);
    if (y.size() != n()) throw DataError("replacement outputs have the wrong length");
    if (!y.allFinite()) throw DataError("outputs contain non-finite values");
    copy.y_ = std::move(y);
    copy.factorizations_.store(0);
    return copy;
}

const std::vector<double>& jitter_levels() {
    static const std::vector<double> levels{1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4};
    return levels;
}

namespace {

// Cholesky of c with the escalating jitter policy. Returns the jitter actually added.
double factorize(Eigen::LLT<Eigen::MatrixXd>& llt, Eigen::MatrixXd c) {
    llt.compute(c);
    if (llt.info() == Eigen::Success && c.allFinite()) return 0.0;
    if (!c.allFinite()) throw NumericalError("covariance matrix has non-finite entries");
    const double scale = c.diagonal().mean();
    std::vector<double> tried;
    double added = 0.0;
    for (double level : jitter_levels()) {
        const double j = level * scale;
        c.diagonal().array() += j - added;
        added = j;
        tried.push_back(j);
        llt.compute(c);
        if (llt.info() == Eigen::Success) return j;
    }
    throw SingularCovarianceError(tried);
}

void check_state_inputs(const GaSPModel& model, const Eigen::VectorXd& beta, double eta) {
    if (beta.size() != model.dim()) {
        throw DataError("expected " + std::to_string(model.dim()) + " range parameters, got " +
                        std::to_string(beta.size()));
    }
    if (!beta.allFinite() || (beta.array() < 0.0).any()) {
        throw DataError("inverse range parameters must be finite and nonnegative");
    }
    if (!std::isfinite(eta) || eta < 0.0) throw DataError("nugget must be finite and nonnegative");
}

}  // namespace

LikelihoodState::LikelihoodState(const GaSPModel& model, const Eigen::VectorXd& beta, double eta, bool form_q)
    : LikelihoodState(model, model.outputs(), beta, eta, form_q) {}

LikelihoodState::LikelihoodState(const GaSPModel& model, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                                 double eta, bool form_q)
    : beta_(beta), eta_(eta), n_(model.n()), q_(model.q()) {
    check_state_inputs(model, beta, eta);
    if (y.size() != n_) throw DataError("output vector has the wrong length");
    build(model, y, form_q);
}

void LikelihoodState::build(const GaSPModel& model, const Eigen::VectorXd& y, bool form_q) {
    r_ = product_correlation(model.spec(), model.distances(), beta_);
    Eigen::MatrixXd c = r_;
    if (eta_ > 0.0) c.diagonal().array() += eta_;
    model.count_factorization();
    jitter_ = factorize(chol_, std::move(c));

    const Eigen::MatrixXd& h = model.mean_basis();
    cinv_h_ = chol_.solve(h);
    const Eigen::MatrixXd gram = h.transpose() * cinv_h_;
    gram_chol_.compute(gram);
    if (gram_chol_.info() != Eigen::Success) throw RankError("H^T C^-1 H is not positive definite");

    theta_hat_ = gram_chol_.solve(cinv_h_.transpose() * y);
    const Eigen::VectorXd resid = y - h * theta_hat_;
    qy_ = chol_.solve(resid);
    // S2 = ||L^-1 (y - H theta)||^2 avoids cancellation in y^T Q y.
    const Eigen::VectorXd white = chol_.matrixL().solve(resid);
    s2_ = white.squaredNorm();
    const double scale = chol_.matrixL().solve(y).squaredNorm();
    if (!(s2_ > 1e-24 * scale)) {
        throw DegenerateOutputError("outputs lie in the column space of the mean basis (S2 = 0)");
    }

    logdet_c_ = 2.0 * chol_.matrixLLT().diagonal().array().log().sum();
    logdet_gram_ = 2.0 * gram_chol_.matrixLLT().diagonal().array().log().sum();

    if (form_q) {
        Eigen::MatrixXd cinv = chol_.solve(Eigen::MatrixXd::Identity(n_, n_));
        Eigen::MatrixXd qm = cinv - cinv_h_ * gram_chol_.solve(cinv_h_.transpose());
        q_matrix_ = (0.5 * (qm + qm.transpose())).eval();
    }
}

const Eigen::MatrixXd& LikelihoodState::Q() const {
    if (!q_matrix_) throw NumericalError("LikelihoodState: Q was not formed");
    return *q_matrix_;
}

double LikelihoodState::log_marginal_lik() const noexcept {
    const double dof = static_cast<double>(n_ - q_);
    return -0.5 * logdet_c_ - 0.5 * logdet_gram_ - 0.5 * dof * std::log(s2_);
}

Eigen::MatrixXd LikelihoodState::dR_dxi(const GaSPModel& model, Eigen::Index l) const {
    const auto& d = model.distances()[static_cast<std::size_t>(l)];
    const Eigen::MatrixXd g = dlog_correlation_dbeta(model.spec()[l], d, beta_(l));
    return (r_.array() * g.array() * beta_(l)).matrix();
}

Eigen::VectorXd LikelihoodState::grad_log_lik(const std::vector<Eigen::MatrixXd>& dR,
                                              std::optional<double> nugget_scale) const {
    const Eigen::MatrixXd& qm = Q();
    const double half_dof = 0.5 * static_cast<double>(n_ - q_);
    const auto k = static_cast<Eigen::Index>(dR.size());
    Eigen::VectorXd g(k + (nugget_scale ? 1 : 0));
    for (Eigen::Index l = 0; l < k; ++l) {
        const auto& dc = dR[static_cast<std::size_t>(l)];
        const double tr = (qm.array() * dc.array()).sum();
        const double quad = qy_.dot(dc * qy_);
        g(l) = -0.5 * tr + half_dof * quad / s2_;
    }
    if (nugget_scale) {
        const double s = *nugget_scale;
        g(k) = s * (-0.5 * qm.trace() + half_dof * qy_.squaredNorm() / s2_);
    }
    return g;
}

Eigen::MatrixXd LikelihoodState::fisher(const std::vector<Eigen::MatrixXd>& dR,
                                        std::optional<double> nugget_scale) const {
    const Eigen::MatrixXd& qm = Q();
    std::vector<Eigen::MatrixXd> w;
    w.reserve(dR.size() + 1);
    for (const auto& dc : dR) w.push_back(dc * qm);
    if (nugget_scale) w.push_back(*nugget_scale * qm);
    const auto k = static_cast<Eigen::Index>(w.size());
    Eigen::MatrixXd info(k + 1, k + 1);
    info(0, 0) = static_cast<double>(n_ - q_);
    for (Eigen::Index a = 0; a < k; ++a) {
        const auto& wa = w[static_cast<std::size_t>(a)];
        info(0, a + 1) = info(a + 1, 0) = wa.trace();
        for (Eigen::Index b = a; b < k; ++b) {
            const auto& wb = w[static_cast<std::size_t>(b)];
            info(a + 1, b + 1) = info(b + 1, a + 1) = (wa.array() * wb.transpose().array()).sum();
        }
    }
    return info;
}

namespace {

void check_params(const GaSPModel& model, const RangeParams& params, double eta) {
    if (params.size() != model.dim()) {
        throw DataError("expected " + std::to_string(model.dim()) + " range parameters, got " +
                        std::to_string(params.size()));
    }
    if (!model.nugget_enabled() && eta != 0.0) throw DataError("nugget given for a model without nugget");
}

}  // namespace

std::vector<Eigen::MatrixXd> corr_derivatives(const GaSPModel& model, const LikelihoodState& st,
                                               const RangeParams& params) {
    const Eigen::VectorXd chain = params.dbeta_dvalue();
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<std::size_t>(model.dim()));
    for (Eigen::Index l = 0; l < model.dim(); ++l) {
        const auto& d = model.distances()[static_cast<std::size_t>(l)];
        const Eigen::MatrixXd g = dlog_correlation_dbeta(model.spec()[l], d, st.beta()(l));
        out.emplace_back((st.R().array() * g.array() * chain(l)).matrix());
    }
    return out;
}

double log_marginal_lik(const GaSPModel& model, const RangeParams& params, double eta) {
    check_params(model, params, eta);
    return LikelihoodState(model, params.beta(), eta, false).log_marginal_lik();
}

Eigen::VectorXd log_marginal_lik_grad(const GaSPModel& model, const RangeParams& params, double eta) {
    check_params(model, params, eta);
    const LikelihoodState st(model, params.beta(), eta, true);
    const auto dr = corr_derivatives(model, st, params);
    return st.grad_log_lik(dr, model.nugget_enabled() ? std::optional<double>(1.0) : std::nullopt);
}

Eigen::MatrixXd fisher_info(const GaSPModel& model, const RangeParams& params, double eta) {
    check_params(model, params, eta);
    const LikelihoodState st(model, params.beta(), eta, true);
    const auto dr = corr_derivatives(model, st, params);
    return st.fisher(dr, model.nugget_enabled() ? std::optional<double>(1.0) : std::nullopt);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> PredictiveDistribution::interval(double level) const {
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("interval level must lie in (0, 1)");
    const boost::math::students_t dist(dof);
    const double t = boost::math::quantile(dist, 0.5 + 0.5 * level);
    return {mean - t * scale, mean + t * scale};
}

Predictor::Predictor(GaSPModel model, const RangeParams& params, double eta)
    : model_(std::move(model)), beta_(params.beta()), eta_(eta) {
    check_params(model_, params, eta);
    check_state_inputs(model_, beta_, eta_);
    Eigen::MatrixXd c = product_correlation(model_.spec(), model_.distances(), beta_);
    if (eta_ > 0.0) c.diagonal().array() += eta_;
    model_.count_factorization();
    factorize(chol_, std::move(c));
    const Eigen::MatrixXd& h = model_.mean_basis();
    linv_h_ = chol_.matrixL().solve(h);
    gram_chol_.compute(linv_h_.transpose() * linv_h_);
    if (gram_chol_.info() != Eigen::Success) throw RankError("H^T C^-1 H is singular");
    const Eigen::VectorXd linv_y = chol_.matrixL().solve(model_.outputs());
    theta_hat_ = gram_chol_.solve(linv_h_.transpose() * linv_y);
    const Eigen::VectorXd white = linv_y - linv_h_ * theta_hat_;
    alpha_ = chol_.matrixU().solve(white);
    sigma2_hat_ = white.squaredNorm() / static_cast<double>(model_.n() - model_.q());
}

Eigen::VectorXd Predictor::predict_mean(const Eigen::MatrixXd& new_inputs) const {
    const auto dist = cross_distances(model_.design().points(), new_inputs);
    const Eigen::MatrixXd r = product_correlation(model_.spec(), dist, beta_);
    return model_.basis().evaluate(new_inputs) * theta_hat_ + r.transpose() * alpha_;
}

PredictiveDistribution Predictor::predict(const Eigen::MatrixXd& new_inputs) const {
    if (!new_inputs.allFinite()) throw DataError("prediction inputs contain non-finite values");
    const auto dist = cross_distances(model_.design().points(), new_inputs);
    const Eigen::MatrixXd r = product_correlation(model_.spec(), dist, beta_);
    const Eigen::MatrixXd hs = model_.basis().evaluate(new_inputs);

    PredictiveDistribution out;
    out.dof = static_cast<double>(model_.n() - model_.q());
    out.mean = hs * theta_hat_ + r.transpose() * alpha_;

    const Eigen::MatrixXd z = chol_.matrixL().solve(r);
    const Eigen::MatrixXd u = hs.transpose() - linv_h_.transpose() * z;
    const Eigen::MatrixXd gu = gram_chol_.solve(u);
    const Eigen::Index m = new_inputs.rows();
    out.scale.resize(m);
    out.extrapolated.resize(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) {
        const double v = 1.0 - z.col(j).squaredNorm() + u.col(j).dot(gu.col(j));
        out.scale(j) = std::sqrt(sigma2_hat_ * std::max(0.0, v));
        out.extrapolated[static_cast<std::size_t>(j)] = model_.design().outside_bounds(new_inputs.row(j));
    }
    return out;
}

Eigen::MatrixXd Predictor::predictive_covariance(const Eigen::MatrixXd& new_inputs) const {
    const auto dist = cross_distances(model_.design().points(), new_inputs);
    const Eigen::MatrixXd r = product_correlation(model_.spec(), dist, beta_);
    const Eigen::MatrixXd rss = product_correlation(model_.spec(), coordinate_distances(new_inputs), beta_);
    const Eigen::MatrixXd hs = model_.basis().evaluate(new_inputs);
    const Eigen::MatrixXd z = chol_.matrixL().solve(r);
    const Eigen::MatrixXd u = hs.transpose() - linv_h_.transpose() * z;
    Eigen::MatrixXd cov = rss - z.transpose() * z + u.transpose() * gram_chol_.solve(u);
    cov = 0.5 * (cov + cov.transpose());
    return sigma2_hat_ * cov;
}

PredictiveDistribution predict(const GaSPModel& model, const RangeParams& params, double eta,
                               const Eigen::MatrixXd& new_inputs) {
    return Predictor(model, params, eta).predict(new_inputs);
}

}  // namespace robgasp
