#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "robgasp/design.hpp"
#include "robgasp/kernels.hpp"

namespace robgasp {

/// Mean basis h(x): a row of q regression functions per input.
class MeanBasis {
public:
    using RowFunction = std::function<Eigen::RowVectorXd(const Eigen::RowVectorXd&)>;

    /// h(x) = 1.
    static MeanBasis constant();
    /// h(x) = (1, x_1, ..., x_px).
    static MeanBasis linear();
    /// Arbitrary basis with a fixed number of columns.
    static MeanBasis custom(std::string name, Eigen::Index columns, RowFunction h);

    [[nodiscard]] Eigen::MatrixXd evaluate(const Eigen::MatrixXd& points) const;
    [[nodiscard]] Eigen::Index columns(Eigen::Index input_dim) const;
    [[nodiscard]] const std::string& name() const noexcept { return name_; }

private:
    enum class Kind { Constant, Linear, Custom };
    Kind kind_ = Kind::Constant;
    std::string name_ = "constant";
    Eigen::Index columns_ = 1;
    RowFunction custom_;
};

/// Gaussian stochastic process model: design, outputs, mean basis, kernels and nugget flag.
///
/// Immutable after construction; pairwise coordinate distances are precomputed.
class GaSPModel {
public:
    GaSPModel(DesignMatrix design, Eigen::VectorXd y, MeanBasis basis, CorrelationSpec spec, bool nugget_enabled);
    GaSPModel(const GaSPModel& other);
    GaSPModel& operator=(const GaSPModel& other);
    GaSPModel(GaSPModel&&) noexcept;
    GaSPModel& operator=(GaSPModel&&) noexcept;
    ~GaSPModel();

    [[nodiscard]] const DesignMatrix& design() const noexcept { return design_; }
    [[nodiscard]] const Eigen::VectorXd& outputs() const noexcept { return y_; }
    [[nodiscard]] const MeanBasis& basis() const noexcept { return basis_; }
    [[nodiscard]] const Eigen::MatrixXd& mean_basis() const noexcept { return h_; }
    [[nodiscard]] const CorrelationSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] bool nugget_enabled() const noexcept { return nugget_; }
    [[nodiscard]] const std::vector<Eigen::MatrixXd>& distances() const noexcept { return dist_; }

    [[nodiscard]] Eigen::Index n() const noexcept { return y_.size(); }
    [[nodiscard]] Eigen::Index q() const noexcept { return h_.cols(); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return design_.dim(); }

    /// Same design, basis and kernels with a different output vector.
    [[nodiscard]] GaSPModel with_outputs(Eigen::VectorXd y) const;

    /// Number of covariance factorizations performed through this model object.
    [[nodiscard]] long factorizations() const noexcept { return factorizations_.load(); }
    void reset_factorizations() const noexcept { factorizations_.store(0); }
    void count_factorization() const noexcept { factorizations_.fetch_add(1); }

private:
    DesignMatrix design_;
    Eigen::VectorXd y_;
    MeanBasis basis_;
    Eigen::MatrixXd h_;
    CorrelationSpec spec_;
    bool nugget_ = false;
    std::vector<Eigen::MatrixXd> dist_;
    mutable std::atomic<long> factorizations_{0};
};

/// Jitter policy: relative levels (times mean of diag C) tried after a failed Cholesky.
[[nodiscard]] const std::vector<double>& jitter_levels();

/// Factorized working covariance C = R + eta I and the quantities derived from it.
///
/// Q = C^-1 - C^-1 H (H^T C^-1 H)^-1 H^T C^-1 and S2 = y^T Q y. Q is formed only when
/// requested (gradients and Fisher information need it; the likelihood value does not).
class LikelihoodState {
public:
    LikelihoodState(const GaSPModel& model, const Eigen::VectorXd& beta, double eta, bool form_q = true);
    /// Same, with an explicit output vector (calibration residuals).
    LikelihoodState(const GaSPModel& model, const Eigen::VectorXd& y, const Eigen::VectorXd& beta, double eta,
                    bool form_q);

    [[nodiscard]] double log_marginal_lik() const noexcept;

    [[nodiscard]] const Eigen::VectorXd& beta() const noexcept { return beta_; }
    [[nodiscard]] double eta() const noexcept { return eta_; }
    [[nodiscard]] double jitter() const noexcept { return jitter_; }
    [[nodiscard]] const Eigen::MatrixXd& R() const noexcept { return r_; }
    [[nodiscard]] const Eigen::LLT<Eigen::MatrixXd>& chol() const noexcept { return chol_; }
    [[nodiscard]] const Eigen::LLT<Eigen::MatrixXd>& gram_chol() const noexcept { return gram_chol_; }
    [[nodiscard]] const Eigen::MatrixXd& Q() const;
    [[nodiscard]] const Eigen::VectorXd& Qy() const noexcept { return qy_; }
    [[nodiscard]] const Eigen::VectorXd& theta_hat() const noexcept { return theta_hat_; }
    [[nodiscard]] double S2() const noexcept { return s2_; }
    [[nodiscard]] double logdet_C() const noexcept { return logdet_c_; }
    [[nodiscard]] double logdet_gram() const noexcept { return logdet_gram_; }
    [[nodiscard]] Eigen::Index n() const noexcept { return n_; }
    [[nodiscard]] Eigen::Index q() const noexcept { return q_; }

    /// dR / d xi_l = R o (beta_l d log c_l / d beta_l).
    [[nodiscard]] Eigen::MatrixXd dR_dxi(const GaSPModel& model, Eigen::Index l) const;

    /// Gradient of log L given dC/dtheta_k for range coordinates and, optionally, dC/dnugget = s I.
    [[nodiscard]] Eigen::VectorXd grad_log_lik(const std::vector<Eigen::MatrixXd>& dR,
                                               std::optional<double> nugget_scale) const;

    /// Expected Fisher information (n - q, tr W_k, tr W_k W_j) for the given derivatives.
    [[nodiscard]] Eigen::MatrixXd fisher(const std::vector<Eigen::MatrixXd>& dR,
                                         std::optional<double> nugget_scale) const;

private:
    void build(const GaSPModel& model, const Eigen::VectorXd& y, bool form_q);

    Eigen::VectorXd beta_;
    double eta_ = 0.0;
    double jitter_ = 0.0;
    Eigen::Index n_ = 0;
    Eigen::Index q_ = 0;
    Eigen::MatrixXd r_;
    Eigen::LLT<Eigen::MatrixXd> chol_;
    Eigen::LLT<Eigen::MatrixXd> gram_chol_;
    Eigen::MatrixXd cinv_h_;
    std::optional<Eigen::MatrixXd> q_matrix_;
    Eigen::VectorXd qy_;
    Eigen::VectorXd theta_hat_;
    double s2_ = 0.0;
    double logdet_c_ = 0.0;
    double logdet_gram_ = 0.0;
};

/// dR/dtheta_l for every range coordinate, in params' parameterization, reusing st.R().
[[nodiscard]] std::vector<Eigen::MatrixXd> corr_derivatives(const GaSPModel& model, const LikelihoodState& st,
                                                           const RangeParams& params);

/// log L(params, eta | y) = -1/2 log|C| - 1/2 log|H^T C^-1 H| - (n - q)/2 log S2, up to a constant.
[[nodiscard]] double log_marginal_lik(const GaSPModel& model, const RangeParams& params, double eta);

/// Gradient of log L in params' parameterization; the nugget coordinate (last, when enabled) is raw eta.
[[nodiscard]] Eigen::VectorXd log_marginal_lik_grad(const GaSPModel& model, const RangeParams& params, double eta);

/// Expected Fisher information I* in params' parameterization; the nugget row, when enabled, uses dC/deta = I.
[[nodiscard]] Eigen::MatrixXd fisher_info(const GaSPModel& model, const RangeParams& params, double eta);

/// Student-t predictive distribution with n - q degrees of freedom.
struct PredictiveDistribution {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
    double dof = 0.0;
    std::vector<bool> extrapolated;

    /// Central interval mean +/- t_{dof}(level) * scale.
    [[nodiscard]] std::pair<Eigen::VectorXd, Eigen::VectorXd> interval(double level = 0.95) const;
};

/// Plug-in universal kriging predictor for fixed covariance parameters.
class Predictor {
public:
    Predictor(GaSPModel model, const RangeParams& params, double eta);

    [[nodiscard]] PredictiveDistribution predict(const Eigen::MatrixXd& new_inputs) const;
    [[nodiscard]] Eigen::VectorXd predict_mean(const Eigen::MatrixXd& new_inputs) const;

    /// Joint predictive covariance (scaled, Gaussian approximation) at new inputs.
    [[nodiscard]] Eigen::MatrixXd predictive_covariance(const Eigen::MatrixXd& new_inputs) const;

    [[nodiscard]] const GaSPModel& model() const noexcept { return model_; }
    [[nodiscard]] const Eigen::VectorXd& beta() const noexcept { return beta_; }
    [[nodiscard]] double eta() const noexcept { return eta_; }
    [[nodiscard]] const Eigen::VectorXd& theta_hat() const noexcept { return theta_hat_; }
    [[nodiscard]] double sigma2_hat() const noexcept { return sigma2_hat_; }

private:
    GaSPModel model_;
    Eigen::VectorXd beta_;
    double eta_;
    Eigen::LLT<Eigen::MatrixXd> chol_;
    Eigen::LLT<Eigen::MatrixXd> gram_chol_;
    Eigen::MatrixXd linv_h_;
    Eigen::VectorXd alpha_;
    Eigen::VectorXd theta_hat_;
    double sigma2_hat_ = 0.0;
};

[[nodiscard]] PredictiveDistribution predict(const GaSPModel& model, const RangeParams& params, double eta,
                                             const Eigen::MatrixXd& new_inputs);

}  // namespace robgasp
