#include "robgasp/priors.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "robgasp/errors.hpp"

namespace robgasp {

const char* to_string(PriorKind kind) noexcept {
    return kind == PriorKind::Reference ? "reference" : "jr";
}

PriorKind parse_prior_kind(const std::string& name) {
    if (name == "reference" || name == "ref") return PriorKind::Reference;
    if (name == "jr" || name == "JR") return PriorKind::JR;
    throw ConfigError("unknown prior kind '" + name + "' (expected jr or reference)");
}

void JRPriorParams::validate(bool with_nugget) const {
    if (C.size() < 1) throw ConfigError("JR prior needs one scale constant per input");
    if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("JR prior requires b > 0");
    if (!C.allFinite() || (C.array() <= 0.0).any()) throw ConfigError("JR prior requires all C_l > 0");
    const double p = static_cast<double>(C.size());
    const double bound = with_nugget ? -(p + 1.0) : -p;
    if (!(a > bound) || !std::isfinite(a)) {
        std::ostringstream os;
        os << "JR prior exponent a = " << a << " must exceed " << bound << " for propriety";
        throw ConfigError(os.str());
    }
}

PriorSpec PriorSpec::reference(bool nugget) { return {PriorKind::Reference, std::nullopt, nugget}; }

PriorSpec PriorSpec::jointly_robust(JRPriorParams params, bool nugget) {
    PriorSpec s{PriorKind::JR, std::move(params), nugget};
    s.validate();
    return s;
}

void PriorSpec::validate() const {
    if (kind == PriorKind::JR) {
        if (!jr) throw ConfigError("JR prior requires hyperparameters");
        jr->validate(nugget_included);
    }
}

JRPriorParams jr_default_params(const DesignMatrix& design, FitContext context) {
    const Eigen::Index p = design.dim();
    const double n = static_cast<double>(design.rows());
    const Eigen::VectorXd width = design.data_max() - design.data_min();
    for (Eigen::Index l = 0; l < p; ++l) {
        if (!(width(l) > 0.0)) {
            throw ConfigError("input coordinate " + std::to_string(l + 1) +
                              " has zero width; cannot set the JR prior scale");
        }
    }
    JRPriorParams out;
    out.b = 1.0;
    out.C = std::pow(n, -1.0 / static_cast<double>(p)) * width;
    out.a = context == FitContext::Calibration ? 0.5 - static_cast<double>(p) : 0.2;
    return out;
}

double jr_log_normalizer(const JRPriorParams& p, bool with_nugget) {
    const double px = static_cast<double>(p.C.size());
    const double k = with_nugget ? px + 1.0 : px;
    return std::lgamma(k) + (p.a + k) * std::log(p.b) + p.C.array().log().sum() - std::lgamma(p.a + k);
}

namespace {

double jr_total(const JRPriorParams& p, const Eigen::VectorXd& beta, std::optional<double> eta) {
    if (beta.size() != p.C.size()) {
        throw DataError("JR prior has " + std::to_string(p.C.size()) + " scale constants but " +
                        std::to_string(beta.size()) + " inverse ranges were given");
    }
    if (!beta.allFinite() || (beta.array() < 0.0).any()) throw DataError("inverse ranges must be nonnegative");
    double t = p.C.dot(beta);
    if (eta) {
        if (!std::isfinite(*eta) || *eta < 0.0) throw DataError("nugget must be nonnegative");
        t += *eta;
    }
    return t;
}

}  // namespace

double jr_log_density(const JRPriorParams& p, const Eigen::VectorXd& beta, std::optional<double> eta) {
    const double t = jr_total(p, beta, eta);
    const double log_c = jr_log_normalizer(p, eta.has_value());
    if (t == 0.0) {
        if (p.a > 0.0) return -std::numeric_limits<double>::infinity();
        if (p.a < 0.0) return std::numeric_limits<double>::infinity();
        return log_c;
    }
    return log_c + p.a * std::log(t) - p.b * t;
}

Eigen::VectorXd jr_log_density_grad(const JRPriorParams& p, const Eigen::VectorXd& beta, std::optional<double> eta) {
    const double t = jr_total(p, beta, eta);
    if (t == 0.0 && p.a != 0.0) throw NumericalError("JR prior gradient is singular at t = 0");
    const double s = (p.a == 0.0 ? 0.0 : p.a / t) - p.b;
    const Eigen::Index px = p.C.size();
    Eigen::VectorXd g(px + (eta ? 1 : 0));
    g.head(px) = s * p.C;
    if (eta) g(px) = s;
    return g;
}

JRMoments jr_moments(const JRPriorParams& p) {
    const double px = static_cast<double>(p.C.size());
    const double shape = p.a + px + 1.0;
    const double mean_unit = shape / ((px + 1.0) * p.b);
    const double var_unit = shape * ((px + 1.0) * (px + 1.0) + px + p.a * px + 1.0) /
                            ((px + 1.0) * (px + 1.0) * (px + 2.0) * p.b * p.b);
    JRMoments m;
    m.mean_beta = mean_unit * p.C.array().inverse();
    m.var_beta = var_unit * p.C.array().square().inverse();
    m.mean_eta = mean_unit;
    m.var_eta = var_unit;
    return m;
}

double half_log_det_fisher(const Eigen::MatrixXd& info) {
    if (!info.allFinite()) throw NumericalError("Fisher information has non-finite entries");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double norm = ev.cwiseAbs().maxCoeff();
    if (ev.minCoeff() < -1e-8 * norm) {
        std::ostringstream os;
        os << "Fisher information is not positive semi-definite; eigenvalues:";
        for (Eigen::Index i = 0; i < ev.size(); ++i) os << ' ' << ev(i);
        throw NumericalError(os.str());
    }
    if (ev.minCoeff() <= 0.0) return -std::numeric_limits<double>::infinity();
    return 0.5 * ev.array().log().sum();
}

double reference_log_density(const GaSPModel& model, const RangeParams& params, double eta) {
    return half_log_det_fisher(fisher_info(model, params, eta));
}

}  // namespace robgasp
