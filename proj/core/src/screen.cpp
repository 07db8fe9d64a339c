#include "robgasp/screen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "robgasp/errors.hpp"
#include "robgasp/lhd.hpp"
#include "robgasp/test_functions.hpp"

namespace robgasp {

ScreenResult normalized_inverse_ranges(const Eigen::VectorXd& beta, const Eigen::VectorXd& C, double p0) {
    if (beta.size() != C.size()) throw DataError("inverse ranges and scale constants differ in length");
    if (!(p0 > 0.0 && p0 <= 1.0)) throw ConfigError("screening threshold p0 must lie in (0, 1]");
    if ((beta.array() < 0.0).any() || !beta.allFinite()) throw DataError("inverse ranges must be nonnegative");
    const Eigen::VectorXd w = (C.array() * beta.array()).matrix();
    const double total = w.sum();
    if (!(total > 0.0)) throw DataError("all fitted inverse ranges are zero; the fit is degenerate");
    ScreenResult r;
    r.p0 = p0;
    r.P = w / total;
    const double cut = p0 / static_cast<double>(beta.size());
    r.selected.resize(static_cast<std::size_t>(beta.size()));
    for (Eigen::Index l = 0; l < beta.size(); ++l) r.selected[static_cast<std::size_t>(l)] = r.P(l) > cut;
    return r;
}

ScreenResult normalized_inverse_ranges(const FitResult& fit, const JRPriorParams& jr, double p0) {
    if (fit.prior.kind != PriorKind::JR) {
        throw ConfigError("normalized inverse ranges require a fit under the JR prior");
    }
    return normalized_inverse_ranges(fit.beta, jr.C, p0);
}

namespace {

// Leave-one-out standard error of a ratio statistic given per-sample replicates.
double jackknife_se(const Eigen::VectorXd& loo) {
    const double n = static_cast<double>(loo.size());
    const double m = loo.mean();
    return std::sqrt((n - 1.0) / n * (loo.array() - m).square().sum());
}

}  // namespace

SobolIndices sobol_mc(const BatchFunction& f, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, int n_mc,
                      std::uint64_t seed) {
    if (n_mc < 100) throw ConfigError("Sobol estimation needs at least 100 samples");
    if (lower.size() != upper.size() || lower.size() < 1) throw ConfigError("Sobol bounds are inconsistent");
    const Eigen::Index p = lower.size();
    const Eigen::Index n = n_mc;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto draw = [&] {
        Eigen::MatrixXd m(n, p);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index l = 0; l < p; ++l) m(i, l) = lower(l) + (upper(l) - lower(l)) * u(rng);
        }
        return m;
    };
    const Eigen::MatrixXd a = draw();
    const Eigen::MatrixXd b = draw();
    Eigen::MatrixXd all((p + 2) * n, p);
    all.topRows(n) = a;
    all.middleRows(n, n) = b;
    for (Eigen::Index l = 0; l < p; ++l) {
        Eigen::MatrixXd ab = a;
        ab.col(l) = b.col(l);
        all.middleRows((l + 2) * n, n) = ab;
    }
    const Eigen::VectorXd y = f(all);
    if (y.size() != all.rows()) throw DataError("Sobol: function returned the wrong number of values");
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y(i))) {
            std::ostringstream os;
            os << "Sobol: non-finite output at input (" << all.row(i) << ")";
            throw DataError(os.str());
        }
    }

    const double center = y.head(2 * n).mean();
    const Eigen::ArrayXd fa = y.head(n).array() - center;
    const Eigen::ArrayXd fb = y.segment(n, n).array() - center;
    const double sum_f = fa.sum() + fb.sum();
    const double sum_f2 = fa.square().sum() + fb.square().sum();
    const double two_n = 2.0 * static_cast<double>(n);
    const double var = sum_f2 / two_n - (sum_f / two_n) * (sum_f / two_n);
    if (!(var > 0.0)) throw DataError("Sobol: output variance is zero");

    // Leave-one-out variances, shared by every index.
    const Eigen::ArrayXd loo_sum = sum_f - fa - fb;
    const Eigen::ArrayXd loo_sum2 = sum_f2 - fa.square() - fb.square();
    const Eigen::ArrayXd loo_var = loo_sum2 / (two_n - 2.0) - (loo_sum / (two_n - 2.0)).square();

    SobolIndices out;
    out.estimator = SobolEstimator::MonteCarlo;
    out.n_mc = n_mc;
    out.S.resize(p);
    out.S_T.resize(p);
    out.se_S.resize(p);
    out.se_S_T.resize(p);
    const double nd = static_cast<double>(n);
    for (Eigen::Index l = 0; l < p; ++l) {
        const Eigen::ArrayXd fab = y.segment((l + 2) * n, n).array() - center;
        const Eigen::ArrayXd main = fb * (fab - fa);
        const Eigen::ArrayXd total = 0.5 * (fa - fab).square();
        const double sm = main.sum();
        const double st = total.sum();
        out.S(l) = sm / nd / var;
        out.S_T(l) = st / nd / var;
        out.se_S(l) = jackknife_se(((sm - main) / (nd - 1.0) / loo_var).matrix());
        out.se_S_T(l) = jackknife_se(((st - total) / (nd - 1.0) / loo_var).matrix());
    }
    return out;
}

SobolIndices sobol_mc(const PointFunction& f, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, int n_mc,
                      std::uint64_t seed) {
    const BatchFunction batch = [&f](const Eigen::MatrixXd& x) {
        Eigen::VectorXd y(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) y(i) = f(x.row(i));
        return y;
    };
    return sobol_mc(batch, lower, upper, n_mc, seed);
}

SobolIndices sobol_emulator(const Predictor& emulator, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                            int n_mc, std::uint64_t seed) {
    if (lower.size() != emulator.model().dim()) throw DataError("Sobol bounds do not match the emulator inputs");
    const BatchFunction batch = [&emulator](const Eigen::MatrixXd& x) {
        // Chunked to bound the cross-correlation matrix size.
        constexpr Eigen::Index chunk = 4096;
        Eigen::VectorXd y(x.rows());
        for (Eigen::Index s = 0; s < x.rows(); s += chunk) {
            const Eigen::Index m = std::min(chunk, x.rows() - s);
            y.segment(s, m) = emulator.predict_mean(x.middleRows(s, m));
        }
        return y;
    };
    SobolIndices out = sobol_mc(batch, lower, upper, n_mc, seed);
    out.estimator = SobolEstimator::Emulator;
    return out;
}

int default_screening_size(const std::string& example) {
    if (example == "ex2-i" || example == "ex2-ii") return 54;
    if (example == "ex3-i") return 20;
    if (example == "ex3-ii" || example == "ex3-iii" || example == "ex3-iv") return 35;
    throw ConfigError("'" + example + "' is not a screening example (ex2-i, ex2-ii, ex3-i .. ex3-iv)");
}

ScreeningReport screening_benchmark(const ScreeningConfig& cfg) {
    const int n = cfg.n > 0 ? cfg.n : default_screening_size(cfg.example);
    const TestFunction& tf = test_function(cfg.example);
    const Eigen::Index p = tf.dim;
    const bool gaussian = cfg.example.rfind("ex2", 0) == 0;
    const Kernel1D kernel = gaussian ? Kernel1D::power_exponential(2.0) : Kernel1D::matern(2.5);

    ScreeningReport rep;
    rep.example = cfg.example;
    rep.n = n;
    rep.replicates = std::max(cfg.replicates, 0);
    rep.method = cfg.method;
    rep.selection_frequency = Eigen::VectorXd::Zero(p);
    rep.mean_index = Eigen::VectorXd::Zero(p);
    rep.indices.resize(rep.replicates, p);
    if (rep.replicates == 0) return rep;

    std::vector<bool> is_signal(static_cast<std::size_t>(p), false);
    for (Eigen::Index s : tf.signals) is_signal[static_cast<std::size_t>(s)] = true;

    int separated = 0;
    for (int r = 0; r < rep.replicates; ++r) {
        const std::uint64_t seed = replicate_seed(cfg.seed, static_cast<std::uint64_t>(r));
        const DesignMatrix unit = maximin_lhd(n, p, seed, cfg.lhd_candidates);
        const Eigen::MatrixXd x = scale_to_box(unit.points(), tf.lower, tf.upper);
        std::mt19937_64 noise(replicate_seed(seed, 1));
        const Eigen::VectorXd y = tf.sample(x, noise);
        const GaSPModel model(DesignMatrix(x, tf.lower, tf.upper), y, MeanBasis::constant(),
                              CorrelationSpec::uniform(kernel, p), true);
        FitConfig fc = default_fit_config(model, Parameterization::Beta);
        fc.seed = seed;
        fc.multistart = cfg.multistart;
        const FitResult fit = fit_mode(model, fc);

        Eigen::VectorXd index;
        std::vector<bool> selected;
        if (cfg.method == ScreenMethod::InverseRange) {
            const ScreenResult sr = normalized_inverse_ranges(fit, *fc.prior.jr, cfg.p0);
            index = sr.P;
            selected = sr.selected;
        } else {
            const Predictor pred = make_predictor(model, fit);
            const SobolIndices si = sobol_emulator(pred, tf.lower, tf.upper, cfg.sobol_n_mc, replicate_seed(seed, 2));
            index = si.S_T;
            const double cut = cfg.p0 * index.cwiseMax(0.0).sum() / static_cast<double>(p);
            for (Eigen::Index l = 0; l < p; ++l) selected.push_back(index(l) > cut);
        }
        rep.indices.row(r) = index.transpose();
        for (Eigen::Index l = 0; l < p; ++l) {
            if (selected[static_cast<std::size_t>(l)]) rep.selection_frequency(l) += 1.0;
        }
        double min_signal = std::numeric_limits<double>::infinity();
        double max_noise = -std::numeric_limits<double>::infinity();
        for (Eigen::Index l = 0; l < p; ++l) {
            if (is_signal[static_cast<std::size_t>(l)]) {
                min_signal = std::min(min_signal, index(l));
            } else {
                max_noise = std::max(max_noise, index(l));
            }
        }
        if (min_signal > max_noise) ++separated;
    }
    rep.selection_frequency /= static_cast<double>(rep.replicates);
    rep.mean_index = rep.indices.colwise().mean().transpose();
    rep.separation_fraction = static_cast<double>(separated) / static_cast<double>(rep.replicates);
    return rep;
}

}  // namespace robgasp
