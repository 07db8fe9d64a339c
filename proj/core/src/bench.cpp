#include "robgasp/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>

#include "robgasp/errors.hpp"
#include "robgasp/lhd.hpp"
#include "robgasp/table_io.hpp"
#include "robgasp/test_functions.hpp"

namespace robgasp {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

double median(const Eigen::VectorXd& v) {
    return quantile(std::vector<double>(v.data(), v.data() + v.size()), 0.5);
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

void ExperimentReport::write_csv(std::ostream& out) const {
    out << "# experiment=" << name << "\n# seed=" << seed << '\n';
    for (const auto& [k, v] : config) out << "# " << k << '=' << v << '\n';
    for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << columns[j];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
        out << '\n';
    }
}

void ExperimentReport::write_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open '" + path + "' for writing");
    write_csv(f);
}

int emulation_design_size(const std::string& case_id) {
    if (case_id == "ex1-i") return 30;
    if (case_id == "ex1-ii") return 40;
    if (case_id == "ex1-iii") return 50;
    if (case_id == "ex1-iv") return 60;
    if (case_id == "ex1-v") return 80;
    throw ConfigError("'" + case_id + "' is not an emulation case (ex1-i .. ex1-v)");
}

EmulationBenchmarkConfig EmulationBenchmarkConfig::full_scale() {
    EmulationBenchmarkConfig c;
    c.replicates = 200;
    c.n_test = 10000;
    return c;
}

EmulationRecord emulation_replicate(const std::string& case_id, int n, PriorKind prior,
                                    const EmulationBenchmarkConfig& cfg, int replicate) {
    const TestFunction& tf = test_function(case_id);
    const std::uint64_t seed =
        replicate_seed(replicate_seed(cfg.seed, fnv1a(case_id)), static_cast<std::uint64_t>(replicate));
    const Eigen::MatrixXd x = scale_to_box(maximin_lhd(n, tf.dim, seed, cfg.lhd_candidates).points(), tf.lower, tf.upper);
    const Eigen::VectorXd y = tf.evaluate(x);

    std::mt19937_64 rng(replicate_seed(seed, 7));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd xt(cfg.n_test, tf.dim);
    for (Eigen::Index i = 0; i < xt.rows(); ++i) {
        for (Eigen::Index l = 0; l < tf.dim; ++l) xt(i, l) = tf.lower(l) + (tf.upper(l) - tf.lower(l)) * u(rng);
    }
    const Eigen::VectorXd truth = tf.evaluate(xt);

    const GaSPModel model(DesignMatrix(x, tf.lower, tf.upper), y, MeanBasis::constant(),
                          CorrelationSpec::uniform(Kernel1D::matern(2.5), tf.dim), false);
    FitConfig fc;
    if (prior == PriorKind::JR) {
        fc = default_fit_config(model, cfg.jr_parameterization);
    } else {
        fc.parameterization = Parameterization::Xi;
        fc.prior = PriorSpec::reference(false);
    }
    fc.multistart = cfg.multistart;
    fc.seed = seed;
    const FitResult fit = fit_mode(model, fc);
    const Predictor pred = make_predictor(model, fit);

    EmulationRecord rec;
    rec.case_id = case_id;
    rec.prior = prior;
    rec.replicate = replicate;
    rec.n = n;
    rec.nrmse = nrmse(pred.predict_mean(xt), truth, y.mean());
    rec.seconds = fit.trace.seconds;
    rec.near_identity = fit.diagnostics.flag_near_identity;
    rec.near_ones = fit.diagnostics.flag_near_ones;
    const double sd = std::sqrt((y.array() - y.mean()).square().sum() / static_cast<double>(y.size() - 1));
    rec.max_train_residual = (pred.predict_mean(x) - y).cwiseAbs().maxCoeff() / sd;
    rec.beta = fit.beta;
    return rec;
}

EmulationBenchmarkResult emulation_benchmark(const EmulationBenchmarkConfig& cfg) {
    if (cfg.replicates < 1) throw ConfigError("emulation benchmark needs at least one replicate");
    if (cfg.n_test < 1) throw ConfigError("emulation benchmark needs at least one held-out point");
    EmulationBenchmarkResult res;
    res.config = cfg;
    for (const std::string& c : cfg.cases) {
        const int n = cfg.n > 0 ? cfg.n : emulation_design_size(c);
        for (PriorKind pk : cfg.priors) {
            EmulationSummary s;
            s.case_id = c;
            s.prior = pk;
            s.n = n;
            s.replicates = cfg.replicates;
            std::vector<double> per;
            int robust = 0;
            for (int r = 0; r < cfg.replicates; ++r) {
                EmulationRecord rec = emulation_replicate(c, n, pk, cfg, r);
                per.push_back(rec.nrmse);
                s.mean_seconds += rec.seconds;
                if (!rec.near_identity && !rec.near_ones) ++robust;
                res.records.push_back(std::move(rec));
            }
            s.avg_nrmse = avg_nrmse(per);
            s.mean_seconds /= static_cast<double>(cfg.replicates);
            s.robust_fraction = static_cast<double>(robust) / static_cast<double>(cfg.replicates);
            res.summary.push_back(s);
        }
    }
    return res;
}

const EmulationSummary& EmulationBenchmarkResult::find(const std::string& case_id, PriorKind prior) const {
    for (const auto& s : summary) {
        if (s.case_id == case_id && s.prior == prior) return s;
    }
    throw ConfigError("no summary for " + case_id + " / " + to_string(prior));
}

namespace {

std::vector<std::pair<std::string, std::string>> echo(const EmulationBenchmarkConfig& c) {
    std::string cases;
    for (const auto& s : c.cases) cases += (cases.empty() ? "" : ";") + s;
    std::string priors;
    for (PriorKind p : c.priors) priors += (priors.empty() ? "" : ";") + std::string(to_string(p));
    return {{"cases", cases},
            {"n", std::to_string(c.n)},
            {"replicates", std::to_string(c.replicates)},
            {"n_test", std::to_string(c.n_test)},
            {"priors", priors},
            {"jr_parameterization", to_string(c.jr_parameterization)},
            {"multistart", std::to_string(c.multistart)},
            {"lhd_candidates", std::to_string(c.lhd_candidates)}};
}

}  // namespace

ExperimentReport EmulationBenchmarkResult::report(bool with_timing) const {
    ExperimentReport r;
    r.name = "emulation";
    r.seed = config.seed;
    r.config = echo(config);
    r.columns = {"case", "prior", "n", "replicates", "avg_nrmse", "robust_fraction"};
    if (with_timing) r.columns.push_back("mean_seconds");
    for (const auto& s : summary) {
        std::vector<std::string> row = {s.case_id, to_string(s.prior), std::to_string(s.n),
                                        std::to_string(s.replicates), fmt(s.avg_nrmse), fmt(s.robust_fraction)};
        if (with_timing) row.push_back(fmt(s.mean_seconds));
        r.rows.push_back(std::move(row));
    }
    return r;
}

ExperimentReport EmulationBenchmarkResult::replicate_report(bool with_timing) const {
    ExperimentReport r;
    r.name = "emulation-replicates";
    r.seed = config.seed;
    r.config = echo(config);
    r.columns = {"case", "prior", "replicate", "n", "nrmse", "near_identity", "near_ones", "max_train_residual"};
    if (with_timing) r.columns.push_back("seconds");
    for (const auto& e : records) {
        std::vector<std::string> row = {e.case_id,
                                        to_string(e.prior),
                                        std::to_string(e.replicate),
                                        std::to_string(e.n),
                                        fmt(e.nrmse),
                                        e.near_identity ? "1" : "0",
                                        e.near_ones ? "1" : "0",
                                        fmt(e.max_train_residual)};
        if (with_timing) row.push_back(fmt(e.seconds));
        r.rows.push_back(std::move(row));
    }
    return r;
}

Ex4Data ex4_data(std::uint64_t seed) {
    const TestFunction& tf = test_function("ex4");
    Ex4Data d;
    d.x.resize(30, 1);
    for (int i = 0; i < 10; ++i) {
        for (int k = 0; k < 3; ++k) d.x(3 * i + k, 0) = 3.0 * i / 9.0;
    }
    std::mt19937_64 rng(seed);
    d.y = tf.sample(d.x, rng);
    d.x_test.resize(200, 1);
    for (int i = 0; i < 200; ++i) d.x_test(i, 0) = 5.0 * i / 199.0;
    d.truth = tf.evaluate(d.x_test);
    return d;
}

CalibrationProblem ex4_problem(const Ex4Data& data, PriorKind prior, std::shared_ptr<const ModularEmulator> emulator) {
    DesignMatrix design(data.x);
    PriorSpec ps = prior == PriorKind::JR
                       ? PriorSpec::jointly_robust(jr_default_params(design, FitContext::Calibration), true)
                       : PriorSpec::reference(true);
    ThetaPrior tp{Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 5.0), {}};
    const CorrelationSpec spec = CorrelationSpec::uniform(Kernel1D::matern(2.5), 1);
    if (emulator) {
        return CalibrationProblem(std::move(design), data.y, std::move(emulator), std::move(tp), MeanBasis::constant(),
                                  spec, std::move(ps));
    }
    ComputerModel f = [](const Eigen::MatrixXd& x, const Eigen::VectorXd& theta) {
        Eigen::VectorXd out(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = ex4_computer_model(x(i, 0), theta(0));
        return out;
    };
    return CalibrationProblem(std::move(design), data.y, std::move(f), std::move(tp), MeanBasis::constant(), spec,
                              std::move(ps));
}

std::shared_ptr<const ModularEmulator> ex4_emulator(std::uint64_t seed, int runs) {
    const Eigen::MatrixXd pts = 5.0 * maximin_lhd(runs, 2, seed).points();
    Eigen::VectorXd out(runs);
    for (int i = 0; i < runs; ++i) out(i) = ex4_computer_model(pts(i, 0), pts(i, 1));
    return fit_emulator_modular(pts, out, 1, seed);
}

CalibrationBenchmarkConfig CalibrationBenchmarkConfig::full_scale() {
    CalibrationBenchmarkConfig c;
    c.S = 100000;
    c.S0 = 20000;
    return c;
}

CalibrationBenchmarkResult calibration_benchmark(const CalibrationBenchmarkConfig& cfg) {
    CalibrationBenchmarkResult res;
    res.config = cfg;
    res.data = ex4_data(cfg.seed);
    const double center = res.data.y.mean();

    std::vector<PriorKind> priors;
    if (cfg.include_reference) priors.push_back(PriorKind::Reference);
    priors.push_back(PriorKind::JR);
    for (PriorKind pk : priors) {
        const CalibrationProblem prob = ex4_problem(res.data, pk);
        McmcOptions mo;
        mo.S = cfg.S;
        mo.S0 = cfg.S0;
        mo.seed = cfg.seed;
        const PosteriorChain ch = run_mcmc(prob, mo);
        CalibrationMethodResult m;
        m.method = pk == PriorKind::JR ? "jr" : "reference";
        m.model_only = predict_calibrated(prob, ch, res.data.x_test, PredictionMode::ModelOnly, cfg.seed);
        m.with_discrepancy =
            predict_calibrated(prob, ch, res.data.x_test, PredictionMode::ModelPlusDiscrepancy, cfg.seed);
        m.metrics_model_only = calibration_metrics(m.model_only, res.data.truth, center);
        m.metrics_with_discrepancy = calibration_metrics(m.with_discrepancy, res.data.truth, center);
        m.theta_median = median(ch.theta.col(0).tail(ch.retained()));
        m.xi_median = median(ch.xi.col(0).tail(ch.retained()));
        m.accept_theta = ch.accept_theta;
        m.accept_range = ch.accept_range;
        res.methods.push_back(std::move(m));
    }
    if (cfg.include_mle) {
        const CalibrationProblem prob = ex4_problem(res.data, PriorKind::JR);
        const MleCalibration mle = calibrate_mle(prob, cfg.seed);
        CalibrationMethodResult m;
        m.method = "mle";
        m.model_only = predict_mle(prob, mle, res.data.x_test, PredictionMode::ModelOnly);
        m.with_discrepancy = predict_mle(prob, mle, res.data.x_test, PredictionMode::ModelPlusDiscrepancy);
        m.metrics_model_only = calibration_metrics(m.model_only, res.data.truth, center);
        m.metrics_with_discrepancy = calibration_metrics(m.with_discrepancy, res.data.truth, center);
        m.theta_median = mle.theta(0);
        m.xi_median = mle.xi(0);
        res.methods.push_back(std::move(m));
    }
    return res;
}

const CalibrationMethodResult& CalibrationBenchmarkResult::find(const std::string& method) const {
    for (const auto& m : methods) {
        if (m.method == method) return m;
    }
    throw ConfigError("no calibration result for method '" + method + "'");
}

ExperimentReport CalibrationBenchmarkResult::report() const {
    ExperimentReport r;
    r.name = "calibration";
    r.seed = config.seed;
    r.config = {{"S", std::to_string(config.S)}, {"S0", std::to_string(config.S0)}, {"n_test", "200"}};
    r.columns = {"method", "mode", "nrmse", "p_ci", "l_ci", "theta_median", "xi_median"};
    for (const auto& m : methods) {
        const auto row = [&](const char* mode, const CalibrationMetrics& cm) {
            r.rows.push_back({m.method, mode, fmt(cm.nrmse), fmt(cm.p_ci), fmt(cm.l_ci), fmt(m.theta_median),
                              fmt(m.xi_median)});
        };
        row("model", m.metrics_model_only);
        row("model+discrepancy", m.metrics_with_discrepancy);
    }
    return r;
}

ExperimentReport CalibrationBenchmarkResult::plot_data() const {
    ExperimentReport r;
    r.name = "calibration-plot";
    r.seed = config.seed;
    r.columns = {"x", "truth"};
    for (const auto& m : methods) {
        for (const char* mode : {"model", "model+discrepancy"}) {
            for (const char* stat : {"mean", "lower", "upper"}) {
                r.columns.push_back(m.method + ":" + mode + ":" + stat);
            }
        }
    }
    for (Eigen::Index i = 0; i < data.x_test.rows(); ++i) {
        std::vector<std::string> row = {fmt(data.x_test(i, 0)), fmt(data.truth(i))};
        for (const auto& m : methods) {
            for (const IntervalPrediction* p : {&m.model_only, &m.with_discrepancy}) {
                row.push_back(fmt(p->mean(i)));
                row.push_back(fmt(p->lower(i)));
                row.push_back(fmt(p->upper(i)));
            }
        }
        r.rows.push_back(std::move(row));
    }
    return r;
}

}  // namespace robgasp
