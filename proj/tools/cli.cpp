#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "robgasp/bench.hpp"
#include "robgasp/calibrate.hpp"
#include "robgasp/errors.hpp"
#include "robgasp/fit.hpp"
#include "robgasp/screen.hpp"
#include "robgasp/table_io.hpp"
#include "robgasp/test_functions.hpp"

namespace robgasp::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": '" + v + "' is not a number");
    }
}

int to_int(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    if (d != std::floor(d) || std::abs(d) > 2e9) throw ConfigError(key + ": '" + v + "' is not an integer");
    return static_cast<int>(d);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long u = std::stoull(v, &pos);
        if (pos != v.size() || v.front() == '-') throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw ConfigError(key + ": '" + v + "' is not a nonnegative integer");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": '" + v + "' is not a boolean");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

Kernel1D parse_kernel(const std::string& name) {
    if (name == "matern-0.5" || name == "exponential") return Kernel1D::matern(0.5);
    if (name == "matern-1.5") return Kernel1D::matern(1.5);
    if (name == "matern-2.5") return Kernel1D::matern(2.5);
    if (name == "gaussian") return Kernel1D::power_exponential(2.0);
    const std::string pfx = "pow-exp-";
    if (name.rfind(pfx, 0) == 0) return Kernel1D::power_exponential(to_double("kernel", name.substr(pfx.size())));
    throw ConfigError("kernel: unknown kernel '" + name +
                      "' (matern-0.5, matern-1.5, matern-2.5, gaussian, pow-exp-<alpha>)");
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd single_column(const Table& t, const std::string& what) {
    if (t.data.cols() != 1) {
        throw DataError(what + " must have exactly one column (found " + std::to_string(t.data.cols()) + ")");
    }
    return t.data.col(0);
}

void require_path(const std::string& path, const std::string& flag) {
    if (path.empty()) throw ConfigError(flag + " is required");
}

std::string out_path(const RunConfig& cfg, const std::string& file) {
    std::filesystem::create_directories(cfg.out);
    return (std::filesystem::path(cfg.out) / file).string();
}

std::vector<std::string> input_names(const Table& t, Eigen::Index p) {
    std::vector<std::string> n = t.names;
    if (static_cast<Eigen::Index>(n.size()) != p) {
        n.clear();
        for (Eigen::Index l = 0; l < p; ++l) n.push_back("x" + std::to_string(l + 1));
    }
    return n;
}

PriorSpec build_prior(const RunConfig& cfg, const DesignMatrix& design, bool nugget, FitContext ctx) {
    const PriorKind kind = parse_prior_kind(cfg.prior_kind);
    if (kind == PriorKind::Reference) return PriorSpec::reference(nugget);
    JRPriorParams jr = jr_default_params(design, ctx);
    if (cfg.prior_a) jr.a = *cfg.prior_a;
    jr.b = cfg.prior_b;
    if (!cfg.prior_C.empty()) {
        if (cfg.prior_C.size() == 1) {
            jr.C.setConstant(cfg.prior_C[0]);
        } else if (static_cast<Eigen::Index>(cfg.prior_C.size()) == design.dim()) {
            jr.C = to_vector(cfg.prior_C);
        } else {
            throw ConfigError("prior.C has " + std::to_string(cfg.prior_C.size()) + " entries but the design has " +
                              std::to_string(design.dim()) + " inputs");
        }
    }
    return PriorSpec::jointly_robust(jr, nugget);
}

// Validation that needs no data: prior kind, parameterization and their combination.
FitConfig fit_skeleton(const RunConfig& cfg, Parameterization fallback) {
    FitConfig fc;
    fc.parameterization = cfg.parameterization.empty() ? fallback : parse_parameterization(cfg.parameterization);
    fc.multistart = cfg.multistart.value_or(FitConfig{}.multistart);
    fc.grad_tol = cfg.tol;
    fc.max_iter = cfg.max_iter;
    fc.seed = cfg.fit_seed.value_or(cfg.seed);
    const PriorKind kind = parse_prior_kind(cfg.prior_kind);
    if (kind == PriorKind::Reference) {
        fc.prior = PriorSpec::reference(false);
    } else {
        JRPriorParams jr;
        jr.a = cfg.prior_a.value_or(0.2);
        jr.b = cfg.prior_b;
        jr.C = Eigen::VectorXd::Ones(1);
        fc.prior = PriorSpec::jointly_robust(jr, false);
    }
    fc.validate(1, false);
    return fc;
}

void warn_robustness(const FitResult& fit, std::ostream& err) {
    if (fit.diagnostics.flag_near_identity) {
        err << "WARNING ROBUSTNESS: fitted correlation matrix is close to the identity (max off-diagonal "
            << fit.diagnostics.max_offdiag_corr << ")\n";
    }
    if (fit.diagnostics.flag_near_ones) {
        err << "WARNING ROBUSTNESS: fitted correlation matrix is close to all ones (min off-diagonal "
            << fit.diagnostics.min_offdiag_corr << ")\n";
    }
}

std::pair<Table, Eigen::VectorXd> load_xy(const RunConfig& cfg) {
    require_path(cfg.design, "--design");
    require_path(cfg.output, "--output");
    Table x = load_table(cfg.design);
    const Eigen::VectorXd y = single_column(load_table(cfg.output), "output file");
    if (x.data.rows() != y.size()) {
        throw DataError("design has " + std::to_string(x.data.rows()) + " rows but output has " +
                        std::to_string(y.size()) + " rows");
    }
    return {std::move(x), y};
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& source) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key or value");
        }
        kv[key] = value;
    }
    return kv;
}

void apply_key_values(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
    for (const auto& [k, v] : kv) {
        if (k == "prior.kind") {
            (void)parse_prior_kind(v);
            cfg.prior_kind = v;
        } else if (k == "prior.a") {
            cfg.prior_a = to_double(k, v);
        } else if (k == "prior.b") {
            cfg.prior_b = to_double(k, v);
        } else if (k == "prior.C") {
            cfg.prior_C = to_list(k, v);
        } else if (k == "prior.nugget") {
            cfg.nugget = to_bool(k, v);
        } else if (k == "fit.parameterization") {
            (void)parse_parameterization(v);
            cfg.parameterization = v;
        } else if (k == "fit.multistart") {
            cfg.multistart = to_int(k, v);
        } else if (k == "fit.tol") {
            cfg.tol = to_double(k, v);
        } else if (k == "fit.max_iter") {
            cfg.max_iter = to_int(k, v);
        } else if (k == "fit.seed") {
            cfg.fit_seed = to_u64(k, v);
        } else if (k == "kernel") {
            (void)parse_kernel(v);
            cfg.kernel = v;
        } else if (k == "seed") {
            cfg.seed = to_u64(k, v);
        } else if (k == "mcmc.S") {
            cfg.S = to_int(k, v);
        } else if (k == "mcmc.S0") {
            cfg.S0 = to_int(k, v);
        } else if (k == "theta.lower") {
            cfg.theta_lower = to_list(k, v);
        } else if (k == "theta.upper") {
            cfg.theta_upper = to_list(k, v);
        } else if (k == "screen.p0") {
            cfg.p0 = to_double(k, v);
        } else if (k == "screen.method") {
            if (v != "inverse-range" && v != "sobol") {
                throw ConfigError("screen.method: '" + v + "' is not inverse-range or sobol");
            }
            cfg.method = v;
        } else if (k == "replicates") {
            cfg.replicates = to_int(k, v);
        } else if (k == "full_scale") {
            cfg.full_scale = to_bool(k, v);
        } else if (k == "calibrate.model") {
            cfg.model = v;
        } else {
            throw ConfigError("unknown configuration key '" + k + "'");
        }
    }
}

int cmd_emulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    FitConfig fc = fit_skeleton(cfg, Parameterization::Xi);
    const Kernel1D kernel = parse_kernel(cfg.kernel);
    auto [xt, y] = load_xy(cfg);
    const Eigen::Index p = xt.data.cols();
    const bool nugget = cfg.nugget.value_or(false);
    const DesignMatrix design(xt.data);
    const GaSPModel model(design, y, MeanBasis::constant(), CorrelationSpec::uniform(kernel, p), nugget);
    fc.prior = build_prior(cfg, design, nugget, FitContext::Emulation);
    const FitResult fit = fit_mode(model, fc);
    warn_robustness(fit, err);

    const std::vector<std::string> names = input_names(xt, p);
    Table summary;
    summary.names = {"index", "gamma", "beta", "xi", "P"};
    summary.data.resize(p, 5);
    Eigen::VectorXd pl = Eigen::VectorXd::Constant(p, std::nan(""));
    if (fit.prior.kind == PriorKind::JR) pl = normalized_inverse_ranges(fit, *fit.prior.jr, cfg.p0).P;
    for (Eigen::Index l = 0; l < p; ++l) {
        summary.data.row(l) << static_cast<double>(l + 1), fit.gamma(l), fit.beta(l), fit.xi(l), pl(l);
    }
    write_table(out_path(cfg, "fit_ranges.csv"), summary);

    {
        std::ofstream f(out_path(cfg, "fit_summary.csv"));
        f << "key,value\n";
        f << "prior," << to_string(fit.prior.kind) << '\n';
        f << "parameterization," << to_string(fit.parameterization) << '\n';
        f << "kernel," << cfg.kernel << '\n';
        f << "eta," << format_double(fit.eta) << '\n';
        for (Eigen::Index k = 0; k < fit.theta_m.size(); ++k) {
            f << "theta_m" << k + 1 << ',' << format_double(fit.theta_m(k)) << '\n';
        }
        f << "sigma2," << format_double(fit.sigma2) << '\n';
        f << "log_posterior," << format_double(fit.log_posterior) << '\n';
        f << "near_identity," << fit.diagnostics.flag_near_identity << '\n';
        f << "near_ones," << fit.diagnostics.flag_near_ones << '\n';
        f << "converged," << fit.trace.converged << '\n';
        f << "at_bound," << fit.trace.at_bound << '\n';
    }

    if (!cfg.new_inputs.empty()) {
        const Table xn = load_table(cfg.new_inputs);
        if (xn.data.cols() != p) {
            throw DataError("new inputs have " + std::to_string(xn.data.cols()) + " columns but the design has " +
                            std::to_string(p));
        }
        const PredictiveDistribution pd = make_predictor(model, fit).predict(xn.data);
        const auto [lo, hi] = pd.interval(0.95);
        Table pt;
        pt.names = names;
        for (const char* c : {"mean", "lower", "upper", "extrapolated"}) pt.names.emplace_back(c);
        pt.data.resize(xn.data.rows(), p + 4);
        pt.data.leftCols(p) = xn.data;
        pt.data.col(p) = pd.mean;
        pt.data.col(p + 1) = lo;
        pt.data.col(p + 2) = hi;
        for (Eigen::Index i = 0; i < xn.data.rows(); ++i) {
            pt.data(i, p + 3) = pd.extrapolated[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
            if (pd.extrapolated[static_cast<std::size_t>(i)]) {
                err << "WARNING EXTRAPOLATION: prediction row " << i + 1 << " lies outside the design box\n";
            }
        }
        write_table(out_path(cfg, "predictions.csv"), pt);
    }
    out << "emulate: fitted " << model.n() << " runs in " << p << " inputs; log posterior "
        << format_double(fit.log_posterior) << '\n';
    return 0;
}

int cmd_calibrate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Kernel1D kernel = parse_kernel(cfg.kernel);
    (void)parse_prior_kind(cfg.prior_kind);
    if (cfg.S <= cfg.S0 || cfg.S0 < 0) throw ConfigError("mcmc.S must exceed mcmc.S0 >= 0");
    auto [xt, y] = load_xy(cfg);
    const Eigen::Index px = xt.data.cols();
    const bool nugget = cfg.nugget.value_or(true);
    DesignMatrix design(xt.data);

    std::shared_ptr<const ModularEmulator> emu;
    ThetaPrior tp;
    if (!cfg.runs.empty()) {
        const Table runs = load_table(cfg.runs);
        const Eigen::Index pt = runs.data.cols() - 1 - px;
        if (pt < 1) throw DataError("emulator runs need x columns, theta columns and an output column");
        emu = fit_emulator_modular(runs.data.leftCols(px + pt), runs.data.col(px + pt), px, cfg.seed);
        tp.lower = runs.data.middleCols(px, pt).colwise().minCoeff().transpose();
        tp.upper = runs.data.middleCols(px, pt).colwise().maxCoeff().transpose();
    } else if (cfg.model == "ex4") {
        if (px != 1) throw DataError("the ex4 computer model takes one input column");
        tp.lower = Eigen::VectorXd::Zero(1);
        tp.upper = Eigen::VectorXd::Constant(1, 5.0);
    } else {
        throw ConfigError("calibrate.model: unknown built-in model '" + cfg.model + "' (ex4) and no --runs given");
    }
    if (!cfg.theta_lower.empty()) tp.lower = to_vector(cfg.theta_lower);
    if (!cfg.theta_upper.empty()) tp.upper = to_vector(cfg.theta_upper);

    const PriorSpec prior = build_prior(cfg, design, nugget, FitContext::Calibration);
    const CorrelationSpec spec = CorrelationSpec::uniform(kernel, px);
    std::optional<CalibrationProblem> prob;
    if (emu) {
        prob.emplace(design, y, emu, tp, MeanBasis::constant(), spec, prior);
    } else {
        ComputerModel f = [](const Eigen::MatrixXd& x, const Eigen::VectorXd& theta) {
            Eigen::VectorXd v(x.rows());
            for (Eigen::Index i = 0; i < x.rows(); ++i) v(i) = ex4_computer_model(x(i, 0), theta(0));
            return v;
        };
        prob.emplace(design, y, f, tp, MeanBasis::constant(), spec, prior);
    }

    McmcOptions mo;
    mo.S = cfg.S;
    mo.S0 = cfg.S0;
    mo.seed = cfg.seed;
    const PosteriorChain ch = run_mcmc(*prob, mo);

    const Eigen::Index pt = prob->theta_dim();
    const Eigen::Index q = ch.theta_m.cols();
    Table chain;
    chain.names.emplace_back("iteration");
    for (Eigen::Index k = 0; k < pt; ++k) chain.names.push_back("theta" + std::to_string(k + 1));
    for (Eigen::Index k = 0; k < q; ++k) chain.names.push_back("theta_m" + std::to_string(k + 1));
    chain.names.emplace_back("sigma2");
    for (Eigen::Index l = 0; l < px; ++l) chain.names.push_back("xi" + std::to_string(l + 1));
    chain.names.emplace_back("log_eta");
    chain.data.resize(ch.S, 1 + pt + q + 1 + px + 1);
    for (int s = 0; s < ch.S; ++s) {
        chain.data.row(s) << static_cast<double>(s), ch.theta.row(s), ch.theta_m.row(s), ch.sigma2(s), ch.xi.row(s),
            ch.log_eta(s);
    }
    write_table(out_path(cfg, "chain.csv"), chain);

    const Eigen::MatrixXd xn = cfg.new_inputs.empty() ? xt.data : load_table(cfg.new_inputs).data;
    if (xn.cols() != px) throw DataError("new inputs have the wrong number of columns");
    const IntervalPrediction mo_pred = predict_calibrated(*prob, ch, xn, PredictionMode::ModelOnly, cfg.seed);
    const IntervalPrediction md_pred = predict_calibrated(*prob, ch, xn, PredictionMode::ModelPlusDiscrepancy, cfg.seed);
    Table pr;
    pr.names = input_names(xt, px);
    for (const char* c : {"model_mean", "model_lower", "model_upper", "mean", "lower", "upper"}) pr.names.emplace_back(c);
    pr.data.resize(xn.rows(), px + 6);
    pr.data.leftCols(px) = xn;
    pr.data.col(px) = mo_pred.mean;
    pr.data.col(px + 1) = mo_pred.lower;
    pr.data.col(px + 2) = mo_pred.upper;
    pr.data.col(px + 3) = md_pred.mean;
    pr.data.col(px + 4) = md_pred.lower;
    pr.data.col(px + 5) = md_pred.upper;
    write_table(out_path(cfg, "predictions.csv"), pr);
    for (std::size_t i = 0; i < md_pred.extrapolated.size(); ++i) {
        if (md_pred.extrapolated[i]) err << "WARNING EXTRAPOLATION: emulator extrapolates at prediction row " << i + 1 << '\n';
    }

    if (!cfg.truth.empty()) {
        const Eigen::VectorXd truth = single_column(load_table(cfg.truth), "truth file");
        if (truth.size() != xn.rows()) throw DataError("truth has " + std::to_string(truth.size()) +
                                                       " rows but there are " + std::to_string(xn.rows()) +
                                                       " prediction inputs");
        const CalibrationMetrics a = calibration_metrics(mo_pred, truth, y.mean());
        const CalibrationMetrics b = calibration_metrics(md_pred, truth, y.mean());
        std::ofstream f(out_path(cfg, "metrics.csv"));
        f << "mode,nrmse,p_ci,l_ci\n";
        f << "model," << format_double(a.nrmse) << ',' << format_double(a.p_ci) << ',' << format_double(a.l_ci) << '\n';
        f << "model+discrepancy," << format_double(b.nrmse) << ',' << format_double(b.p_ci) << ','
          << format_double(b.l_ci) << '\n';
    }
    out << "calibrate: " << ch.retained() << " retained samples; acceptance theta " << ch.accept_theta << ", range "
        << ch.accept_range << '\n';
    return 0;
}

int cmd_screen(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const ScreenMethod method = cfg.method == "sobol" ? ScreenMethod::SobolEmulator : ScreenMethod::InverseRange;
    if (!cfg.example.empty()) {
        ScreeningConfig sc;
        sc.example = cfg.example;
        sc.seed = cfg.seed;
        sc.method = method;
        sc.p0 = cfg.p0;
        if (cfg.replicates > 0) sc.replicates = cfg.replicates;
        if (cfg.multistart) sc.multistart = *cfg.multistart;
        const ScreeningReport rep = screening_benchmark(sc);
        std::ofstream f(out_path(cfg, "screen_report.csv"));
        f << "# example=" << rep.example << "\n# n=" << rep.n << "\n# replicates=" << rep.replicates
          << "\n# separation_fraction=" << format_double(rep.separation_fraction) << '\n';
        f << "input,selection_frequency,mean_index\n";
        for (Eigen::Index l = 0; l < rep.mean_index.size(); ++l) {
            f << l + 1 << ',' << format_double(rep.selection_frequency(l)) << ',' << format_double(rep.mean_index(l))
              << '\n';
        }
        out << "screen: " << rep.replicates << " replicates of " << rep.example << "; separation fraction "
            << rep.separation_fraction << '\n';
        return 0;
    }

    FitConfig fc = fit_skeleton(cfg, Parameterization::Beta);
    fc.multistart = cfg.multistart.value_or(ScreeningConfig{}.multistart);
    const Kernel1D kernel = parse_kernel(cfg.kernel);
    auto [xt, y] = load_xy(cfg);
    const Eigen::Index p = xt.data.cols();
    const bool nugget = cfg.nugget.value_or(true);
    const DesignMatrix design(xt.data);
    const GaSPModel model(design, y, MeanBasis::constant(), CorrelationSpec::uniform(kernel, p), nugget);
    fc.prior = build_prior(cfg, design, nugget, FitContext::Emulation);
    const FitResult fit = fit_mode(model, fc);
    warn_robustness(fit, err);

    Eigen::VectorXd index;
    std::vector<bool> selected;
    if (method == ScreenMethod::InverseRange) {
        if (fit.prior.kind != PriorKind::JR) throw ConfigError("inverse-range screening requires the JR prior");
        const ScreenResult sr = normalized_inverse_ranges(fit, *fit.prior.jr, cfg.p0);
        index = sr.P;
        selected = sr.selected;
    } else {
        const SobolIndices si = sobol_emulator(make_predictor(model, fit), design.data_min(), design.data_max(),
                                               5000, cfg.seed);
        index = si.S_T;
        const double cut = cfg.p0 * index.cwiseMax(0.0).sum() / static_cast<double>(p);
        for (Eigen::Index l = 0; l < p; ++l) selected.push_back(index(l) > cut);
    }
    const std::vector<std::string> names = input_names(xt, p);
    std::ofstream f(out_path(cfg, "screen.csv"));
    f << "input,name," << (method == ScreenMethod::InverseRange ? "P" : "S_T") << ",selected\n";
    for (Eigen::Index l = 0; l < p; ++l) {
        f << l + 1 << ',' << names[static_cast<std::size_t>(l)] << ',' << format_double(index(l)) << ','
          << (selected[static_cast<std::size_t>(l)] ? 1 : 0) << '\n';
    }
    out << "screen: " << std::count(selected.begin(), selected.end(), true) << " of " << p << " inputs selected\n";
    return 0;
}

int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& /*err*/) {
    const std::string& c = cfg.bench_case;
    if (c == "ex4") {
        CalibrationBenchmarkConfig bc = cfg.full_scale ? CalibrationBenchmarkConfig::full_scale()
                                                        : CalibrationBenchmarkConfig{};
        bc.seed = cfg.seed;
        const CalibrationBenchmarkResult r = calibration_benchmark(bc);
        r.report().write_csv(out_path(cfg, "calibration.csv"));
        r.plot_data().write_csv(out_path(cfg, "ex4_plot.csv"));
        out << "bench ex4: wrote calibration.csv and ex4_plot.csv\n";
        return 0;
    }
    if (c == "emulation" || c.rfind("ex1-", 0) == 0) {
        EmulationBenchmarkConfig ec = cfg.full_scale ? EmulationBenchmarkConfig::full_scale()
                                                      : EmulationBenchmarkConfig{};
        ec.seed = cfg.seed;
        if (cfg.replicates > 0) ec.replicates = cfg.replicates;
        if (c != "emulation") ec.cases = {c};
        if (!cfg.parameterization.empty()) ec.jr_parameterization = parse_parameterization(cfg.parameterization);
        for (const auto& id : ec.cases) (void)emulation_design_size(id);
        const EmulationBenchmarkResult r = emulation_benchmark(ec);
        r.report().write_csv(out_path(cfg, "emulation.csv"));
        r.replicate_report().write_csv(out_path(cfg, "emulation_replicates.csv"));
        r.report(true).write_csv(out_path(cfg, "emulation_timing.csv"));
        out << "bench " << c << ": wrote emulation.csv, emulation_replicates.csv and emulation_timing.csv\n";
        return 0;
    }
    if (c.rfind("ex2-", 0) == 0 || c.rfind("ex3-", 0) == 0) {
        ScreeningConfig sc;
        sc.example = c;
        sc.seed = cfg.seed;
        sc.p0 = cfg.p0;
        sc.method = cfg.method == "sobol" ? ScreenMethod::SobolEmulator : ScreenMethod::InverseRange;
        if (cfg.full_scale) sc.replicates = 1000;
        if (cfg.replicates > 0) sc.replicates = cfg.replicates;
        if (cfg.multistart) sc.multistart = *cfg.multistart;
        const ScreeningReport rep = screening_benchmark(sc);
        ExperimentReport er;
        er.name = "screening";
        er.seed = cfg.seed;
        er.config = {{"example", c},
                     {"n", std::to_string(rep.n)},
                     {"replicates", std::to_string(rep.replicates)},
                     {"method", cfg.method},
                     {"p0", format_double(cfg.p0)},
                     {"separation_fraction", format_double(rep.separation_fraction)}};
        er.columns = {"input", "selection_frequency", "mean_index"};
        for (Eigen::Index l = 0; l < rep.mean_index.size(); ++l) {
            er.rows.push_back({std::to_string(l + 1), format_double(rep.selection_frequency(l)),
                               format_double(rep.mean_index(l))});
        }
        er.write_csv(out_path(cfg, "screen_" + c + ".csv"));
        out << "bench " << c << ": wrote screen_" << c << ".csv\n";
        return 0;
    }
    throw ConfigError("--case: unknown case '" + c + "' (emulation, ex1-i..ex1-v, ex2-i, ex2-ii, ex3-i..ex3-iv, ex4)");
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Robust Gaussian stochastic process emulation, calibration and screening", "robgasp"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;
    std::map<std::string, std::string> flags;

    auto common = [&](CLI::App* s, bool data) {
        if (data) {
            s->add_option("--design", cfg.design, "CSV of inputs, one row per run");
            s->add_option("--output", cfg.output, "CSV with one column of outputs");
        }
        s->add_option("--config", config_path, "Flat key = value configuration file");
        s->add_option("--out", cfg.out, "Output directory")->capture_default_str();
        s->add_option_function<std::string>("--seed", [&](const std::string& v) { flags["seed"] = v; }, "Random seed");
    };
    auto prior_flags = [&](CLI::App* s) {
        s->add_option_function<std::string>("--prior", [&](const std::string& v) { flags["prior.kind"] = v; },
                                            "jr or reference");
        s->add_option_function<std::string>("--parameterization",
                                            [&](const std::string& v) { flags["fit.parameterization"] = v; },
                                            "xi, beta or gamma");
        s->add_option_function<std::string>("--kernel", [&](const std::string& v) { flags["kernel"] = v; },
                                            "matern-2.5, matern-1.5, matern-0.5, gaussian, pow-exp-<alpha>");
        s->add_flag_function("--nugget", [&](std::int64_t) { flags["prior.nugget"] = "true"; }, "Estimate a nugget");
        s->add_flag_function("--no-nugget", [&](std::int64_t) { flags["prior.nugget"] = "false"; }, "No nugget");
    };

    CLI::App* em = app.add_subcommand("emulate", "Fit a GaSP emulator and optionally predict");
    common(em, true);
    prior_flags(em);
    em->add_option("--new-inputs", cfg.new_inputs, "CSV of inputs to predict at");

    CLI::App* ca = app.add_subcommand("calibrate", "Bayesian calibration with a GaSP discrepancy");
    common(ca, true);
    prior_flags(ca);
    ca->add_option("--new-inputs", cfg.new_inputs, "CSV of inputs to predict at");
    ca->add_option("--truth", cfg.truth, "CSV of true values at the new inputs, for metrics");
    ca->add_option("--runs", cfg.runs, "Computer-model runs (x columns, theta columns, output) for modular mode");
    ca->add_option_function<std::string>("--model", [&](const std::string& v) { flags["calibrate.model"] = v; },
                                         "Built-in computer model (ex4)");
    ca->add_option_function<std::string>("--S", [&](const std::string& v) { flags["mcmc.S"] = v; }, "Total samples");
    ca->add_option_function<std::string>("--S0", [&](const std::string& v) { flags["mcmc.S0"] = v; }, "Burn-in");

    CLI::App* sc = app.add_subcommand("screen", "Identify inert inputs");
    common(sc, true);
    prior_flags(sc);
    sc->add_option("--example", cfg.example, "Run the replicated screening study for a built-in example");
    sc->add_option_function<std::string>("--p0", [&](const std::string& v) { flags["screen.p0"] = v; },
                                         "Selection threshold");
    sc->add_option_function<std::string>("--method", [&](const std::string& v) { flags["screen.method"] = v; },
                                         "inverse-range or sobol");
    sc->add_option_function<std::string>("--replicates", [&](const std::string& v) { flags["replicates"] = v; },
                                         "Replicates for --example");

    CLI::App* be = app.add_subcommand("bench", "Reproduce the benchmark tables");
    common(be, false);
    be->add_option("--case", cfg.bench_case, "emulation, ex1-i..ex1-v, ex2-i, ex2-ii, ex3-i..ex3-iv or ex4")
        ->capture_default_str();
    be->add_option_function<std::string>("--replicates", [&](const std::string& v) { flags["replicates"] = v; },
                                         "Replicates per case");
    be->add_flag_function("--full-scale,--paper-scale", [&](std::int64_t) { flags["full_scale"] = "true"; },
                          "Use the full replicate counts and chain lengths");
    be->add_option_function<std::string>("--parameterization",
                                         [&](const std::string& v) { flags["fit.parameterization"] = v; },
                                         "JR parameterization for the emulation cases");
    be->add_option_function<std::string>("--method", [&](const std::string& v) { flags["screen.method"] = v; },
                                         "Screening method for ex2/ex3 cases");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << app.help();
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "ERROR CONFIG: " << msg << '\n';
        return 2;
    }

    try {
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw ConfigError("cannot open config file '" + config_path + "'");
            apply_key_values(cfg, parse_key_values(f, config_path));
        }
        apply_key_values(cfg, flags);
        if (em->parsed()) return cmd_emulate(cfg, out, err);
        if (ca->parsed()) return cmd_calibrate(cfg, out, err);
        if (sc->parsed()) return cmd_screen(cfg, out, err);
        return cmd_bench(cfg, out, err);
    } catch (const Error& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "ERROR " << to_string(e.kind()) << ": " << msg << '\n';
        switch (e.kind()) {
            case ErrorKind::Config: return 2;
            case ErrorKind::Data: return 3;
            case ErrorKind::Numerical: return 4;
        }
        return 4;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "ERROR DATA: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace robgasp::cli
