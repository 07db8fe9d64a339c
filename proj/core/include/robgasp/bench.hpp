#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "robgasp/calibrate.hpp"
#include "robgasp/fit.hpp"
#include "robgasp/metrics.hpp"
#include "robgasp/priors.hpp"

namespace robgasp {

/// Tabular experiment output with a config echo. CSV output is byte-stable under seed.
struct ExperimentReport {
    std::string name;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    /// "# key=value" lines, then a header and the rows.
    void write_csv(std::ostream& out) const;
    void write_csv(const std::string& path) const;
};

/// Default design size for an emulation case.
[[nodiscard]] int emulation_design_size(const std::string& case_id);

struct EmulationBenchmarkConfig {
    std::vector<std::string> cases = {"ex1-i", "ex1-ii", "ex1-iii", "ex1-iv", "ex1-v"};
    int n = 0;  // 0 selects the default size per case
    int replicates = 20;
    int n_test = 2000;
    std::vector<PriorKind> priors = {PriorKind::JR, PriorKind::Reference};
    Parameterization jr_parameterization = Parameterization::Xi;
    std::uint64_t seed = 1;
    int multistart = 3;
    int lhd_candidates = 50;

    /// N = 200 replicates and n* = 10000 held-out points.
    static EmulationBenchmarkConfig full_scale();
};

struct EmulationRecord {
    std::string case_id;
    PriorKind prior = PriorKind::JR;
    int replicate = 0;
    int n = 0;
    double nrmse = 0.0;
    double seconds = 0.0;
    bool near_identity = false;
    bool near_ones = false;
    double max_train_residual = 0.0;  // max |yhat - y| / sd(y) over training points
    Eigen::VectorXd beta;
};

struct EmulationSummary {
    std::string case_id;
    PriorKind prior = PriorKind::JR;
    int n = 0;
    int replicates = 0;
    double avg_nrmse = 0.0;
    double mean_seconds = 0.0;
    double robust_fraction = 0.0;  // fits with neither robustness flag raised
};

struct EmulationBenchmarkResult {
    EmulationBenchmarkConfig config;
    std::vector<EmulationRecord> records;
    std::vector<EmulationSummary> summary;

    [[nodiscard]] const EmulationSummary& find(const std::string& case_id, PriorKind prior) const;
    /// Per-case Avg-NRMSE table; timing columns are written only when asked.
    [[nodiscard]] ExperimentReport report(bool with_timing = false) const;
    [[nodiscard]] ExperimentReport replicate_report(bool with_timing = false) const;
};

/// One replicate: maximin LHD of size n, fit, held-out NRMSE against the training-output mean.
[[nodiscard]] EmulationRecord emulation_replicate(const std::string& case_id, int n, PriorKind prior,
                                                  const EmulationBenchmarkConfig& cfg, int replicate);

[[nodiscard]] EmulationBenchmarkResult emulation_benchmark(const EmulationBenchmarkConfig& cfg);

/// ex4 field data: 10 equispaced sites on [0, 3], three replicates each, and 200 test points on [0, 5].
struct Ex4Data {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    Eigen::MatrixXd x_test;
    Eigen::VectorXd truth;
};
[[nodiscard]] Ex4Data ex4_data(std::uint64_t seed);

/// ex4 calibration problem: Matern 5/2 discrepancy with nugget, h(x) = 1, theta uniform on [0, 5].
[[nodiscard]] CalibrationProblem ex4_problem(const Ex4Data& data, PriorKind prior,
                                             std::shared_ptr<const ModularEmulator> emulator = nullptr);

/// 50-run emulator of 5 exp(-theta x) on a maximin design over [0, 5]^2.
[[nodiscard]] std::shared_ptr<const ModularEmulator> ex4_emulator(std::uint64_t seed, int runs = 50);

struct CalibrationBenchmarkConfig {
    std::uint64_t seed = 1;
    int S = 20000;
    int S0 = 4000;
    bool include_mle = true;
    bool include_reference = true;

    /// S = 100000, S0 = 20000.
    static CalibrationBenchmarkConfig full_scale();
};

struct CalibrationMethodResult {
    std::string method;  // "reference", "jr" or "mle"
    IntervalPrediction model_only;
    IntervalPrediction with_discrepancy;
    CalibrationMetrics metrics_model_only;
    CalibrationMetrics metrics_with_discrepancy;
    double theta_median = 0.0;
    double xi_median = 0.0;
    double accept_theta = 0.0;
    double accept_range = 0.0;
};

struct CalibrationBenchmarkResult {
    CalibrationBenchmarkConfig config;
    Ex4Data data;
    std::vector<CalibrationMethodResult> methods;

    [[nodiscard]] const CalibrationMethodResult& find(const std::string& method) const;
    /// One row per method and prediction mode.
    [[nodiscard]] ExperimentReport report() const;
    /// Columns x, truth, then mean, lower, upper per method and mode.
    [[nodiscard]] ExperimentReport plot_data() const;
};

[[nodiscard]] CalibrationBenchmarkResult calibration_benchmark(const CalibrationBenchmarkConfig& cfg);

}  // namespace robgasp
