#include <benchmark/benchmark.h>

#include "robgasp/fit.hpp"
#include "robgasp/lhd.hpp"
#include "robgasp/test_functions.hpp"

using namespace robgasp;

namespace {

GaSPModel borehole_model(Eigen::Index n) {
    const TestFunction& tf = test_function("ex1-v");
    const DesignMatrix d(scale_to_box(maximin_lhd(n, tf.dim, 3, 10).points(), tf.lower, tf.upper));
    return GaSPModel(d, tf.evaluate(d.points()), MeanBasis::constant(),
                     CorrelationSpec::uniform(Kernel1D::matern(2.5), tf.dim), false);
}

RangeParams midpoint_ranges(const GaSPModel& m) {
    const Eigen::VectorXd width = m.design().data_max() - m.design().data_min();
    return RangeParams::from_gamma(0.5 * width).to(Parameterization::Xi);
}

void BM_LogMarginalLik(benchmark::State& state) {
    const GaSPModel m = borehole_model(state.range(0));
    const RangeParams p = midpoint_ranges(m);
    for (auto _ : state) benchmark::DoNotOptimize(log_marginal_lik(m, p, 0.0));
}
BENCHMARK(BM_LogMarginalLik)->Arg(40)->Arg(80)->Arg(160);

void BM_JRPosteriorGradient(benchmark::State& state) {
    const GaSPModel m = borehole_model(state.range(0));
    const PriorSpec prior = default_fit_config(m).prior;
    const RangeParams p = midpoint_ranges(m);
    for (auto _ : state) benchmark::DoNotOptimize(log_posterior(m, prior, p, 0.0, true).grad);
}
BENCHMARK(BM_JRPosteriorGradient)->Arg(40)->Arg(80)->Arg(160);

void BM_FisherInfo(benchmark::State& state) {
    const GaSPModel m = borehole_model(state.range(0));
    const RangeParams p = midpoint_ranges(m);
    for (auto _ : state) benchmark::DoNotOptimize(fisher_info(m, p, 0.0));
}
BENCHMARK(BM_FisherInfo)->Arg(40)->Arg(80);

void BM_FitMode(benchmark::State& state) {
    const GaSPModel m = borehole_model(80);
    FitConfig cfg = default_fit_config(m);
    if (state.range(0) == 1) cfg.prior = PriorSpec::reference(false);
    for (auto _ : state) benchmark::DoNotOptimize(fit_mode(m, cfg).log_posterior);
}
BENCHMARK(BM_FitMode)->Arg(0)->Arg(1)->ArgNames({"reference"})->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
