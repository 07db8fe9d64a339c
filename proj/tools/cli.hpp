#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace robgasp::cli {

/// Every field has a default; a run with only data paths uses JR, Matern 5/2 and a constant mean.
struct RunConfig {
    std::string subcommand;

    std::string design;
    std::string output;
    std::string new_inputs;
    std::string truth;
    std::string runs;
    std::string out = ".";
    std::uint64_t seed = 1;

    std::string prior_kind = "jr";
    std::optional<double> prior_a;
    double prior_b = 1.0;
    std::vector<double> prior_C;
    std::optional<bool> nugget;

    std::string parameterization;  // empty: xi for emulate, beta for screen
    std::optional<int> multistart;
    double tol = 1e-6;
    int max_iter = 200;
    std::optional<std::uint64_t> fit_seed;
    std::string kernel = "matern-2.5";

    std::string model = "ex4";
    int theta_dim = 1;
    std::vector<double> theta_lower;
    std::vector<double> theta_upper;
    int S = 20000;
    int S0 = 4000;

    double p0 = 1.0;
    std::string method = "inverse-range";
    std::string example;
    int replicates = 0;  // 0 selects the module default

    std::string bench_case = "emulation";
    bool full_scale = false;
};

/// Flat "key = value" text; '#' starts a comment. Throws ConfigError naming the line.
[[nodiscard]] std::map<std::string, std::string> parse_key_values(std::istream& in,
                                                                  const std::string& source = "<config>");

/// Applies dotted keys (prior.a, fit.tol, ...) to cfg. Unknown keys and bad values are ConfigErrors.
void apply_key_values(RunConfig& cfg, const std::map<std::string, std::string>& kv);

/// Runs the command line; returns 0 ok, 2 config error, 3 data error, 4 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int cmd_emulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_calibrate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_screen(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace robgasp::cli
