#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "robgasp/errors.hpp"
#include "robgasp/table_io.hpp"

namespace fs = std::filesystem;
using namespace robgasp;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "robgasp");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / "robgasp_cli_test";
    fs::create_directories(dir);
    return dir;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

fs::path make_data(int rows_y = 12) {
    const fs::path d = scratch();
    std::ostringstream x, y;
    x << "u,v\n";
    y << "y\n";
    for (int i = 0; i < 12; ++i) {
        const double u = i / 11.0, v = ((i * 5) % 12) / 11.0;
        x << u << ',' << v << '\n';
        if (i < rows_y) y << std::sin(4 * u) + v << '\n';
    }
    write(d / "x.csv", x.str());
    write(d / (rows_y == 12 ? "y.csv" : "y_short.csv"), y.str());
    return d;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("key-value parsing") {
    std::istringstream in("# comment\nprior.a = 0.4\n\nfit.tol=1e-8  # trailing\nprior.C = 0.5, 2\n");
    const auto kv = cli::parse_key_values(in);
    CHECK(kv.at("prior.a") == "0.4");
    CHECK(kv.at("fit.tol") == "1e-8");
    cli::RunConfig cfg;
    cli::apply_key_values(cfg, kv);
    CHECK(cfg.prior_a.value() == 0.4);
    CHECK(cfg.tol == 1e-8);
    CHECK(cfg.prior_C == std::vector<double>{0.5, 2.0});

    std::istringstream bad("prior.a\n");
    CHECK_THROWS_AS((void)cli::parse_key_values(bad, "c.txt"), ConfigError);
    CHECK_THROWS_AS(cli::apply_key_values(cfg, {{"prior.q", "1"}}), ConfigError);
    CHECK_THROWS_AS(cli::apply_key_values(cfg, {{"fit.multistart", "two"}}), ConfigError);
    CHECK_THROWS_AS(cli::apply_key_values(cfg, {{"prior.kind", "flat"}}), ConfigError);
    CHECK_THROWS_AS(cli::apply_key_values(cfg, {{"kernel", "matern-3.5"}}), ConfigError);
}

TEST_CASE("emulate writes a summary and predictions") {
    const fs::path d = make_data();
    write(d / "new.csv", "0.5,0.5\n2.0,0.5\n");
    const Run r = invoke({"emulate", "--design", (d / "x.csv").string(), "--output", (d / "y.csv").string(),
                          "--new-inputs", (d / "new.csv").string(), "--out", (d / "out").string()});
    CHECK(r.code == 0);
    CHECK(fs::exists(d / "out" / "fit_summary.csv"));
    const Table p = load_table((d / "out" / "predictions.csv").string());
    CHECK(p.data.rows() == 2);
    CHECK(p.data(0, 5) == 0.0);
    CHECK(p.data(1, 5) == 1.0);
    CHECK(r.err.find("WARNING EXTRAPOLATION") != std::string::npos);
}

TEST_CASE("exit codes") {
    const fs::path d = make_data();
    make_data(11);
    const Run mismatch = invoke({"emulate", "--design", (d / "x.csv").string(), "--output", (d / "y_short.csv").string(),
                                 "--out", (d / "o").string()});
    CHECK(mismatch.code == 3);
    CHECK(mismatch.err.rfind("ERROR DATA:", 0) == 0);
    CHECK(mismatch.err.find("12") != std::string::npos);
    CHECK(mismatch.err.find("11") != std::string::npos);

    const Run forbidden = invoke({"emulate", "--design", "missing.csv", "--output", "missing.csv", "--prior",
                                  "reference", "--parameterization", "beta"});
    CHECK(forbidden.code == 2);
    CHECK(forbidden.err.rfind("ERROR CONFIG:", 0) == 0);

    CHECK(invoke({"emulate", "--design", "missing.csv", "--output", "missing.csv"}).code == 3);
    CHECK(invoke({"emulate", "--unknown-flag"}).code == 2);
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"bench", "--case", "ex7"}).code == 2);

    write(d / "bad.cfg", "prior.a = x\n");
    const Run badcfg = invoke({"emulate", "--config", (d / "bad.cfg").string(), "--design", "a", "--output", "b"});
    CHECK(badcfg.code == 2);
}

TEST_CASE("flags override the config file") {
    const fs::path d = make_data();
    write(d / "run.cfg", "prior.kind = reference\nfit.parameterization = beta\n");
    const Run r = invoke({"emulate", "--config", (d / "run.cfg").string(), "--parameterization", "xi", "--design",
                          (d / "x.csv").string(), "--output", (d / "y.csv").string(), "--out", (d / "o2").string()});
    CHECK(r.code == 0);
    std::ifstream f(d / "o2" / "fit_summary.csv");
    std::stringstream ss;
    ss << f.rdbuf();
    CHECK(ss.str().find("prior,reference") != std::string::npos);
    CHECK(ss.str().find("parameterization,xi") != std::string::npos);
}

TEST_CASE("screen selects the active input") {
    const fs::path d = scratch();
    std::ostringstream x, y;
    for (int i = 0; i < 20; ++i) {
        const double a = (i + 0.5) / 20.0, b = ((i * 7) % 20 + 0.5) / 20.0, c = ((i * 3) % 20 + 0.5) / 20.0;
        x << a << ',' << b << ',' << c << '\n';
        y << std::sin(5 * a) + 0.001 * b << '\n';
    }
    write(d / "sx.csv", x.str());
    write(d / "sy.csv", y.str());
    const Run r = invoke({"screen", "--design", (d / "sx.csv").string(), "--output", (d / "sy.csv").string(), "--out",
                          (d / "s").string(), "--no-nugget"});
    CHECK(r.code == 0);
    std::ifstream f(d / "s" / "screen.csv");
    std::string header, first;
    std::getline(f, header);
    std::getline(f, first);
    CHECK(header == "input,name,P,selected");
    CHECK(first.substr(first.size() - 2) == ",1");
}

}
