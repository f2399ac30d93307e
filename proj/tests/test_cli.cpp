#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tsdlab/harness.hpp"
#include "tsdlab/matrix_io.hpp"
#include "tsdlab/rng.hpp"

#ifndef TSDLAB_CLI_PATH
#error "TSDLAB_CLI_PATH must point at the built tsdlab binary"
#endif

namespace {

namespace fs = std::filesystem;
using tsdlab::Matrix;
using tsdlab::Rng;

int run_cli(const std::string& args) {
    std::string cmd = std::string(TSDLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream os(p);
    REQUIRE(os);
    os << content;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("oracle on identical files emits an all-zero spectrum") {
    TempDir dir("tsdlab_cli_oracle");
    Rng rng(3);
    Matrix w = Matrix::gaussian(5, 7, rng);
    tsdlab::save_tsdw(w, dir.path / "w.tsdw");
    fs::path out = dir.path / "spectrum.csv";
    CHECK(run_cli("oracle " + (dir.path / "w.tsdw").string() + " " + (dir.path / "w.tsdw").string() + " --out " +
                  out.string()) == 0);

    std::ifstream is(out);
    REQUIRE(is);
    std::string line;
    std::getline(is, line);
    CHECK(line == "index,sigma,signed_delta,abs_delta,scaled_rate,rank");
    int rows = 0;
    while (std::getline(is, line)) {
        std::stringstream ss(line);
        std::string cell;
        for (int c = 0; c < 4; ++c) std::getline(ss, cell, ',');
        CHECK(std::stod(cell) == 0.0);  // abs_delta
        ++rows;
    }
    CHECK(rows == 5);
}

TEST_CASE("oracle failures exit 2 and leave no partial output") {
    TempDir dir("tsdlab_cli_oracle_bad");
    fs::path out = dir.path / "spectrum.csv";
    CHECK(run_cli("oracle /nonexistent/a.tsdw /nonexistent/b.tsdw --out " + out.string()) == 2);
    CHECK_FALSE(fs::exists(out));

    Rng rng(4);
    tsdlab::save_tsdw(Matrix::gaussian(4, 4, rng), dir.path / "a.tsdw");
    tsdlab::save_tsdw(Matrix::gaussian(4, 5, rng), dir.path / "b.tsdw");
    CHECK(run_cli("oracle " + (dir.path / "a.tsdw").string() + " " + (dir.path / "b.tsdw").string() + " --out " +
                  out.string()) == 2);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("train honors defaults, emits artifacts, and is override-precedence correct") {
    TempDir dir("tsdlab_cli_train");
    write_file(dir.path / "run.cfg",
               "n=8\nm=10\nplanted_indices=2,5\nplanted_coeffs=1.0,-0.7\n"
               "n_train=64\nn_val=16\nlr=0.05\nsteps=120\nbatch=64\nmethod=lora\n");
    fs::path out = dir.path / "out";
    CHECK(run_cli("train --config " + (dir.path / "run.cfg").string() + " --out " + out.string() +
                  " --set lr=0 --seed 5") == 0);

    CHECK(fs::exists(out / "state" / "meta.json"));
    std::string effective = slurp(out / "effective_config.txt");
    // keys absent from the file fall back to the documented defaults
    CHECK(effective.find("t_prelaunch=100") != std::string::npos);
    CHECK(effective.find("s_dash=8") != std::string::npos);
    // the --set flag beats the file value
    CHECK(effective.find("lr=0\n") != std::string::npos);
    CHECK(effective.find("lr=0.05") == std::string::npos);

    // lr = 0 with full-batch steps: flat loss trace
    std::ifstream is(out / "trace.csv");
    REQUIRE(is);
    std::string line;
    std::getline(is, line);
    CHECK(line == "step,loss,val_loss,ltsd_indices");
    double first = -1.0;
    int rows = 0;
    while (std::getline(is, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        std::getline(ss, cell, ',');
        double loss = std::stod(cell);
        if (first < 0)
            first = loss;
        else
            CHECK(loss == doctest::Approx(first).epsilon(1e-12));
        ++rows;
    }
    CHECK(rows == 120);
}

TEST_CASE("train rejects bad configs with exit 2 and divergence with exit 3") {
    TempDir dir("tsdlab_cli_train_bad");
    write_file(dir.path / "broken.cfg", "n=8\nthis line is broken\n");
    CHECK(run_cli("train --config " + (dir.path / "broken.cfg").string()) == 2);

    write_file(dir.path / "unknown.cfg", "n=8\nnot_a_key=1\n");
    CHECK(run_cli("train --config " + (dir.path / "unknown.cfg").string()) == 2);

    // sgd with an absurd learning rate blows up to a non-finite loss
    write_file(dir.path / "diverge.cfg",
               "n=8\nm=10\nplanted_indices=2\nplanted_coeffs=1.0\nn_train=64\nn_val=16\n"
               "lr=1e18\nsteps=20\noptimizer=sgd\nmethod=lora\n");
    CHECK(run_cli("train --config " + (dir.path / "diverge.cfg").string() + " --out " +
                  (dir.path / "dv").string()) == 3);
}

TEST_CASE("trained dash state round-trips through analyze") {
    TempDir dir("tsdlab_cli_analyze");
    write_file(dir.path / "run.cfg",
               "n=12\nm=16\nplanted_indices=4,7,9\nplanted_coeffs=1.4,-1.0,0.8\nnoise_std=0.01\n"
               "n_train=96\nn_val=32\nlr=0.01\nsteps=30\nt_prelaunch=15\ns_dash=4\nmethod=dash\nseed=3\n");
    fs::path out = dir.path / "out";
    REQUIRE(run_cli("train --config " + (dir.path / "run.cfg").string() + " --out " + out.string()) == 0);

    fs::path metrics_out = dir.path / "metrics";
    CHECK(run_cli("analyze --config " + (dir.path / "run.cfg").string() + " --set state_dir=" +
                  (out / "state").string() + " --out " + metrics_out.string()) == 0);
    std::string metrics = slurp(metrics_out / "metrics.csv");
    CHECK(metrics.find("seed,step,layer,precision,recall,dtsd_ltsd,tsd_ltsd,tsd_dtsd,amp_all,amp_ab,amp_dash") == 0);
    // a dash-phase state reports all metric groups: no empty trailing fields
    std::string row = metrics.substr(metrics.find('\n') + 1);
    CHECK(row.find(",,") == std::string::npos);
}

TEST_CASE("analyze on a fresh lora state reports precision and recall only") {
    TempDir dir("tsdlab_cli_analyze_lora");
    write_file(dir.path / "run.cfg",
               "n=8\nm=10\nplanted_indices=2,5\nplanted_coeffs=1.0,-0.7\n"
               "n_train=64\nn_val=16\nlr=0\nsteps=2\nmethod=lora\nseed=3\n");
    fs::path out = dir.path / "out";
    REQUIRE(run_cli("train --config " + (dir.path / "run.cfg").string() + " --out " + out.string()) == 0);
    fs::path metrics_out = dir.path / "metrics";
    CHECK(run_cli("analyze --config " + (dir.path / "run.cfg").string() + " --set state_dir=" +
                  (out / "state").string() + " --out " + metrics_out.string()) == 0);
    std::string metrics = slurp(metrics_out / "metrics.csv");
    std::string row = metrics.substr(metrics.find('\n') + 1);
    // precision/recall present, alignment and amplification fields empty
    int commas = 0;
    for (char c : row)
        if (c == ',') ++commas;
    CHECK(commas == 10);
    CHECK(row.find(",,,,,,\n") != std::string::npos);
}

TEST_CASE("ablate then report: rows survive the merge") {
    TempDir dir("tsdlab_cli_ablate");
    write_file(dir.path / "exp.cfg",
               "n=12\nm=16\nplanted_indices=4,7\nplanted_coeffs=1.2,-0.9\nnoise_std=0.01\n"
               "n_train=96\nn_val=32\nlr=0.01\nsteps=20\nt_prelaunch=10\ns_dash=4\nr=2\n"
               "methods=dash\ndirection_modes=tsd,top\nseeds=1,2\n");
    fs::path out = dir.path / "results";
    CHECK(run_cli("ablate --config " + (dir.path / "exp.cfg").string() + " --out " + out.string()) == 0);

    std::string report = slurp(out / "report.csv");
    long data_rows = std::count(report.begin(), report.end(), '\n') - 1;  // discount the header
    CHECK(data_rows == 4);

    fs::path merged = dir.path / "merged";
    CHECK(run_cli("report --set results_dir=" + out.string() + " --out " + merged.string()) == 0);
    std::string remerged = slurp(merged / "report.csv");
    CHECK(remerged == report);

    // byte-identical rerun of the same ablation
    fs::path out2 = dir.path / "results2";
    CHECK(run_cli("ablate --config " + (dir.path / "exp.cfg").string() + " --out " + out2.string()) == 0);
    CHECK(slurp(out2 / "report.csv") == report);
}

TEST_CASE("report on an empty results dir writes header-only outputs") {
    TempDir dir("tsdlab_cli_report_empty");
    fs::create_directories(dir.path / "nothing_here");
    fs::path merged = dir.path / "merged";
    CHECK(run_cli("report --set results_dir=" + (dir.path / "nothing_here").string() + " --out " +
                  merged.string()) == 0);
    CHECK(slurp(merged / "report.csv") == std::string(tsdlab::kReportCsvHeader) + "\n");
}

TEST_CASE("usage errors exit 2") {
    CHECK(run_cli("definitely-not-a-subcommand") == 2);
    CHECK(run_cli("oracle only-one-arg") == 2);
}

}  // TEST_SUITE
