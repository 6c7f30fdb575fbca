// End-to-end tests: run the actual binary (path injected as PCAP_BIN) against
// the checked-in spec files (directory injected as PCAP_SPEC_DIR) and assert
// on exit codes, stdout bytes, and stderr messages.

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "doctest.h"
#include "pcap/spec_io.hpp"

using namespace pcap;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Runs the binary through /bin/sh with stdout/stderr captured to temp files.
// `env_prefix` lets a test inject environment assignments; by default the
// tolerance variable is scrubbed so ambient state cannot leak in.
CliResult run_cli(const std::string& args,
                  const std::string& env_prefix = "env -u PCAP_RELTOL") {
    static int counter = 0;
    std::string tag = std::to_string(::getpid()) + "_" +
                      std::to_string(++counter);
    std::string out_path = "/tmp/pcap_cli_out_" + tag;
    std::string err_path = "/tmp/pcap_cli_err_" + tag;
    std::string cmd = env_prefix + " " + PCAP_BIN + " " + args + " > " +
                      out_path + " 2> " + err_path;
    int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    std::remove(out_path.c_str());
    std::remove(err_path.c_str());
    return r;
}

std::string spec(const std::string& name) {
    return std::string(PCAP_SPEC_DIR) + "/" + name;
}

bool mentions(const std::string& text, const std::string& needle) {
    return text.find(needle) != std::string::npos;
}

// Pulls one field out of a single-record JSON line, as a double.
double num_field(const ResultRecord& rec, const std::string& key) {
    for (const auto& [k, v] : rec.entries()) {
        if (k != key) continue;
        if (std::holds_alternative<double>(v)) return std::get<double>(v);
        if (std::holds_alternative<long long>(v))
            return static_cast<double>(std::get<long long>(v));
    }
    FAIL("missing numeric field " << key);
    return 0.0;
}

std::string str_field(const ResultRecord& rec, const std::string& key) {
    for (const auto& [k, v] : rec.entries())
        if (k == key && std::holds_alternative<std::string>(v))
            return std::get<std::string>(v);
    FAIL("missing string field " << key);
    return "";
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::string write_temp_spec(const std::string& body) {
    static int counter = 0;
    std::string path = "/tmp/pcap_cli_spec_" + std::to_string(::getpid()) +
                       "_" + std::to_string(++counter) + ".json";
    std::ofstream out(path);
    out << body;
    return path;
}

}  // namespace

TEST_CASE("classify exit codes follow the verdict") {
    CliResult hyper = run_cli("classify " + spec("r3.json") + " --p 2");
    CHECK(hyper.exit_code == 1);
    ResultRecord rec = ResultRecord::from_json(hyper.out);
    CHECK(str_field(rec, "decision") == "Hyperbolic");
    CHECK(num_field(rec, "p") == 2.0);
    CHECK(num_field(rec, "tail_exponent") == doctest::Approx(-2.0));

    CliResult para = run_cli("classify " + spec("r2.json") + " --p 2");
    CHECK(para.exit_code == 0);
    CHECK(str_field(ResultRecord::from_json(para.out), "decision") ==
          "Parabolic");

    CliResult funnel = run_cli("classify " + spec("funnel.json") + " --p 3");
    CHECK(funnel.exit_code == 1);
}

TEST_CASE("classify runs submersion specs through the transfer route") {
    CliResult r = run_cli("classify " + spec("plane-unit-fibers.json") +
                          " --p 2");
    CHECK(r.exit_code == 0);
    ResultRecord rec = ResultRecord::from_json(r.out);
    CHECK(str_field(rec, "kind") == "submersion");
    CHECK(str_field(rec, "decision") == "Parabolic");
    CHECK(str_field(rec, "base_decision") == "Parabolic");
    CHECK(num_field(rec, "fiber_sup") == doctest::Approx(1.0));
    CHECK(mentions(str_field(rec, "notes"),
                   "transfers from the parabolic base"));
}

TEST_CASE("spec file problems exit at 3 or above and name the offender") {
    std::string unknown_key = write_temp_spec(
        R"json({"kind": "warped_product", "base_dim": 2,
                "sigma": "t", "sigm": 3})json");
    CliResult r = run_cli("classify " + unknown_key);
    CHECK(r.exit_code >= 3);
    CHECK(mentions(r.err, "sigm"));
    std::remove(unknown_key.c_str());

    std::string malformed = write_temp_spec("{oops");
    r = run_cli("classify " + malformed);
    CHECK(r.exit_code >= 3);
    CHECK(mentions(r.err, "not valid JSON"));
    std::remove(malformed.c_str());

    r = run_cli("classify /tmp/no_such_spec_file_5412.json");
    CHECK(r.exit_code >= 3);
    CHECK(mentions(r.err, "cannot open spec file"));

    r = run_cli("classify");
    CHECK(r.exit_code >= 3);
}

TEST_CASE("capacity emits both estimates and their gap") {
    CliResult r = run_cli("capacity " + spec("r3.json") +
                          " --p 2 --R 10 --method both --grid 2000");
    CHECK(r.exit_code == 0);
    ResultRecord rec = ResultRecord::from_json(r.out);
    CHECK(num_field(rec, "flux_value") ==
          doctest::Approx(13.962634015954637).epsilon(1e-8));
    CHECK(num_field(rec, "rel_gap") < 1e-3);
    CHECK(num_field(rec, "grid_size") == 2000.0);
    CHECK(num_field(rec, "variational_value") >=
          num_field(rec, "flux_value") * (1.0 - 1e-9));
}

TEST_CASE("capacity of a constant flux density is that constant") {
    CliResult r = run_cli("capacity " + spec("constant-flux.json") +
                          " --p 2 --R 2");
    CHECK(r.exit_code == 0);
    ResultRecord rec = ResultRecord::from_json(r.out);
    CHECK(num_field(rec, "value") == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("capacity rejects bad exponents and wrong spec kinds") {
    CliResult r = run_cli("capacity " + spec("r3.json") + " --p 0.5");
    CHECK(r.exit_code >= 3);
    CHECK(mentions(r.err, "p must exceed 1"));

    r = run_cli("capacity " + spec("plane-unit-fibers.json") + " --p 2");
    CHECK(r.exit_code >= 3);
    CHECK(mentions(r.err, "expected kind warped_product"));

    r = run_cli("sweep " + spec("plane-unit-fibers.json") +
                " --p-grid 2:3:0.5");
    CHECK(r.exit_code >= 3);
    CHECK(mentions(r.err, "expected kind warped_product"));

    r = run_cli("capacity " + spec("r3.json") + " --method nonsense");
    CHECK(r.exit_code >= 3);
}

TEST_CASE("sweep prints plot-ready CSV plus the critical exponent") {
    CliResult r = run_cli("sweep " + spec("r3.json") + " --p-grid 1.5:4:0.5");
    CHECK(r.exit_code == 0);
    std::vector<std::string> lines = lines_of(r.out);
    REQUIRE(lines.size() == 8);  // header + 6 rows + critical line
    CHECK(lines[0] ==
          "p,decision,tail_exponent,tail_ci_low,tail_ci_high,partial_integral");
    CHECK(mentions(lines[1], "1.5,Hyperbolic,"));
    CHECK(mentions(lines[4], "3.0,Parabolic,"));
    CHECK(lines[7].rfind("# critical_p = ", 0) == 0);
    double critical = std::strtod(lines[7].c_str() + 15, nullptr);
    CHECK(critical >= 2.5);
    CHECK(critical <= 3.0);

    // Rows round-trip through the CSV reader.
    ResultRecord row = ResultRecord::from_csv(lines[0], lines[2]);
    CHECK(num_field(row, "p") == 2.0);
    CHECK(str_field(row, "decision") == "Hyperbolic");
}

TEST_CASE("sweep reports an all-parabolic grid without a transition") {
    CliResult r = run_cli("sweep " + spec("gauss-warped-sphere.json") +
                          " --p-grid 1.5:6:0.5");
    CHECK(r.exit_code == 0);
    std::vector<std::string> lines = lines_of(r.out);
    REQUIRE(lines.size() == 12);  // header + 10 rows + note line
    for (std::size_t i = 1; i + 1 < lines.size(); ++i)
        CHECK(mentions(lines[i], ",Parabolic,"));
    CHECK(lines.back() ==
          "# critical_p = none (Parabolic throughout the grid; no transition)");
}

TEST_CASE("sweep rejects empty or malformed grids") {
    CliResult r = run_cli("sweep " + spec("r3.json") + " --p-grid 5:4:0.5");
    CHECK(r.exit_code >= 3);
    CHECK(mentions(r.err, "p grid is empty"));

    r = run_cli("sweep " + spec("r3.json") + " --p-grid 1.5-4-0.5");
    CHECK(r.exit_code >= 3);
    CHECK(mentions(r.err, "a:b:step"));

    r = run_cli("sweep " + spec("r3.json") + " --p-grid 2:3:-1");
    CHECK(r.exit_code >= 3);

    r = run_cli("sweep " + spec("r3.json") + " --p-grid 0.5:0.9:0.1");
    CHECK(r.exit_code >= 3);
    CHECK(mentions(r.err, "p must exceed 1"));
}

TEST_CASE("energy reproduces the planar closed form and exits by decay") {
    CliResult r = run_cli("energy " + spec("plane-unit-fibers.json") +
                          " --p 2 --schedule 2,4,16,256");
    CHECK(r.exit_code == 0);
    std::vector<std::string> lines = lines_of(r.out);
    REQUIRE(lines.size() >= 6);
    CHECK(lines[0] == "j,energy");
    const double two_pi = 6.2831853071795865;
    const long js[] = {2, 4, 16, 256};
    for (int i = 0; i < 4; ++i) {
        ResultRecord row = ResultRecord::from_csv(lines[0], lines[1 + i]);
        CHECK(num_field(row, "j") == static_cast<double>(js[i]));
        CHECK(num_field(row, "energy") ==
              doctest::Approx(two_pi / std::log(static_cast<double>(js[i])))
                  .epsilon(1e-6));
    }
    CHECK(lines[5] == "# decays = true");

    // The classical log cutoff gives the same energies on this base.
    CliResult log_cutoff =
        run_cli("energy " + spec("plane-unit-fibers.json") +
                " --p 2 --schedule 2,4,16,256 --cutoff log");
    CHECK(log_cutoff.exit_code == 0);
    std::vector<std::string> log_lines = lines_of(log_cutoff.out);
    for (int i = 0; i < 4; ++i) {
        ResultRecord a = ResultRecord::from_csv(lines[0], lines[1 + i]);
        ResultRecord b =
            ResultRecord::from_csv(log_lines[0], log_lines[1 + i]);
        CHECK(num_field(a, "energy") ==
              doctest::Approx(num_field(b, "energy")).epsilon(1e-9));
    }
}

TEST_CASE("energy handles collapsing fibers and input validation") {
    CliResult r = run_cli("energy " + spec("gaussian-fibers.json") +
                          " --p 2 --schedule 2,4,8,16");
    CHECK(r.exit_code == 0);
    CHECK(mentions(r.out, "# decays = true"));

    r = run_cli("energy " + spec("r3.json") + " --p 2");
    CHECK(r.exit_code >= 3);
    CHECK(mentions(r.err, "expected kind submersion"));

    r = run_cli("energy " + spec("plane-unit-fibers.json") + " --schedule 2");
    CHECK(r.exit_code >= 3);
    CHECK(mentions(r.err, "at least 3"));

    r = run_cli("energy " + spec("plane-unit-fibers.json") +
                " --schedule '2;4;8'");
    CHECK(r.exit_code >= 3);
    CHECK(mentions(r.err, "comma-separated"));
}

TEST_CASE("identical invocations produce byte-identical stdout") {
    const std::string invocations[] = {
        "classify " + spec("r3.json") + " --p 2",
        "classify " + spec("gaussian-fibers.json") + " --p 2",
        "capacity " + spec("r3.json") + " --p 2 --R 10 --method both",
        "sweep " + spec("r3.json") + " --p-grid 1.5:3:0.5",
        "energy " + spec("plane-unit-fibers.json") + " --p 2 --schedule 2,4,16",
    };
    for (const std::string& inv : invocations) {
        CliResult a = run_cli(inv);
        CliResult b = run_cli(inv);
        INFO("invocation: " << inv);
        CHECK(a.out == b.out);
        CHECK(a.exit_code == b.exit_code);
    }
}

TEST_CASE("timing is emitted only on request") {
    CliResult plain = run_cli("classify " + spec("r2.json") + " --p 2");
    CHECK(!mentions(plain.out, "wall_time_ms"));
    CliResult timed = run_cli("classify " + spec("r2.json") +
                              " --p 2 --timing");
    CHECK(mentions(timed.out, "wall_time_ms"));
}

TEST_CASE("quadrature tolerance resolves flag, then spec, then environment") {
    const std::string args = "capacity " + spec("r3.json") + " --p 2 --R 10";

    CliResult defaults = run_cli(args);
    double tight =
        num_field(ResultRecord::from_json(defaults.out), "error_bound");

    // A loose environment tolerance loosens the reported bound.
    CliResult env = run_cli(args, "env PCAP_RELTOL=1e-3");
    double loose = num_field(ResultRecord::from_json(env.out), "error_bound");
    CHECK(loose > tight * 100);

    // An explicit flag beats the environment.
    CliResult flagged = run_cli(args + " --rel-tol 1e-10",
                                "env PCAP_RELTOL=1e-3");
    CHECK(num_field(ResultRecord::from_json(flagged.out), "error_bound") ==
          doctest::Approx(tight));

    // A spec-file options block beats the environment too.
    std::string with_options = write_temp_spec(
        R"json({"kind": "warped_product", "base_dim": 3, "sigma": "t",
                "options": {"rel_tol": 1e-5}})json");
    CliResult from_spec = run_cli("capacity " + with_options +
                                      " --p 2 --R 10",
                                  "env PCAP_RELTOL=1e-3");
    double spec_bound =
        num_field(ResultRecord::from_json(from_spec.out), "error_bound");
    CHECK(spec_bound < loose);
    CHECK(spec_bound > tight);
    std::remove(with_options.c_str());

    CliResult bad_env = run_cli(args, "env PCAP_RELTOL=bogus");
    CHECK(bad_env.exit_code >= 3);
    CHECK(mentions(bad_env.err, "PCAP_RELTOL"));
}

TEST_CASE("log-data writes plottable samples of the criterion integrand") {
    std::string path = "/tmp/pcap_cli_logdata_" +
                       std::to_string(::getpid()) + ".csv";
    CliResult r = run_cli("classify " + spec("r3.json") + " --p 2 --log-data " +
                          path);
    CHECK(r.exit_code == 1);  // still Hyperbolic
    std::vector<std::string> lines = lines_of(slurp(path));
    REQUIRE(lines.size() == 258);  // header + 257 samples
    CHECK(lines[0] == "t,log_g");
    ResultRecord first = ResultRecord::from_csv(lines[0], lines[1]);
    CHECK(num_field(first, "t") == 1.0);
    // g(t) = 1/(4 pi t^2) for this model; check the left endpoint.
    CHECK(num_field(first, "log_g") ==
          doctest::Approx(-std::log(4.0 * 3.1415926535897931)));
    ResultRecord last = ResultRecord::from_csv(lines[0], lines[257]);
    CHECK(num_field(last, "t") == doctest::Approx(1e6));
    std::remove(path.c_str());
}
