// pcap: classify model manifolds as p-parabolic or p-hyperbolic, compute
// conductor capacities along exhaustions, sweep the exponent p, and check
// cutoff-energy decay on submersion totals. Specs come in as strict JSON
// files; results go out as one-record JSON or plot-ready CSV on stdout.
//
// Exit codes: classify 0 = Parabolic, 1 = Hyperbolic, 2 = Inconclusive;
// energy 0 = decays, 1 = does not; every error path exits 3 or higher with
// a message on stderr.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcap/capacity.hpp"
#include "pcap/errors.hpp"
#include "pcap/parabolicity.hpp"
#include "pcap/spec_io.hpp"
#include "pcap/submersion.hpp"

namespace {

using namespace pcap;

// Built-in defaults, identical to the engine-level defaults they override.
constexpr double kDefaultP = 2.0;
constexpr double kDefaultR = 10.0;
constexpr double kDefaultTMax = 1e6;     // ClassifyOptions::T_max
constexpr double kDefaultMargin = 0.05;  // ClassifyOptions::margin
constexpr double kDefaultRelTol = 1e-10; // QuadratureSpec::rel_tol
constexpr long kDefaultGrid = 2000;

std::string join_notes(const std::vector<std::string>& notes) {
    std::string out;
    for (const auto& n : notes) {
        if (!out.empty()) out += "; ";
        out += n;
    }
    return out;
}

// Numeric knobs resolve in a fixed order: explicit flag, then the spec
// file's options block, then (for rel_tol) the PCAP_RELTOL environment
// variable, then the built-in default.
double env_rel_tol_or(double fallback) {
    const char* env = std::getenv("PCAP_RELTOL");
    if (!env || !*env) return fallback;
    char* end = nullptr;
    double v = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(v > 0.0))
        throw SpecError("PCAP_RELTOL must be a positive number");
    return v;
}

double resolve(const CLI::Option* flag, double flag_value,
               const std::optional<double>& spec_value, double fallback) {
    if (flag != nullptr && flag->count() > 0) return flag_value;
    if (spec_value) return *spec_value;
    return fallback;
}

long resolve(const CLI::Option* flag, long flag_value,
             const std::optional<long>& spec_value, long fallback) {
    if (flag != nullptr && flag->count() > 0) return flag_value;
    if (spec_value) return *spec_value;
    return fallback;
}

struct TimingScope {
    std::chrono::steady_clock::time_point start =
        std::chrono::steady_clock::now();
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start)
            .count();
    }
};

void require_warped_product(const LoadedSpec& spec) {
    if (spec.kind != SpecKind::WarpedProduct)
        throw SpecError("expected kind warped_product");
}

void require_submersion(const LoadedSpec& spec) {
    if (spec.kind != SpecKind::Submersion)
        throw SpecError("expected kind submersion");
}

void write_log_data(const std::string& path, const ModelManifold& m,
                    double p, double T_max) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SpecError("cannot open log-data file: " + path);
    out << "t,log_g\n";
    const double r0 = m.inner_radius;
    const int kSamples = 257;
    for (int i = 0; i < kSamples; ++i) {
        double t = r0 * std::pow(T_max / r0,
                                 static_cast<double>(i) / (kSamples - 1));
        out << format_double(t) << ','
            << format_double(log_criterion_integrand(m, p, t)) << '\n';
    }
}

// --- classify ---------------------------------------------------------------

struct ClassifyArgs {
    std::string spec_path;
    double p = kDefaultP;
    double T_max = kDefaultTMax;
    double margin = kDefaultMargin;
    double rel_tol = kDefaultRelTol;
    std::string log_data_path;
    bool timing = false;
    CLI::Option* T_max_flag = nullptr;
    CLI::Option* margin_flag = nullptr;
    CLI::Option* rel_tol_flag = nullptr;
};

int run_classify(const ClassifyArgs& a) {
    TimingScope timer;
    LoadedSpec spec = load_spec_file(a.spec_path);
    ClassifyOptions opts;
    opts.T_max = resolve(a.T_max_flag, a.T_max, spec.options.T_max,
                         kDefaultTMax);
    opts.margin = resolve(a.margin_flag, a.margin, spec.options.margin,
                          kDefaultMargin);
    opts.quad.rel_tol =
        resolve(a.rel_tol_flag, a.rel_tol, spec.options.rel_tol,
                env_rel_tol_or(kDefaultRelTol));

    ResultRecord rec;
    rec.add("operation", "classify");
    Verdict verdict;
    if (spec.kind == SpecKind::WarpedProduct) {
        rec.add("kind", "warped_product");
        rec.add("p", a.p);
        rec.add("T_max", opts.T_max);
        rec.add("margin", opts.margin);
        rec.add("rel_tol", opts.quad.rel_tol);
        verdict = classify(spec.manifold, a.p, opts);
        rec.add("decision", to_string(verdict.decision));
        if (!a.log_data_path.empty())
            write_log_data(a.log_data_path, spec.manifold, a.p, opts.T_max);
    } else {
        // Submersion specs classify through the transfer route: classify
        // the base, certify the fiber-volume bound, and combine.
        rec.add("kind", "submersion");
        rec.add("p", a.p);
        rec.add("T_max", opts.T_max);
        rec.add("margin", opts.margin);
        rec.add("rel_tol", opts.quad.rel_tol);
        ModelManifold base = base_manifold(spec.submersion);
        Verdict base_verdict = classify(base, a.p, opts);
        BoundCheck bound = check_uniform_bound(spec.submersion, opts.T_max);
        verdict = transfer_verdict(spec.submersion, base_verdict, a.p,
                                   opts.T_max);
        rec.add("decision", to_string(verdict.decision));
        rec.add("base_decision", to_string(base_verdict.decision));
        rec.add("fiber_bounded", bound.bounded);
        rec.add("fiber_sup", bound.sup_estimate);
        rec.add("fiber_argmax_t", bound.argmax_t);
        if (!a.log_data_path.empty())
            write_log_data(a.log_data_path, base, a.p, opts.T_max);
    }
    rec.add("partial_integral", verdict.partial_integral);
    rec.add("log_partial_integral", verdict.log_partial_integral);
    rec.add("tail_exponent", verdict.tail_exponent);
    rec.add("tail_ci_low", verdict.tail_ci_low);
    rec.add("tail_ci_high", verdict.tail_ci_high);
    rec.add("notes", join_notes(verdict.evidence_notes));
    if (a.timing) rec.add("wall_time_ms", timer.elapsed_ms());
    std::cout << rec.to_json() << '\n';

    switch (verdict.decision) {
        case Decision::Parabolic: return 0;
        case Decision::Hyperbolic: return 1;
        case Decision::Inconclusive: return 2;
    }
    return 3;
}

// --- capacity ---------------------------------------------------------------

struct CapacityArgs {
    std::string spec_path;
    double p = kDefaultP;
    double R = kDefaultR;
    std::string method = "flux";
    long grid = kDefaultGrid;
    double rel_tol = kDefaultRelTol;
    bool timing = false;
    CLI::Option* grid_flag = nullptr;
    CLI::Option* rel_tol_flag = nullptr;
};

int run_capacity(const CapacityArgs& a) {
    TimingScope timer;
    LoadedSpec spec = load_spec_file(a.spec_path);
    require_warped_product(spec);
    QuadratureSpec quad;
    quad.rel_tol = resolve(a.rel_tol_flag, a.rel_tol, spec.options.rel_tol,
                           env_rel_tol_or(kDefaultRelTol));
    long grid = resolve(a.grid_flag, a.grid, spec.options.grid_size,
                        kDefaultGrid);

    ResultRecord rec;
    rec.add("operation", "capacity");
    rec.add("p", a.p);
    rec.add("R", a.R);
    rec.add("method", a.method);
    if (a.method == "flux") {
        CapacityEstimate est = flux_capacity(spec.manifold, a.p, a.R, quad);
        rec.add("value", est.value);
        rec.add("log_value", est.log_value);
        rec.add("error_bound", est.error_bound);
    } else if (a.method == "variational") {
        CapacityEstimate est =
            variational_capacity(spec.manifold, a.p, a.R, grid);
        rec.add("grid_size", static_cast<long long>(grid));
        rec.add("value", est.value);
        rec.add("log_value", est.log_value);
        rec.add("error_bound", est.error_bound);
    } else {
        CapacityEstimate flux = flux_capacity(spec.manifold, a.p, a.R, quad);
        CapacityEstimate vari =
            variational_capacity(spec.manifold, a.p, a.R, grid);
        rec.add("grid_size", static_cast<long long>(grid));
        rec.add("flux_value", flux.value);
        rec.add("flux_log_value", flux.log_value);
        rec.add("flux_error_bound", flux.error_bound);
        rec.add("variational_value", vari.value);
        rec.add("variational_log_value", vari.log_value);
        rec.add("variational_error_bound", vari.error_bound);
        rec.add("rel_gap",
                std::fabs(std::expm1(vari.log_value - flux.log_value)));
    }
    if (a.timing) rec.add("wall_time_ms", timer.elapsed_ms());
    std::cout << rec.to_json() << '\n';
    return 0;
}

// --- sweep ------------------------------------------------------------------

std::vector<double> parse_p_grid(const std::string& text) {
    double a = 0.0, b = 0.0, step = 0.0;
    std::size_t c1 = text.find(':');
    std::size_t c2 = c1 == std::string::npos ? std::string::npos
                                             : text.find(':', c1 + 1);
    auto number = [&](std::size_t from, std::size_t to) {
        std::string part = text.substr(from, to - from);
        char* end = nullptr;
        double v = std::strtod(part.c_str(), &end);
        if (part.empty() || end != part.c_str() + part.size())
            throw SpecError("p grid must look like a:b:step");
        return v;
    };
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw SpecError("p grid must look like a:b:step");
    a = number(0, c1);
    b = number(c1 + 1, c2);
    step = number(c2 + 1, text.size());
    if (!(step > 0.0)) throw SpecError("p grid step must be positive");
    std::vector<double> grid;
    // Tolerate the last point landing a rounding error past b.
    for (double v = a; v <= b + step * 1e-9; v += step) grid.push_back(v);
    if (grid.empty()) throw SpecError("p grid is empty");
    return grid;
}

struct SweepArgs {
    std::string spec_path;
    std::string p_grid;
    double T_max = kDefaultTMax;
    double margin = kDefaultMargin;
    double rel_tol = kDefaultRelTol;
    CLI::Option* T_max_flag = nullptr;
    CLI::Option* margin_flag = nullptr;
    CLI::Option* rel_tol_flag = nullptr;
};

int run_sweep(const SweepArgs& a) {
    LoadedSpec spec = load_spec_file(a.spec_path);
    require_warped_product(spec);
    ClassifyOptions opts;
    opts.T_max = resolve(a.T_max_flag, a.T_max, spec.options.T_max,
                         kDefaultTMax);
    opts.margin = resolve(a.margin_flag, a.margin, spec.options.margin,
                          kDefaultMargin);
    opts.quad.rel_tol =
        resolve(a.rel_tol_flag, a.rel_tol, spec.options.rel_tol,
                env_rel_tol_or(kDefaultRelTol));

    SweepResult result = sweep_p(spec.manifold, parse_p_grid(a.p_grid), opts);
    std::cout
        << "p,decision,tail_exponent,tail_ci_low,tail_ci_high,partial_integral\n";
    for (const SweepEntry& row : result.rows) {
        std::cout << format_double(row.p) << ','
                  << to_string(row.verdict.decision) << ','
                  << format_double(row.verdict.tail_exponent) << ','
                  << format_double(row.verdict.tail_ci_low) << ','
                  << format_double(row.verdict.tail_ci_high) << ','
                  << format_double(row.verdict.partial_integral) << '\n';
    }
    if (result.critical_p)
        std::cout << "# critical_p = " << format_double(*result.critical_p)
                  << '\n';
    else
        std::cout << "# critical_p = none (" << result.note << ")\n";
    return 0;
}

// --- energy -----------------------------------------------------------------

std::vector<long> parse_schedule(const std::string& text) {
    std::vector<long> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        std::string part = text.substr(pos, next - pos);
        char* end = nullptr;
        long v = std::strtol(part.c_str(), &end, 10);
        if (part.empty() || end != part.c_str() + part.size())
            throw SpecError("schedule must be a comma-separated integer list");
        out.push_back(v);
        pos = next + 1;
        if (next == text.size()) break;
    }
    return out;
}

struct EnergyArgs {
    std::string spec_path;
    double p = kDefaultP;
    std::string schedule = "2,4,16,256";
    std::string cutoff = "optimal";
    double T_max = kDefaultTMax;
    double rel_tol = kDefaultRelTol;
    CLI::Option* rel_tol_flag = nullptr;
};

int run_energy(const EnergyArgs& a) {
    LoadedSpec spec = load_spec_file(a.spec_path);
    require_submersion(spec);
    ClassifyOptions opts;
    opts.T_max = spec.options.T_max.value_or(kDefaultTMax);
    opts.quad.rel_tol =
        resolve(a.rel_tol_flag, a.rel_tol, spec.options.rel_tol,
                env_rel_tol_or(kDefaultRelTol));

    CutoffFamily family;
    family.kind = a.cutoff == "log" ? CutoffKind::LogCutoff
                                    : CutoffKind::CapacityOptimal;
    std::vector<long> schedule = parse_schedule(a.schedule);
    DecayCheck check = verify_decay(spec.submersion, a.p, schedule, family,
                                    opts);

    std::cout << "j,energy\n";
    for (std::size_t i = 0; i < schedule.size(); ++i)
        std::cout << schedule[i] << ',' << format_double(check.energies[i])
                  << '\n';
    std::cout << "# decays = " << (check.decays ? "true" : "false") << '\n';
    for (const std::string& note : check.notes)
        std::cout << "# " << note << '\n';
    return check.decays ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Potential-theory toolkit for rotationally symmetric manifolds:\n"
        "p-capacities, parabolic/hyperbolic classification, exponent sweeps,\n"
        "and cutoff-energy decay on submersion total spaces."};
    app.require_subcommand(1);

    ClassifyArgs ca;
    CLI::App* classify = app.add_subcommand(
        "classify", "Decide p-parabolic vs p-hyperbolic for one spec");
    classify->add_option("spec", ca.spec_path, "spec file (JSON)")->required();
    classify->add_option("--p", ca.p, "exponent p > 1 (default 2)");
    ca.T_max_flag = classify->add_option(
        "--T-max", ca.T_max, "upper end of the exhaustion (default 1e6)");
    ca.margin_flag = classify->add_option(
        "--margin", ca.margin,
        "dead zone around the critical tail exponent (default 0.05)");
    ca.rel_tol_flag = classify->add_option(
        "--rel-tol", ca.rel_tol,
        "quadrature relative tolerance (default 1e-10)");
    classify->add_option("--log-data", ca.log_data_path,
                         "write (t, log g) samples to this file");
    classify->add_flag("--timing", ca.timing,
                       "append wall_time_ms to the record");

    CapacityArgs pa;
    CLI::App* capacity = app.add_subcommand(
        "capacity", "Capacity of the core within radius R, one spec");
    capacity->add_option("spec", pa.spec_path, "spec file (JSON)")->required();
    capacity->add_option("--p", pa.p, "exponent p > 1 (default 2)");
    capacity->add_option("--R", pa.R, "outer radius (default 10)");
    capacity
        ->add_option("--method", pa.method,
                     "flux | variational | both (default flux)")
        ->check(CLI::IsMember({"flux", "variational", "both"}));
    pa.grid_flag = capacity->add_option(
        "--grid", pa.grid, "variational grid cells (default 2000)");
    pa.rel_tol_flag = capacity->add_option(
        "--rel-tol", pa.rel_tol,
        "quadrature relative tolerance (default 1e-10)");
    capacity->add_flag("--timing", pa.timing,
                       "append wall_time_ms to the record");

    SweepArgs sa;
    CLI::App* sweep = app.add_subcommand(
        "sweep", "Classify across an exponent grid; CSV + critical p");
    sweep->add_option("spec", sa.spec_path, "spec file (JSON)")->required();
    sweep->add_option("--p-grid", sa.p_grid, "exponent grid as a:b:step")
        ->required();
    sa.T_max_flag = sweep->add_option(
        "--T-max", sa.T_max, "upper end of the exhaustion (default 1e6)");
    sa.margin_flag = sweep->add_option(
        "--margin", sa.margin,
        "dead zone around the critical tail exponent (default 0.05)");
    sa.rel_tol_flag = sweep->add_option(
        "--rel-tol", sa.rel_tol,
        "quadrature relative tolerance (default 1e-10)");

    EnergyArgs ea;
    CLI::App* energy = app.add_subcommand(
        "energy", "Cutoff energies E_j on a submersion total space");
    energy->add_option("spec", ea.spec_path, "spec file (JSON)")->required();
    energy->add_option("--p", ea.p, "exponent p > 1 (default 2)");
    energy->add_option("--schedule", ea.schedule,
                       "comma-separated j values (default 2,4,16,256)");
    energy
        ->add_option("--cutoff", ea.cutoff,
                     "optimal | log cutoff family (default optimal)")
        ->check(CLI::IsMember({"optimal", "log"}));
    ea.rel_tol_flag = energy->add_option(
        "--rel-tol", ea.rel_tol,
        "quadrature relative tolerance (default 1e-10)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (classify->parsed()) return run_classify(ca);
        if (capacity->parsed()) return run_capacity(pa);
        if (sweep->parsed()) return run_sweep(sa);
        if (energy->parsed()) return run_energy(ea);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    std::cerr << "error: no subcommand given\n";
    return 3;
}
