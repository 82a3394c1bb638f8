// rmtspec: command-line front end for the spectral pipelines.
//
//   rmtspec spectrum      --input panel.csv [--fit]      eigenvalue spectrum + MP overlay (+ VARMA(1,1) fit)
//   rmtspec fit-varma     --input panel.csv              spectrum --fit without the MP overlay
//   rmtspec svd-clean     --input-x X.csv --input-y Y.csv [--lag 1]
//   rmtspec bench-density --family mp|mp2|svd|varma11 ...
//   rmtspec simulate      --generator white|varma ...
//
// Exit codes: 0 success, 1 numeric failure, 2 input error.

#include "rmt/benchmarks.hpp"
#include "rmt/estimators.hpp"
#include "rmt/fitting.hpp"
#include "rmt/io.hpp"
#include "rmt/montecarlo.hpp"
#include "rmt/panel.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace rmt;

namespace {

struct Common {
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string out_dir = ".";
    std::size_t grid_points = 2048;
    std::string epsilon = "auto";
    std::string config;
};

struct PrepFlags {
    std::string orientation = "cols";
    std::string transform = "none";
    double outlier_k = 6.0;
    bool no_standardize = false;
};

struct SpectrumFlags {
    std::string input;
    bool fit = false;
    double mp_scale = 1.0;
    std::size_t multistart = 27;
    std::size_t fit_grid_points = 1024;
    std::size_t max_evals = 300;
};

struct SvdFlags {
    std::string input_x, input_y;
    std::size_t lag = 0;
    std::string margin = "auto";
    double drop_threshold = 1e-10;
    double mp_edge_fraction = 0.0;
};

struct BenchFlags {
    std::string family;
    double r = 0.25, scale = 1.0, n = 0.25, m = 0.25, a0 = 1.0, a1 = 0.0, b1 = 0.0;
    std::optional<double> lo, hi;
};

struct SimFlags {
    std::string generator = "white";
    std::size_t n_series = 0, n_obs = 0;
    double a0 = 1.0, a1 = 0.0, b1 = 0.0;
    std::size_t burn_in = kDefaultBurnIn;
    std::string orientation = "cols";
    std::string output = "panel.csv";
};

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "' for hashing");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

std::optional<double> parse_epsilon(const std::string& s) {
    if (s == "auto") return std::nullopt;
    const auto v = detail::parse_double(s);
    if (!v || !(*v > 0.0)) throw InputError("--epsilon must be 'auto' or a positive number, got '" + s + "'");
    return v;
}

/// Records everything that ends up in run.json.
class Run {
public:
    Run(std::string command, const Common& common) : command_(std::move(command)), common_(common) {
        fs::create_directories(common_.out_dir);
    }

    std::string out(const std::string& name) {
        outputs_.push_back(name);
        return (fs::path(common_.out_dir) / name).string();
    }

    void input(const std::string& path) { inputs_[path] = sha256_file(path); }

    void finish(const CLI::App& sub, const Json& config, double seconds) const {
        Json params = Json::object();
        for (const CLI::Option* opt : sub.get_options()) {
            const std::string name = opt->get_single_name();
            if (name.empty() || name == "help" || name == "config") continue;
            if (opt->get_expected_max() == 0) {
                params[name] = opt->count() > 0 && opt->as<bool>();
            } else if (opt->count() > 0) {
                params[name] = opt->results().back();
            } else {
                params[name] = opt->get_default_str();
            }
        }
        Json hashes = Json::object();
        for (const auto& [path, hash] : inputs_) hashes[path] = hash;
        Json manifest{{"command", command_},
                      {"parameters", params},
                      {"config", config},
                      {"input_hashes", hashes},
                      {"seed", common_.seed},
                      {"outputs", outputs_},
                      {"wall_time_seconds", seconds}};
        write_json((fs::path(common_.out_dir) / "run.json").string(), manifest);
    }

private:
    std::string command_;
    const Common& common_;
    std::vector<std::string> outputs_;
    std::map<std::string, std::string> inputs_;
};

TimePanel load_prepared(const std::string& path, const PrepFlags& prep, Json& cleaning) {
    const auto raw = load_csv(path, parse_orientation(prep.orientation));
    SeriesPrep sp;
    sp.transform = parse_transform(prep.transform);
    if (prep.outlier_k > 0.0) {
        sp.outlier_k = prep.outlier_k;
    } else {
        sp.outlier_k.reset();
    }
    const std::vector<SeriesPrep> specs{sp};
    auto prepared = prepare_panel(raw, specs);
    Json replaced = Json::object();
    for (std::size_t i = 0; i < prepared.replaced.size(); ++i) {
        if (!prepared.replaced[i].empty()) replaced[prepared.panel.labels[i]] = prepared.replaced[i];
    }
    cleaning[path] = Json{{"series", prepared.panel.n_series()},
                          {"observations", prepared.panel.n_obs()},
                          {"transform", to_string(sp.transform.kind)},
                          {"replaced_outliers", replaced}};
    return prepared.panel;
}

void print_fit_table(const FitResult& f) {
    std::printf("VARMA(1,1) fit\n");
    std::printf("  %-12s %12s\n", "parameter", "estimate");
    std::printf("  %-12s %12.6f\n", "a0", f.params.a0);
    std::printf("  %-12s %12.6f\n", "a1", f.params.a1);
    std::printf("  %-12s %12.6f\n", "b1", f.params.b1);
    std::printf("  %-12s %12.3e\n", "CvM", f.objective);
    std::printf("  %-12s %12.4f\n", "KS", f.ks);
    std::printf("  %-12s %12zu\n", "evaluations", f.evaluations);
    std::printf("  %-12s %12s\n", "converged", f.converged ? "yes" : "no");
}

void cmd_spectrum(Run& run, const Common& common, const PrepFlags& prep, const SpectrumFlags& flags, bool fit_only) {
    Json cleaning = Json::object();
    run.input(flags.input);
    TimePanel panel = load_prepared(flags.input, prep, cleaning);
    if (!prep.no_standardize) panel = standardize(panel);
    const double n = static_cast<double>(panel.n_series());
    const double t = static_cast<double>(panel.n_obs());
    const double r = n / t;
    const auto eps = parse_epsilon(common.epsilon);

    const auto spectrum = eigen_spectrum(pearson_cov(panel));
    write_values_csv(run.out("eigenvalues.csv"), spectrum.values, "eigenvalue");
    write_json(run.out("cleaning.json"), cleaning);
    Json summary{{"series", panel.n_series()}, {"observations", panel.n_obs()}, {"r", r},
                 {"largest_eigenvalue", spectrum.values.front()}, {"smallest_eigenvalue", spectrum.values.back()}};

    if (!fit_only) {
        const double top = std::max(spectrum.values.front(), flags.mp_scale * mp_edges(r).second) * 1.05;
        const auto mp = mp_spectral_density(r, linear_grid(0.0, top, common.grid_points), flags.mp_scale);
        write_density_csv(run.out("mp_density.csv"), mp);
        write_json(run.out("mp_atoms.json"), atoms_json(mp));
        summary["mp_scale"] = flags.mp_scale;
        summary["ks_vs_mp"] = ks_distance(spectrum.values, mp);
    }
    if (flags.fit || fit_only) {
        FitOptions opt;
        opt.grid_points = flags.fit_grid_points;
        opt.multistart = flags.multistart;
        opt.max_evals_per_start = flags.max_evals;
        opt.epsilon = eps;
        const auto fit = fit_varma11(spectrum, r, opt);
        print_fit_table(fit);
        write_json(run.out("fit.json"), to_json(fit));
        auto grid = varma11_auto_grid(fit.params, r, common.grid_points);
        if (spectrum.values.front() * 1.05 > grid.back()) grid = linear_grid(0.0, spectrum.values.front() * 1.05, common.grid_points);
        write_density_csv(run.out("varma_density.csv"), varma11_density(grid, fit.params, r, eps));
        summary["fit_ks"] = fit.ks;
    }
    write_json(run.out("summary.json"), summary);
}

void cmd_svd_clean(Run& run, const Common& common, const PrepFlags& prep, const SvdFlags& flags) {
    Json cleaning = Json::object();
    run.input(flags.input_x);
    run.input(flags.input_y);
    const TimePanel x_full = load_prepared(flags.input_x, prep, cleaning);
    const TimePanel y_full = load_prepared(flags.input_y, prep, cleaning);
    if (x_full.n_obs() != y_full.n_obs()) {
        throw InputError("input panels have different lengths after transforms (" + std::to_string(x_full.n_obs()) +
                         " vs " + std::to_string(y_full.n_obs()) + ")");
    }
    const std::size_t t_full = x_full.n_obs();
    if (flags.lag >= t_full) {
        throw InputError("lag " + std::to_string(flags.lag) + " must be smaller than T = " + std::to_string(t_full));
    }
    const std::size_t t = t_full - flags.lag;
    if (t <= std::max(x_full.n_series(), y_full.n_series())) {
        throw InputError("need T > max(N, M) after the lag (T = " + std::to_string(t) + ")");
    }
    // inputs lead outputs by `lag` observations
    TimePanel x = x_full, y = y_full;
    x.values = x_full.values.leftCols(static_cast<Eigen::Index>(t));
    y.values = y_full.values.rightCols(static_cast<Eigen::Index>(t));
    x.time_index.clear();
    y.time_index.clear();
    if (!prep.no_standardize) {
        x = standardize(x);
        y = standardize(y);
    }

    write_matrix_csv(run.out("corr_x.csv"), pearson_cov(x).entries);
    write_matrix_csv(run.out("corr_y.csv"), pearson_cov(y).entries);

    WhitenPolicy policy;
    policy.drop_threshold = flags.drop_threshold;
    if (flags.mp_edge_fraction > 0.0) policy.mp_edge_fraction = flags.mp_edge_fraction;
    const auto xw = whiten(x, policy);
    const auto yw = whiten(y, policy);
    auto diag = [](const WhitenedPanel& w) {
        const auto k = static_cast<Eigen::Index>(w.rank());
        const double dev = (w.values * w.values.transpose() - Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
        std::vector<double> eigs;
        for (const auto& e : w.retained_eigs) eigs.push_back(e.eigenvalue);
        return Json{{"rank", w.rank()}, {"max_gram_deviation", dev}, {"retained_eigenvalues", eigs}};
    };
    write_json(run.out("whitening.json"), Json{{"x", diag(xw)}, {"y", diag(yw)}, {"observations", t}, {"lag", flags.lag}});

    const auto svals = singular_spectrum(cross_matrix(yw, xw));
    write_values_csv(run.out("singular_values.csv"), svals.values, "singular_value");

    const auto bench = SvdBenchParams::from_dims(xw.rank(), yw.rank(), t);
    const auto density = svd_benchmark_density(bench, linear_grid(0.0, 1.0, common.grid_points));
    write_density_csv(run.out("benchmark_density.csv"), density);
    write_json(run.out("benchmark_atoms.json"), atoms_json(density));

    double margin = 0.0;
    if (flags.margin == "auto") {
        margin = default_margin(xw.rank(), yw.rank(), t, {common.seed});
    } else {
        const auto v = detail::parse_double(flags.margin);
        if (!v || *v < 0.0) throw InputError("--margin must be 'auto' or a nonnegative number");
        margin = *v;
    }
    const auto report = flag_significant(svals, bench, margin);
    write_json(run.out("significance.json"), to_json(report));
    std::printf("benchmark edge %.6f, margin %.6f, %zu flagged\n", report.edge, report.margin, report.flagged.size());
    for (const auto& f : report.flagged) std::printf("  #%zu  s = %.6f  excess %.6f\n", f.rank, f.value, f.excess);
}

void cmd_bench_density(Run& run, const Common& common, const BenchFlags& flags) {
    const auto eps = parse_epsilon(common.epsilon);
    auto grid_or = [&](double lo, double hi) {
        return linear_grid(flags.lo.value_or(lo), flags.hi.value_or(hi), common.grid_points);
    };
    SpectralDensity d;
    if (flags.family == "mp") {
        MpParams{flags.r, flags.scale}.validate();
        d = mp_spectral_density(flags.r, grid_or(0.0, 1.05 * flags.scale * mp_edges(flags.r).second), flags.scale);
    } else if (flags.family == "svd") {
        const SvdBenchParams p{flags.n, flags.m};
        p.validate();
        d = svd_benchmark_density(p, grid_or(0.0, 1.0));
    } else if (flags.family == "mp2") {
        const SvdBenchParams p{flags.n, flags.m};
        p.validate();
        d = mp2_density(p, grid_or(0.0, 1.05 * mp2_support_bound(p)), eps);
    } else {
        const Varma11Params p{flags.a0, flags.a1, flags.b1};
        p.validate();
        if (!(flags.r > 0.0 && flags.r < 1.0)) throw InputError("varma11 needs 0 < r < 1");
        const double top = p.symbol_range().second * std::pow(1.0 + std::sqrt(flags.r), 2) * 1.05;
        d = varma11_density(grid_or(0.0, top), p, flags.r, eps);
    }
    write_density_csv(run.out("density.csv"), d);
    write_json(run.out("atoms.json"), atoms_json(d));
    std::printf("%s density: continuous mass %.6f, atom mass %.6f\n", flags.family.c_str(), d.continuous_mass(),
                d.atom_mass());
}

void cmd_simulate(Run& run, const Common& common, const SimFlags& flags) {
    if (flags.n_series < 1 || flags.n_obs < 2) throw InputError("simulate needs --n-series >= 1 and --n-obs >= 2");
    TimePanel panel;
    if (flags.generator == "white") {
        panel = gen_white_panel(flags.n_series, flags.n_obs, {common.seed});
    } else {
        panel = gen_varma_panel(flags.n_series, flags.n_obs, ArmaParams::arma11(flags.a0, flags.a1, flags.b1),
                                flags.burn_in, {common.seed});
    }
    save_csv(panel, run.out(flags.output), parse_orientation(flags.orientation));
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
    sub->add_option("--threads", c.threads, "worker cap (0 = all cores)")->capture_default_str();
    sub->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
    sub->add_option("--grid-points", c.grid_points, "density grid size")->capture_default_str()->check(CLI::Range(2, 1 << 24));
    sub->add_option("--epsilon", c.epsilon, "imaginary offset for resolvent evaluation, or 'auto'")->capture_default_str();
    sub->add_option("--config", c.config, "JSON file of option defaults (flags win)");
}

void add_prep(CLI::App* sub, PrepFlags& p) {
    sub->add_option("--orientation", p.orientation, "rows: one series per row; cols: one series per column")
        ->capture_default_str()
        ->check(CLI::IsMember({"rows", "cols"}));
    sub->add_option("--transform", p.transform, "none | diff | logdiff | logdiff2")->capture_default_str();
    sub->add_option("--outlier-k", p.outlier_k, "replace |x - median| > k IQR by the median (0 disables)")
        ->capture_default_str();
    sub->add_flag("--no-standardize", p.no_standardize, "skip per-series standardization");
}

/// Turns the --config JSON object into "--key=value" arguments placed right
/// after the subcommand name; with take-last semantics explicit flags win.
std::vector<std::string> expand_config(std::vector<std::string> args, Json& config_out) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty() || args.size() < 2) return args;
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config '" + path + "'");
    Json cfg;
    try {
        cfg = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InputError("config '" + path + "' is not valid JSON: " + e.what());
    }
    if (!cfg.is_object()) throw InputError("config must be a JSON object");
    config_out = cfg;
    std::vector<std::string> extra;
    for (const auto& [key, value] : cfg.items()) {
        if (key == "config") throw InputError("config files cannot nest --config");
        std::string text;
        if (value.is_string()) {
            text = value.get<std::string>();
        } else if (value.is_boolean()) {
            text = value.get<bool>() ? "true" : "false";
        } else if (value.is_number()) {
            text = value.dump();
        } else {
            throw InputError("config value for '" + key + "' must be a string, number or boolean");
        }
        extra.push_back("--" + key + "=" + text);
    }
    args.insert(args.begin() + 2, extra.begin(), extra.end());
    return args;
}

int run(int argc, char** argv) {
    const auto t0 = std::chrono::steady_clock::now();
    Json config = nullptr;
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(std::move(args), config);

    CLI::App app{"Random-matrix spectral benchmarks for multivariate time series"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);

    Common common;
    PrepFlags prep;
    SpectrumFlags spec;
    SvdFlags svdf;
    BenchFlags bench;
    SimFlags sim;

    auto add_spectrum_opts = [&](CLI::App* sub) {
        add_common(sub, common);
        add_prep(sub, prep);
        sub->add_option("--input", spec.input, "panel CSV")->required();
        sub->add_option("--multistart", spec.multistart, "number of fit starts from the 3x3x3 grid")
            ->capture_default_str()
            ->check(CLI::Range(1, 27));
        sub->add_option("--fit-grid-points", spec.fit_grid_points, "density grid used inside the fit")
            ->capture_default_str()
            ->check(CLI::Range(64, 1 << 20));
        sub->add_option("--max-evals", spec.max_evals, "objective evaluations per start")->capture_default_str();
    };

    auto* s_spec = app.add_subcommand("spectrum", "eigenvalue spectrum, MP overlay, optional VARMA(1,1) fit");
    add_spectrum_opts(s_spec);
    s_spec->add_flag("--fit", spec.fit, "fit VARMA(1,1) shock parameters");
    s_spec->add_option("--mp-scale", spec.mp_scale, "variance of the MP overlay")->capture_default_str();

    auto* s_fit = app.add_subcommand("fit-varma", "VARMA(1,1) fit of the eigenvalue spectrum only");
    add_spectrum_opts(s_fit);

    auto* s_svd = app.add_subcommand("svd-clean", "whiten, cross-correlate, SVD and flag factors");
    add_common(s_svd, common);
    add_prep(s_svd, prep);
    s_svd->add_option("--input-x", svdf.input_x, "input (explanatory) panel CSV")->required();
    s_svd->add_option("--input-y", svdf.input_y, "output (dependent) panel CSV")->required();
    s_svd->add_option("--lag", svdf.lag, "inputs lead outputs by this many observations")->capture_default_str();
    s_svd->add_option("--margin", svdf.margin, "flagging margin above the band edge, or 'auto'")->capture_default_str();
    s_svd->add_option("--drop-threshold", svdf.drop_threshold, "eigenvalue floor for whitening")->capture_default_str();
    s_svd->add_option("--mp-edge-fraction", svdf.mp_edge_fraction,
                      "also drop eigenvalues below this fraction of the MP lower edge (0 = off)")
        ->capture_default_str();

    auto* s_bench = app.add_subcommand("bench-density", "theoretical density on a grid");
    add_common(s_bench, common);
    s_bench->add_option("--family", bench.family, "mp | mp2 | svd | varma11")
        ->required()
        ->check(CLI::IsMember({"mp", "mp2", "svd", "varma11"}));
    s_bench->add_option("--r", bench.r, "N/T (mp, varma11)")->capture_default_str();
    s_bench->add_option("--scale", bench.scale, "variance (mp)")->capture_default_str();
    s_bench->add_option("--n", bench.n, "N/T of the inputs (svd, mp2)")->capture_default_str();
    s_bench->add_option("--m", bench.m, "M/T of the outputs (svd, mp2)")->capture_default_str();
    s_bench->add_option("--a0", bench.a0, "MA coefficient a0 (varma11)")->capture_default_str();
    s_bench->add_option("--a1", bench.a1, "MA coefficient a1 (varma11)")->capture_default_str();
    s_bench->add_option("--b1", bench.b1, "AR coefficient b1 (varma11)")->capture_default_str();
    s_bench->add_option("--lo", bench.lo, "grid lower bound (default: family-specific)");
    s_bench->add_option("--hi", bench.hi, "grid upper bound (default: family-specific)");

    auto* s_sim = app.add_subcommand("simulate", "synthetic panel");
    add_common(s_sim, common);
    s_sim->add_option("--generator", sim.generator, "white | varma")
        ->capture_default_str()
        ->check(CLI::IsMember({"white", "varma"}));
    s_sim->add_option("--n-series", sim.n_series, "number of series N")->required();
    s_sim->add_option("--n-obs", sim.n_obs, "number of observations T")->required();
    s_sim->add_option("--a0", sim.a0, "MA coefficient a0")->capture_default_str();
    s_sim->add_option("--a1", sim.a1, "MA coefficient a1")->capture_default_str();
    s_sim->add_option("--b1", sim.b1, "AR coefficient b1")->capture_default_str();
    s_sim->add_option("--burn-in", sim.burn_in, "discarded warm-up steps")->capture_default_str();
    s_sim->add_option("--orientation", sim.orientation, "rows | cols")
        ->capture_default_str()
        ->check(CLI::IsMember({"rows", "cols"}));
    s_sim->add_option("--output", sim.output, "panel file name inside --out-dir")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    thread_cap() = common.threads;
    CLI::App* chosen = app.get_subcommands().front();
    Run run(chosen->get_name(), common);
    if (chosen == s_spec) {
        cmd_spectrum(run, common, prep, spec, false);
    } else if (chosen == s_fit) {
        cmd_spectrum(run, common, prep, spec, true);
    } else if (chosen == s_svd) {
        cmd_svd_clean(run, common, prep, svdf);
    } else if (chosen == s_bench) {
        cmd_bench_density(run, common, bench);
    } else {
        cmd_simulate(run, common, sim);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run.finish(*chosen, config, seconds);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 1;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
