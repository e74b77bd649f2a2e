#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "superatom/correlations.hpp"
#include "superatom/errors.hpp"
#include "superatom/io.hpp"

using namespace superatom;
using json = nlohmann::json;

namespace {

template <class T>
const T& need_section(const std::optional<T>& s, const char* name,
                      const char* subcommand) {
    if (!s) {
        throw_config(std::string("section '") + name + "' is required by " +
                     subcommand);
    }
    return *s;
}

std::string out_path(const RunConfig& cfg, const std::string& file) {
    return (std::filesystem::path(cfg.output.directory) / file).string();
}

// Sample grids may begin after the pulse onset; the evolution still has to
// start there, so the onset is spliced in and skipped on output.
struct SplicedGrid {
    std::vector<double> times;
    std::size_t offset = 0;
};

SplicedGrid splice_onset(const std::vector<double>& times,
                         const PulseSpec& pulse) {
    SplicedGrid g;
    if (!times.empty() && times.front() > pulse.support_begin()) {
        g.times.push_back(pulse.support_begin());
        g.offset = 1;
    }
    g.times.insert(g.times.end(), times.begin(), times.end());
    return g;
}

std::vector<std::string> run_simulate(const RunConfig& cfg) {
    const SuperatomParams& p = need_section(cfg.params, "params", "simulate");
    const PulseSpec& pulse = need_section(cfg.pulse, "pulse", "simulate");
    const GridSpec& grid = need_section(cfg.grid, "grid", "simulate");

    const std::vector<double> times = grid.times();
    const SplicedGrid sg = splice_onset(times, pulse);
    const Trajectory traj = evolve(p, pulse, sg.times);
    const ObservableTrace obs = observables(traj, p, pulse);

    Table t;
    t.comments = {"manifest=simulate_manifest.json"};
    t.columns = {"time_us", "in_rate",  "out_rate",   "delta_rate",
                 "rho_ww",  "rho_dd",   "rydberg_pop"};
    for (std::size_t i = sg.offset; i < sg.times.size(); ++i) {
        t.rows.push_back({obs.times_us[i], obs.in_rate[i], obs.out_rate[i],
                          obs.delta_rate[i], obs.rho_ww[i], obs.rho_dd[i],
                          obs.rydberg_population[i]});
    }
    const std::string file = "simulate_trace." + cfg.output.format;
    write_table(out_path(cfg, file), t, cfg.output.format);
    return {file};
}

std::vector<std::string> run_correlate(const RunConfig& cfg) {
    const SuperatomParams& p = need_section(cfg.params, "params", "correlate");
    const PulseSpec& pulse = need_section(cfg.pulse, "pulse", "correlate");
    const GridSpec& grid = need_section(cfg.grid, "grid", "correlate");
    const CorrelateConfig cc = cfg.correlate.value_or(CorrelateConfig{});

    const std::vector<double> times =
        GridSpec{grid.t_start, grid.t_end, cc.n_grid}.times();
    G2Options opt;
    opt.denominator_floor = cc.floor;
    const CorrelationGrid res = g2_matrix(p, pulse, times, opt);

    const std::string manifest = "manifest=correlate_manifest.json";
    std::vector<std::string> axis_cols{"time_us"};
    for (double s : times) axis_cols.push_back(format_double(s));

    Table g2;
    g2.comments = {manifest,
                   "hermiticity_defect=" +
                       format_double(res.hermiticity_defect),
                   "propagations=" + std::to_string(res.propagation_count)};
    g2.columns = axis_cols;
    Table valid;
    valid.comments = {manifest, "1 = denominator above the floor"};
    valid.columns = axis_cols;
    const auto n = static_cast<Eigen::Index>(times.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> grow{times[static_cast<std::size_t>(i)]};
        std::vector<double> vrow{times[static_cast<std::size_t>(i)]};
        for (Eigen::Index j = 0; j < n; ++j) {
            grow.push_back(res.g2(i, j));
            vrow.push_back(res.valid(i, j) ? 1.0 : 0.0);
        }
        g2.rows.push_back(std::move(grow));
        valid.rows.push_back(std::move(vrow));
    }
    Table intensity;
    intensity.comments = {manifest};
    intensity.columns = {"time_us", "intensity"};
    for (std::size_t i = 0; i < times.size(); ++i)
        intensity.rows.push_back({times[i], res.intensity[i]});

    const std::string ext = "." + cfg.output.format;
    const std::vector<std::string> files{"correlate_g2" + ext,
                                         "correlate_valid" + ext,
                                         "correlate_intensity" + ext};
    write_table(out_path(cfg, files[0]), g2, cfg.output.format);
    write_table(out_path(cfg, files[1]), valid, cfg.output.format);
    write_table(out_path(cfg, files[2]), intensity, cfg.output.format);
    return files;
}

std::vector<std::string> run_phase_diagram(const RunConfig& cfg) {
    const PhaseDiagramSpec& spec =
        need_section(cfg.phase_diagram, "phase_diagram", "phase-diagram");
    const VisibilityMap map = phase_diagram(spec);

    const std::string manifest = "manifest=phase_diagram_manifest.json";
    Table grid;
    grid.comments = {manifest, "visibility of the first Rabi maximum"};
    grid.columns = {"lambda", "nph", "visibility"};
    const std::size_t n_nph = map.spec.nph_grid.size();
    for (std::size_t i = 0; i < map.spec.lambda_grid.size(); ++i)
        for (std::size_t j = 0; j < n_nph; ++j)
            grid.rows.push_back({map.spec.lambda_grid[i],
                                 map.spec.nph_grid[j],
                                 map.values[i * n_nph + j]});

    Table curves;
    curves.comments = {manifest};
    curves.columns = {"lambda", "overdamped_nph", "crossover_nph"};
    for (std::size_t i = 0; i < map.spec.lambda_grid.size(); ++i)
        curves.rows.push_back({map.spec.lambda_grid[i],
                               map.overdamped_nph[i], map.crossover_nph[i]});

    const std::string ext = "." + cfg.output.format;
    const std::vector<std::string> files{"phase_diagram" + ext,
                                         "phase_diagram_curves" + ext};
    write_table(out_path(cfg, files[0]), grid, cfg.output.format);
    write_table(out_path(cfg, files[1]), curves, cfg.output.format);
    return files;
}

std::vector<std::string> run_coupling(const RunConfig& cfg) {
    const CouplingConfig& cc =
        need_section(cfg.coupling, "coupling", "coupling");
    const DerivedCoupling d = derive_coupling(cc.cloud, cc.beam);

    json doc;
    doc["manifest"] = "coupling_manifest.json";
    doc["mode_area_um2"] = d.mode_area;
    doc["n_bar_closed_form"] = d.n_bar.closed_form;
    doc["n_bar_quadrature"] = d.n_bar.quadrature;
    doc["closed_form_reliable"] = d.n_bar.closed_form_reliable;
    doc["g_collective"] = d.coupling.g_collective;
    doc["kappa_forward_per_us"] = d.coupling.kappa_forward;
    doc["two_photon_reduction"] = d.rates.reduction;
    doc["kappa_eff_per_us"] = d.rates.kappa;
    doc["gamma_raman_per_us"] = d.rates.gamma_raman;
    doc["beta_predicted"] = d.beta_predicted;
    doc["theta_max_rad"] = d.direction.theta_max_rad;
    doc["backscatter_log10"] = d.direction.backscatter_log10;
    doc["blockade_single_excitation"] = d.blockade.single_excitation;
    doc["blockade_margin_z_um"] = d.blockade.margin_z;
    doc["blockade_margin_r_um"] = d.blockade.margin_r;
    doc["warnings"] = d.warnings;

    const std::string file = "coupling.json";
    write_text_atomic(out_path(cfg, file), doc.dump(2) + "\n");
    return {file};
}

std::vector<std::string> run_fit(const RunConfig& cfg,
                                 const std::string& config_path,
                                 std::uint64_t seed) {
    const FitConfig& fc = need_section(cfg.fit, "fit", "fit");

    FitProblem prob;
    const std::filesystem::path base =
        std::filesystem::path(config_path).parent_path();
    for (const std::string& file : fc.trace_files) {
        std::filesystem::path p(file);
        if (p.is_relative()) p = base / p;
        prob.traces.push_back(read_trace_csv(p.string()));
    }
    prob.free = fc.free;
    prob.fixed = fc.fixed;
    prob.photon_scale = fc.photon_scale;
    prob.population_scale = fc.population_scale;
    prob.options.starts = fc.starts;
    prob.options.max_evaluations = fc.max_evaluations;
    prob.options.seed = seed;

    const FitResult res = fit(prob);

    json doc;
    doc["manifest"] = "fit_manifest.json";
    doc["trace_files"] = fc.trace_files;
    doc["params"] = {{"kappa", res.params.kappa},
                     {"gamma", res.params.gamma},
                     {"gamma_d", res.params.gamma_d}};
    doc["chi2"] = res.chi2;
    doc["dof"] = res.dof;
    doc["converged"] = res.converged;
    doc["covariance_ok"] = res.covariance_ok;
    json cov = json::array();
    for (int i = 0; i < 3; ++i)
        cov.push_back({res.covariance(i, 0), res.covariance(i, 1),
                       res.covariance(i, 2)});
    doc["covariance"] = cov;
    doc["evaluations"] = res.evaluations;
    doc["start_objectives"] = res.start_objectives;

    Table residuals;
    residuals.comments = {"manifest=fit_manifest.json",
                          "residual = (value - model) / sem"};
    residuals.columns = {"trace", "time_us", "value", "sem", "model",
                         "residual"};
    for (std::size_t ti = 0; ti < prob.traces.size(); ++ti) {
        const TraceData& t = prob.traces[ti];
        const double scale = t.kind == TraceKind::photon_rate
                                 ? prob.photon_scale
                                 : prob.population_scale;
        const std::vector<double> model = forward_model(
            res.params, t.kind, t.pulse, t.times_us, scale);
        for (std::size_t i = 0; i < t.times_us.size(); ++i)
            residuals.rows.push_back(
                {static_cast<double>(ti), t.times_us[i], t.values[i],
                 t.sem[i], model[i],
                 (t.values[i] - model[i]) / t.sem[i]});
    }

    const std::string result_file = "fit_result.json";
    const std::string resid_file = "fit_residuals." + cfg.output.format;
    write_text_atomic(out_path(cfg, result_file), doc.dump(2) + "\n");
    write_table(out_path(cfg, resid_file), residuals, cfg.output.format);
    return {result_file, resid_file};
}

std::vector<std::string> run_oracle(const RunConfig& cfg) {
    const SuperatomParams& p = need_section(cfg.params, "params", "oracle");
    const PulseSpec& pulse = need_section(cfg.pulse, "pulse", "oracle");
    const OracleSection& os = need_section(cfg.oracle, "oracle", "oracle");

    FockOracleConfig ocfg = os.config;
    ocfg.kappa_per_us = p.kappa;
    const FockOracleResult oracle = run_fock_oracle(ocfg, pulse, os.input);

    const std::vector<double>& grid = ocfg.grid_times_us;
    const SplicedGrid sg = splice_onset(grid, pulse);
    const Trajectory traj = evolve(p, pulse, sg.times);
    const ObservableTrace obs = observables(traj, p, pulse);
    const CorrelationGrid corr = g2_matrix(p, pulse, sg.times);

    Table t;
    t.comments = {"manifest=oracle_manifest.json",
                  "rel_dev = (oracle - model) / model",
                  "envelope_deficit=" +
                      format_double(oracle.envelope_deficit),
                  "truncated_probability=" +
                      format_double(oracle.truncated_probability)};
    for (const std::string& w : oracle.warnings)
        t.comments.push_back("warning=" + w);
    t.columns = {"time_us",          "model_out_rate", "oracle_intensity",
                 "intensity_rel_dev", "model_g2",       "oracle_g2",
                 "g2_rel_dev"};
    const double tiny = 1e-300;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::size_t k = i + sg.offset;
        const auto ek = static_cast<Eigen::Index>(k);
        const auto ei = static_cast<Eigen::Index>(i);
        const double me_rate = obs.out_rate[k];
        const double or_rate = oracle.intensity(ei);
        const double me_g2 = corr.g2(ek, ek);
        const double or_g2 = oracle.g2(ei, ei);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        t.rows.push_back(
            {grid[i], me_rate, or_rate,
             std::abs(me_rate) > tiny ? (or_rate - me_rate) / me_rate : nan,
             me_g2, or_g2,
             std::abs(me_g2) > tiny ? (or_g2 - me_g2) / me_g2 : nan});
    }
    const std::string file = "oracle_comparison." + cfg.output.format;
    write_table(out_path(cfg, file), t, cfg.output.format);
    return {file};
}

void report_error(const std::string& cls, const std::string& message) {
    json doc;
    doc["error"] = {{"class", cls}, {"message", message}};
    std::cerr << doc.dump() << "\n";
}

const char* class_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_input: return "invalid_input";
        case ErrorKind::config: return "config";
        case ErrorKind::numerical: return "numerical";
        case ErrorKind::io: return "io";
    }
    return "internal";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Superatom pulse simulator and estimation toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string format;
    std::uint64_t seed = 1;
    int threads = 1;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_dir,
                   "output directory (overrides output.directory)");
    app.add_option("--seed", seed, "RNG seed for fit multi-starts");
    app.add_option("--threads", threads, "worker thread budget");
    app.add_option("--format", format, "tabular output format: csv or json");

    CLI::App* sub[6] = {
        app.add_subcommand("simulate",
                           "pulse-driven master-equation observables"),
        app.add_subcommand("correlate", "two-time g2 correlation matrix"),
        app.add_subcommand("phase-diagram",
                           "Rabi-visibility map over (lambda, nph)"),
        app.add_subcommand("coupling",
                           "cloud-and-beam geometry to effective rates"),
        app.add_subcommand("fit", "weighted least-squares parameter fit"),
        app.add_subcommand("oracle",
                           "few-photon mode-space cross-check of the model"),
    };
    for (CLI::App* s : sub) s->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (config_path.empty()) throw_config("--config is required");
        if (threads < 1) throw_config("--threads must be at least 1");
        RunConfig cfg = load_config(config_path);
        // --out relocates files without touching results, so the manifest
        // keeps the document's directory and stays identical across runs.
        const std::string doc_dir = cfg.output.directory;
        if (!out_dir.empty()) cfg.output.directory = out_dir;
        if (!format.empty()) {
            if (format != "csv" && format != "json")
                throw_config("--format must be csv or json");
            cfg.output.format = format;
        }
        std::error_code ec;
        std::filesystem::create_directories(cfg.output.directory, ec);
        if (ec)
            throw_io("cannot create output directory: " +
                     cfg.output.directory);

        std::string name;
        std::vector<std::string> outputs;
        if (sub[0]->parsed()) {
            name = "simulate";
            outputs = run_simulate(cfg);
        } else if (sub[1]->parsed()) {
            name = "correlate";
            outputs = run_correlate(cfg);
        } else if (sub[2]->parsed()) {
            name = "phase-diagram";
            outputs = run_phase_diagram(cfg);
        } else if (sub[3]->parsed()) {
            name = "coupling";
            outputs = run_coupling(cfg);
        } else if (sub[4]->parsed()) {
            name = "fit";
            outputs = run_fit(cfg, config_path, seed);
        } else {
            name = "oracle";
            outputs = run_oracle(cfg);
        }

        std::string stem = name;
        std::replace(stem.begin(), stem.end(), '-', '_');
        RunConfig doc = cfg;
        doc.output.directory = doc_dir;
        write_text_atomic(out_path(cfg, stem + "_manifest.json"),
                          manifest_json(name, doc, seed, threads, outputs));
        return 0;
    } catch (const Error& e) {
        report_error(class_name(e.kind()), e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        report_error("internal", e.what());
        return 1;
    }
}
