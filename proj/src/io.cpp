#include "superatom/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <variant>

#include "json.hpp"
#include "superatom/errors.hpp"

namespace superatom {

namespace {

using json = nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string join_path(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

// Message context: every complaint names the document and the key path.
struct Ctx {
    std::string origin;
    [[noreturn]] void fail(const std::string& msg) const {
        throw_config(origin + ": " + msg);
    }
};

void check_keys(const Ctx& c, const json& o, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : o.items()) {
        bool known = false;
        for (const char* a : allowed) {
            if (item.key() == a) {
                known = true;
                break;
            }
        }
        if (!known) c.fail("unknown key '" + join_path(path, item.key()) + "'");
    }
}

const json& need(const Ctx& c, const json& o, const std::string& path,
                 const char* key) {
    const auto it = o.find(key);
    if (it == o.end()) c.fail("missing key '" + join_path(path, key) + "'");
    return *it;
}

const json& need_object(const Ctx& c, const json& v, const std::string& path) {
    if (!v.is_object()) c.fail("'" + path + "' must be an object");
    return v;
}

double as_num(const Ctx& c, const json& v, const std::string& path) {
    if (!v.is_number()) c.fail("'" + path + "' must be a number");
    return v.get<double>();
}

double need_num(const Ctx& c, const json& o, const std::string& path,
                const char* key) {
    return as_num(c, need(c, o, path, key), join_path(path, key));
}

double opt_num(const Ctx& c, const json& o, const std::string& path,
               const char* key, double fallback) {
    const auto it = o.find(key);
    return it == o.end() ? fallback : as_num(c, *it, join_path(path, key));
}

int as_int(const Ctx& c, const json& v, const std::string& path) {
    if (!v.is_number_integer()) c.fail("'" + path + "' must be an integer");
    return v.get<int>();
}

int need_int(const Ctx& c, const json& o, const std::string& path,
             const char* key) {
    return as_int(c, need(c, o, path, key), join_path(path, key));
}

int opt_int(const Ctx& c, const json& o, const std::string& path,
            const char* key, int fallback) {
    const auto it = o.find(key);
    return it == o.end() ? fallback : as_int(c, *it, join_path(path, key));
}

std::string as_str(const Ctx& c, const json& v, const std::string& path) {
    if (!v.is_string()) c.fail("'" + path + "' must be a string");
    return v.get<std::string>();
}

std::string need_str(const Ctx& c, const json& o, const std::string& path,
                     const char* key) {
    return as_str(c, need(c, o, path, key), join_path(path, key));
}

std::string opt_str(const Ctx& c, const json& o, const std::string& path,
                    const char* key, const std::string& fallback) {
    const auto it = o.find(key);
    return it == o.end() ? fallback : as_str(c, *it, join_path(path, key));
}

std::vector<double> as_num_array(const Ctx& c, const json& v,
                                 const std::string& path) {
    if (!v.is_array()) c.fail("'" + path + "' must be an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(
            as_num(c, v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

PulseSpec parse_pulse(const Ctx& c, const json& v, const std::string& path) {
    const json& o = need_object(c, v, path);
    const std::string shape = need_str(c, o, path, "shape");
    const double start = opt_num(c, o, path, "start_time_us", 0.0);
    if (shape == "tukey") {
        check_keys(c, o, path,
                   {"shape", "rise_us", "uptime_us", "peak_rate",
                    "start_time_us"});
        return PulseSpec::tukey(need_num(c, o, path, "rise_us"),
                                need_num(c, o, path, "uptime_us"),
                                need_num(c, o, path, "peak_rate"), start);
    }
    if (shape == "square") {
        check_keys(c, o, path,
                   {"shape", "duration_us", "rate", "start_time_us"});
        return PulseSpec::square(need_num(c, o, path, "duration_us"),
                                 need_num(c, o, path, "rate"), start);
    }
    if (shape == "sampled") {
        check_keys(c, o, path, {"shape", "times_us", "rates", "start_time_us"});
        return PulseSpec::sampled(
            as_num_array(c, need(c, o, path, "times_us"),
                         join_path(path, "times_us")),
            as_num_array(c, need(c, o, path, "rates"),
                         join_path(path, "rates")),
            start);
    }
    c.fail("'" + join_path(path, "shape") +
           "' must be one of tukey, square, sampled");
}

json pulse_obj(const PulseSpec& p) {
    json o;
    std::visit(overloaded{
                   [&](const TukeyPulse& t) {
                       o["shape"] = "tukey";
                       o["rise_us"] = t.rise_us;
                       o["uptime_us"] = t.uptime_us;
                       o["peak_rate"] = t.peak_rate;
                   },
                   [&](const SquarePulse& s) {
                       o["shape"] = "square";
                       o["duration_us"] = s.duration_us;
                       o["rate"] = s.rate;
                   },
                   [&](const SampledPulse& s) {
                       o["shape"] = "sampled";
                       o["times_us"] = s.times_us;
                       o["rates"] = s.rates;
                   },
               },
               p.shape());
    o["start_time_us"] = p.start_time_us();
    return o;
}

GridSpec parse_grid(const Ctx& c, const json& v, const std::string& path) {
    const json& o = need_object(c, v, path);
    check_keys(c, o, path, {"t_start", "t_end", "n_points"});
    GridSpec g{need_num(c, o, path, "t_start"), need_num(c, o, path, "t_end"),
               need_int(c, o, path, "n_points")};
    g.validate();
    return g;
}

int param_index(const std::string& name) {
    if (name == "kappa") return 0;
    if (name == "gamma") return 1;
    if (name == "gamma_d") return 2;
    return -1;
}

FitConfig parse_fit(const Ctx& c, const json& v, const std::string& path) {
    const json& o = need_object(c, v, path);
    check_keys(c, o, path,
               {"traces", "free", "fixed", "starts", "max_evaluations",
                "photon_scale", "population_scale"});
    FitConfig f;
    const json& traces = need(c, o, path, "traces");
    if (!traces.is_array() || traces.empty())
        c.fail("'" + join_path(path, "traces") +
               "' must be a non-empty array of file paths");
    for (std::size_t i = 0; i < traces.size(); ++i)
        f.trace_files.push_back(as_str(
            c, traces[i],
            join_path(path, "traces") + "[" + std::to_string(i) + "]"));
    if (const auto it = o.find("free"); it != o.end()) {
        const std::string fp = join_path(path, "free");
        need_object(c, *it, fp);
        for (const auto& item : it->items()) {
            const int idx = param_index(item.key());
            if (idx < 0) c.fail("unknown key '" + fp + "." + item.key() + "'");
            const auto b =
                as_num_array(c, item.value(), fp + "." + item.key());
            if (b.size() != 2)
                c.fail("'" + fp + "." + item.key() +
                       "' must be [lower, upper]");
            f.free[static_cast<std::size_t>(idx)] = ParamBounds{b[0], b[1]};
        }
    }
    if (const auto it = o.find("fixed"); it != o.end()) {
        const std::string fp = join_path(path, "fixed");
        need_object(c, *it, fp);
        for (const auto& item : it->items()) {
            const int idx = param_index(item.key());
            if (idx < 0) c.fail("unknown key '" + fp + "." + item.key() + "'");
            f.fixed[static_cast<std::size_t>(idx)] =
                as_num(c, item.value(), fp + "." + item.key());
        }
    }
    f.starts = opt_int(c, o, path, "starts", f.starts);
    f.max_evaluations =
        opt_int(c, o, path, "max_evaluations", f.max_evaluations);
    f.photon_scale = opt_num(c, o, path, "photon_scale", f.photon_scale);
    f.population_scale =
        opt_num(c, o, path, "population_scale", f.population_scale);
    return f;
}

CouplingConfig parse_coupling(const Ctx& c, const json& v,
                              const std::string& path) {
    const json& o = need_object(c, v, path);
    check_keys(c, o, path, {"cloud", "beam"});

    const std::string cp = join_path(path, "cloud");
    const json& co = need_object(c, need(c, o, path, "cloud"), cp);
    check_keys(c, co, cp,
               {"peak_density", "total_atoms", "sigma_z", "sigma_r"});
    const bool has_density = co.contains("peak_density");
    const bool has_total = co.contains("total_atoms");
    if (has_density == has_total)
        c.fail("'" + cp +
               "' needs exactly one of peak_density or total_atoms");
    const double sigma_z = need_num(c, co, cp, "sigma_z");
    const double sigma_r = need_num(c, co, cp, "sigma_r");
    CloudGeometry cloud =
        has_density
            ? CloudGeometry{need_num(c, co, cp, "peak_density"), sigma_z,
                            sigma_r}
            : CloudGeometry::from_total_atoms(
                  need_num(c, co, cp, "total_atoms"), sigma_z, sigma_r);
    cloud.validate();

    const std::string bp = join_path(path, "beam");
    const json& bo = need_object(c, need(c, o, path, "beam"), bp);
    check_keys(c, bo, bp,
               {"waist", "wavelength", "gamma_e", "control_rabi",
                "control_detuning", "blockade_radius"});
    BeamAndLasers beam{need_num(c, bo, bp, "waist"),
                       need_num(c, bo, bp, "wavelength"),
                       need_num(c, bo, bp, "gamma_e"),
                       need_num(c, bo, bp, "control_rabi"),
                       need_num(c, bo, bp, "control_detuning"),
                       need_num(c, bo, bp, "blockade_radius")};
    beam.validate();
    return CouplingConfig{cloud, beam};
}

OracleSection parse_oracle(const Ctx& c, const json& v,
                           const std::string& path) {
    const json& o = need_object(c, v, path);
    check_keys(c, o, path,
               {"modes", "box_length", "final_time", "grid", "input",
                "extra_bandwidth"});
    OracleSection s;
    s.config.mode_count = opt_int(c, o, path, "modes", s.config.mode_count);
    s.config.span_us = need_num(c, o, path, "box_length");
    s.config.final_time_us = need_num(c, o, path, "final_time");
    s.config.extra_bandwidth_per_us =
        opt_num(c, o, path, "extra_bandwidth", 0.0);

    const json& grid = need(c, o, path, "grid");
    const std::string gp = join_path(path, "grid");
    if (grid.is_array()) {
        s.config.grid_times_us = as_num_array(c, grid, gp);
    } else {
        s.config.grid_times_us = parse_grid(c, grid, gp).times();
    }

    const std::string ip = join_path(path, "input");
    const json& io = need_object(c, need(c, o, path, "input"), ip);
    check_keys(c, io, ip, {"kind", "mean_photons"});
    const std::string kind = need_str(c, io, ip, "kind");
    if (kind == "weak_coherent") {
        s.input.kind = FewPhotonInput::Kind::weak_coherent;
        s.input.mean_photons =
            opt_num(c, io, ip, "mean_photons", s.input.mean_photons);
    } else if (kind == "single_photon" || kind == "photon_pair") {
        s.input.kind = kind == "single_photon"
                           ? FewPhotonInput::Kind::single_photon
                           : FewPhotonInput::Kind::photon_pair;
        if (io.contains("mean_photons"))
            c.fail("'" + join_path(ip, "mean_photons") +
                   "' only applies to weak_coherent input");
    } else {
        c.fail("'" + join_path(ip, "kind") +
               "' must be one of weak_coherent, single_photon, photon_pair");
    }
    return s;
}

std::vector<double> parse_axis(const Ctx& c, const json& v,
                               const std::string& path) {
    if (v.is_array()) return as_num_array(c, v, path);
    const json& o = need_object(c, v, path);
    check_keys(c, o, path, {"min", "max", "n", "scale"});
    const double lo = need_num(c, o, path, "min");
    const double hi = need_num(c, o, path, "max");
    const int n = need_int(c, o, path, "n");
    const std::string scale = opt_str(c, o, path, "scale", "linear");
    if (n < 2) c.fail("'" + join_path(path, "n") + "' must be at least 2");
    if (!(hi > lo))
        c.fail("'" + path + "' needs max > min");
    std::vector<double> out(static_cast<std::size_t>(n));
    if (scale == "linear") {
        for (int i = 0; i < n; ++i)
            out[static_cast<std::size_t>(i)] =
                lo + (hi - lo) * i / (n - 1);
    } else if (scale == "log") {
        if (!(lo > 0))
            c.fail("'" + path + "' needs min > 0 for log spacing");
        const double llo = std::log(lo), lhi = std::log(hi);
        for (int i = 0; i < n; ++i)
            out[static_cast<std::size_t>(i)] =
                std::exp(llo + (lhi - llo) * i / (n - 1));
        out.front() = lo;
        out.back() = hi;
    } else {
        c.fail("'" + join_path(path, "scale") + "' must be linear or log");
    }
    return out;
}

PhaseDiagramSpec parse_phase_diagram(const Ctx& c, const json& v,
                                     const std::string& path) {
    const json& o = need_object(c, v, path);
    check_keys(c, o, path, {"lambda", "nph", "tau_us"});
    PhaseDiagramSpec s;
    s.lambda_grid =
        parse_axis(c, need(c, o, path, "lambda"), join_path(path, "lambda"));
    s.nph_grid = parse_axis(c, need(c, o, path, "nph"), join_path(path, "nph"));
    s.tau_us = opt_num(c, o, path, "tau_us", 1.0);
    return s;
}

json config_obj(const RunConfig& cfg) {
    json doc;
    if (cfg.params) {
        doc["params"] = {{"kappa", cfg.params->kappa},
                         {"gamma", cfg.params->gamma},
                         {"gamma_d", cfg.params->gamma_d}};
    }
    if (cfg.pulse) doc["pulse"] = pulse_obj(*cfg.pulse);
    if (cfg.grid) {
        doc["grid"] = {{"t_start", cfg.grid->t_start},
                       {"t_end", cfg.grid->t_end},
                       {"n_points", cfg.grid->n_points}};
    }
    if (cfg.correlate) {
        doc["correlate"] = {{"n_grid", cfg.correlate->n_grid},
                            {"floor", cfg.correlate->floor}};
    }
    if (cfg.coupling) {
        doc["coupling"] = {
            {"cloud",
             {{"peak_density", cfg.coupling->cloud.peak_density},
              {"sigma_z", cfg.coupling->cloud.sigma_z},
              {"sigma_r", cfg.coupling->cloud.sigma_r}}},
            {"beam",
             {{"waist", cfg.coupling->beam.waist},
              {"wavelength", cfg.coupling->beam.wavelength},
              {"gamma_e", cfg.coupling->beam.gamma_e},
              {"control_rabi", cfg.coupling->beam.control_rabi},
              {"control_detuning", cfg.coupling->beam.control_detuning},
              {"blockade_radius", cfg.coupling->beam.blockade_radius}}}};
    }
    if (cfg.fit) {
        json free = json::object();
        json fixed = json::object();
        static constexpr const char* names[3] = {"kappa", "gamma", "gamma_d"};
        for (int i = 0; i < 3; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            if (cfg.fit->free[ui])
                free[names[i]] = {cfg.fit->free[ui]->lower,
                                  cfg.fit->free[ui]->upper};
            if (cfg.fit->fixed[ui]) fixed[names[i]] = *cfg.fit->fixed[ui];
        }
        doc["fit"] = {{"traces", cfg.fit->trace_files},
                      {"free", free},
                      {"fixed", fixed},
                      {"starts", cfg.fit->starts},
                      {"max_evaluations", cfg.fit->max_evaluations},
                      {"photon_scale", cfg.fit->photon_scale},
                      {"population_scale", cfg.fit->population_scale}};
    }
    if (cfg.oracle) {
        json input = {{"kind", cfg.oracle->input.kind ==
                                       FewPhotonInput::Kind::weak_coherent
                                   ? "weak_coherent"
                               : cfg.oracle->input.kind ==
                                       FewPhotonInput::Kind::single_photon
                                   ? "single_photon"
                                   : "photon_pair"}};
        if (cfg.oracle->input.kind == FewPhotonInput::Kind::weak_coherent)
            input["mean_photons"] = cfg.oracle->input.mean_photons;
        doc["oracle"] = {
            {"modes", cfg.oracle->config.mode_count},
            {"box_length", cfg.oracle->config.span_us},
            {"final_time", cfg.oracle->config.final_time_us},
            {"grid", cfg.oracle->config.grid_times_us},
            {"input", input},
            {"extra_bandwidth", cfg.oracle->config.extra_bandwidth_per_us}};
    }
    if (cfg.phase_diagram) {
        doc["phase_diagram"] = {{"lambda", cfg.phase_diagram->lambda_grid},
                                {"nph", cfg.phase_diagram->nph_grid},
                                {"tau_us", cfg.phase_diagram->tau_us}};
    }
    doc["output"] = {{"directory", cfg.output.directory},
                     {"format", cfg.output.format}};
    return doc;
}

}  // namespace

void GridSpec::validate() const {
    if (!std::isfinite(t_start) || !std::isfinite(t_end))
        throw_invalid("GridSpec: times must be finite");
    if (!(t_end > t_start)) throw_invalid("GridSpec: t_end must exceed t_start");
    if (n_points < 2) throw_invalid("GridSpec: n_points must be at least 2");
}

std::vector<double> GridSpec::times() const {
    validate();
    std::vector<double> out(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i)
        out[static_cast<std::size_t>(i)] =
            t_start + (t_end - t_start) * i / (n_points - 1);
    out.back() = t_end;
    return out;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
    Ctx c{origin};
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        c.fail(e.what());
    }
    if (!doc.is_object()) c.fail("top level must be an object");
    check_keys(c, doc, "",
               {"params", "pulse", "grid", "correlate", "coupling", "fit",
                "oracle", "phase_diagram", "output"});

    RunConfig cfg;
    if (const auto it = doc.find("params"); it != doc.end()) {
        const json& o = need_object(c, *it, "params");
        check_keys(c, o, "params", {"kappa", "gamma", "gamma_d"});
        SuperatomParams p{need_num(c, o, "params", "kappa"),
                          need_num(c, o, "params", "gamma"),
                          need_num(c, o, "params", "gamma_d")};
        p.validate();
        cfg.params = p;
    }
    if (const auto it = doc.find("pulse"); it != doc.end())
        cfg.pulse = parse_pulse(c, *it, "pulse");
    if (const auto it = doc.find("grid"); it != doc.end())
        cfg.grid = parse_grid(c, *it, "grid");
    if (const auto it = doc.find("correlate"); it != doc.end()) {
        const json& o = need_object(c, *it, "correlate");
        check_keys(c, o, "correlate", {"n_grid", "floor"});
        CorrelateConfig cc;
        cc.n_grid = opt_int(c, o, "correlate", "n_grid", cc.n_grid);
        cc.floor = opt_num(c, o, "correlate", "floor", cc.floor);
        if (cc.n_grid < 2)
            c.fail("'correlate.n_grid' must be at least 2");
        cfg.correlate = cc;
    }
    if (const auto it = doc.find("coupling"); it != doc.end())
        cfg.coupling = parse_coupling(c, *it, "coupling");
    if (const auto it = doc.find("fit"); it != doc.end())
        cfg.fit = parse_fit(c, *it, "fit");
    if (const auto it = doc.find("oracle"); it != doc.end())
        cfg.oracle = parse_oracle(c, *it, "oracle");
    if (const auto it = doc.find("phase_diagram"); it != doc.end())
        cfg.phase_diagram = parse_phase_diagram(c, *it, "phase_diagram");
    if (const auto it = doc.find("output"); it != doc.end()) {
        const json& o = need_object(c, *it, "output");
        check_keys(c, o, "output", {"directory", "format"});
        cfg.output.directory =
            opt_str(c, o, "output", "directory", cfg.output.directory);
        cfg.output.format =
            opt_str(c, o, "output", "format", cfg.output.format);
    }
    if (cfg.output.format != "csv" && cfg.output.format != "json")
        c.fail("'output.format' must be csv or json");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw_io("cannot read config file: " + path);
    return parse_config(buf.str(), path);
}

std::string pulse_to_json(const PulseSpec& pulse) {
    return pulse_obj(pulse).dump();
}

PulseSpec pulse_from_json(const std::string& text, const std::string& origin) {
    Ctx c{origin};
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        c.fail(e.what());
    }
    return parse_pulse(c, doc, "pulse");
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

const char* kind_name(TraceKind k) {
    return k == TraceKind::photon_rate ? "photon_rate" : "rydberg_population";
}

bool parse_field(const std::string& s, double& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && errno == 0;
}

}  // namespace

TraceData read_trace_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open trace file: " + path);

    TraceData t;
    std::optional<std::string> kind_str;
    std::optional<std::string> pulse_str;
    bool header_seen = false;
    std::string line;
    int lineno = 0;
    const auto fail = [&](const std::string& msg) {
        throw_config(path + ":" + std::to_string(lineno) + ": " + msg);
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::string body = line.substr(1);
            if (!body.empty() && body.front() == ' ') body.erase(0, 1);
            const auto eq = body.find('=');
            if (eq != std::string::npos) {
                const std::string key = body.substr(0, eq);
                if (key == "kind") kind_str = body.substr(eq + 1);
                if (key == "pulse") pulse_str = body.substr(eq + 1);
            }
            continue;
        }
        if (!header_seen) {
            if (line != "time_us,value,sem")
                fail("expected header 'time_us,value,sem'");
            header_seen = true;
            continue;
        }
        double fields[3];
        std::size_t begin = 0;
        int nf = 0;
        for (; nf < 3; ++nf) {
            const std::size_t comma = line.find(',', begin);
            const std::string cell =
                comma == std::string::npos
                    ? line.substr(begin)
                    : line.substr(begin, comma - begin);
            if (!parse_field(cell, fields[nf]))
                fail("malformed row, expected three numbers");
            if (comma == std::string::npos) {
                ++nf;
                break;
            }
            begin = comma + 1;
        }
        if (nf != 3 || line.find(',', begin) != std::string::npos)
            fail("malformed row, expected three numbers");
        t.times_us.push_back(fields[0]);
        t.values.push_back(fields[1]);
        t.sem.push_back(fields[2]);
    }
    if (in.bad()) throw_io("cannot read trace file: " + path);
    if (!header_seen)
        throw_config(path + ": missing 'time_us,value,sem' header");
    if (!kind_str) throw_config(path + ": missing '# kind=' metadata");
    if (!pulse_str) throw_config(path + ": missing '# pulse=' metadata");

    if (*kind_str == "photon_rate") {
        t.kind = TraceKind::photon_rate;
    } else if (*kind_str == "rydberg_population") {
        t.kind = TraceKind::rydberg_population;
    } else {
        throw_config(path +
                     ": kind must be photon_rate or rydberg_population");
    }
    t.pulse = pulse_from_json(*pulse_str, path);
    t.validate();
    return t;
}

void write_trace_csv(const std::string& path, const TraceData& trace) {
    trace.validate();
    std::string out;
    out += "# kind=";
    out += kind_name(trace.kind);
    out += "\n# pulse=";
    out += pulse_to_json(trace.pulse);
    out += "\ntime_us,value,sem\n";
    for (std::size_t i = 0; i < trace.times_us.size(); ++i) {
        out += format_double(trace.times_us[i]);
        out += ',';
        out += format_double(trace.values[i]);
        out += ',';
        out += format_double(trace.sem[i]);
        out += '\n';
    }
    write_text_atomic(path, out);
}

void write_table(const std::string& path, const Table& table,
                 const std::string& format) {
    for (const auto& row : table.rows)
        if (row.size() != table.columns.size())
            throw_invalid("write_table: row width differs from column count");
    if (format == "csv") {
        std::string out;
        for (const auto& cmt : table.comments) {
            out += "# ";
            out += cmt;
            out += '\n';
        }
        for (std::size_t i = 0; i < table.columns.size(); ++i) {
            if (i) out += ',';
            out += table.columns[i];
        }
        out += '\n';
        for (const auto& row : table.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out += ',';
                out += format_double(row[i]);
            }
            out += '\n';
        }
        write_text_atomic(path, out);
    } else if (format == "json") {
        json doc;
        doc["comments"] = table.comments;
        doc["columns"] = table.columns;
        doc["rows"] = table.rows;
        write_text_atomic(path, doc.dump(2) + "\n");
    } else {
        throw_invalid("write_table: format must be csv or json");
    }
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw_io("cannot open for writing: " + tmp);
        out.write(content.data(),
                  static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::remove(tmp.c_str());
            throw_io("write failed: " + tmp);
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw_io("cannot rename " + tmp + " to " + path);
    }
}

std::string manifest_json(const std::string& subcommand, const RunConfig& cfg,
                          std::uint64_t seed, int threads,
                          const std::vector<std::string>& outputs) {
    json doc;
    doc["tool"] = "superatom";
    doc["version"] = kToolVersion;
    doc["subcommand"] = subcommand;
    doc["seed"] = seed;
    doc["threads"] = threads;
    doc["config"] = config_obj(cfg);
    doc["outputs"] = outputs;
    return doc.dump(2) + "\n";
}

}  // namespace superatom
