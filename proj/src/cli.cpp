#include "focklaser/cli.hpp"

#include "focklaser/emission.hpp"
#include "focklaser/laser_direct.hpp"
#include "focklaser/laser_rate.hpp"
#include "focklaser/liouvillian.hpp"
#include "focklaser/spectrum.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <algorithm>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

namespace focklaser::cli {

using io::format;

namespace {

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? "," : "") + format(v[i]);
    }
    return s;
}

SpinBranch parse_branch(const std::string& s) {
    if (s == "minus") {
        return SpinBranch::Minus;
    }
    if (s == "plus") {
        return SpinBranch::Plus;
    }
    throw ValidationError("--branch must be minus or plus, got '" + s + "'");
}

liouvillian::Field parse_field(const std::string& s, const char* flag) {
    if (s == "a") {
        return liouvillian::Field::A;
    }
    if (s == "b") {
        return liouvillian::Field::B;
    }
    throw ValidationError(std::string(flag) + " must be a or b, got '" + s + "'");
}

std::vector<double> grid(const std::vector<double>& values, const std::string& log_spec, double fallback,
                         const char* name) {
    if (!values.empty() && !log_spec.empty()) {
        throw ValidationError(std::string("give either --") + name + " or --" + name + "-log, not both");
    }
    if (!log_spec.empty()) {
        return log_grid(log_spec);
    }
    return values.empty() ? std::vector<double>{fallback} : values;
}

laser_rate::RateOptions rate_options(const RunConfig& cfg) {
    laser_rate::RateOptions o;
    o.branch = parse_branch(cfg.branch);
    return o;
}

void add_distribution_results(io::Table& t, const laser_rate::PhotonDistribution& d) {
    t.results.emplace_back("mean", format(d.mean));
    t.results.emplace_back("variance", format(d.variance));
    t.results.emplace_back("fano", format(d.fano));
    t.results.emplace_back("entropy", format(d.entropy));
    t.results.emplace_back("n_max", format(d.n_max()));
}

io::Table spectrum_cmd(const RunConfig& cfg) {
    const int n_max = cfg.n_max > 0 ? cfg.n_max : 50;
    io::Table t;
    t.columns = {"n", "sigma", "E", "gap"};
    for (const auto& lv : spectrum::spectrum_table(cfg.p, n_max).levels) {
        t.add_row({format(lv.n), format(sign(lv.sigma)), format(lv.energy), format(lv.gap)});
    }
    t.results.emplace_back("n_c", format(spectrum::critical_photon_number(cfg.p)));
    return t;
}

io::Table blockade_cmd(const RunConfig& cfg) {
    const double time = cfg.t > 0.0 ? cfg.t : std::numbers::pi / (2.0 * cfg.gp.epsilon);
    if (!(cfg.gp.epsilon > 0.0)) {
        throw ValidationError("blockade: --epsilon must be positive");
    }
    const int n_max = cfg.n_max > 0 ? cfg.n_max : 200;
    io::Table t;
    t.columns = {"n", "probability"};
    for (const auto& pt : emission::blockade_profile(cfg.p, cfg.gp, time, n_max, parse_branch(cfg.branch))) {
        t.add_row({format(pt.n), format(pt.probability)});
    }
    t.results.emplace_back("t", format(time));
    return t;
}

io::Table gain_loss_cmd(const RunConfig& cfg) {
    const auto ro = rate_options(cfg);
    const int n_max = cfg.n_max > 0 ? cfg.n_max : laser_rate::suggest_n_max(cfg.p, cfg.gp, ro);
    const auto c = laser_rate::gain_loss(cfg.p, cfg.gp, n_max, ro);
    io::Table t;
    t.columns = {"n", "R", "kappa_n", "F", "G", "gain", "propagation"};
    for (int n = 1; n <= n_max; ++n) {
        t.add_row({format(n), format(c.R[n]), format(c.kappa_n[n]), format(c.F[n]), format(c.G[n]),
                   format(c.gain[n]), format(1.0 / (1.0 + c.G[n]))});
    }
    t.results.emplace_back("r_th", format(laser_rate::threshold_pump(cfg.gp)));
    t.results.emplace_back("alpha", format(laser_rate::pump_parameter(cfg.gp)));
    t.results.emplace_back("n_c", format(laser_rate::propagation_cutoff(c)));
    return t;
}

io::Table distribution_table(const laser_rate::PhotonDistribution& d) {
    io::Table t;
    t.columns = {"n", "p"};
    for (int n = 0; n <= d.n_max(); ++n) {
        t.add_row({format(n), format(d.probs(n))});
    }
    add_distribution_results(t, d);
    return t;
}

liouvillian::LiouvillianOptions liouvillian_options(const RunConfig& cfg) {
    liouvillian::LiouvillianOptions o;
    o.interaction = parse_field(cfg.interaction, "--interaction");
    o.jump = parse_field(cfg.jump, "--jump");
    if (cfg.n_fock > 0) {
        o.n_levels = cfg.n_fock;
    }
    return o;
}

io::Table steady_state_cmd(const RunConfig& cfg) {
    if (cfg.method == "rate") {
        laser_rate::SteadyStateOptions o;
        o.n_max = cfg.n_max;
        o.rate = rate_options(cfg);
        return distribution_table(laser_rate::steady_state(cfg.p, cfg.gp, o));
    }
    if (cfg.method == "direct") {
        laser_direct::DirectOptions o;
        o.n_max = cfg.n_max;
        o.rate = rate_options(cfg);
        const auto mlg = laser_direct::MultiLevelGain::from_gain(cfg.gp, cfg.bath_ratio);
        return distribution_table(laser_direct::steady_state_direct(cfg.p, cfg.gp, mlg, o));
    }
    if (cfg.method == "liouvillian") {
        const auto model = liouvillian::build_model(cfg.p, cfg.gp, liouvillian_options(cfg));
        const auto res = liouvillian::steady_state(model);
        const auto u = liouvillian::extract_unpolarized(res, model);
        io::Table t;
        t.columns = {"n", "p", "p_minus", "p_plus"};
        for (int n = 0; n <= u.dist.n_max(); ++n) {
            t.add_row({format(n), format(u.dist.probs(n)), format(u.minus(n)), format(u.plus(n))});
        }
        add_distribution_results(t, u.dist);
        t.results.emplace_back("solver", res.method);
        t.results.emplace_back("residual", format(res.residual));
        t.results.emplace_back("unlabeled_mass", format(u.residue));
        t.results.emplace_back("unlabeled_flagged", u.flagged ? "true" : "false");
        t.results.emplace_back("excited_population", format(liouvillian::excited_population(res)));
        t.results.emplace_back("photon_coherence", format(liouvillian::off_diagonal_coherence(res, model)));
        return t;
    }
    throw ValidationError("--method must be rate, direct or liouvillian, got '" + cfg.method + "'");
}

io::Table sweep_cmd(const RunConfig& cfg) {
    const auto gs = cfg.g_values.empty() ? std::vector<double>{cfg.p.g} : cfg.g_values;
    const auto rs = grid(cfg.r_values, cfg.r_log, cfg.gp.r, "r");
    io::Table t;
    t.columns = {"g", "r", "mean", "stddev", "fano", "n_max"};
    for (double g : gs) {
        RabiParams p = cfg.p;
        p.g = g;
        p.validate();
        std::vector<laser_rate::PhotonDistribution> dists(rs.size());
        if (cfg.method == "rate") {
            laser_rate::SweepOptions o;
            o.jobs = cfg.jobs;
            o.steady.n_max = cfg.n_max;
            o.steady.rate = rate_options(cfg);
            const auto pts = laser_rate::pump_sweep(p, cfg.gp, rs, o);
            for (std::size_t i = 0; i < pts.size(); ++i) {
                dists[i] = pts[i].dist;
            }
        } else if (cfg.method == "direct") {
            laser_direct::DirectOptions o;
            o.n_max = cfg.n_max;
            o.rate = rate_options(cfg);
            laser_rate::parallel_for(rs.size(), cfg.jobs, [&](std::size_t i) {
                GainParams gp = cfg.gp;
                gp.r = rs[i];
                const auto mlg = laser_direct::MultiLevelGain::from_gain(gp, cfg.bath_ratio);
                dists[i] = laser_direct::steady_state_direct(p, gp, mlg, o);
            });
        } else {
            throw ValidationError("sweep: --method must be rate or direct, got '" + cfg.method + "'");
        }
        for (std::size_t i = 0; i < rs.size(); ++i) {
            const auto& d = dists[i];
            t.add_row({format(g), format(rs[i]), format(d.mean), format(d.stddev()), format(d.fano),
                       format(d.n_max())});
        }
    }
    return t;
}

io::Table regime_map_cmd(const RunConfig& cfg) {
    const auto rs = grid(cfg.r_values, cfg.r_log, cfg.gp.r, "r");
    const auto gammas = grid(cfg.gamma_values, cfg.gamma_log, cfg.gp.Gamma, "gamma");
    laser_rate::SweepOptions o;
    o.jobs = cfg.jobs;
    o.steady.n_max = cfg.n_max;
    o.steady.rate = rate_options(cfg);
    io::Table t;
    t.columns = {"gamma", "r", "n_c", "regime", "mean", "fano", "modes"};
    for (const auto& pt : laser_rate::regime_map(cfg.p, cfg.gp, rs, gammas, o)) {
        t.add_row({format(pt.Gamma), format(pt.r), format(pt.n_c), laser_rate::to_string(pt.regime), format(pt.mean),
                   format(pt.fano), format(laser_rate::count_modes(pt.dist, laser_rate::ClassifyOptions{}.modality_height))});
    }
    return t;
}

io::Table transient_cmd(const RunConfig& cfg) {
    if (cfg.samples < 1) {
        throw ValidationError("transient: --samples must be >= 1");
    }
    const auto ro = rate_options(cfg);
    const int n_max = cfg.n_max > 0 ? cfg.n_max : laser_rate::suggest_n_max(cfg.p, cfg.gp, ro);
    const double horizon = cfg.t_final > 0.0 ? cfg.t_final : 1.0 / cfg.gp.kappa;
    if (!std::isfinite(horizon)) {
        throw ValidationError("transient: give --t-final when kappa is zero");
    }
    Vector<double> vac = Vector<double>::Zero(n_max + 1);
    vac(0) = 1.0;
    auto d = laser_rate::make_distribution(vac);
    laser_rate::TransientOptions o;
    o.rate = ro;
    io::Table t;
    t.columns = {"t", "mean", "stddev", "fano"};
    t.add_row({format(0.0), format(d.mean), format(d.stddev()), format(d.fano)});
    double now = 0.0;
    for (int k = 1; k <= cfg.samples; ++k) {
        const double next = horizon * k / cfg.samples;
        d = laser_rate::transient(d, cfg.p, cfg.gp, next - now, o);
        now = next;
        t.add_row({format(now), format(d.mean), format(d.stddev()), format(d.fano)});
    }
    add_distribution_results(t, d);
    return t;
}

struct Subcommand {
    const char* name;
    const char* help;
};

constexpr Subcommand kCommands[] = {
    {"spectrum", "DSC energies E(n, sigma) and excitation gaps"},
    {"blockade", "emission probability of one photon vs photon number"},
    {"gain-loss", "gain and loss coefficients of the rate model"},
    {"steady-state", "steady-state photon distribution"},
    {"sweep", "pump sweep of photon statistics"},
    {"regime-map", "statistics regime over a (Gamma, r) grid"},
    {"transient", "photon statistics from vacuum to t-final"},
};

void add_options(CLI::App* app, RunConfig& c) {
    app->add_option("--g", c.g_values, "coupling g (a comma list for sweep)")->delimiter(',');
    app->add_option("--lambda", c.p.lambda, "qubit tunneling lambda");
    app->add_option("--omega0", c.p.omega0, "qubit splitting omega0");
    app->add_option("--omega0-detuning", c.gp.delta, "emitter detuning delta");
    app->add_option("--epsilon", c.gp.epsilon, "emitter coupling");
    auto* gamma = app->add_option("--gamma", c.gamma_values, "emitter decay Gamma (a comma list for regime-map)")->delimiter(',');
    app->add_option("--gamma-log", c.gamma_log, "log grid a..b:N of Gamma")->excludes(gamma);
    app->add_option("--kappa", c.gp.kappa, "cavity decay");
    auto* r = app->add_option("--r", c.r_values, "pump rate (a comma list for sweeps)")->delimiter(',');
    app->add_option("--r-log", c.r_log, "log grid a..b:N of pump rates")->excludes(r);
    app->add_option("--method", c.method, "rate | direct | liouvillian");
    app->add_option("--branch", c.branch, "spin ladder: minus | plus");
    app->add_option("--n-max", c.n_max, "photon truncation (0: automatic)");
    app->add_option("--n-fock", c.n_fock, "Liouvillian: Rabi levels kept per branch");
    app->add_option("--interaction", c.interaction, "emitter coupling field: a | b");
    app->add_option("--jump", c.jump, "cavity jump field: a | b");
    app->add_option("--bath-ratio", c.bath_ratio, "direct method: bath level speed-up");
    app->add_option("--t", c.t, "blockade interaction time (0: pi/2eps)");
    app->add_option("--t-final", c.t_final, "transient horizon (0: 1/kappa)");
    app->add_option("--samples", c.samples, "transient output samples");
    app->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
    app->add_option("--seed", c.seed, "reserved");
    app->add_option("--format", c.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
    app->add_option("--out", c.out, "output file (default stdout)");
    app->add_option("--config", c.config, "JSON file with flag values; flags override it");
}

std::string scalar_text(const nlohmann::json& v) {
    if (v.is_string()) {
        return v.get<std::string>();
    }
    if (v.is_number_integer()) {
        return std::to_string(v.get<long long>());
    }
    if (v.is_number()) {
        return format(v.get<double>());
    }
    if (v.is_boolean()) {
        return v.get<bool>() ? "true" : "false";
    }
    throw ValidationError("config: unsupported value " + v.dump());
}

// Appends "--key value" for every config-file entry not given on the command line.
std::vector<std::string> merge_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        }
    }
    if (path.empty()) {
        return args;
    }
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("config: cannot open " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config: " + path + ": " + e.what());
    }
    if (!j.is_object()) {
        throw ValidationError("config: " + path + " must hold a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        // Echo-only keys: the subcommand is given on the command line and omega is the unit.
        if (key == "command" || key == "units") {
            continue;
        }
        if (key == "omega") {
            // Echoed configs carry every value as a string.
            const bool one = value.is_number() ? value.get<double>() == 1.0
                                               : value.is_string() && io::parse_double(value.get<std::string>()) == 1.0;
            if (!one) {
                throw ValidationError("config: omega is the frequency unit and must be 1");
            }
            continue;
        }
        const std::string flag = "--" + key;
        auto given = [&](const std::string& f) {
            return std::any_of(args.begin(), args.end(), [&](const std::string& a) { return a == f || a.rfind(f + "=", 0) == 0; });
        };
        // A plain value and its log grid are alternatives; the command line wins over the file.
        static const std::map<std::string, std::string> rival = {
            {"r", "--r-log"}, {"r-log", "--r"}, {"gamma", "--gamma-log"}, {"gamma-log", "--gamma"}};
        const auto it = rival.find(key);
        if (given(flag) || (it != rival.end() && given(it->second))) {
            continue;
        }
        std::string text;
        if (value.is_array()) {
            for (std::size_t i = 0; i < value.size(); ++i) {
                text += (i ? "," : "") + scalar_text(value[i]);
            }
        } else {
            text = scalar_text(value);
        }
        args.push_back(flag);
        args.push_back(text);
    }
    return args;
}

} // namespace

std::vector<double> log_grid(const std::string& spec) {
    const auto dots = spec.find("..");
    const auto colon = spec.find(':');
    if (dots == std::string::npos || colon == std::string::npos || colon < dots) {
        throw ValidationError("log grid must look like a..b:N, got '" + spec + "'");
    }
    double a = 0.0;
    double b = 0.0;
    int n = 0;
    try {
        a = io::parse_double(spec.substr(0, dots));
        b = io::parse_double(spec.substr(dots + 2, colon - dots - 2));
        n = std::stoi(spec.substr(colon + 1));
    } catch (const std::logic_error&) {
        throw ValidationError("log grid must look like a..b:N, got '" + spec + "'");
    }
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b) || n < 1) {
        throw ValidationError("log grid needs positive finite ends and N >= 1: '" + spec + "'");
    }
    if (n == 1) {
        return {a};
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    const double la = std::log(a);
    const double lb = std::log(b);
    for (int i = 0; i < n; ++i) {
        out[i] = std::exp(la + (lb - la) * i / (n - 1));
    }
    out.front() = a;
    out.back() = b;
    return out;
}

io::KeyValues echo(const RunConfig& cfg) {
    io::KeyValues kv = {
        {"command", cfg.command},
        {"units", "omega"},
        {"omega", format(cfg.p.omega)},
        {"omega0", format(cfg.p.omega0)},
        {"lambda", format(cfg.p.lambda)},
        {"g", cfg.g_values.empty() ? format(cfg.p.g) : join(cfg.g_values)},
        {"omega0-detuning", format(cfg.gp.delta)},
        {"epsilon", format(cfg.gp.epsilon)},
        {"kappa", format(cfg.gp.kappa)},
        {"method", cfg.method},
        {"branch", cfg.branch},
        {"n-max", format(cfg.n_max)},
        {"n-fock", format(cfg.n_fock)},
        {"interaction", cfg.interaction},
        {"jump", cfg.jump},
        {"bath-ratio", format(cfg.bath_ratio)},
        {"t", format(cfg.t)},
        {"t-final", format(cfg.t_final)},
        {"samples", format(cfg.samples)},
        {"seed", std::to_string(cfg.seed)},
    };
    // A log grid replaces the plain value, so that the echo can be fed back verbatim.
    if (cfg.r_log.empty()) {
        kv.emplace_back("r", cfg.r_values.empty() ? format(cfg.gp.r) : join(cfg.r_values));
    } else {
        kv.emplace_back("r-log", cfg.r_log);
    }
    if (cfg.gamma_log.empty()) {
        kv.emplace_back("gamma", cfg.gamma_values.empty() ? format(cfg.gp.Gamma) : join(cfg.gamma_values));
    } else {
        kv.emplace_back("gamma-log", cfg.gamma_log);
    }
    return kv;
}

io::Table execute(const RunConfig& cfg) {
    io::Table t;
    if (cfg.command == "spectrum") {
        t = spectrum_cmd(cfg);
    } else if (cfg.command == "blockade") {
        t = blockade_cmd(cfg);
    } else if (cfg.command == "gain-loss") {
        t = gain_loss_cmd(cfg);
    } else if (cfg.command == "steady-state") {
        t = steady_state_cmd(cfg);
    } else if (cfg.command == "sweep") {
        t = sweep_cmd(cfg);
    } else if (cfg.command == "regime-map") {
        t = regime_map_cmd(cfg);
    } else if (cfg.command == "transient") {
        t = transient_cmd(cfg);
    } else {
        throw ValidationError("unknown command '" + cfg.command + "'");
    }
    t.version = FOCKLASER_VERSION;
    t.config = echo(cfg);
    return t;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Fock laser: DSC spectrum and photon statistics"};
    app.set_version_flag("--version", std::string(FOCKLASER_VERSION));
    app.require_subcommand(1);
    for (const auto& sc : kCommands) {
        add_options(app.add_subcommand(sc.name, sc.help), cfg);
    }

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = merge_config(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o;
        std::ostringstream e2;
        const int code = app.exit(e, o, e2);
        out << o.str();
        err << e2.str();
        return code == 0 ? 0 : 2;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    cfg.command = app.get_subcommands().front()->get_name();
    try {
        if (cfg.g_values.size() == 1 || (cfg.command != "sweep" && !cfg.g_values.empty())) {
            if (cfg.g_values.size() != 1) {
                throw ValidationError("--g takes one value except for sweep");
            }
            cfg.p.g = cfg.g_values.front();
            cfg.g_values.clear();
        }
        if (cfg.command != "sweep" && cfg.command != "regime-map" && (cfg.r_values.size() > 1 || !cfg.r_log.empty())) {
            throw ValidationError("--r takes one value except for sweep and regime-map");
        }
        if (cfg.r_values.size() == 1) {
            cfg.gp.r = cfg.r_values.front();
            cfg.r_values.clear();
        }
        if (cfg.command != "regime-map" && (cfg.gamma_values.size() > 1 || !cfg.gamma_log.empty())) {
            throw ValidationError("--gamma takes one value except for regime-map");
        }
        if (cfg.gamma_values.size() == 1) {
            cfg.gp.Gamma = cfg.gamma_values.front();
            cfg.gamma_values.clear();
        }
        if (cfg.n_max < 0 || cfg.n_fock < 0) {
            throw ValidationError("--n-max and --n-fock must be >= 0");
        }
        cfg.p.validate();
        for (const auto& w : cfg.gp.validate(cfg.p)) {
            err << "warning: " << w << '\n';
        }

        const auto start = std::chrono::steady_clock::now();
        io::Table t = execute(cfg);
        t.duration = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        std::ofstream file;
        if (!cfg.out.empty()) {
            file.open(cfg.out, std::ios::binary);
            if (!file) {
                throw ValidationError("cannot write " + cfg.out);
            }
        }
        std::ostream& sink = cfg.out.empty() ? out : file;
        if (cfg.format == "json") {
            sink << io::to_json(t);
        } else {
            io::write_csv(sink, t);
        }
        sink.flush();
        if (!sink) {
            throw NumericalError("write failed");
        }
        return 0;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "numerical error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace focklaser::cli
