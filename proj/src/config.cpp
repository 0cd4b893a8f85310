#include "sgl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace sgl {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string format_double(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

template <class T>
std::string join(const std::vector<T>& xs, const std::function<std::string(const T&)>& fmt, const char* sep = ", ") {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += sep;
        out += fmt(xs[i]);
    }
    return out;
}

double parse_double(const std::string& s, int line) {
    // "a/b" is accepted so dt can be written as 1/256.
    if (const auto slash = s.find('/'); slash != std::string::npos) {
        const double num = parse_double(trim(s.substr(0, slash)), line);
        const double den = parse_double(trim(s.substr(slash + 1)), line);
        if (den == 0.0) throw ConfigError(line, "division by zero in '" + s + "'");
        return num / den;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError(line, "expected a number, got '" + s + "'");
    }
    if (used != s.size()) throw ConfigError(line, "expected a number, got '" + s + "'");
    return v;
}

long long parse_int(const std::string& s, int line) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError(line, "expected an integer, got '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& s, int line) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ConfigError(line, "expected a nonnegative integer, got '" + s + "'");
    return v;
}

std::vector<double> parse_doubles(const std::string& s, int line) {
    std::vector<double> out;
    for (const auto& item : split(s, ',')) out.push_back(parse_double(item, line));
    return out;
}

std::vector<int> parse_ints(const std::string& s, int line) {
    std::vector<int> out;
    for (const auto& item : split(s, ',')) out.push_back(static_cast<int>(parse_int(item, line)));
    return out;
}

bool parse_bool_positive(long long v, int line, const char* what) {
    if (v <= 0) throw ConfigError(line, std::string(what) + " must be positive");
    return true;
}

constexpr const char* kHeaderMarker = "# sglcheck-config";
constexpr const char* kHeaderEnd = "# end-config";

}  // namespace

ConfigError::ConfigError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + message : "config: " + message),
      line_(line) {}

SpectralField InitialConditionSpec::build(int n_modes, double gamma, std::uint64_t seed) const {
    if (text == "zero") return SpectralField::zero(n_modes);
    if (text.rfind("scaled-random:", 0) == 0) {
        const double r = parse_double(trim(text.substr(14)), 0);
        return scaled_random_field(n_modes, gamma, r, seed);
    }
    if (text.rfind("coeffs:", 0) == 0) {
        std::vector<double> c = parse_doubles(text.substr(7), 0);
        if (c.size() > static_cast<std::size_t>(2 * n_modes + 1))
            throw ConfigError(0, "initial condition '" + text + "' has more coefficients than 2N+1");
        c.resize(static_cast<std::size_t>(2 * n_modes + 1), 0.0);
        return SpectralField(n_modes, std::move(c));
    }
    throw ConfigError(0, "unknown initial condition preset '" + text + "'");
}

NoiseSpectrum RunConfig::spectrum() const {
    NoiseSpectrum s;
    s.alpha = alpha;
    s.beta = beta;
    s.c1 = c1_const;
    s.c2 = c2_const;
    s.k_star = k_star;
    s.q.assign(static_cast<std::size_t>(n_modes) + 1, 0.0);
    for (int k = k_star + 1; k <= n_modes; ++k) s.q[static_cast<std::size_t>(k)] = std::pow(k, -2.0 * alpha);
    for (const auto& [k, v] : q_overrides) {
        if (k < 0 || k > n_modes) throw ConfigError(0, "q override for mode " + std::to_string(k) + " is out of range");
        s.q[static_cast<std::size_t>(k)] = v;
    }
    return s;
}

SimulationParams RunConfig::simulation_params() const {
    SimulationParams p;
    p.n_modes = n_modes;
    p.dt = dt;
    p.t_final = t_final;
    if (poly.empty())
        p.poly.reset();
    else
        p.poly = DriftPolynomial(poly);
    p.spectrum = spectrum();
    p.seed = seed;
    p.blowup_guard = blowup_guard;
    return p;
}

EnsembleSpec RunConfig::ensemble() const {
    EnsembleSpec e;
    e.params = simulation_params();
    for (std::size_t i = 0; i < initial.size(); ++i) e.initial_conditions.push_back(initial[i].build(n_modes, gamma, ic_seed + i));
    e.n_traj = n_traj;
    e.gamma = gamma;
    e.p = p;
    e.threads = threads;
    return e;
}

std::string RunConfig::to_text() const {
    const std::function<std::string(const double&)> fd = [](const double& x) { return format_double(x); };
    const std::function<std::string(const int&)> fi = [](const int& x) { return std::to_string(x); };
    std::ostringstream os;
    os << "[model]\n";
    os << "n_modes = " << n_modes << '\n';
    os << "dt = " << format_double(dt) << '\n';
    os << "t_final = " << format_double(t_final) << '\n';
    os << "poly = " << (poly.empty() ? std::string("linear") : join(poly, fd)) << '\n';
    os << "alpha = " << format_double(alpha) << '\n';
    os << "beta = " << format_double(beta) << '\n';
    os << "c1_const = " << format_double(c1_const) << '\n';
    os << "c2_const = " << format_double(c2_const) << '\n';
    os << "k_star = " << k_star << '\n';
    if (!q_overrides.empty()) {
        os << "q = ";
        for (std::size_t i = 0; i < q_overrides.size(); ++i)
            os << (i ? ", " : "") << q_overrides[i].first << ':' << format_double(q_overrides[i].second);
        os << '\n';
    }
    os << "seed = " << seed << '\n';
    os << "blowup_guard = " << format_double(blowup_guard) << '\n';
    os << "\n[ensemble]\n";
    os << "initial = ";
    for (std::size_t i = 0; i < initial.size(); ++i) os << (i ? "; " : "") << initial[i].text;
    os << '\n';
    os << "n_traj = " << n_traj << '\n';
    os << "gamma = " << format_double(gamma) << '\n';
    os << "p = " << format_double(p) << '\n';
    os << "ic_seed = " << ic_seed << '\n';
    os << "\n[moments]\n";
    os << "t = " << format_double(moment_time) << '\n';
    os << "ratio_threshold = " << format_double(ratio_threshold) << '\n';
    os << "\n[mixing]\n";
    os << "t_max = " << t_max << '\n';
    os << "n_bootstrap = " << n_bootstrap << '\n';
    os << "bins = " << bins << '\n';
    os << "\n[simulate]\n";
    os << "n_traj = " << simulate_traj << '\n';
    os << "\n[doeblin]\n";
    if (!kernel_path.empty()) os << "kernel = " << kernel_path << '\n';
    if (!K.empty()) os << "K = " << join(K, fi) << '\n';
    os << "m = " << m << '\n';
    os << "mu0 = " << mu0 << '\n';
    os << "horizon = " << horizon << '\n';
    os << "\n[odecheck]\n";
    os << "q = " << join(ode_q, fi) << '\n';
    os << "c = " << join(ode_c, fd) << '\n';
    os << "y0 = " << join(ode_y0, fd) << '\n';
    os << "t = " << join(ode_t, fd) << '\n';
    return os.str();
}

std::string RunConfig::header() const {
    std::ostringstream os;
    os << kHeaderMarker << '\n';
    std::istringstream in(to_text());
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) os << "# " << line << '\n';
    os << kHeaderEnd << '\n';
    return os.str();
}

RunConfig parse_config(const std::string& raw) {
    std::string text = raw;
    if (raw.rfind(kHeaderMarker, 0) == 0) {
        // Output file: read the header block back.
        std::istringstream in(raw);
        std::string line;
        std::ostringstream body;
        std::getline(in, line);
        while (std::getline(in, line) && line != kHeaderEnd) body << (line.rfind("# ", 0) == 0 ? line.substr(2) : "") << '\n';
        text = body.str();
    }

    RunConfig cfg;
    using Setter = std::function<void(const std::string&, int)>;
    std::map<std::string, std::map<std::string, Setter>> table;
    auto& model = table["model"];
    model["n_modes"] = [&](const std::string& v, int l) {
        cfg.n_modes = static_cast<int>(parse_int(v, l));
        parse_bool_positive(cfg.n_modes, l, "n_modes");
    };
    model["dt"] = [&](const std::string& v, int l) { cfg.dt = parse_double(v, l); };
    model["t_final"] = [&](const std::string& v, int l) { cfg.t_final = parse_double(v, l); };
    model["poly"] = [&](const std::string& v, int l) {
        if (v == "linear") {
            cfg.poly.clear();
            return;
        }
        cfg.poly = parse_doubles(v, l);
        try {
            DriftPolynomial check(cfg.poly);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(l, e.what());
        }
    };
    model["alpha"] = [&](const std::string& v, int l) { cfg.alpha = parse_double(v, l); };
    model["beta"] = [&](const std::string& v, int l) { cfg.beta = parse_double(v, l); };
    model["c1_const"] = [&](const std::string& v, int l) { cfg.c1_const = parse_double(v, l); };
    model["c2_const"] = [&](const std::string& v, int l) { cfg.c2_const = parse_double(v, l); };
    model["k_star"] = [&](const std::string& v, int l) { cfg.k_star = static_cast<int>(parse_int(v, l)); };
    model["q"] = [&](const std::string& v, int l) {
        cfg.q_overrides.clear();
        for (const auto& item : split(v, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) throw ConfigError(l, "q overrides are k:value pairs, got '" + item + "'");
            cfg.q_overrides.emplace_back(static_cast<int>(parse_int(trim(item.substr(0, colon)), l)),
                                         parse_double(trim(item.substr(colon + 1)), l));
        }
    };
    model["seed"] = [&](const std::string& v, int l) { cfg.seed = parse_u64(v, l); };
    model["blowup_guard"] = [&](const std::string& v, int l) { cfg.blowup_guard = parse_double(v, l); };

    auto& ens = table["ensemble"];
    ens["initial"] = [&](const std::string& v, int l) {
        cfg.initial.clear();
        for (const auto& item : split(v, ';')) {
            InitialConditionSpec ic{item};
            try {
                (void)ic.build(1, 0.0, 0);
            } catch (const ConfigError& e) {
                // Size errors depend on n_modes and are checked at build time.
                if (item.rfind("coeffs:", 0) != 0) throw ConfigError(l, e.what());
            }
            cfg.initial.push_back(ic);
        }
        if (cfg.initial.empty()) throw ConfigError(l, "need at least one initial condition");
    };
    ens["n_traj"] = [&](const std::string& v, int l) {
        const auto n = parse_int(v, l);
        parse_bool_positive(n, l, "n_traj");
        cfg.n_traj = static_cast<std::size_t>(n);
    };
    ens["gamma"] = [&](const std::string& v, int l) { cfg.gamma = parse_double(v, l); };
    ens["p"] = [&](const std::string& v, int l) { cfg.p = parse_double(v, l); };
    ens["ic_seed"] = [&](const std::string& v, int l) { cfg.ic_seed = parse_u64(v, l); };

    auto& mom = table["moments"];
    mom["t"] = [&](const std::string& v, int l) { cfg.moment_time = parse_double(v, l); };
    mom["ratio_threshold"] = [&](const std::string& v, int l) { cfg.ratio_threshold = parse_double(v, l); };

    auto& mix = table["mixing"];
    mix["t_max"] = [&](const std::string& v, int l) { cfg.t_max = static_cast<int>(parse_int(v, l)); };
    mix["n_bootstrap"] = [&](const std::string& v, int l) { cfg.n_bootstrap = static_cast<int>(parse_int(v, l)); };
    mix["bins"] = [&](const std::string& v, int l) { cfg.bins = static_cast<int>(parse_int(v, l)); };

    table["simulate"]["n_traj"] = [&](const std::string& v, int l) {
        const auto n = parse_int(v, l);
        parse_bool_positive(n, l, "n_traj");
        cfg.simulate_traj = static_cast<std::size_t>(n);
    };

    auto& doe = table["doeblin"];
    doe["kernel"] = [&](const std::string& v, int) { cfg.kernel_path = v; };
    doe["K"] = [&](const std::string& v, int l) { cfg.K = parse_ints(v, l); };
    doe["m"] = [&](const std::string& v, int l) { cfg.m = static_cast<int>(parse_int(v, l)); };
    doe["mu0"] = [&](const std::string& v, int) { cfg.mu0 = v; };
    doe["horizon"] = [&](const std::string& v, int l) { cfg.horizon = static_cast<int>(parse_int(v, l)); };

    auto& ode = table["odecheck"];
    ode["q"] = [&](const std::string& v, int l) { cfg.ode_q = parse_ints(v, l); };
    ode["c"] = [&](const std::string& v, int l) { cfg.ode_c = parse_doubles(v, l); };
    ode["y0"] = [&](const std::string& v, int l) { cfg.ode_y0 = parse_doubles(v, l); };
    ode["t"] = [&](const std::string& v, int l) { cfg.ode_t = parse_doubles(v, l); };

    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError(lineno, "unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (!table.count(section)) throw ConfigError(lineno, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError(lineno, "expected key = value");
        if (section.empty()) throw ConfigError(lineno, "key outside of any [section]");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        const auto& keys = table[section];
        const auto it = keys.find(key);
        if (it == keys.end()) throw ConfigError(lineno, "unknown key '" + key + "' in [" + section + "]");
        if (value.empty()) throw ConfigError(lineno, "empty value for '" + key + "'");
        it->second(value, lineno);
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace sgl
