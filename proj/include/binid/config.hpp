#ifndef BINID_CONFIG_HPP
#define BINID_CONFIG_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "binid/errors.hpp"
#include "binid/estimator.hpp"
#include "binid/linalg.hpp"
#include "binid/noise.hpp"

namespace binid {

/// Full experiment description: plant, excitation, estimator, controller and
/// run settings. Mirrors the config-file keys one to one.
struct ExperimentConfig {
    // plant
    Vec theta_true;
    std::string noise_family = "gaussian-constant"; // or "gaussian-logdecay"
    double noise_sigma = 1.0;
    double threshold_c = 0.0;

    // excitation
    std::string excitation_kind = "decaying-gaussian"; // constant-gaussian | controller | file
    double excitation_exponent = 0.25;
    std::string excitation_file;

    // parameter set and estimator
    Vec domain_lo;
    Vec domain_hi;
    Vec theta0;
    double beta0 = 0.1;
    std::string p0_kind = "identity"; // "identity" or "diag"
    Vec p0_diag;
    double bound_m = 1.0;
    double bound_c = 0.0;

    // control
    bool control_enabled = false;
    double y_star = 1.0;
    std::string y_star_file;
    double gain_floor = 0.3;

    // run
    long n = 100000;
    int seeds = 20;
    std::uint64_t base_seed = 1000;
    long stride = 0; // 0 = automatic (dense to 1e4, then every 10th)

    // output
    std::string out_dir;
    bool emit_plots = true;
};

namespace detail {

struct RawValue {
    std::string text;
    int line = 0;
};

inline std::string trim(const std::string& s)
{
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string strip_quotes(const std::string& s)
{
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        return s.substr(1, s.size() - 2);
    return s;
}

} // namespace detail

/// Flat key/value config text: one `key = value` per line with dotted keys,
/// optional `[section]` headers prefixing bare keys, `#` comments. Values are
/// strings, numbers, booleans or bracketed float lists.
class KeyValues {
public:
    static KeyValues parse_file(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open config file: " + path);
        std::stringstream buf;
        buf << in.rdbuf();
        return parse_text(buf.str());
    }

    static KeyValues parse_text(const std::string& text)
    {
        KeyValues kv;
        std::istringstream in(text);
        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos)
                line = line.substr(0, hash);
            line = detail::trim(line);
            if (line.empty())
                continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError("line " + std::to_string(lineno) +
                                      ": malformed section header");
                section = detail::trim(line.substr(1, line.size() - 2));
                continue;
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
            std::string key = detail::trim(line.substr(0, eq));
            const std::string val = detail::trim(line.substr(eq + 1));
            if (key.empty() || val.empty())
                throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
            if (!section.empty() && key.find('.') == std::string::npos)
                key = section + "." + key;
            if (kv.values_.count(key))
                throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key +
                                  "'");
            kv.values_[key] = detail::RawValue{val, lineno};
        }
        return kv;
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key) const
    {
        return detail::strip_quotes(raw(key).text);
    }

    double get_double(const std::string& key) const
    {
        const detail::RawValue& rv = raw(key);
        try {
            std::size_t pos = 0;
            const double v = std::stod(rv.text, &pos);
            if (pos != rv.text.size())
                throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(where(key) + ": expected a number, got '" + rv.text + "'");
        }
    }

    long get_long(const std::string& key) const
    {
        const detail::RawValue& rv = raw(key);
        try {
            std::size_t pos = 0;
            const long v = std::stol(rv.text, &pos);
            if (pos != rv.text.size())
                throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(where(key) + ": expected an integer, got '" + rv.text + "'");
        }
    }

    bool get_bool(const std::string& key) const
    {
        const std::string v = raw(key).text;
        if (v == "true")
            return true;
        if (v == "false")
            return false;
        throw ConfigError(where(key) + ": expected true or false, got '" + v + "'");
    }

    Vec get_vec(const std::string& key) const
    {
        const detail::RawValue& rv = raw(key);
        const std::string& t = rv.text;
        if (t.size() < 2 || t.front() != '[' || t.back() != ']')
            throw ConfigError(where(key) + ": expected a bracketed list, got '" + t + "'");
        Vec out;
        std::string inner = t.substr(1, t.size() - 2);
        std::istringstream in(inner);
        std::string item;
        while (std::getline(in, item, ',')) {
            item = detail::trim(item);
            if (item.empty())
                throw ConfigError(where(key) + ": empty list element");
            try {
                std::size_t pos = 0;
                out.push_back(std::stod(item, &pos));
                if (pos != item.size())
                    throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw ConfigError(where(key) + ": bad list element '" + item + "'");
            }
        }
        if (out.empty())
            throw ConfigError(where(key) + ": list must not be empty");
        return out;
    }

    std::vector<std::string> keys() const
    {
        std::vector<std::string> k;
        for (const auto& [key, _] : values_)
            k.push_back(key);
        return k;
    }

    std::string where(const std::string& key) const
    {
        return "line " + std::to_string(raw(key).line) + ": key '" + key + "'";
    }

private:
    const detail::RawValue& raw(const std::string& key) const
    {
        auto it = values_.find(key);
        if (it == values_.end())
            throw ConfigError("missing required key '" + key + "'");
        return it->second;
    }

    std::map<std::string, detail::RawValue> values_;
};

inline const std::vector<std::string>& known_config_keys()
{
    static const std::vector<std::string> keys = {
        "plant.theta",          "noise.family",       "noise.sigma",
        "threshold.c",          "excitation.kind",    "excitation.exponent",
        "excitation.file",      "domain.lo",          "domain.hi",
        "estimator.theta0",     "estimator.beta0",    "estimator.p0",
        "bounds.M",             "bounds.C",           "control.enabled",
        "control.y_star",       "control.y_star_file", "control.gain_floor",
        "run.n",                "run.seeds",          "run.base_seed",
        "run.stride",           "output.dir",         "output.emit_plots",
    };
    return keys;
}

/// Decode a parsed key/value table into an ExperimentConfig. Syntactic and
/// per-key type errors only; cross-field invariants live in build_experiment.
inline ExperimentConfig config_from_keyvalues(const KeyValues& kv)
{
    for (const std::string& key : kv.keys()) {
        const auto& known = known_config_keys();
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError(kv.where(key) + ": unknown key");
    }

    ExperimentConfig cfg;
    cfg.theta_true = kv.get_vec("plant.theta");
    cfg.noise_family = kv.get_string("noise.family");
    if (kv.has("noise.sigma"))
        cfg.noise_sigma = kv.get_double("noise.sigma");
    if (kv.has("threshold.c"))
        cfg.threshold_c = kv.get_double("threshold.c");
    cfg.excitation_kind = kv.get_string("excitation.kind");
    if (kv.has("excitation.exponent"))
        cfg.excitation_exponent = kv.get_double("excitation.exponent");
    if (kv.has("excitation.file"))
        cfg.excitation_file = kv.get_string("excitation.file");
    cfg.domain_lo = kv.get_vec("domain.lo");
    cfg.domain_hi = kv.get_vec("domain.hi");
    cfg.theta0 = kv.get_vec("estimator.theta0");
    cfg.beta0 = kv.get_double("estimator.beta0");
    if (kv.has("estimator.p0")) {
        const std::string raw = kv.get_string("estimator.p0");
        if (raw == "identity") {
            cfg.p0_kind = "identity";
        } else {
            cfg.p0_kind = "diag";
            cfg.p0_diag = kv.get_vec("estimator.p0");
        }
    }
    cfg.bound_m = kv.get_double("bounds.M");
    cfg.bound_c = kv.get_double("bounds.C");
    if (kv.has("control.enabled"))
        cfg.control_enabled = kv.get_bool("control.enabled");
    if (kv.has("control.y_star"))
        cfg.y_star = kv.get_double("control.y_star");
    if (kv.has("control.y_star_file"))
        cfg.y_star_file = kv.get_string("control.y_star_file");
    if (kv.has("control.gain_floor"))
        cfg.gain_floor = kv.get_double("control.gain_floor");
    cfg.n = kv.get_long("run.n");
    if (kv.has("run.seeds"))
        cfg.seeds = static_cast<int>(kv.get_long("run.seeds"));
    if (kv.has("run.base_seed"))
        cfg.base_seed = static_cast<std::uint64_t>(kv.get_long("run.base_seed"));
    if (kv.has("run.stride"))
        cfg.stride = kv.get_long("run.stride");
    if (kv.has("output.dir"))
        cfg.out_dir = kv.get_string("output.dir");
    if (kv.has("output.emit_plots"))
        cfg.emit_plots = kv.get_bool("output.emit_plots");
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path)
{
    return config_from_keyvalues(KeyValues::parse_file(path));
}

namespace detail {

inline std::string fmt_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_vec(const Vec& v)
{
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += ", ";
        s += fmt_double(v[i]);
    }
    return s + "]";
}

} // namespace detail

/// Write a config in the canonical sectioned layout; the result parses back
/// to the same ExperimentConfig.
inline void write_config(const ExperimentConfig& cfg, std::ostream& out)
{
    using detail::fmt_double;
    using detail::fmt_vec;
    out << "[plant]\n";
    out << "theta = " << fmt_vec(cfg.theta_true) << "\n\n";
    out << "[noise]\n";
    out << "family = \"" << cfg.noise_family << "\"\n";
    out << "sigma = " << fmt_double(cfg.noise_sigma) << "\n\n";
    out << "[threshold]\n";
    out << "c = " << fmt_double(cfg.threshold_c) << "\n\n";
    out << "[excitation]\n";
    out << "kind = \"" << cfg.excitation_kind << "\"\n";
    out << "exponent = " << fmt_double(cfg.excitation_exponent) << "\n";
    if (!cfg.excitation_file.empty())
        out << "file = \"" << cfg.excitation_file << "\"\n";
    out << "\n[domain]\n";
    out << "lo = " << fmt_vec(cfg.domain_lo) << "\n";
    out << "hi = " << fmt_vec(cfg.domain_hi) << "\n\n";
    out << "[estimator]\n";
    out << "theta0 = " << fmt_vec(cfg.theta0) << "\n";
    out << "beta0 = " << fmt_double(cfg.beta0) << "\n";
    if (cfg.p0_kind == "identity")
        out << "p0 = \"identity\"\n";
    else
        out << "p0 = " << fmt_vec(cfg.p0_diag) << "\n";
    out << "\n[bounds]\n";
    out << "M = " << fmt_double(cfg.bound_m) << "\n";
    out << "C = " << fmt_double(cfg.bound_c) << "\n\n";
    out << "[control]\n";
    out << "enabled = " << (cfg.control_enabled ? "true" : "false") << "\n";
    out << "y_star = " << fmt_double(cfg.y_star) << "\n";
    if (!cfg.y_star_file.empty())
        out << "y_star_file = \"" << cfg.y_star_file << "\"\n";
    out << "gain_floor = " << fmt_double(cfg.gain_floor) << "\n\n";
    out << "[run]\n";
    out << "n = " << cfg.n << "\n";
    out << "seeds = " << cfg.seeds << "\n";
    out << "base_seed = " << cfg.base_seed << "\n";
    out << "stride = " << cfg.stride << "\n\n";
    out << "[output]\n";
    if (!cfg.out_dir.empty())
        out << "dir = \"" << cfg.out_dir << "\"\n";
    out << "emit_plots = " << (cfg.emit_plots ? "true" : "false") << "\n";
}

inline void write_config_file(const ExperimentConfig& cfg, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write config file: " + path);
    write_config(cfg, out);
}

/// The three canned experiments: consistency under decaying excitation,
/// vanishing averaged regret under decaying noise, and adaptive tracking.
/// The M/C bounds and beta0 only shape the beta schedule; these values keep
/// the step size large enough for desk-scale horizons.
inline ExperimentConfig example_config(int id)
{
    ExperimentConfig cfg;
    switch (id) {
    case 1:
        cfg.theta_true = {0.5, -0.5};
        cfg.noise_family = "gaussian-constant";
        cfg.noise_sigma = 1.0;
        cfg.excitation_kind = "decaying-gaussian";
        cfg.excitation_exponent = 0.25;
        cfg.domain_lo = {-2.0, -2.0};
        cfg.domain_hi = {2.0, 2.0};
        cfg.theta0 = {1.0, -1.0};
        cfg.beta0 = 0.14;
        cfg.bound_m = 0.5;
        break;
    case 2:
        cfg.theta_true = {1.0, 1.0};
        cfg.noise_family = "gaussian-logdecay";
        cfg.noise_sigma = 1.0;
        cfg.excitation_kind = "decaying-gaussian";
        cfg.excitation_exponent = 0.25;
        cfg.domain_lo = {-3.0, -3.0};
        cfg.domain_hi = {3.0, 3.0};
        cfg.theta0 = {-2.0, 2.0};
        cfg.beta0 = 0.2;
        cfg.bound_m = 0.25;
        break;
    case 3:
        cfg.theta_true = {0.5, 0.8};
        cfg.noise_family = "gaussian-constant";
        cfg.noise_sigma = 1.0;
        cfg.excitation_kind = "controller";
        cfg.domain_lo = {-2.0, 0.3};
        cfg.domain_hi = {2.0, 2.0};
        cfg.theta0 = {1.0, 1.0};
        cfg.beta0 = 0.24;
        cfg.bound_m = 0.35;
        cfg.control_enabled = true;
        cfg.y_star = 1.0;
        cfg.gain_floor = 0.3;
        break;
    default:
        throw InvalidConfig("example id must be 1, 2 or 3");
    }
    cfg.threshold_c = 0.0;
    cfg.bound_c = 0.0;
    cfg.n = 100000;
    cfg.seeds = 20;
    cfg.base_seed = 1000;
    cfg.stride = 0;
    cfg.emit_plots = true;
    return cfg;
}

} // namespace binid

#endif // BINID_CONFIG_HPP
