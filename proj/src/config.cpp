#include "cavsync/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace cavsync {

std::string ConfigValue::type_name() const {
    switch (v.index()) {
        case 0: return "string";
        case 1: return "integer";
        case 2: return "float";
        case 3: return "boolean";
        default: return "array";
    }
}

std::string ConfigValue::to_toml() const {
    struct Visitor {
        std::string operator()(const std::string& s) const {
            std::string o = "\"";
            for (char c : s) {
                if (c == '"' || c == '\\') o += '\\';
                o += c;
            }
            return o + "\"";
        }
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(double d) const {
            if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
            std::string s = fmt::format("{:.17g}", d);
            if (s.find_first_of(".eE") == std::string::npos) s += ".0";
            return s;
        }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
        std::string operator()(const ConfigArray& a) const {
            std::string o = "[";
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (i) o += ", ";
                o += a[i].to_toml();
            }
            return o + "]";
        }
    };
    return std::visit(Visitor{}, v);
}

const ConfigEntry* ConfigDocument::find(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    if (s == sections.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
}

void ConfigDocument::set(const std::string& section, const std::string& key, ConfigEntry entry) {
    sections[section][key] = std::move(entry);
}

std::string ConfigDocument::to_toml() const {
    std::ostringstream o;
    if (const auto top = sections.find(""); top != sections.end()) {
        for (const auto& [k, e] : top->second) o << k << " = " << e.value.to_toml() << '\n';
    }
    for (const auto& [s, keys] : sections) {
        if (s.empty()) continue;
        o << '\n' << '[' << s << "]\n";
        for (const auto& [k, e] : keys) o << k << " = " << e.value.to_toml() << '\n';
    }
    return o.str();
}

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
    if (line > 0) throw ConfigError(fmt::format("line {}: {}", line, msg));
    throw ConfigError(msg);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool bare_key(const std::string& k) {
    return !k.empty() && std::all_of(k.begin(), k.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-';
    });
}

// Strips a trailing comment that is not inside a string.
std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_str && c == '\\') {
            ++i;
            continue;
        }
        if (c == '"') in_str = !in_str;
        if (c == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

class ValueParser {
public:
    ValueParser(const std::string& s, int line) : s_(s), line_(line) {}

    ConfigValue parse_all() {
        ConfigValue v = parse();
        skip_ws();
        if (pos_ != s_.size()) fail(line_, fmt::format("unexpected text '{}'", s_.substr(pos_)));
        return v;
    }

private:
    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }

    ConfigValue parse() {
        skip_ws();
        if (pos_ >= s_.size()) fail(line_, "missing value");
        const char c = s_[pos_];
        if (c == '"') return parse_string();
        if (c == '[') return parse_array();
        return parse_scalar();
    }

    ConfigValue parse_string() {
        ++pos_;
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            char c = s_[pos_++];
            if (c == '\\') {
                if (pos_ >= s_.size()) fail(line_, "unterminated escape");
                const char e = s_[pos_++];
                switch (e) {
                    case 'n': c = '\n'; break;
                    case 't': c = '\t'; break;
                    case '"': c = '"'; break;
                    case '\\': c = '\\'; break;
                    default: fail(line_, fmt::format("unknown escape '\\{}'", e));
                }
            }
            out += c;
        }
        if (pos_ >= s_.size()) fail(line_, "unterminated string");
        ++pos_;
        return ConfigValue{out};
    }

    ConfigValue parse_array() {
        ++pos_;
        ConfigArray items;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return ConfigValue{items};
        }
        while (true) {
            items.push_back(parse());
            skip_ws();
            if (pos_ >= s_.size()) fail(line_, "unterminated array");
            if (s_[pos_] == ',') {
                ++pos_;
                skip_ws();
                if (pos_ < s_.size() && s_[pos_] == ']') {
                    ++pos_;
                    break;
                }
                continue;
            }
            if (s_[pos_] == ']') {
                ++pos_;
                break;
            }
            fail(line_, "expected ',' or ']' in array");
        }
        return ConfigValue{items};
    }

    ConfigValue parse_scalar() {
        const auto end = s_.find_first_of(",] \t", pos_);
        std::string tok = s_.substr(pos_, end == std::string::npos ? std::string::npos : end - pos_);
        pos_ = end == std::string::npos ? s_.size() : end;
        if (tok == "true") return ConfigValue{true};
        if (tok == "false") return ConfigValue{false};
        if (tok == "inf" || tok == "+inf") return ConfigValue{std::numeric_limits<double>::infinity()};
        if (tok == "-inf") return ConfigValue{-std::numeric_limits<double>::infinity()};
        std::string clean;
        for (std::size_t i = 0; i < tok.size(); ++i) {
            if (tok[i] == '_') {
                if (i == 0 || i + 1 == tok.size() || !std::isdigit(static_cast<unsigned char>(tok[i - 1])) ||
                    !std::isdigit(static_cast<unsigned char>(tok[i + 1]))) {
                    fail(line_, fmt::format("malformed number '{}'", tok));
                }
                continue;
            }
            clean += tok[i];
        }
        if (clean.empty()) fail(line_, "missing value");
        const bool is_float = clean.find_first_of(".eE") != std::string::npos;
        try {
            std::size_t used = 0;
            if (is_float) {
                const double d = std::stod(clean, &used);
                if (used == clean.size()) return ConfigValue{d};
            } else {
                const long long i = std::stoll(clean, &used);
                if (used == clean.size()) return ConfigValue{static_cast<std::int64_t>(i)};
            }
        } catch (const std::exception&) {
        }
        fail(line_, fmt::format("cannot parse value '{}' (strings need double quotes)", tok));
    }

    const std::string& s_;
    int line_;
    std::size_t pos_ = 0;
};

}  // namespace

ConfigValue parse_config_value(const std::string& text, int line) {
    return ValueParser(trim(text), line).parse_all();
}

ConfigDocument parse_config_text(const std::string& text) {
    ConfigDocument doc;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int ln = 0;
    std::map<std::string, int> seen_sections;
    while (std::getline(in, raw)) {
        ++ln;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(ln, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!bare_key(section)) fail(ln, fmt::format("invalid section name '{}'", section));
            if (const auto it = seen_sections.find(section); it != seen_sections.end()) {
                fail(ln, fmt::format("duplicate section [{}], first defined on line {}", section, it->second));
            }
            seen_sections[section] = ln;
            doc.sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(ln, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (!bare_key(key)) fail(ln, fmt::format("invalid key '{}'", key));
        if (doc.find(section, key)) fail(ln, fmt::format("duplicate key '{}'", key));
        doc.set(section, key, ConfigEntry{parse_config_value(line.substr(eq + 1), ln), ln});
    }
    return doc;
}

void apply_override(ConfigDocument& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) fail(0, fmt::format("override '{}' needs section.key=value", assignment));
    const std::string path = trim(assignment.substr(0, eq));
    const auto dot = path.find('.');
    const std::string section = dot == std::string::npos ? "" : path.substr(0, dot);
    const std::string key = dot == std::string::npos ? path : path.substr(dot + 1);
    if (!bare_key(key) || (!section.empty() && !bare_key(section))) {
        fail(0, fmt::format("override '{}' has an invalid key", assignment));
    }
    std::string value = trim(assignment.substr(eq + 1));
    ConfigValue v;
    try {
        v = parse_config_value(value, 0);
    } catch (const ConfigError&) {
        // Bare words on the command line are taken as strings.
        v = ConfigValue{value};
    }
    doc.set(section, key, ConfigEntry{v, 0});
}

const char* to_string(RunMode m) {
    switch (m) {
        case RunMode::Transient: return "transient";
        case RunMode::Steady: return "steady";
        case RunMode::Sweep: return "sweep";
        case RunMode::OracleCompare: return "oracle-compare";
        case RunMode::Analyze: return "analyze";
    }
    return "unknown";
}

RunMode parse_run_mode(const std::string& s) {
    for (auto m : {RunMode::Transient, RunMode::Steady, RunMode::Sweep, RunMode::OracleCompare,
                   RunMode::Analyze}) {
        if (s == to_string(m)) return m;
    }
    throw ConfigError(fmt::format("unknown run mode '{}'", s));
}

namespace {

enum ModeBit : unsigned {
    kT = 1u << 0,
    kS = 1u << 1,
    kW = 1u << 2,
    kO = 1u << 3,
    kA = 1u << 4,
    kNone = 0,
};

unsigned bit(RunMode m) { return 1u << static_cast<unsigned>(m); }

enum class Type { String, Int, Float, Bool, FloatArray, StringOrInt };

struct KeyDef {
    const char* section;
    const char* key;
    Type type;
    unsigned required;
    ConfigValue fallback;  // ignored when the key is required for the mode
    bool has_default = true;
};

ConfigValue S(const char* s) { return ConfigValue{std::string(s)}; }
ConfigValue I(std::int64_t i) { return ConfigValue{i}; }
ConfigValue F(double d) { return ConfigValue{d}; }
ConfigValue B(bool b) { return ConfigValue{b}; }
ConfigValue NoDefault() { return ConfigValue{}; }

const std::vector<KeyDef>& schema() {
    static const std::vector<KeyDef> defs = {
        {"", "units", Type::String, kT | kS | kW | kO | kA, NoDefault(), false},
        {"run", "mode", Type::String, kT | kS | kW | kO | kA, NoDefault(), false},
        {"run", "output_dir", Type::String, kNone, S("out")},
        {"run", "threads", Type::Int, kNone, I(1)},

        {"physics", "kappa", Type::Float, kT | kS | kW | kO, F(0.0)},
        {"physics", "gamma", Type::Float, kT | kS | kW | kO, F(0.0)},
        {"physics", "gamma_phi", Type::Float, kNone, F(0.0)},
        {"physics", "eta", Type::Float, kNone, F(0.0)},
        {"physics", "delta_c", Type::Float, kNone, F(0.0)},
        {"physics", "g", Type::Float, kT | kS | kW | kO, F(0.0)},

        {"spectrum", "kind", Type::String, kNone, S("gaussian")},
        {"spectrum", "n_classes", Type::Int, kT, I(1)},
        {"spectrum", "total_emitters", Type::Int, kT, I(1)},
        {"spectrum", "center", Type::Float, kNone, F(0.0)},
        {"spectrum", "sigma", Type::Float, kNone, F(0.0)},
        {"spectrum", "span_sigmas", Type::Float, kNone, F(2.5)},
        {"spectrum", "delta_max", Type::Float, kNone, F(0.0)},
        {"spectrum", "probe_floor", Type::Bool, kNone, B(false)},

        {"drive", "amplitude", Type::Float, kNone, F(0.0)},
        {"drive", "t_on", Type::Float, kNone, F(0.0)},
        {"drive", "t_off", Type::Float, kNone, F(0.0)},

        {"time", "t_start", Type::Float, kNone, F(0.0)},
        {"time", "t_end", Type::Float, kT | kO, F(0.0)},
        {"time", "dt_output", Type::Float, kT | kO, F(0.0)},

        {"integrator", "rel_tol", Type::Float, kNone, F(1e-8)},
        {"integrator", "abs_tol", Type::Float, kNone, F(1e-10)},
        {"integrator", "max_step", Type::Float, kNone, F(std::numeric_limits<double>::infinity())},
        {"integrator", "initial_step", Type::Float, kNone, F(0.0)},
        {"integrator", "method", Type::String, kNone, S("dopri5")},
        {"integrator", "dense", Type::String, kNone, S("hermite")},
        {"integrator", "max_steps", Type::Int, kNone, I(50'000'000)},

        {"model", "az_ordering", Type::String, kNone, S("normal_ordered")},
        {"model", "kernel", Type::String, kNone, S("auto")},

        {"output", "coherence_row", Type::StringOrInt, kNone, S("auto")},

        {"steady", "ss_tol", Type::Float, kNone, F(1e-8)},
        {"steady", "t_max", Type::Float, kNone, F(0.0)},
        {"steady", "n_a", Type::Int, kS | kW, I(1)},
        {"steady", "n_b", Type::Int, kS | kW, I(1)},
        {"steady", "convention", Type::String, kNone, S("symmetric")},
        {"steady", "delta", Type::Float, kNone, F(0.0)},
        {"steady", "initial", Type::String, kNone, S("ground")},
        {"steady", "initial_sz", Type::Float, kNone, F(-0.8)},

        {"sweep", "eta", Type::FloatArray, kW, NoDefault(), false},
        {"sweep", "delta", Type::FloatArray, kW, NoDefault(), false},

        {"oracle", "fock_cutoff", Type::Int, kNone, I(2)},
        {"oracle", "emitter_deltas", Type::FloatArray, kO, NoDefault(), false},
        {"oracle", "adaptive", Type::Bool, kNone, B(true)},
        {"oracle", "change_tol", Type::Float, kNone, F(1e-6)},

        {"analysis", "input_dir", Type::String, kA, S("")},
        {"analysis", "rabi_class", Type::Int, kNone, I(-1)},
        {"analysis", "window_start", Type::Float, kNone, F(-1.0)},
        {"analysis", "window_end", Type::Float, kNone, F(-1.0)},
        {"analysis", "rabi_method", Type::String, kNone, S("peak_spacing")},
        {"analysis", "min_prominence", Type::Float, kNone, F(0.05)},
        {"analysis", "sideband_exclusion_kappa", Type::Float, kNone, F(5.0)},
        {"analysis", "sideband_threshold", Type::Float, kNone, F(1e-9)},
        {"analysis", "sideband_prominence", Type::Float, kNone, F(2.0)},
        {"analysis", "sideband_window_start", Type::Float, kNone, F(-1.0)},
        {"analysis", "sideband_window_end", Type::Float, kNone, F(-1.0)},
    };
    return defs;
}

std::string qualified(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
}

const char* type_label(Type t) {
    switch (t) {
        case Type::String: return "a string";
        case Type::Int: return "an integer";
        case Type::Float: return "a number";
        case Type::Bool: return "a boolean";
        case Type::FloatArray: return "an array of numbers";
        case Type::StringOrInt: return "a string or an integer";
    }
    return "?";
}

bool matches(Type t, const ConfigValue& v) {
    switch (t) {
        case Type::String: return v.v.index() == 0;
        case Type::Int:
            if (v.v.index() == 1) return true;
            if (v.v.index() == 2) {
                const double d = std::get<double>(v.v);
                return std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.007e15;
            }
            return false;
        case Type::Float: return v.v.index() == 1 || v.v.index() == 2;
        case Type::Bool: return v.v.index() == 3;
        case Type::FloatArray:
            if (v.v.index() != 4) return false;
            for (const auto& e : std::get<ConfigArray>(v.v)) {
                if (!matches(Type::Float, e)) return false;
            }
            return true;
        case Type::StringOrInt: return v.v.index() == 0 || v.v.index() == 1;
    }
    return false;
}

class Reader {
public:
    explicit Reader(const ConfigDocument& doc) : doc_(doc) {}

    const ConfigEntry& entry(const char* s, const char* k) const {
        const auto* e = doc_.find(s, k);
        if (!e) throw ConfigError(fmt::format("missing required key '{}'", qualified(s, k)));
        return *e;
    }
    std::string str(const char* s, const char* k) const { return std::get<std::string>(entry(s, k).value.v); }
    double num(const char* s, const char* k) const {
        const auto& v = entry(s, k).value.v;
        return v.index() == 1 ? static_cast<double>(std::get<std::int64_t>(v)) : std::get<double>(v);
    }
    std::int64_t integer(const char* s, const char* k) const {
        const auto& v = entry(s, k).value.v;
        return v.index() == 1 ? std::get<std::int64_t>(v) : static_cast<std::int64_t>(std::get<double>(v));
    }
    bool boolean(const char* s, const char* k) const { return std::get<bool>(entry(s, k).value.v); }
    std::vector<double> array(const char* s, const char* k) const {
        std::vector<double> out;
        for (const auto& e : std::get<ConfigArray>(entry(s, k).value.v)) {
            out.push_back(e.v.index() == 1 ? static_cast<double>(std::get<std::int64_t>(e.v))
                                           : std::get<double>(e.v));
        }
        return out;
    }
    [[noreturn]] void bad(const char* s, const char* k, const std::string& msg) const {
        fail(entry(s, k).line, fmt::format("{}: {}", qualified(s, k), msg));
    }
    double nonneg(const char* s, const char* k) const {
        const double v = num(s, k);
        if (!(v >= 0.0) || !std::isfinite(v)) bad(s, k, "must be finite and >= 0");
        return v;
    }
    double positive(const char* s, const char* k) const {
        const double v = num(s, k);
        if (!(v > 0.0) || !std::isfinite(v)) bad(s, k, "must be finite and > 0");
        return v;
    }
    double finite(const char* s, const char* k) const {
        const double v = num(s, k);
        if (!std::isfinite(v)) bad(s, k, "must be finite");
        return v;
    }
    template <class E>
    E choose(const char* s, const char* k, std::initializer_list<std::pair<const char*, E>> opts) const {
        const std::string v = str(s, k);
        std::string names;
        for (const auto& [n, e] : opts) {
            if (v == n) return e;
            names += names.empty() ? n : std::string(", ") + n;
        }
        bad(s, k, fmt::format("'{}' is not one of {}", v, names));
    }

private:
    const ConfigDocument& doc_;
};

}  // namespace

RunConfig load_run_config(const ConfigDocument& input) {
    ConfigDocument doc = input;
    const auto& defs = schema();

    // Unknown sections and keys first, in file order.
    std::vector<std::pair<int, std::string>> unknown;
    for (const auto& [s, keys] : doc.sections) {
        for (const auto& [k, e] : keys) {
            const bool known = std::any_of(defs.begin(), defs.end(), [&](const KeyDef& d) {
                return s == d.section && k == d.key;
            });
            if (!known) unknown.emplace_back(e.line, qualified(s, k));
        }
    }
    if (!unknown.empty()) {
        std::sort(unknown.begin(), unknown.end());
        fail(unknown.front().first, fmt::format("unknown key '{}'", unknown.front().second));
    }

    const auto* units = doc.find("", "units");
    if (!units) throw ConfigError("missing required key 'units' (units = \"hz_over_2pi\")");
    if (units->value.v.index() != 0 || std::get<std::string>(units->value.v) != "hz_over_2pi") {
        fail(units->line, "units must be \"hz_over_2pi\"");
    }
    const auto* mode_e = doc.find("run", "mode");
    if (!mode_e) throw ConfigError("missing required key 'run.mode'");
    if (mode_e->value.v.index() != 0) fail(mode_e->line, "run.mode expects a string");
    RunMode mode;
    try {
        mode = parse_run_mode(std::get<std::string>(mode_e->value.v));
    } catch (const ConfigError& e) {
        fail(mode_e->line, e.what());
    }
    const unsigned mb = bit(mode);

    for (const auto& d : defs) {
        const auto* e = doc.find(d.section, d.key);
        if (e) {
            if (!matches(d.type, e->value)) {
                fail(e->line, fmt::format("key '{}' expects {}, found {}", qualified(d.section, d.key),
                                          type_label(d.type), e->value.type_name()));
            }
            continue;
        }
        if (d.required & mb) {
            throw ConfigError(fmt::format("missing required key '{}'", qualified(d.section, d.key)));
        }
        if (d.has_default) doc.set(d.section, d.key, ConfigEntry{d.fallback, 0});
    }

    const Reader r(doc);
    RunConfig c;
    c.mode = mode;
    c.output_dir = r.str("run", "output_dir");
    c.threads = static_cast<int>(r.integer("run", "threads"));
    if (c.threads < 1) r.bad("run", "threads", "must be >= 1");

    c.params.kappa = two_pi * r.nonneg("physics", "kappa");
    c.params.gamma = two_pi * r.nonneg("physics", "gamma");
    c.params.gamma_phi = two_pi * r.nonneg("physics", "gamma_phi");
    c.params.eta = two_pi * r.nonneg("physics", "eta");
    c.params.delta_c = two_pi * r.finite("physics", "delta_c");
    c.g = two_pi * r.nonneg("physics", "g");

    c.spectrum.kind = r.choose<SpectrumKind>(
        "spectrum", "kind", {{"gaussian", SpectrumKind::Gaussian}, {"power_law", SpectrumKind::PowerLaw}});
    c.spectrum.n_classes = static_cast<int>(r.integer("spectrum", "n_classes"));
    c.spectrum.total_emitters = r.integer("spectrum", "total_emitters");
    c.spectrum.center = two_pi * r.finite("spectrum", "center");
    c.spectrum.sigma = two_pi * r.nonneg("spectrum", "sigma");
    c.spectrum.span_sigmas = r.positive("spectrum", "span_sigmas");
    c.spectrum.delta_max = two_pi * r.nonneg("spectrum", "delta_max");
    c.spectrum.cavity_detuning = c.params.delta_c;
    c.spectrum.probe_floor = r.boolean("spectrum", "probe_floor");
    if (mode == RunMode::Transient) {
        if (c.spectrum.n_classes < 1) r.bad("spectrum", "n_classes", "must be >= 1");
        if (c.spectrum.kind == SpectrumKind::Gaussian && !(c.spectrum.sigma > 0.0)) {
            if (!doc.find("spectrum", "sigma") || doc.find("spectrum", "sigma")->line == 0) {
                throw ConfigError("missing required key 'spectrum.sigma'");
            }
            r.bad("spectrum", "sigma", "must be > 0");
        }
        if (c.spectrum.kind == SpectrumKind::PowerLaw && !(c.spectrum.delta_max > 0.0)) {
            if (!doc.find("spectrum", "delta_max") || doc.find("spectrum", "delta_max")->line == 0) {
                throw ConfigError("missing required key 'spectrum.delta_max'");
            }
            r.bad("spectrum", "delta_max", "must be > 0");
        }
        try {
            c.spectrum.validate();
        } catch (const ValidationError& e) {
            fail(doc.find("spectrum", "n_classes")->line, e.what());
        }
    }

    c.drive.amplitude = two_pi * r.nonneg("drive", "amplitude");
    c.drive.t_on = r.finite("drive", "t_on");
    c.drive.t_off = r.finite("drive", "t_off");
    if (c.drive.t_off < c.drive.t_on) r.bad("drive", "t_off", "must be >= drive.t_on");

    c.t_start = r.finite("time", "t_start");
    c.t_end = r.finite("time", "t_end");
    c.dt_output = r.nonneg("time", "dt_output");
    if (mode == RunMode::Transient || mode == RunMode::OracleCompare) {
        if (!(c.t_end > c.t_start)) r.bad("time", "t_end", "must be > time.t_start");
        if (!(c.dt_output > 0.0)) r.bad("time", "dt_output", "must be > 0");
    }

    c.integrator.rel_tol = r.positive("integrator", "rel_tol");
    c.integrator.abs_tol = r.positive("integrator", "abs_tol");
    c.integrator.max_step = r.num("integrator", "max_step");
    if (!(c.integrator.max_step > 0.0)) r.bad("integrator", "max_step", "must be > 0");
    c.integrator.initial_step = r.nonneg("integrator", "initial_step");
    c.integrator.method = r.choose<Method>("integrator", "method",
                                           {{"dopri5", Method::Dopri5}, {"rk4", Method::Rk4}});
    c.integrator.dense = r.choose<DenseOutput>(
        "integrator", "dense", {{"hermite", DenseOutput::Hermite}, {"dopri", DenseOutput::Dopri}});
    const auto ms = r.integer("integrator", "max_steps");
    if (ms < 1) r.bad("integrator", "max_steps", "must be >= 1");
    c.integrator.max_steps = static_cast<std::size_t>(ms);
    try {
        c.integrator.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }

    c.eom.az_ordering = r.choose<AzOrdering>(
        "model", "az_ordering",
        {{"normal_ordered", AzOrdering::NormalOrdered}, {"drop_commutator", AzOrdering::DropCommutator}});
    c.eom.kernel = r.choose<KernelChoice>(
        "model", "kernel",
        {{"auto", KernelChoice::Auto}, {"scalar", KernelChoice::Scalar}, {"avx2", KernelChoice::Avx2}});
    c.eom.threads = c.threads;

    {
        const auto& v = r.entry("output", "coherence_row").value.v;
        if (v.index() == 1) {
            c.coherence_row = {CoherenceRow::Kind::Index, static_cast<int>(std::get<std::int64_t>(v))};
            if (c.coherence_row.index < 0) r.bad("output", "coherence_row", "must be >= 0");
        } else {
            c.coherence_row.kind = r.choose<CoherenceRow::Kind>(
                "output", "coherence_row", {{"auto", CoherenceRow::Kind::Auto}, {"none", CoherenceRow::Kind::None}});
        }
    }

    c.steady.ss_tol = r.positive("steady", "ss_tol");
    c.steady.t_max = r.nonneg("steady", "t_max");
    c.steady.n_a = r.integer("steady", "n_a");
    c.steady.n_b = r.integer("steady", "n_b");
    if (c.steady.n_a < 1) r.bad("steady", "n_a", "must be >= 1");
    if (c.steady.n_b < 1) r.bad("steady", "n_b", "must be >= 1");
    c.steady.convention = r.choose<DetuningConvention>(
        "steady", "convention",
        {{"symmetric", DetuningConvention::Symmetric}, {"one_sided", DetuningConvention::OneSided}});
    c.steady.delta = two_pi * r.finite("steady", "delta");
    c.steady.weak_initial = r.choose<bool>("steady", "initial", {{"ground", false}, {"weak", true}});
    c.steady.initial_sz = r.finite("steady", "initial_sz");
    if (c.steady.initial_sz < -1.0 || c.steady.initial_sz > 1.0) {
        r.bad("steady", "initial_sz", "must lie in [-1, 1]");
    }

    if (doc.find("sweep", "eta")) {
        for (double e : r.array("sweep", "eta")) {
            if (!(e >= 0.0) || !std::isfinite(e)) r.bad("sweep", "eta", "values must be finite and >= 0");
            c.sweep.etas.push_back(two_pi * e);
        }
        if (c.sweep.etas.empty()) r.bad("sweep", "eta", "must not be empty");
    }
    if (doc.find("sweep", "delta")) {
        for (double d : r.array("sweep", "delta")) {
            if (!std::isfinite(d)) r.bad("sweep", "delta", "values must be finite");
            c.sweep.deltas.push_back(two_pi * d);
        }
        if (c.sweep.deltas.empty()) r.bad("sweep", "delta", "must not be empty");
    }

    c.oracle.fock_cutoff = static_cast<int>(r.integer("oracle", "fock_cutoff"));
    if (c.oracle.fock_cutoff < 1) r.bad("oracle", "fock_cutoff", "must be >= 1");
    if (doc.find("oracle", "emitter_deltas")) {
        for (double d : r.array("oracle", "emitter_deltas")) c.oracle.emitter_deltas.push_back(two_pi * d);
        if (c.oracle.emitter_deltas.empty()) r.bad("oracle", "emitter_deltas", "must not be empty");
    }
    c.oracle.adaptive = r.boolean("oracle", "adaptive");
    c.oracle.change_tol = r.positive("oracle", "change_tol");

    c.analysis.input_dir = r.str("analysis", "input_dir");
    if (mode == RunMode::Analyze && c.analysis.input_dir.empty()) {
        r.bad("analysis", "input_dir", "must name the directory of a transient run");
    }
    c.analysis.rabi_class = static_cast<int>(r.integer("analysis", "rabi_class"));
    c.analysis.window_start = r.finite("analysis", "window_start");
    c.analysis.window_end = r.finite("analysis", "window_end");
    c.analysis.rabi_method = r.choose<RabiMethod>(
        "analysis", "rabi_method",
        {{"peak_spacing", RabiMethod::PeakSpacing}, {"spectral_peak", RabiMethod::SpectralPeak}});
    c.analysis.min_prominence = r.nonneg("analysis", "min_prominence");
    c.analysis.sideband_exclusion_kappa = r.nonneg("analysis", "sideband_exclusion_kappa");
    c.analysis.sideband_threshold = r.nonneg("analysis", "sideband_threshold");
    c.analysis.sideband_prominence = r.num("analysis", "sideband_prominence");
    if (!(c.analysis.sideband_prominence >= 1.0)) {
        r.bad("analysis", "sideband_prominence", "must be >= 1");
    }
    c.analysis.sideband_window_start = r.finite("analysis", "sideband_window_start");
    c.analysis.sideband_window_end = r.finite("analysis", "sideband_window_end");

    c.resolved = doc;
    return c;
}

RunConfig parse_config_string(const std::string& text, const std::vector<std::string>& overrides) {
    ConfigDocument doc = parse_config_text(text);
    for (const auto& o : overrides) apply_override(doc, o);
    RunConfig c = load_run_config(doc);
    c.overrides = overrides;
    return c;
}

RunConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_string(ss.str(), overrides);
}

}  // namespace cavsync
