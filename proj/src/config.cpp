#include "plasim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "plasim/errors.hpp"

namespace plasim {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

struct RawConfig {
    // section -> key -> value, plus consumption tracking for typo detection
    std::map<std::string, std::map<std::string, std::string>> values;
    mutable std::set<std::string> consumed;

    bool has(const std::string& section, const std::string& key) const {
        auto s = values.find(section);
        return s != values.end() && s->second.count(key) > 0;
    }
    std::string get(const std::string& section, const std::string& key) const {
        consumed.insert(section + "." + key);
        return values.at(section).at(key);
    }
};

RawConfig parse_raw(const std::string& text) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": empty section name");
            raw.values[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value");
        if (section.empty())
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": key outside any [section]");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": empty key");
        if (!raw.values[section].emplace(key, value).second)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": duplicate key " + section + "." + key);
    }
    return raw;
}

double to_double(const std::string& value, const std::string& where) {
    const std::string v = trim(value);
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d))
        throw ConfigError(where + ": expected a number, got '" + value + "'");
    return d;
}

long to_long(const std::string& value, const std::string& where) {
    const double d = to_double(value, where);
    const long l = static_cast<long>(d);
    if (static_cast<double>(l) != d)
        throw ConfigError(where + ": expected an integer, got '" + value + "'");
    return l;
}

std::uint64_t to_u64(const std::string& value, const std::string& where) {
    const std::string v = trim(value);
    if (v.empty() || v[0] == '-')
        throw ConfigError(where + ": expected a non-negative integer");
    char* end = nullptr;
    const unsigned long long u = std::strtoull(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size())
        throw ConfigError(where + ": expected a non-negative integer, got '" +
                          value + "'");
    return u;
}

bool to_bool(const std::string& value, const std::string& where) {
    std::string v = trim(value);
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(where + ": expected on/off, got '" + value + "'");
}

// Comma list of numbers; each element may also be a start:stop:step range
// (inclusive stop within half a step).
std::vector<double> to_list(const std::string& value,
                            const std::string& where) {
    std::vector<double> out;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty())
            throw ConfigError(where + ": empty list element");
        const std::size_t c1 = item.find(':');
        if (c1 == std::string::npos) {
            out.push_back(to_double(item, where));
            continue;
        }
        const std::size_t c2 = item.find(':', c1 + 1);
        if (c2 == std::string::npos)
            throw ConfigError(where + ": range needs start:stop:step");
        const double start = to_double(item.substr(0, c1), where);
        const double stop = to_double(item.substr(c1 + 1, c2 - c1 - 1), where);
        const double step = to_double(item.substr(c2 + 1), where);
        if (!(step > 0.0) || stop < start)
            throw ConfigError(where + ": range needs stop >= start, step > 0");
        for (double v = start; v <= stop + 0.5 * step; v += step)
            out.push_back(v);
    }
    if (out.empty()) throw ConfigError(where + ": empty list");
    return out;
}

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"physics", {"wavelength", "a_x", "x_packet"}},
        {"grid", {"n", "dx", "x0"}},
        {"potential", {"kind", "omega", "period", "index_coefficient"}},
        {"evolution", {"steps", "band_limit", "band_plateau"}},
        {"geometry", {"x_a", "z_a", "x_b", "z_b"}},
        {"scan", {"z_list", "window_center", "window_half_width", "axis"}},
        {"analysis",
         {"smooth_window", "refine", "mask_floor", "division_floor",
          "alignment", "alignment_pivot"}},
        {"detector",
         {"enabled", "quantum_efficiency", "readout_noise",
          "photons_per_exposure"}},
        {"robustness", {"eps_fraction", "z", "spans", "protocol"}},
        {"g2",
         {"source", "rate_hz", "duration_s", "trials", "window_ns",
          "herald_efficiency", "signal_efficiency", "jitter_ns",
          "dead_time_ns", "background_rate_hz", "coherence_time_ns",
          "events_in", "export_events"}},
        {"wavefunction",
         {"theta", "p0", "phase_profile", "phase_coefficient"}},
        {"run", {"seed", "out", "threads"}},
    };
    return s;
}

void check_schema(const RawConfig& raw) {
    for (const auto& [section, keys] : raw.values) {
        const auto it = schema().find(section);
        if (it == schema().end())
            throw ConfigError("config: unknown section [" + section + "]");
        for (const auto& [key, value] : keys) {
            (void)value;
            if (it->second.count(key) == 0)
                throw ConfigError("config: unknown key " + section + "." + key);
        }
    }
}

} // namespace

std::vector<double> RunConfig::effective_spans() const {
    if (!spans.empty()) return spans;
    std::vector<double> out;
    for (double v = 0.05; v <= 1.0 + 0.025; v += 0.05) out.push_back(v);
    return out;
}

RunConfig parse_config_text(const std::string& text) {
    const RawConfig raw = parse_raw(text);
    check_schema(raw);
    RunConfig c;

    auto num = [&](const char* sec, const char* key, double fallback) {
        return raw.has(sec, key)
                   ? to_double(raw.get(sec, key),
                               std::string(sec) + "." + key)
                   : fallback;
    };
    auto integer = [&](const char* sec, const char* key, long fallback) {
        return raw.has(sec, key)
                   ? to_long(raw.get(sec, key), std::string(sec) + "." + key)
                   : fallback;
    };
    auto boolean = [&](const char* sec, const char* key, bool fallback) {
        return raw.has(sec, key)
                   ? to_bool(raw.get(sec, key), std::string(sec) + "." + key)
                   : fallback;
    };
    auto text_value = [&](const char* sec, const char* key,
                          const std::string& fallback) {
        return raw.has(sec, key) ? raw.get(sec, key) : fallback;
    };

    c.physics.wavelength = num("physics", "wavelength", c.physics.wavelength);
    c.physics.a_x = num("physics", "a_x", c.physics.a_x);
    c.x_packet = num("physics", "x_packet", c.x_packet);
    if (!(c.physics.wavelength > 0.0))
        throw ConfigError("physics.wavelength must be positive");
    if (!(c.physics.a_x > 0.0))
        throw ConfigError("physics.a_x must be positive");

    c.n = integer("grid", "n", c.n);
    c.dx = num("grid", "dx", c.dx);
    c.x0 = num("grid", "x0", c.x0);
    if (c.n < 8 || (c.n & (c.n - 1)) != 0)
        throw ConfigError("grid.n must be a power of two >= 8");
    if (!(c.dx > 0.0)) throw ConfigError("grid.dx must be positive");

    const std::string kind = text_value("potential", "kind", "free");
    if (kind == "free") {
        c.potential = Potential::free_space();
        if (raw.has("potential", "omega") || raw.has("potential", "period") ||
            raw.has("potential", "index_coefficient"))
            throw ConfigError(
                "potential: omega/period/index_coefficient need kind = harmonic");
    } else if (kind == "harmonic") {
        if (raw.has("potential", "omega")) {
            c.potential = Potential::harmonic(
                to_double(raw.get("potential", "omega"), "potential.omega"));
        } else if (raw.has("potential", "period")) {
            c.potential = Potential::harmonic(grin_omega(
                0.0, to_double(raw.get("potential", "period"),
                               "potential.period")));
        } else if (raw.has("potential", "index_coefficient")) {
            c.potential = Potential::harmonic(grin_omega(
                to_double(raw.get("potential", "index_coefficient"),
                          "potential.index_coefficient"),
                std::nullopt));
        } else {
            c.potential = Potential::harmonic(grin_omega());
        }
    } else {
        throw ConfigError("potential.kind must be free or harmonic");
    }

    c.steps = static_cast<int>(integer("evolution", "steps", c.steps));
    if (c.steps < 0) throw ConfigError("evolution.steps must be >= 0");
    c.band.enabled = boolean("evolution", "band_limit", c.band.enabled);
    c.band.plateau = num("evolution", "band_plateau", c.band.plateau);
    if (!(c.band.plateau > 0.0 && c.band.plateau < 1.0))
        throw ConfigError("evolution.band_plateau must lie in (0,1)");

    c.ends.x_a = num("geometry", "x_a", c.ends.x_a);
    c.ends.z_a = num("geometry", "z_a", c.ends.z_a);
    c.ends.x_b = num("geometry", "x_b", c.ends.x_b);
    c.ends.z_b = num("geometry", "z_b", c.ends.z_b);
    if (!(c.ends.z_b > c.ends.z_a))
        throw ConfigError("geometry: z_b must exceed z_a");

    if (raw.has("scan", "z_list"))
        c.z_list = to_list(raw.get("scan", "z_list"), "scan.z_list");
    const std::string center = text_value("scan", "window_center", "auto");
    if (center == "auto") {
        c.window_auto = true;
    } else {
        c.window_auto = false;
        c.window_center = to_double(center, "scan.window_center");
    }
    c.window_half_width =
        num("scan", "window_half_width", c.window_half_width);
    if (!(c.window_half_width > 0.0))
        throw ConfigError("scan.window_half_width must be positive");
    const std::string axis = text_value("scan", "axis", "final");
    if (axis == "final") c.axis = AxisMode::Final;
    else if (axis == "initial") c.axis = AxisMode::Initial;
    else if (axis == "both") c.axis = AxisMode::Both;
    else throw ConfigError("scan.axis must be final, initial or both");

    c.smooth_window =
        static_cast<int>(integer("analysis", "smooth_window", c.smooth_window));
    if (c.smooth_window < 1 || c.smooth_window % 2 == 0)
        throw ConfigError("analysis.smooth_window must be odd and >= 1");
    c.refine = boolean("analysis", "refine", c.refine);
    c.mask_floor = num("analysis", "mask_floor", c.mask_floor);
    c.division_floor = num("analysis", "division_floor", c.division_floor);
    if (!(c.mask_floor > 0.0) || !(c.division_floor > 0.0))
        throw ConfigError("analysis floors must be positive");
    const std::string alignment =
        text_value("analysis", "alignment", "least_squares");
    if (alignment == "least_squares") c.alignment = AlignmentMode::LeastSquares;
    else if (alignment == "single_point") c.alignment = AlignmentMode::SinglePoint;
    else throw ConfigError("analysis.alignment must be least_squares or single_point");
    c.alignment_pivot = integer("analysis", "alignment_pivot", c.alignment_pivot);

    c.detector_enabled = boolean("detector", "enabled", c.detector_enabled);
    c.detector.quantum_efficiency =
        num("detector", "quantum_efficiency", c.detector.quantum_efficiency);
    c.detector.readout_noise =
        num("detector", "readout_noise", c.detector.readout_noise);
    c.detector.photons_per_exposure = num("detector", "photons_per_exposure",
                                          c.detector.photons_per_exposure);
    if (c.detector_enabled) {
        if (!(c.detector.quantum_efficiency > 0.0 &&
              c.detector.quantum_efficiency <= 1.0))
            throw ConfigError("detector.quantum_efficiency must lie in (0,1]");
        if (!(c.detector.readout_noise >= 0.0))
            throw ConfigError("detector.readout_noise must be >= 0");
        if (!(c.detector.photons_per_exposure > 0.0))
            throw ConfigError("detector.photons_per_exposure must be positive");
    }

    c.eps_fraction = num("robustness", "eps_fraction", c.eps_fraction);
    if (!(c.eps_fraction >= 0.0))
        throw ConfigError("robustness.eps_fraction must be >= 0");
    const std::string rz = text_value("robustness", "z", "auto");
    if (rz == "auto") {
        c.robustness_z_auto = true;
    } else {
        c.robustness_z_auto = false;
        c.robustness_z = to_double(rz, "robustness.z");
    }
    if (raw.has("robustness", "spans"))
        c.spans = to_list(raw.get("robustness", "spans"), "robustness.spans");
    c.robustness_protocol =
        boolean("robustness", "protocol", c.robustness_protocol);

    const std::string source = text_value("g2", "source", "heralded");
    if (source == "heralded") c.source.kind = SourceKind::HeraldedSingle;
    else if (source == "coherent") c.source.kind = SourceKind::Coherent;
    else if (source == "thermal") c.source.kind = SourceKind::Thermal;
    else throw ConfigError("g2.source must be heralded, coherent or thermal");
    c.source.rate_hz = num("g2", "rate_hz", c.source.rate_hz);
    c.source.duration_s = num("g2", "duration_s", c.source.duration_s);
    c.g2_trials = static_cast<int>(integer("g2", "trials", c.g2_trials));
    c.window_ns = num("g2", "window_ns", c.window_ns);
    c.source.herald_efficiency =
        num("g2", "herald_efficiency", c.source.herald_efficiency);
    c.source.signal_efficiency =
        num("g2", "signal_efficiency", c.source.signal_efficiency);
    c.source.jitter_ns = num("g2", "jitter_ns", c.source.jitter_ns);
    c.source.dead_time_ns = num("g2", "dead_time_ns", c.source.dead_time_ns);
    c.source.background_rate_hz =
        num("g2", "background_rate_hz", c.source.background_rate_hz);
    c.source.coherence_time_ns =
        num("g2", "coherence_time_ns", c.source.coherence_time_ns);
    c.events_in = text_value("g2", "events_in", c.events_in);
    c.export_events = boolean("g2", "export_events", c.export_events);
    if (c.g2_trials < 1) throw ConfigError("g2.trials must be >= 1");
    if (!(c.window_ns > 0.0)) throw ConfigError("g2.window_ns must be positive");
    if (c.source.jitter_ns < 0.0 || c.source.jitter_ns > 3.0)
        throw ConfigError("g2.jitter_ns must lie in [0,3]");

    c.theta = num("wavefunction", "theta", c.theta);
    c.p0 = num("wavefunction", "p0", c.p0);
    const std::string profile =
        text_value("wavefunction", "phase_profile", "none");
    if (profile == "none") c.phase_profile = PhaseProfile::None;
    else if (profile == "vee") c.phase_profile = PhaseProfile::Vee;
    else throw ConfigError("wavefunction.phase_profile must be none or vee");
    c.phase_coefficient =
        num("wavefunction", "phase_coefficient", c.phase_coefficient);

    if (raw.has("run", "seed")) c.seed = to_u64(raw.get("run", "seed"), "run.seed");
    c.out = text_value("run", "out", c.out);
    c.threads = static_cast<int>(integer("run", "threads", c.threads));
    if (c.threads < 0) throw ConfigError("run.threads must be >= 0");

    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (const unsigned char byte : data) {
        hash ^= byte;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

namespace {

void dump_kv(std::string& out, const char* key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s=%.17g\n", key, value);
    out += buf;
}

void dump_kv(std::string& out, const char* key, long long value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s=%lld\n", key, value);
    out += buf;
}

void dump_kv(std::string& out, const char* key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
}

} // namespace

std::string canonical_dump(const RunConfig& c) {
    std::string out;
    dump_kv(out, "physics.wavelength", c.physics.wavelength);
    dump_kv(out, "physics.a_x", c.physics.a_x);
    dump_kv(out, "physics.x_packet", c.x_packet);
    dump_kv(out, "grid.n", static_cast<long long>(c.n));
    dump_kv(out, "grid.dx", c.dx);
    dump_kv(out, "grid.x0", c.x0);
    dump_kv(out, "potential.kind",
            std::string(c.potential.kind == Potential::Kind::Free ? "free"
                                                                  : "harmonic"));
    dump_kv(out, "potential.omega", c.potential.omega);
    dump_kv(out, "evolution.steps", static_cast<long long>(c.steps));
    dump_kv(out, "evolution.band_limit",
            std::string(c.band.enabled ? "on" : "off"));
    dump_kv(out, "evolution.band_plateau", c.band.plateau);
    dump_kv(out, "geometry.x_a", c.ends.x_a);
    dump_kv(out, "geometry.z_a", c.ends.z_a);
    dump_kv(out, "geometry.x_b", c.ends.x_b);
    dump_kv(out, "geometry.z_b", c.ends.z_b);
    {
        std::string zs;
        char buf[32];
        for (const double z : c.z_list) {
            std::snprintf(buf, sizeof buf, "%.17g,", z);
            zs += buf;
        }
        dump_kv(out, "scan.z_list", zs);
    }
    dump_kv(out, "scan.window_center",
            c.window_auto ? std::string("auto")
                          : std::to_string(c.window_center));
    dump_kv(out, "scan.window_half_width", c.window_half_width);
    dump_kv(out, "scan.axis",
            std::string(c.axis == AxisMode::Final     ? "final"
                        : c.axis == AxisMode::Initial ? "initial"
                                                      : "both"));
    dump_kv(out, "analysis.smooth_window",
            static_cast<long long>(c.smooth_window));
    dump_kv(out, "analysis.refine", std::string(c.refine ? "on" : "off"));
    dump_kv(out, "analysis.mask_floor", c.mask_floor);
    dump_kv(out, "analysis.division_floor", c.division_floor);
    dump_kv(out, "analysis.alignment",
            std::string(c.alignment == AlignmentMode::LeastSquares
                            ? "least_squares"
                            : "single_point"));
    dump_kv(out, "analysis.alignment_pivot",
            static_cast<long long>(c.alignment_pivot));
    dump_kv(out, "detector.enabled",
            std::string(c.detector_enabled ? "on" : "off"));
    dump_kv(out, "detector.quantum_efficiency", c.detector.quantum_efficiency);
    dump_kv(out, "detector.readout_noise", c.detector.readout_noise);
    dump_kv(out, "detector.photons_per_exposure",
            c.detector.photons_per_exposure);
    dump_kv(out, "robustness.eps_fraction", c.eps_fraction);
    dump_kv(out, "robustness.z",
            c.robustness_z_auto ? std::string("auto")
                                : std::to_string(c.robustness_z));
    {
        std::string sp;
        char buf[32];
        for (const double s : c.effective_spans()) {
            std::snprintf(buf, sizeof buf, "%.17g,", s);
            sp += buf;
        }
        dump_kv(out, "robustness.spans", sp);
    }
    dump_kv(out, "robustness.protocol",
            std::string(c.robustness_protocol ? "on" : "off"));
    dump_kv(out, "g2.source",
            std::string(c.source.kind == SourceKind::HeraldedSingle ? "heralded"
                        : c.source.kind == SourceKind::Coherent     ? "coherent"
                                                                    : "thermal"));
    dump_kv(out, "g2.rate_hz", c.source.rate_hz);
    dump_kv(out, "g2.duration_s", c.source.duration_s);
    dump_kv(out, "g2.trials", static_cast<long long>(c.g2_trials));
    dump_kv(out, "g2.window_ns", c.window_ns);
    dump_kv(out, "g2.herald_efficiency", c.source.herald_efficiency);
    dump_kv(out, "g2.signal_efficiency", c.source.signal_efficiency);
    dump_kv(out, "g2.jitter_ns", c.source.jitter_ns);
    dump_kv(out, "g2.dead_time_ns", c.source.dead_time_ns);
    dump_kv(out, "g2.background_rate_hz", c.source.background_rate_hz);
    dump_kv(out, "g2.coherence_time_ns", c.source.coherence_time_ns);
    dump_kv(out, "g2.events_in", c.events_in);
    dump_kv(out, "g2.export_events",
            std::string(c.export_events ? "on" : "off"));
    dump_kv(out, "wavefunction.theta", c.theta);
    dump_kv(out, "wavefunction.p0", c.p0);
    dump_kv(out, "wavefunction.phase_profile",
            std::string(c.phase_profile == PhaseProfile::None ? "none" : "vee"));
    dump_kv(out, "wavefunction.phase_coefficient", c.phase_coefficient);
    return out;
}

std::uint64_t config_hash(const RunConfig& config) {
    return fnv1a64(canonical_dump(config));
}

} // namespace plasim
