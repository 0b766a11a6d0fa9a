#pragma once

// Experiment config files.
//
// Grammar (one entry per line):
//
//     # comment                 ignored, as are blank lines
//     [section.name]            prefixes the keys that follow with "section.name."
//     key = value               dotted key; later duplicates are an error
//
// Values are numbers, enum names, booleans (true/false), or comma-separated
// number lists. Every key is optional; absent keys keep the defaults of
// ExperimentConfig. See README.md for the key list.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "qotsync/error.hpp"
#include "qotsync/sim.hpp"

namespace qotsync {

namespace config_detail {

struct Entry {
    std::string value;
    std::size_t line = 0;
};

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::map<std::string, Entry> read_entries(std::string_view text) {
    std::map<std::string, Entry> entries;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        auto line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
        const auto key_part = trim(line.substr(0, eq));
        if (key_part.empty()) throw ParseError(line_no, "empty key");
        const std::string key = section.empty() ? std::string(key_part) : section + "." + std::string(key_part);
        if (entries.contains(key)) throw ParseError(line_no, "duplicate key '" + key + "'");
        entries.emplace(key, Entry{std::string(trim(line.substr(eq + 1))), line_no});
    }
    return entries;
}

inline bool parse_number(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool parse_unsigned(std::string_view s, std::uint64_t& out) {
    s = trim(s);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

inline bool parse_bool(std::string_view s, bool& out) {
    s = trim(s);
    if (s == "true" || s == "1" || s == "yes") return out = true, true;
    if (s == "false" || s == "0" || s == "no") return out = false, true;
    return false;
}

inline bool parse_list(std::string_view s, std::vector<double>& out) {
    out.clear();
    s = trim(s);
    if (s.empty()) return true;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const auto item = s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        double v = 0.0;
        if (!parse_number(item, v)) return false;
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return true;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_list(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += format_double(values[i]);
    }
    return out;
}

inline constexpr std::string_view kNoiseSources[] = {"drift", "prop", "gen", "cap", "read", "freq_walk"};

inline NoiseSpec& noise_field(ClockParams& c, std::string_view source) {
    if (source == "drift") return c.drift_noise;
    if (source == "prop") return c.prop_noise;
    if (source == "gen") return c.gen_noise;
    if (source == "cap") return c.cap_noise;
    if (source == "read") return c.read_jitter;
    return c.freq_walk;
}

inline bool is_noise_source(std::string_view s) {
    for (auto src : kNoiseSources)
        if (src == s) return true;
    return false;
}

class Errors {
public:
    void add(const std::string& key, const std::string& why) {
        keys_.push_back(key);
        detail_ += (detail_.empty() ? "" : "; ") + key + ": " + why;
    }
    bool empty() const { return keys_.empty(); }
    [[noreturn]] void raise() { throw ValidationError(keys_, detail_); }
    void merge(const ValidationError& e) {
        for (const auto& k : e.fields()) keys_.push_back(k);
        detail_ += (detail_.empty() ? "" : "; ") + std::string(e.what());
    }

private:
    std::vector<std::string> keys_;
    std::string detail_;
};

/// Applies one node-level key (`field` is the part after "node<i>.").
/// Returns false when the field name is unknown.
inline bool apply_node_field(NodeSetup& node, std::string_view field, const Entry& entry,
                             const std::string& key, Errors& errors, std::set<std::string>& explicit_shift,
                             std::set<std::string>& touched_noise, std::set<std::string>& kind_set) {
    const auto number = [&](double& target) {
        double v = 0.0;
        if (parse_number(entry.value, v)) target = v;
        else errors.add(key, "expected a number, got '" + entry.value + "'");
    };
    auto& clock = node.clock;
    auto& cap = node.capture;
    if (field == "clock.phi") return number(clock.phi), true;
    if (field == "clock.offset_nr") return number(clock.offset_nr), true;
    if (field == "clock.prop_delay_mean") return number(clock.prop_delay_mean), true;
    if (field.starts_with("noise.")) {
        const auto rest = field.substr(6);
        const auto dot = rest.find('.');
        if (dot == std::string_view::npos) return false;
        const std::string source(rest.substr(0, dot));
        const auto param = rest.substr(dot + 1);
        if (!is_noise_source(source)) return false;
        auto& spec = noise_field(clock, source);
        if (param == "kind") {
            if (auto kind = parse_noise_kind(trim(entry.value))) {
                spec.kind = *kind;
                kind_set.insert(source);
            } else {
                errors.add(key, "unknown noise kind '" + entry.value + "'");
            }
        } else if (param == "a") {
            number(spec.param_a);
        } else if (param == "b") {
            number(spec.param_b);
        } else if (param == "mean_shift") {
            number(spec.mean_shift);
            explicit_shift.insert(source);
        } else {
            return false;
        }
        touched_noise.insert(source);
        return true;
    }
    if (field == "capture.freq_hz") return number(cap.capture_freq_hz), true;
    if (field == "capture.gen_freq_hz") return number(cap.gen_freq_hz), true;
    if (field == "capture.phase_offset") return number(cap.phase_offset), true;
    if (field == "capture.phase_walk_sigma") return number(cap.phase_walk_sigma), true;
    if (field == "capture.external_drift") return number(cap.external_drift), true;
    if (field == "capture.mode") {
        if (auto mode = parse_capture_mode(trim(entry.value))) cap.mode = *mode;
        else errors.add(key, "unknown capture mode '" + entry.value + "'");
        return true;
    }
    if (field == "capture.double_sampling" || field == "capture.enabled") {
        bool& target = field == "capture.enabled" ? cap.enabled : cap.double_sampling;
        if (!parse_bool(entry.value, target)) errors.add(key, "expected true or false");
        return true;
    }
    return false;
}

inline void settle_mean_shift(NoiseSpec& spec, bool kind_was_set) {
    switch (spec.kind) {
        case NoiseKind::none: spec.mean_shift = 0.0; break;
        case NoiseKind::constant: spec.mean_shift = spec.param_a; break;
        case NoiseKind::uniform:
        case NoiseKind::triangular: spec.mean_shift = 0.5 * (spec.param_a + spec.param_b); break;
        case NoiseKind::gaussian:
            if (kind_was_set) spec.mean_shift = 0.0;
            break;
    }
}

}  // namespace config_detail

/// Parses and validates config text. Every malformed or invalid key is
/// reported in one ValidationError.
inline ExperimentConfig parse_config_text(std::string_view text) {
    using namespace config_detail;
    const auto entries = read_entries(text);
    ExperimentConfig config;
    Errors errors;

    const auto number = [&](const std::string& key, const Entry& e, double& target) {
        double v = 0.0;
        if (parse_number(e.value, v)) target = v;
        else errors.add(key, "expected a number, got '" + e.value + "'");
    };
    const auto count = [&](const std::string& key, const Entry& e, auto& target) {
        std::uint64_t v = 0;
        if (parse_unsigned(e.value, v)) target = static_cast<std::remove_reference_t<decltype(target)>>(v);
        else errors.add(key, "expected a non-negative integer, got '" + e.value + "'");
    };
    const auto list = [&](const std::string& key, const Entry& e, std::vector<double>& target) {
        if (!parse_list(e.value, target)) errors.add(key, "expected a comma-separated number list");
    };

    std::map<std::size_t, std::vector<std::pair<std::string, const Entry*>>> node_keys;
    for (const auto& [key, entry] : entries) {
        if (key == "sync_period") number(key, entry, config.sync_period);
        else if (key == "query_period") number(key, entry, config.query_period);
        else if (key == "duration") number(key, entry, config.duration);
        else if (key == "seed") count(key, entry, config.seed);
        else if (key == "ftsp.window") count(key, entry, config.ftsp_window);
        else if (key == "kalman.q" || key == "kalman.r") {
            double v = 0.0;
            if (parse_number(entry.value, v)) (key == "kalman.q" ? config.kalman_q : config.kalman_r) = v;
            else errors.add(key, "expected a number, got '" + entry.value + "'");
        } else if (key == "topology") {
            if (auto t = parse_topology(trim(entry.value))) config.topology = *t;
            else errors.add(key, "unknown topology '" + entry.value + "'");
        } else if (key == "engine") {
            if (auto e = parse_engine_selection(trim(entry.value))) config.engine = *e;
            else errors.add(key, "unknown engine '" + entry.value + "'");
        } else if (key == "sweep.sync_periods") list(key, entry, config.sweep_periods);
        else if (key == "study.capture_freqs") list(key, entry, config.study.capture_freqs);
        else if (key == "study.rxrx_samples") count(key, entry, config.study.rxrx_samples);
        else if (key == "study.os_window") number(key, entry, config.study.os_window);
        else if (key == "study.os_rate") number(key, entry, config.study.os_rate);
        else if (key == "study.histogram_bins") count(key, entry, config.study.histogram_bins);
        else if (key == "train.q_grid") list(key, entry, config.study.train_q_grid);
        else if (key == "train.r_grid") list(key, entry, config.study.train_r_grid);
        else if (key.starts_with("node")) {
            const auto dot = key.find('.');
            std::uint64_t index = 0;
            if (dot == std::string::npos || !parse_unsigned(std::string_view(key).substr(4, dot - 4), index)) {
                errors.add(key, "unknown key");
                continue;
            }
            node_keys[index].emplace_back(key, &entry);
        } else {
            errors.add(key, "unknown key");
        }
    }

    const std::size_t nodes = node_count(config.topology);
    config.nodes.assign(nodes, NodeSetup{});
    for (std::size_t i = 0; i < nodes; ++i) {
        if (i > 0) config.nodes[i] = config.nodes[i - 1];
        std::set<std::string> explicit_shift, touched, kind_set;
        if (auto it = node_keys.find(i); it != node_keys.end()) {
            for (const auto& [key, entry] : it->second) {
                const auto field = std::string_view(key).substr(key.find('.') + 1);
                if (!apply_node_field(config.nodes[i], field, *entry, key, errors, explicit_shift, touched,
                                      kind_set))
                    errors.add(key, "unknown key");
            }
        }
        for (const auto& source : touched) {
            if (!explicit_shift.contains(source))
                settle_mean_shift(noise_field(config.nodes[i].clock, source), kind_set.contains(source));
        }
    }
    for (const auto& [index, keys] : node_keys) {
        if (index >= nodes)
            for (const auto& [key, entry] : keys)
                errors.add(key, "topology " + std::string(to_string(config.topology)) + " has no node " +
                                    std::to_string(index));
    }

    try {
        config.validate();
    } catch (const ValidationError& e) {
        errors.merge(e);
    }
    if (!errors.empty()) errors.raise();
    return config;
}

inline ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

/// Writes every key, so the output documents the full effective config.
inline std::string serialize_config(const ExperimentConfig& config) {
    using config_detail::format_double;
    using config_detail::format_list;
    std::ostringstream out;
    out << "sync_period = " << format_double(config.sync_period) << '\n'
        << "query_period = " << format_double(config.query_period) << '\n'
        << "duration = " << format_double(config.duration) << '\n'
        << "topology = " << to_string(config.topology) << '\n'
        << "engine = " << to_string(config.engine) << '\n'
        << "seed = " << config.seed << '\n'
        << "ftsp.window = " << config.ftsp_window << '\n';
    if (config.kalman_q) out << "kalman.q = " << format_double(*config.kalman_q) << '\n';
    if (config.kalman_r) out << "kalman.r = " << format_double(*config.kalman_r) << '\n';
    if (!config.sweep_periods.empty()) out << "sweep.sync_periods = " << format_list(config.sweep_periods) << '\n';
    out << "study.capture_freqs = " << format_list(config.study.capture_freqs) << '\n'
        << "study.rxrx_samples = " << config.study.rxrx_samples << '\n'
        << "study.os_window = " << format_double(config.study.os_window) << '\n'
        << "study.os_rate = " << format_double(config.study.os_rate) << '\n'
        << "study.histogram_bins = " << config.study.histogram_bins << '\n'
        << "train.q_grid = " << format_list(config.study.train_q_grid) << '\n'
        << "train.r_grid = " << format_list(config.study.train_r_grid) << '\n';
    for (std::size_t i = 0; i < config.nodes.size(); ++i) {
        const auto& clock = config.nodes[i].clock;
        const auto& cap = config.nodes[i].capture;
        out << "\n[node" << i << "]\n"
            << "clock.phi = " << format_double(clock.phi) << '\n'
            << "clock.offset_nr = " << format_double(clock.offset_nr) << '\n'
            << "clock.prop_delay_mean = " << format_double(clock.prop_delay_mean) << '\n';
        auto copy = clock;
        for (auto source : config_detail::kNoiseSources) {
            const auto& spec = config_detail::noise_field(copy, source);
            out << "noise." << source << ".kind = " << to_string(spec.kind) << '\n'
                << "noise." << source << ".a = " << format_double(spec.param_a) << '\n'
                << "noise." << source << ".b = " << format_double(spec.param_b) << '\n'
                << "noise." << source << ".mean_shift = " << format_double(spec.mean_shift) << '\n';
        }
        out << "capture.freq_hz = " << format_double(cap.capture_freq_hz) << '\n'
            << "capture.gen_freq_hz = " << format_double(cap.gen_freq_hz) << '\n'
            << "capture.mode = " << to_string(cap.mode) << '\n'
            << "capture.double_sampling = " << (cap.double_sampling ? "true" : "false") << '\n'
            << "capture.phase_offset = " << format_double(cap.phase_offset) << '\n'
            << "capture.enabled = " << (cap.enabled ? "true" : "false") << '\n'
            << "capture.phase_walk_sigma = " << format_double(cap.phase_walk_sigma) << '\n'
            << "capture.external_drift = " << format_double(cap.external_drift) << '\n';
    }
    return out.str();
}

}  // namespace qotsync
