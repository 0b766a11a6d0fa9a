#pragma once

// Sync-error record files and their summary statistics.
//
// Record CSV: header `query_time,engine,error,seed`, one row per query, rows
// sorted by (seed, query_time, engine). Numbers use 12 significant digits.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "qotsync/error.hpp"
#include "qotsync/sim.hpp"

namespace qotsync {

inline constexpr std::string_view kRecordHeader = "query_time,engine,error,seed";

inline std::string format_g12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// "records_period_30.csv" for a 30 s sync period.
inline std::string records_filename(double period) { return "records_period_" + format_g12(period) + ".csv"; }

/// Sync period encoded in a records_period_<P>.csv file name, if any.
inline std::optional<double> period_from_filename(const std::filesystem::path& path) {
    const std::string name = path.filename().string();
    constexpr std::string_view prefix = "records_period_";
    constexpr std::string_view suffix = ".csv";
    if (!name.starts_with(prefix) || !name.ends_with(suffix)) return std::nullopt;
    const auto body = std::string_view(name).substr(prefix.size(), name.size() - prefix.size() - suffix.size());
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
    if (ec != std::errc{} || ptr != body.data() + body.size()) return std::nullopt;
    return v;
}

inline void sort_records(std::vector<SyncErrorRecord>& records) {
    std::sort(records.begin(), records.end(), [](const SyncErrorRecord& a, const SyncErrorRecord& b) {
        return std::tuple(a.run_seed, a.query_time, static_cast<int>(a.engine)) <
               std::tuple(b.run_seed, b.query_time, static_cast<int>(b.engine));
    });
}

inline std::string format_records(std::vector<SyncErrorRecord> records) {
    sort_records(records);
    std::string out(kRecordHeader);
    out += '\n';
    for (const auto& r : records) {
        out += format_g12(r.query_time);
        out += ',';
        out += to_string(r.engine);
        out += ',';
        out += format_g12(r.error);
        out += ',';
        out += std::to_string(r.run_seed);
        out += '\n';
    }
    return out;
}

/// Returns the number of data rows written.
inline std::size_t write_records(const std::vector<SyncErrorRecord>& records, const std::filesystem::path& path) {
    if (records.empty()) throw ConfigError("no records to write");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << format_records(records);
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
    return records.size();
}

namespace records_detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        fields.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return fields;
}

template <class T>
bool parse_field(std::string_view s, T& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

}  // namespace records_detail

inline std::vector<SyncErrorRecord> parse_records(std::string_view text) {
    std::vector<SyncErrorRecord> records;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool seen_header = false;
    while (pos < text.size()) {
        const auto end = text.find('\n', pos);
        auto line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() : end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!seen_header) {
            if (line != kRecordHeader) throw ParseError(line_no, "expected header '" + std::string(kRecordHeader) + "'");
            seen_header = true;
            continue;
        }
        if (line.empty()) continue;
        const auto fields = records_detail::split_commas(line);
        if (fields.size() != 4) throw ParseError(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
        SyncErrorRecord r;
        if (!records_detail::parse_field(fields[0], r.query_time) || !std::isfinite(r.query_time))
            throw ParseError(line_no, "bad query_time '" + std::string(fields[0]) + "'");
        if (auto engine = parse_engine(fields[1])) r.engine = *engine;
        else throw ParseError(line_no, "unknown engine '" + std::string(fields[1]) + "'");
        if (!records_detail::parse_field(fields[2], r.error) || !std::isfinite(r.error))
            throw ParseError(line_no, "bad error value '" + std::string(fields[2]) + "'");
        if (!records_detail::parse_field(fields[3], r.run_seed))
            throw ParseError(line_no, "bad seed '" + std::string(fields[3]) + "'");
        records.push_back(r);
    }
    if (!seen_header) throw ParseError(1, "empty records file");
    return records;
}

inline std::vector<SyncErrorRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open records file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_records(buffer.str());
}

/// Error statistics of one (sync period, engine) group.
struct StatsRow {
    double period = 0.0;
    Engine engine = Engine::lw_kalman;
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;  ///< sample standard deviation (n - 1); NaN when n == 1
};

inline std::vector<StatsRow> compute_stats(std::span<const SyncErrorRecord> records, double period) {
    std::map<int, std::vector<double>> groups;
    for (const auto& r : records) groups[static_cast<int>(r.engine)].push_back(r.error);
    std::vector<StatsRow> rows;
    for (const auto& [engine, errors] : groups) {
        StatsRow row{period, static_cast<Engine>(engine), errors.size(), 0.0, 0.0};
        double sum = 0.0;
        for (double e : errors) sum += e;
        row.mean = sum / static_cast<double>(errors.size());
        if (errors.size() < 2) {
            row.std = std::nan("");
        } else {
            double ss = 0.0;
            for (double e : errors) ss += (e - row.mean) * (e - row.mean);
            row.std = std::sqrt(ss / static_cast<double>(errors.size() - 1));
        }
        rows.push_back(row);
    }
    return rows;
}

/// Stats over one or more record files. The period of each file comes from
/// `period` when given, else from its file name.
inline std::vector<StatsRow> stats_for_files(std::span<const std::filesystem::path> files,
                                             std::optional<double> period) {
    std::vector<StatsRow> rows;
    for (const auto& file : files) {
        const auto p = period ? period : period_from_filename(file);
        if (!p) throw ConfigError("cannot infer sync period from '" + file.string() + "'; pass --period");
        const auto records = read_records(file);
        for (auto& row : compute_stats(records, *p)) rows.push_back(row);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const StatsRow& a, const StatsRow& b) {
        return std::tuple(a.period, static_cast<int>(a.engine)) < std::tuple(b.period, static_cast<int>(b.engine));
    });
    return rows;
}

inline std::string format_stats(std::span<const StatsRow> rows) {
    std::string out = "period,engine,n,mean,std\n";
    for (const auto& row : rows) {
        out += format_g12(row.period) + ',' + std::string(to_string(row.engine)) + ',' + std::to_string(row.n) +
               ',' + format_g12(row.mean) + ',' + format_g12(row.std) + '\n';
    }
    return out;
}

}  // namespace qotsync
