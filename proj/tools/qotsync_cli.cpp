// qotsync: run sync experiments, capture/jitter studies, covariance training
// and record statistics from a config file.
//
// Exit status: 0 ok, 1 bad config or input, 2 I/O failure, 3 simulation
// invariant violated.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qotsync/qotsync.hpp"

namespace fs = std::filesystem;
using namespace qotsync;

namespace {

struct Options {
    std::string config_path;
    std::string out_dir;
    std::string seeds;
    std::string train_seeds;
    std::optional<double> period;
    std::vector<std::string> inputs;
};

// "--seeds 5" means five seeds starting at the config seed; "--seeds 3,7,9"
// lists them.
std::vector<std::uint64_t> resolve_seeds(const std::string& text, std::uint64_t base) {
    if (text.empty()) return {base};
    std::vector<std::uint64_t> seeds;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto first = item.find_first_not_of(' ');
        const auto last = item.find_last_not_of(' ');
        if (first == std::string::npos) throw ConfigError("empty entry in --seeds");
        item = item.substr(first, last - first + 1);
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || ptr != item.data() + item.size()) throw ConfigError("bad seed '" + item + "'");
        seeds.push_back(v);
    }
    if (text.find(',') == std::string::npos) {
        const auto n = seeds.front();
        if (n == 0) throw ConfigError("--seeds count must be > 0");
        seeds.clear();
        for (std::uint64_t i = 0; i < n; ++i) seeds.push_back(base + i);
    }
    return seeds;
}

ExperimentConfig load(const Options& opt) {
    if (opt.config_path.empty()) throw ConfigError("--config is required");
    auto config = parse_config(opt.config_path);
    if (opt.period) {
        config = config.with_period(*opt.period);
        config.validate();
    }
    return config;
}

fs::path output_dir(const Options& opt) {
    if (opt.out_dir.empty()) throw ConfigError("--out is required");
    fs::path dir(opt.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

// Runs `task` once per seed on separate threads and returns results in seed
// order, so the merged output does not depend on scheduling.
template <class F>
auto per_seed(const std::vector<std::uint64_t>& seeds, F task) {
    using Result = decltype(task(seeds.front()));
    std::vector<std::future<Result>> jobs;
    jobs.reserve(seeds.size());
    for (auto seed : seeds) jobs.push_back(std::async(std::launch::async, task, seed));
    std::vector<Result> results;
    results.reserve(seeds.size());
    for (auto& job : jobs) results.push_back(job.get());
    return results;
}

std::string histogram_csv(const HistogramSummary& h) {
    std::string out = "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double lo = h.bin_lo + h.bin_width * static_cast<double>(i);
        out += format_g12(lo) + ',' + format_g12(lo + h.bin_width) + ',' + std::to_string(h.counts[i]) + '\n';
    }
    return out;
}

std::string summary_csv(const HistogramSummary& h) {
    return "n,min,max,range,mean,variance\n" + std::to_string(h.n) + ',' + format_g12(h.min) + ',' +
           format_g12(h.max) + ',' + format_g12(h.range) + ',' + format_g12(h.mean) + ',' +
           format_g12(h.variance) + '\n';
}

int cmd_run(const Options& opt) {
    const auto config = load(opt);
    const auto dir = output_dir(opt);
    const auto seeds = resolve_seeds(opt.seeds, config.seed);
    std::string manifest = "period,seed,records,kalman_q,kalman_r,stream_hash\n";
    // covariances fitted per period, on seeds offset by 1000 from the config
    // seed unless listed explicitly
    const auto train_seeds = opt.train_seeds.empty() ? std::vector<std::uint64_t>{}
                                                     : resolve_seeds(opt.train_seeds, config.seed + 1000);
    for (double period : config.periods()) {
        auto base = config.with_period(period);
        if (!train_seeds.empty()) {
            const auto trained = train_for_config(base, train_seeds);
            base.kalman_q = trained.q;
            base.kalman_r = trained.r;
        }
        const auto runs = per_seed(seeds, [&base](std::uint64_t seed) {
            auto c = base;
            c.seed = seed;
            return run_experiment_detailed(c);
        });
        std::vector<SyncErrorRecord> records;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const auto& run = runs[i];
            records.insert(records.end(), run.records.begin(), run.records.end());
            char hash[20];
            std::snprintf(hash, sizeof hash, "%016llx",
                          static_cast<unsigned long long>(base.engine == EngineSelection::ftsp
                                                              ? run.ftsp_stream_hash
                                                              : run.kalman_stream_hash));
            manifest += format_g12(period) + ',' + std::to_string(seeds[i]) + ',' +
                        std::to_string(run.records.size()) + ',' + format_g12(run.covariances.q) + ',' +
                        format_g12(run.covariances.r) + ',' + hash + '\n';
        }
        if (records.empty()) throw ConfigError("run produced no query records; duration too short");
        const auto path = dir / records_filename(period);
        const auto rows = write_records(records, path);
        std::cout << path.string() << ": " << rows << " records\n";
    }
    write_text(dir / "runs.csv", manifest);
    write_text(dir / "config_effective.txt", serialize_config(config));
    return 0;
}

int cmd_study_rxrx(const Options& opt) {
    auto config = load(opt);
    if (config.topology == Topology::tx_rx_pair) {
        config.topology = Topology::one_tx_two_rx;
        config.nodes.resize(2, config.nodes.front());
    }
    const auto dir = output_dir(opt);
    const auto seed = resolve_seeds(opt.seeds, config.seed).front();
    config.seed = seed;
    const auto h = run_rx_rx_study(config, config.study.rxrx_samples);
    write_text(dir / "rxrx_histogram.csv", histogram_csv(h));
    write_text(dir / "rxrx_summary.csv", summary_csv(h));
    std::cout << "rx-rx: n=" << h.n << " range=" << format_g12(h.range) << " variance=" << format_g12(h.variance)
              << '\n';
    return 0;
}

int cmd_study_capture(const Options& opt) {
    const auto config = load(opt);
    const auto dir = output_dir(opt);
    const auto seeds = resolve_seeds(opt.seeds, config.seed);
    constexpr CaptureMode modes[] = {CaptureMode::synchronous, CaptureMode::asynchronous_shared_type,
                                     CaptureMode::asynchronous_external};
    const auto tables = per_seed(seeds, [&config, &modes](std::uint64_t seed) {
        std::string rows;
        for (auto mode : modes) {
            auto c = config;
            c.seed = seed;
            c.nodes[0].capture.mode = mode;
            for (const auto& row : run_capture_freq_study(c, c.study.capture_freqs)) {
                rows += std::to_string(seed) + ',' + std::string(to_string(mode)) + ',' + format_g12(row.freq_hz) +
                        ',' + std::to_string(row.stats.n) + ',' + format_g12(row.stats.m_s) + ',' +
                        format_g12(row.stats.var_s) + ',' + format_g12(row.stats.std_s) + '\n';
            }
        }
        return rows;
    });
    std::string out = "seed,mode,freq_hz,n,m_s,var_s,std_s\n";
    for (const auto& t : tables) out += t;
    write_text(dir / "capture_study.csv", out);
    std::cout << (dir / "capture_study.csv").string() << '\n';
    return 0;
}

int cmd_study_os(const Options& opt) {
    const auto config = load(opt);
    const auto dir = output_dir(opt);
    const auto seed = resolve_seeds(opt.seeds, config.seed).front();
    const auto h = run_os_jitter_probe(config.nodes[0].clock.read_jitter, config.study.os_window,
                                       config.study.os_rate, seed, config.study.histogram_bins);
    write_text(dir / "os_histogram.csv", histogram_csv(h));
    write_text(dir / "os_summary.csv", summary_csv(h));
    std::cout << "os probe: n=" << h.n << " range=" << format_g12(h.range) << '\n';
    return 0;
}

int cmd_train(const Options& opt) {
    const auto config = load(opt);
    const auto dir = output_dir(opt);
    const auto seeds = resolve_seeds(opt.seeds, config.seed);
    const auto periods = config.periods();
    std::vector<std::future<CandidateScore>> jobs;
    for (double period : periods) {
        jobs.push_back(std::async(std::launch::async, [&config, &seeds, period] {
            return train_for_config(config.with_period(period), seeds);
        }));
    }
    std::string out = "period,q,r,mean_abs_error,neg_log_likelihood,points\n";
    for (std::size_t i = 0; i < periods.size(); ++i) {
        const auto s = jobs[i].get();
        out += format_g12(periods[i]) + ',' + format_g12(s.q) + ',' + format_g12(s.r) + ',' +
               format_g12(s.mean_abs_error) + ',' + format_g12(s.neg_log_likelihood) + ',' +
               std::to_string(s.points) + '\n';
    }
    write_text(dir / "train.csv", out);
    std::cout << out;
    return 0;
}

int cmd_stats(const Options& opt) {
    std::vector<fs::path> files;
    for (const auto& input : opt.inputs) {
        const fs::path p(input);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& entry : fs::directory_iterator(p))
                if (period_from_filename(entry.path())) found.push_back(entry.path());
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(p);
        }
    }
    if (files.empty()) throw ConfigError("stats needs at least one records file");
    const auto rows = stats_for_files(files, opt.period);
    const auto text = format_stats(rows);
    if (!opt.out_dir.empty()) write_text(output_dir(opt) / "stats.csv", text);
    std::cout << text;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clock synchronization experiments"};
    app.require_subcommand(1);
    Options opt;
    double period = 0.0;

    const auto common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opt.config_path, "experiment config file");
        if (needs_config) c->required();
        sub->add_option("--out", opt.out_dir, "output directory")->required(needs_config);
        sub->add_option("--seeds", opt.seeds, "seed count (from the config seed) or comma-separated list");
        sub->add_option("--period", period, "sync period override in seconds");
    };
    auto* run = app.add_subcommand("run", "simulate sync error records for every period and seed");
    auto* rxrx = app.add_subcommand("study-rxrx", "RX1 - RX2 timestamp difference distribution");
    auto* capture = app.add_subcommand("study-capture", "slope statistics per capture mode and frequency");
    auto* os = app.add_subcommand("study-os", "software clock read jitter probe");
    auto* train = app.add_subcommand("train", "grid-search Kalman covariances per period");
    auto* stats = app.add_subcommand("stats", "mean and std of sync error per period and engine");
    for (auto* sub : {run, rxrx, capture, os, train}) common(sub, true);
    run->add_option("--train-seeds", opt.train_seeds,
                    "fit Kalman covariances per period first (count from config seed + 1000, or a list)");
    common(stats, false);
    stats->add_option("inputs", opt.inputs, "records files or directories")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    for (auto* sub : app.get_subcommands())
        if (sub->count("--period")) opt.period = period;

    try {
        if (run->parsed()) return cmd_run(opt);
        if (rxrx->parsed()) return cmd_study_rxrx(opt);
        if (capture->parsed()) return cmd_study_capture(opt);
        if (os->parsed()) return cmd_study_os(opt);
        if (train->parsed()) return cmd_train(opt);
        if (stats->parsed()) return cmd_stats(opt);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const InvariantViolation& e) {
        std::cerr << "invariant violated: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::logic_error& e) {
        std::cerr << "invariant violated: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
