#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "qotsync/estimation.hpp"
#include "qotsync/records.hpp"

using namespace qotsync;
namespace fs = std::filesystem;

namespace {

fs::path temp(const std::string& name) { return fs::temp_directory_path() / ("qotsync_test_" + name); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(WriteRecords, HeaderPlusOneLinePerRecord) {
    const std::vector<SyncErrorRecord> r{{36, Engine::ftsp, 1e-7, 2}, {36, Engine::lw_kalman, -2e-7, 2}, {54, Engine::ftsp, 0, 1}};
    const auto p = temp("three.csv");
    EXPECT_EQ(write_records(r, p), 3u);
    EXPECT_EQ(slurp(p),
              "query_time,engine,error,seed\n54,ftsp,0,1\n36,lw_kalman,-2e-07,2\n36,ftsp,1e-07,2\n");
    fs::remove(p);
}

TEST(WriteRecords, ByteIdenticalAcrossWritesAndOrder) {
    std::vector<SyncErrorRecord> r{{90, Engine::lw_kalman, 3.3e-7, 4}, {18, Engine::ftsp, -1.25e-6, 9}, {72, Engine::ftsp, 5e-8, 4}};
    const auto a = temp("a.csv"), b = temp("b.csv");
    write_records(r, a);
    std::reverse(r.begin(), r.end());
    write_records(r, b);
    EXPECT_EQ(slurp(a), slurp(b));
    fs::remove(a);
    fs::remove(b);
}

TEST(WriteRecords, Errors) {
    EXPECT_THROW(write_records({}, temp("empty.csv")), ConfigError);
    EXPECT_THROW(write_records({{0, Engine::ftsp, 0, 1}}, "/nonexistent/dir/x.csv"), IoError);
}

TEST(ReadRecords, ParseErrorsNameTheLine) {
    try {
        parse_records("query_time,engine,error,seed\n1,ftsp,0,1\n2,kalman,0,1\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    try {
        parse_records("query_time,engine,error,seed\n1,ftsp,abc,1\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_THROW(parse_records("time,engine\n"), ParseError);
    EXPECT_THROW(parse_records("query_time,engine,error,seed\n1,ftsp,0\n"), ParseError);
    EXPECT_THROW(read_records("/nonexistent/records.csv"), IoError);
}

TEST(Stats, Examples) {
    const std::vector<SyncErrorRecord> zeros{{1, Engine::ftsp, 0, 1}, {2, Engine::ftsp, 0, 1}, {3, Engine::ftsp, 0, 1}};
    auto rows = compute_stats(zeros, 30);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].mean, 0.0);
    EXPECT_EQ(rows[0].std, 0.0);
    const std::vector<SyncErrorRecord> pm{{1, Engine::lw_kalman, 1, 1}, {2, Engine::lw_kalman, -1, 1}};
    rows = compute_stats(pm, 60);
    EXPECT_EQ(rows[0].mean, 0.0);
    EXPECT_DOUBLE_EQ(rows[0].std, std::sqrt(2.0));
    EXPECT_EQ(rows[0].period, 60.0);
}

TEST(Stats, FileRoundTripMatchesInMemory) {
    ExperimentConfig c;
    std::vector<SyncErrorRecord> all;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        c.seed = seed;
        auto r = run_experiment(c);
        all.insert(all.end(), r.begin(), r.end());
    }
    const auto dir = temp("stats_dir");
    fs::create_directories(dir);
    const auto path = dir / records_filename(30);
    write_records(all, path);
    const std::vector<fs::path> files{path};
    const auto rows = stats_for_files(files, std::nullopt);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& row : rows) {
        std::vector<double> v;
        for (const auto& r : all)
            if (r.engine == row.engine) v.push_back(r.error);
        const auto s = slope_stats(v);
        const auto m = oracle::moments(v);
        EXPECT_EQ(row.n, v.size());
        EXPECT_NEAR(row.mean, s.m_s, 1e-9);
        EXPECT_NEAR(row.std, s.std_s, 1e-9);
        EXPECT_NEAR(row.std, std::sqrt(static_cast<double>(m.variance)), 1e-9);
        EXPECT_EQ(row.period, 30.0);
    }
    fs::remove_all(dir);
}

TEST(Stats, PeriodFromFilename) {
    EXPECT_EQ(period_from_filename("out/records_period_180.csv"), 180.0);
    EXPECT_EQ(period_from_filename("records_period_0.5.csv"), 0.5);
    EXPECT_FALSE(period_from_filename("records.csv"));
    EXPECT_EQ(records_filename(360), "records_period_360.csv");
    const std::vector<fs::path> files{temp("unnamed.csv")};
    EXPECT_THROW(stats_for_files(files, std::nullopt), ConfigError);
}
