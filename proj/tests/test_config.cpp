#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "qotsync/config.hpp"

using namespace qotsync;

namespace {

std::set<std::string> offending(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ValidationError& e) {
        return {e.fields().begin(), e.fields().end()};
    }
    return {};
}

}  // namespace

TEST(ParseConfig, MinimalGetsDefaults) {
    const auto c = parse_config_text("sync_period = 30\nseed = 1\n");
    EXPECT_EQ(c, ExperimentConfig{});
}

TEST(ParseConfig, ZeroSyncPeriodIsNamed) {
    EXPECT_TRUE(offending("sync_period = 0\n").contains("sync_period"));
}

TEST(ParseConfig, EveryBadKeyIsListed) {
    const auto f = offending("sync_period = zero\nquery_period = -3\nbogus = 1\nnode0.capture.mode = weird\n"
                             "node0.noise.gen.kind = uniform\nnode0.noise.gen.a = 1\nnode0.noise.gen.b = 0\n");
    EXPECT_TRUE(f.contains("sync_period"));
    EXPECT_TRUE(f.contains("query_period"));
    EXPECT_TRUE(f.contains("bogus"));
    EXPECT_TRUE(f.contains("node0.capture.mode"));
    EXPECT_TRUE(f.contains("node0.clock"));
}

TEST(ParseConfig, SectionsPrefixKeys) {
    const auto c = parse_config_text(
        "# comment\n[node0.clock]\nphi = 2e-6   # trailing\n[node0.capture]\nfreq_hz = 16e6\nmode = asynchronous_external\n"
        "[kalman]\nq = 1e-17\n");
    EXPECT_EQ(c.nodes[0].clock.phi, 2e-6);
    EXPECT_EQ(c.nodes[0].capture.capture_freq_hz, 16e6);
    EXPECT_EQ(c.nodes[0].capture.mode, CaptureMode::asynchronous_external);
    EXPECT_EQ(c.kalman_q, 1e-17);
    EXPECT_FALSE(c.kalman_r);
}

TEST(ParseConfig, SyntaxErrorsCarryLineNumbers) {
    try {
        parse_config_text("seed = 1\n\nnot a pair\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(parse_config_text("seed = 1\nseed = 2\n"), ParseError);
    EXPECT_THROW(parse_config_text("[node0\n"), ParseError);
}

TEST(ParseConfig, MeanShiftFollowsDistribution) {
    const auto c = parse_config_text("node0.noise.gen.kind = uniform\nnode0.noise.gen.a = 0\nnode0.noise.gen.b = 2e-6\n"
                                     "node0.noise.drift.kind = gaussian\nnode0.noise.drift.a = 5e-9\n");
    EXPECT_DOUBLE_EQ(c.nodes[0].clock.gen_noise.mean_shift, 1e-6);
    EXPECT_EQ(c.nodes[0].clock.drift_noise.mean_shift, 0.0);
    EXPECT_EQ(c.nodes[0].clock.drift_noise.param_a, 5e-9);
    const auto none = parse_config_text("node0.noise.gen.kind = none\nnode0.noise.gen.a = 0\nnode0.noise.gen.b = 0\n");
    EXPECT_EQ(none.nodes[0].clock.gen_noise, NoiseSpec::none());
}

TEST(ParseConfig, SecondReceiverCopiesFirst) {
    const auto c = parse_config_text("topology = one_tx_two_rx\nnode0.clock.phi = 3e-6\nnode1.clock.offset_nr = 0.5\n");
    ASSERT_EQ(c.nodes.size(), 2u);
    EXPECT_EQ(c.nodes[1].clock.phi, 3e-6);
    EXPECT_EQ(c.nodes[1].clock.offset_nr, 0.5);
    EXPECT_EQ(c.nodes[0].clock.offset_nr, 0.0);
    EXPECT_TRUE(offending("node1.clock.phi = 1e-6\n").contains("node1.clock.phi"));
}

TEST(ParseConfig, SweepPeriods) {
    const auto c = parse_config_text("engine = both\nsweep.sync_periods = 30, 60, 180, 360\n");
    EXPECT_EQ(c.periods(), (std::vector<double>{30, 60, 180, 360}));
    EXPECT_EQ(c.with_period(180).sync_period, 180);
    EXPECT_TRUE(c.with_period(180).sweep_periods.empty());
}

TEST(ParseConfig, MissingFileIsIoError) {
    EXPECT_THROW(parse_config("/nonexistent/dir/x.cfg"), IoError);
}

TEST(ParseConfig, ReadsFile) {
    const auto path = std::filesystem::temp_directory_path() / "qotsync_test_config.cfg";
    std::ofstream(path) << "duration = 1200\n";
    EXPECT_EQ(parse_config(path).duration, 1200.0);
    std::filesystem::remove(path);
}

TEST(SerializeConfig, RoundTripDefaults) {
    const ExperimentConfig c;
    EXPECT_EQ(parse_config_text(serialize_config(c)), c);
}

TEST(SerializeConfig, RoundTripEverythingChanged) {
    ExperimentConfig c;
    c.sync_period = 37.123456789;
    c.query_period = 1.0 / 3.0;
    c.duration = 7200;
    c.topology = Topology::one_tx_two_rx;
    c.nodes.assign(2, NodeSetup{});
    c.nodes[1].clock.phi = -2.345678901234e-6;
    c.nodes[1].clock.gen_noise = NoiseSpec::triangular(-1e-7, 3e-7);
    c.nodes[1].clock.drift_noise = NoiseSpec::gaussian(1e-9, 2e-9);
    c.nodes[1].clock.read_jitter = NoiseSpec::constant(1e-5);
    c.nodes[0].capture.mode = CaptureMode::asynchronous_shared_type;
    c.nodes[0].capture.double_sampling = true;
    c.nodes[0].capture.phase_offset = 1e-7;
    c.nodes[0].capture.enabled = false;
    c.engine = EngineSelection::ftsp;
    c.kalman_q = 1.234e-18;
    c.kalman_r = 9.87e-15;
    c.ftsp_window = 5;
    c.seed = 18446744073709551615ull;
    c.sweep_periods = {30, 60.5};
    c.study.capture_freqs = {1e6, 8e6};
    c.study.rxrx_samples = 10;
    c.study.histogram_bins = 9;
    c.study.os_rate = 123.0;
    c.study.train_q_grid = {1e-19};
    c.study.train_r_grid = {1e-16, 1e-15};
    c.validate();
    const auto text = serialize_config(c);
    EXPECT_EQ(parse_config_text(text), c);
    EXPECT_EQ(serialize_config(parse_config_text(text)), text);
}
