#include "evframe/frame_file.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("evframe_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    /// Runs the CLI with stdout/stderr redirected into files; returns the exit code.
    int run(const std::string& args, const std::string& out = "stdout.txt", const std::string& err = "stderr.txt") {
        const std::string cmd = std::string(EVFRAME_CLI) + " " + args + " > " + path(out) + " 2> " + path(err);
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string slurp(const std::string& name) const {
        std::ifstream is(path(name), std::ios::binary);
        return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
    }

    std::vector<std::string> lines(const std::string& name) const {
        std::istringstream is(slurp(name));
        std::vector<std::string> out;
        for (std::string l; std::getline(is, l);) {
            out.push_back(l);
        }
        return out;
    }

    std::vector<evf::Frame> frames(const std::string& name) const {
        std::ifstream is(path(name), std::ios::binary);
        return evf::evf1::read_frames(is);
    }

    void synth(const std::string& name, const std::string& pattern = "moving-bar", const std::string& rate = "6e5") {
        ASSERT_EQ(run("synth --pattern " + pattern + " --rate " + rate + " --duration 0.1 -o " + path(name)), 0)
            << slurp("stderr.txt");
    }

    static std::string model(const std::string& name) { return std::string(EVFRAME_FIXTURE_DIR) + "/" + name; }

    fs::path dir_;
};

TEST_F(Cli, SynthIsByteReproducible) {
    synth("a.raw");
    synth("b.raw");
    EXPECT_EQ(slurp("a.raw"), slurp("b.raw"));
    EXPECT_EQ(slurp("a.raw.json"), slurp("b.raw.json"));
}

TEST_F(Cli, SynthRateTimesDurationEvents) {
    synth("a.raw", "uniform-noise", "1e6");
    const auto truth = nlohmann::json::parse(slurp("a.raw.json"));
    EXPECT_EQ(truth["event_count"].get<std::uint64_t>(), 100000u);
    std::uint64_t sum = 0;
    for (auto c : truth["window_counts"]) {
        sum += c.get<std::uint64_t>();
    }
    EXPECT_EQ(sum, 100000u);
}

TEST_F(Cli, DecodeCountMatchesSidecar) {
    for (const char* pattern : {"moving-bar", "blob-orbit", "uniform-noise"}) {
        synth("a.raw", pattern);
        const auto truth = nlohmann::json::parse(slurp("a.raw.json"));
        ASSERT_EQ(run("decode " + path("a.raw") + " --format bin -o " + path("a.bin")), 0);
        EXPECT_EQ(fs::file_size(path("a.bin")), 8 * truth["event_count"].get<std::uint64_t>()) << pattern;
        const auto stats = nlohmann::json::parse(lines("stderr.txt").back());
        EXPECT_EQ(stats["events_emitted"], truth["event_count"]) << pattern;

        ASSERT_EQ(run("decode " + path("a.raw") + " -o " + path("a.csv")), 0);
        EXPECT_EQ(lines("a.csv").size(), truth["event_count"].get<std::size_t>()) << pattern;
    }
}

TEST_F(Cli, DecodeBinaryLayout) {
    synth("a.raw");
    ASSERT_EQ(run("decode " + path("a.raw") + " --format bin -o " + path("a.bin")), 0);
    ASSERT_EQ(run("decode " + path("a.raw") + " -o " + path("a.csv")), 0);
    const std::string bin = slurp("a.bin");
    const auto csv = lines("a.csv");
    ASSERT_EQ(bin.size(), csv.size() * 8);
    for (std::size_t i = 0; i < csv.size(); i += 997) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(bin.data() + i * 8);
        const unsigned x = p[0] | (p[1] << 8);
        const unsigned y = p[2] | (p[3] << 8);
        const std::uint32_t tp = p[4] | (p[5] << 8) | (p[6] << 16) | (static_cast<std::uint32_t>(p[7]) << 24);
        const std::string expect = std::to_string(x) + "," + std::to_string(y) + "," + std::to_string(tp >> 31) +
                                   "," + std::to_string(tp & 0xFFFFFF);
        EXPECT_EQ(csv[i], expect);
    }
}

TEST_F(Cli, DecodeEmptyFile) {
    std::ofstream(path("empty.raw")).close();
    EXPECT_EQ(run("decode " + path("empty.raw") + " -o " + path("out.csv")), 0);
    EXPECT_TRUE(slurp("out.csv").empty());
    EXPECT_EQ(nlohmann::json::parse(lines("stderr.txt").back())["events_emitted"], 0);
}

TEST_F(Cli, DecodeOddLengthNamesOffset) {
    std::ofstream(path("odd.raw"), std::ios::binary) << "abcde";
    EXPECT_EQ(run("decode " + path("odd.raw")), 3);
    EXPECT_NE(slurp("stderr.txt").find("offset 4"), std::string::npos) << slurp("stderr.txt");
}

TEST_F(Cli, Frame60kEventsGivesThreeFrames) {
    synth("a.raw");
    ASSERT_EQ(run("--n-events 20000 frame " + path("a.raw") + " -o " + path("a.evf")), 0) << slurp("stderr.txt");
    const auto f = frames("a.evf");
    ASSERT_EQ(f.size(), 3u);
    for (const auto& fr : f) {
        EXPECT_EQ(fr.event_count, 20000u);
        EXPECT_EQ(fr.channels, 2);
        EXPECT_EQ(fr.width, 128);
    }
}

TEST_F(Cli, FrameIsDeterministicAcrossRunsAndThreading) {
    synth("a.raw", "blob-orbit");
    ASSERT_EQ(run("frame " + path("a.raw") + " -o " + path("a.evf")), 0);
    ASSERT_EQ(run("frame " + path("a.raw") + " -o " + path("b.evf")), 0);
    ASSERT_EQ(run("frame " + path("a.raw") + " -o " + path("c.evf") + " --single-thread"), 0);
    EXPECT_EQ(slurp("a.evf"), slurp("b.evf"));
    EXPECT_EQ(slurp("a.evf"), slurp("c.evf"));
}

TEST_F(Cli, SetsAndHistDifferOnlyInKindByteAndPayload) {
    synth("a.raw", "blob-orbit");
    ASSERT_EQ(run("--repr sets frame " + path("a.raw") + " -o " + path("s.evf")), 0);
    ASSERT_EQ(run("--repr hist frame " + path("a.raw") + " -o " + path("h.evf")), 0);
    const auto s = frames("s.evf");
    const auto h = frames("h.evf");
    ASSERT_EQ(s.size(), h.size());
    ASSERT_FALSE(s.empty());
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto hs = evf::evf1::encode_header(s[i]);
        auto hh = evf::evf1::encode_header(h[i]);
        EXPECT_EQ(hs[11], static_cast<std::uint8_t>(evf::Representation::sets));
        EXPECT_EQ(hh[11], static_cast<std::uint8_t>(evf::Representation::histogram));
        hh[11] = hs[11];
        EXPECT_EQ(hs, hh) << "frame " << i;
        EXPECT_NE(s[i].data, h[i].data) << "frame " << i;
    }
}

TEST_F(Cli, EndToEndEqualsTwoStep) {
    synth("a.raw", "blob-orbit", "1e6");
    const std::string m = model("net16_c2");
    ASSERT_EQ(run("frame " + path("a.raw") + " -o " + path("a.evf")), 0);
    ASSERT_EQ(run("infer --model " + m + " --frames " + path("a.evf"), "two.jsonl"), 0) << slurp("stderr.txt");
    ASSERT_EQ(run("infer --model " + m + " --raw " + path("a.raw"), "e2e.jsonl"), 0) << slurp("stderr.txt");
    ASSERT_EQ(run("infer --model " + m + " --raw " + path("a.raw") + " --single-thread", "e2e1.jsonl"), 0);
    EXPECT_EQ(lines("two.jsonl").size(), frames("a.evf").size());
    EXPECT_EQ(lines("two.jsonl").size(), 5u);
    EXPECT_EQ(slurp("two.jsonl"), slurp("e2e.jsonl"));
    EXPECT_EQ(slurp("two.jsonl"), slurp("e2e1.jsonl"));
    const auto rec = nlohmann::json::parse(lines("two.jsonl").front());
    EXPECT_EQ(rec["logits"].size(), 11u);
}

TEST_F(Cli, ConstTimeEndToEndEqualsTwoStep) {
    synth("a.raw", "uniform-noise");
    const std::string m = model("net16_c2");
    const std::string flags = "--mode const-time --window 20000 --repr slts --tau 12 ";
    ASSERT_EQ(run(flags + "frame " + path("a.raw") + " -o " + path("a.evf")), 0) << slurp("stderr.txt");
    ASSERT_EQ(run("infer --model " + m + " --frames " + path("a.evf"), "two.jsonl"), 0);
    ASSERT_EQ(run(flags + "infer --model " + m + " --raw " + path("a.raw"), "e2e.jsonl"), 0);
    EXPECT_EQ(frames("a.evf").size(), 5u);
    EXPECT_EQ(slurp("two.jsonl"), slurp("e2e.jsonl"));
}

TEST_F(Cli, TwoChannelFramesIntoEightChannelModel) {
    synth("a.raw");
    ASSERT_EQ(run("frame " + path("a.raw") + " -o " + path("a.evf")), 0);
    EXPECT_EQ(run("infer --model " + model("net16w_c8") + " --frames " + path("a.evf")), 4);
    EXPECT_NE(slurp("stderr.txt").find("does not match"), std::string::npos);
    EXPECT_EQ(run("infer --model " + model("net16w_c8") + " --raw " + path("a.raw")), 4);
}

TEST_F(Cli, BadFlagCombinationsAreUsageErrors) {
    synth("a.raw");
    EXPECT_EQ(run("--window 500 frame " + path("a.raw") + " -o " + path("x.evf")), 1);
    EXPECT_NE(slurp("stderr.txt").find("Usage"), std::string::npos);
    EXPECT_EQ(run("--mode const-time --n-events 10 frame " + path("a.raw") + " -o " + path("x.evf")), 1);
    EXPECT_EQ(run("--repr hist --tau 8 frame " + path("a.raw") + " -o " + path("x.evf")), 1);
    EXPECT_EQ(run("--channels 3 frame " + path("a.raw") + " -o " + path("x.evf")), 1);
    EXPECT_EQ(run("--out-res 2000x2000 frame " + path("a.raw") + " -o " + path("x.evf")), 1);
    EXPECT_EQ(run("infer --model " + model("net16_c2")), 1);
    EXPECT_EQ(run("frame " + path("missing.raw") + " -o " + path("x.evf")), 2);
}

TEST_F(Cli, ReportHasAllStages) {
    synth("a.raw");
    ASSERT_EQ(run("--report " + path("r.jsonl") + " infer --model " + model("net16_c2") + " --raw " + path("a.raw")),
              0);
    std::vector<std::string> stages;
    std::uint64_t frames = 0, events = 0;
    for (const auto& l : lines("r.jsonl")) {
        const auto r = nlohmann::json::parse(l);
        if (r["record"] == "stage") {
            stages.push_back(r["stage"]);
            EXPECT_GT(r["count"].get<int>(), 0) << l;
        }
        if (r["record"] == "run") {
            frames = r["frames"];
            events = r["events"];
            EXPECT_LE(r["frames_per_s"].get<double>(), r["events_per_s"].get<double>() / 20000 + 1e-9);
        }
        if (r["record"] == "predictions") {
            std::uint64_t sum = 0;
            for (auto c : r["histogram"]) {
                sum += c.get<std::uint64_t>();
            }
            EXPECT_EQ(sum, 3u);
        }
    }
    EXPECT_EQ(stages, (std::vector<std::string>{"decode", "frame", "quantize", "infer"}));
    EXPECT_EQ(frames, 3u);
    EXPECT_EQ(events, 60000u);
}

TEST_F(Cli, BenchReportsEveryWorkload) {
    ASSERT_EQ(run("bench --events 200000 --single-thread", "bench.jsonl"), 0) << slurp("stderr.txt");
    std::vector<std::string> workloads;
    int full_stages = 0;
    for (const auto& l : lines("bench.jsonl")) {
        const auto r = nlohmann::json::parse(l);
        if (r["record"] == "run") {
            workloads.push_back(r["workload"]);
            EXPECT_GT(r["events_per_s"].get<double>(), 0.0);
        }
        if (r["record"] == "stage" && r["workload"] == "full" && r["count"].get<int>() > 0) {
            ++full_stages;
        }
    }
    EXPECT_EQ(workloads, (std::vector<std::string>{"decode", "frame", "full"}));
    EXPECT_EQ(full_stages, 4);
}

} // namespace
