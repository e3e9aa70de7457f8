#include "evframe/nn/executor.hpp"
#include "evframe/nn/topology.hpp"

#include "oracles/naive_executor.hpp"
#include "random_model.hpp"

#include <gtest/gtest.h>

#include <thread>

using namespace evf::nn;

TEST(ParamCounts, FrozenRegressionValues) {
    EXPECT_EQ(make_topology(Topology::net16, 2).param_count(), 16203u);
    EXPECT_EQ(make_topology(Topology::net70, 2).param_count(), 70475u);
    EXPECT_EQ(make_topology(Topology::net16w, 8).param_count(), 19915u);
}

TEST(Topology, ShapeChains) {
    const auto n16 = make_topology(Topology::net16, 2);
    const auto n70 = make_topology(Topology::net70, 2);
    EXPECT_NO_THROW(validate(n16));
    EXPECT_NO_THROW(validate(n70));
    EXPECT_EQ(n16.layers[n16.layers.size() - 3].out_ch, 128);
    EXPECT_EQ(n70.layers[n70.layers.size() - 3].out_ch, 256);
    EXPECT_EQ(n16.layers.front().out_ch, 16);
    EXPECT_EQ(n16.layers.front().stride, 2);
    EXPECT_EQ(n16.layers.back().out_ch, 11);
}

TEST(Argmax, TiesGoLow) {
    const std::vector<std::int32_t> v = {3, 9, 9, -1};
    EXPECT_EQ(argmax(v), 1);
    const std::vector<std::int32_t> flat(11, 0);
    EXPECT_EQ(argmax(flat), 0);
}

TEST(Executor, ZeroFrameAndLogitLength) {
    auto m = make_topology(Topology::net16, 2);
    randomize_weights(m, 77);
    const Tensor3 zero(2, 128, 128);
    const auto p = infer(m, zero);
    ASSERT_EQ(p.logits.size(), 11u);
    EXPECT_EQ(p.logits, oracle::run(m, zero));
    EXPECT_EQ(p.class_id, oracle::argmax(p.logits));
}

class WholeNetwork : public ::testing::TestWithParam<int> {};

TEST_P(WholeNetwork, MatchesNaiveOracle) {
    const auto seed = static_cast<std::uint64_t>(GetParam());
    auto m = make_topology(seed % 3 == 2 ? Topology::net70 : Topology::net16, 2, 11, 48, 48);
    randomize_weights(m, seed);
    std::mt19937_64 rng(seed + 100);
    const auto x = testutil::random_tensor(2, 48, 48, rng, 0.8);
    const auto want = oracle::run(m, x);
    Executor fast(m, {.zero_skip = ZeroSkip::always});
    Executor dense(m, {.zero_skip = ZeroSkip::never});
    EXPECT_EQ(fast.run(x).logits, want);
    EXPECT_EQ(dense.run(x).logits, want);
    EXPECT_EQ(fast.run(x).class_id, oracle::argmax(want));
}

INSTANTIATE_TEST_SUITE_P(Seeds, WholeNetwork, ::testing::Range(0, 6));

TEST(Executor, ActivationsStayAlive) {
    // The fixture weights must not collapse every activation to 0 or 255.
    auto m = make_topology(Topology::net16, 2);
    randomize_weights(m, 1);
    std::mt19937_64 rng(9);
    Tensor3 x = testutil::random_tensor(2, 128, 128, rng, 0.9);
    Tensor3 t = x;
    for (std::size_t i = 0; i + 2 < m.layers.size(); ++i) {
        t = m.layers[i].kind == LayerKind::conv2d ? conv2d_q8(t, m.layers[i]) : dwsep_conv_q8(t, m.layers[i]);
        std::size_t mid = 0;
        for (auto v : t.data) mid += (v > 0 && v < 255);
        EXPECT_GT(mid, t.data.size() / 20) << "layer " << i;
    }
}

TEST(Executor, DeterministicAcrossThreads) {
    auto m = make_topology(Topology::net16, 2);
    randomize_weights(m, 5);
    std::mt19937_64 rng(6);
    const auto x = testutil::random_tensor(2, 128, 128, rng, 0.7);
    const auto ref = infer(m, x);
    std::vector<Prediction> got(4);
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < got.size(); ++i) {
        threads.emplace_back([&, i] {
            Executor e(m);
            e.run(x);
            got[i] = e.run(x);
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& p : got) EXPECT_EQ(p, ref);
}

TEST(Executor, InputShapeMismatch) {
    auto m = make_topology(Topology::net16w, 8);
    Executor e(m);
    try {
        e.run(Tensor3(2, 128, 128));
        FAIL();
    } catch (const evf::ModelError& err) {
        EXPECT_EQ(err.kind(), evf::ModelError::Kind::shape_mismatch);
        EXPECT_EQ(err.error_class(), evf::ErrorClass::model);
    }
}

TEST(Executor, FrameToTensor) {
    evf::Frame f;
    f.width = 128;
    f.height = 128;
    f.channels = 2;
    f.data.assign(2 * 128 * 128, 3);
    f.data[128 * 128 + 5] = 200;
    const auto t = to_tensor(f);
    EXPECT_EQ(t.channels, 2);
    EXPECT_EQ(t.at(1, 0, 5), 200);
}
