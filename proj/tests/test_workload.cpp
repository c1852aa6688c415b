#include <gtest/gtest.h>

#include "imasim/workload.hpp"

using namespace imasim;

namespace {

// Explicit loop count of multiply-accumulates, padding taps included.
Count loop_macs(const ShapedLayer& l) {
    const TensorShape o = l.output();
    const Count k = kernel_size(l.layer);
    const Count per_out = is_depthwise(l.layer) ? 1 : input_channels(l.layer);
    Count n = 0;
    for (Count y = 0; y < o.height; ++y)
        for (Count x = 0; x < o.width; ++x)
            for (Count c = 0; c < o.channels; ++c)
                for (Count t = 0; t < k * k; ++t)
                    for (Count i = 0; i < per_out; ++i) ++n;
    return n;
}

TensorShape hwc(Count h, Count w, Count c) { return {h, w, c, Layout::HWC}; }

} // namespace

TEST(OutputShape, PointwisePreservesSpatialDims) {
    EXPECT_EQ(output_shape(PointwiseConv{32, 192}, hwc(32, 32, 32)), hwc(32, 32, 192));
}

TEST(OutputShape, DepthwiseSamePadding) {
    EXPECT_EQ(output_shape(DepthwiseConv{3, 1, 1, 192}, hwc(32, 32, 192)), hwc(32, 32, 192));
}

TEST(OutputShape, StridedStandardConv) {
    EXPECT_EQ(output_shape(StandardConv{3, 2, 1, 32, 64}, hwc(16, 16, 32)), hwc(8, 8, 64));
}

TEST(OutputShape, ChannelMismatchThrows) {
    try {
        (void)output_shape(PointwiseConv{32, 64}, hwc(8, 8, 16));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ChannelMismatch);
    }
}

TEST(OutputShape, KernelLargerThanPaddedInputThrows) {
    EXPECT_THROW((void)output_shape(StandardConv{5, 1, 0, 1, 1}, hwc(3, 3, 1)), Error);
}

TEST(Macs, BaselineConv) {
    EXPECT_EQ(macs(StandardConv{3, 1, 1, 32, 64}, hwc(16, 16, 32)), 4'718'592);
    EXPECT_EQ(baseline_conv().macs(), 4'718'592);
}

TEST(Macs, DepthwiseAndTrivialPointwise) {
    EXPECT_EQ(macs(DepthwiseConv{3, 1, 1, 192}, hwc(32, 32, 192)), 1'769'472);
    EXPECT_EQ(macs(PointwiseConv{1, 1}, hwc(1, 1, 1)), 1);
}

TEST(Macs, MatchesLoopOracleOverGrid) {
    for (Count k : {1, 2, 3, 5})
        for (Count s : {1, 2, 3})
            for (Count p = 0; p <= k / 2; ++p)
                for (Count h : {5, 7, 9}) {
                    const ShapedLayer a{"a", StandardConv{k, s, p, 3, 4}, hwc(h, h + 1, 3)};
                    const ShapedLayer b{"b", DepthwiseConv{k, s, p, 6}, hwc(h, h + 2, 6)};
                    EXPECT_EQ(a.macs(), loop_macs(a));
                    EXPECT_EQ(b.macs(), loop_macs(b));
                }
}

TEST(Params, Examples) {
    EXPECT_EQ(params(DepthwiseConv{3, 1, 1, 192}), 1'728);
    EXPECT_EQ(params(PointwiseConv{32, 192}), 6'144);
    EXPECT_EQ(params(StandardConv{3, 1, 1, 32, 64}), 18'432);
    for (Count k = 1; k <= 7; ++k)
        for (Count c : {1, 13, 96}) EXPECT_EQ(params(DepthwiseConv{k, 1, 0, c}), k * k * c);
}

TEST(Validate, RejectsDegenerateLayers) {
    EXPECT_THROW(validate(StandardConv{0, 1, 0, 1, 1}), Error);
    EXPECT_THROW(validate(StandardConv{3, 0, 0, 1, 1}), Error);
    EXPECT_THROW(validate(DepthwiseConv{3, 1, -1, 4}), Error);
    EXPECT_THROW(validate(PointwiseConv{0, 4}), Error);
    EXPECT_THROW(hwc(0, 1, 1).validate(), Error);
}

TEST(Bottleneck, DefaultMatchesCaseStudy) {
    const BottleneckDescriptor b = default_bottleneck();
    EXPECT_EQ(b.c_in, 32);
    EXPECT_EQ(b.c_out, 32);
    EXPECT_EQ(b.expanded(), 192);
    EXPECT_TRUE(b.residual());
    EXPECT_EQ(b.macs(), 14'352'384);
    EXPECT_EQ(b.macs(), 6'291'456 + 1'769'472 + 6'291'456);
}

TEST(Bottleneck, ActivationFootprintFitsScratchpad) {
    const auto layers = default_bottleneck().layers();
    Count bytes = layers.front().input.elements();
    for (const auto& l : layers) bytes += l.output().elements();
    EXPECT_EQ(bytes, 458'752);
    EXPECT_LT(bytes, 512 * 1024);
}

TEST(Bottleneck, ExpandsToThreeLayers) {
    const BottleneckDescriptor b{24, 6, 32, 2, 28, 28};
    const auto e = b.expand();
    ASSERT_EQ(e.size(), 3u);
    EXPECT_EQ(std::get<PointwiseConv>(e[0]).c_out, 144);
    EXPECT_EQ(std::get<DepthwiseConv>(e[1]).k, 3);
    EXPECT_EQ(std::get<DepthwiseConv>(e[1]).stride, 2);
    EXPECT_EQ(std::get<PointwiseConv>(e[2]).c_out, 32);
    EXPECT_FALSE(b.residual());
    EXPECT_FALSE(b.layers().back().residual_after);
    EXPECT_TRUE(default_bottleneck().layers().back().residual_after);
}

TEST(Bottleneck, SumsMatchExpandedLayers) {
    for (const BottleneckDescriptor& b :
         {default_bottleneck(), BottleneckDescriptor{16, 1, 16, 1, 9, 9}, BottleneckDescriptor{64, 4, 96, 2, 13, 11}}) {
        Count m = 0, p = 0;
        for (const auto& l : b.layers()) {
            m += l.macs();
            p += l.params();
        }
        EXPECT_EQ(b.macs(), m);
        EXPECT_EQ(b.params(), p);
    }
}

TEST(Bottleneck, StrideOneChainReturnsInputSpatialDims) {
    const auto net = BottleneckDescriptor{16, 6, 24, 1, 11, 7}.to_network();
    EXPECT_NO_THROW(net.validate_chain());
    const TensorShape out = net.layers.back().output();
    EXPECT_EQ(out.height, 11);
    EXPECT_EQ(out.width, 7);
}

TEST(Network, BrokenChainRejected) {
    NetworkDescriptor net = default_bottleneck().to_network();
    net.layers[1].input.height = 31;
    EXPECT_THROW(net.validate_chain(), Error);
}

TEST(MobileNetV2, SeventeenBottlenecksFirstWithoutExpansion) {
    const auto net = mobilenet_v2_preset();
    EXPECT_EQ(bottleneck_count(net), 17);
    // t = 1: the first expand layer keeps the channel count.
    const auto& first = net.layers.at(1);
    ASSERT_TRUE(std::holds_alternative<PointwiseConv>(first.layer));
    EXPECT_EQ(std::get<PointwiseConv>(first.layer).c_in, std::get<PointwiseConv>(first.layer).c_out);
}

TEST(MobileNetV2, ChainsEndToEnd) {
    const auto net = mobilenet_v2_preset();
    EXPECT_NO_THROW(net.validate_chain());
    EXPECT_EQ(net.layers.front().input, hwc(224, 224, 3));
    EXPECT_EQ(net.layers.back().output(), hwc(7, 7, 1280));
}

TEST(MobileNetV2, ParameterTotalsAndDepthwiseShare) {
    const auto net = mobilenet_v2_preset();
    Count total = 0, dw = 0, stem_head = 0;
    for (const auto& l : net.layers) {
        total += l.params();
        if (is_depthwise(l.layer)) dw += l.params();
        if (l.role == LayerRole::Stem || l.role == LayerRole::Head) stem_head += l.params();
    }
    EXPECT_EQ(total, net.params());
    EXPECT_NEAR(static_cast<double>(total), 2.2e6, 0.22e6);
    const double share_all = static_cast<double>(dw) / static_cast<double>(total);
    const double share_body = static_cast<double>(dw) / static_cast<double>(total - stem_head);
    // The 1280-wide head conv dilutes the share below the bottleneck-only figure.
    EXPECT_NEAR(share_body, 0.04, 0.01);
    EXPECT_LT(share_all, share_body);
    EXPECT_GT(share_all, 0.02);
}

TEST(MobileNetV2, WidthMultiplierRoundsToEight) {
    const auto net = mobilenet_v2_preset(0.35, 96);
    EXPECT_NO_THROW(net.validate_chain());
    for (const auto& l : net.layers)
        if (l.role == LayerRole::Bottleneck) {
            EXPECT_EQ(output_channels(l.layer) % 8, 0) << l.name;
        }
    EXPECT_EQ(make_divisible(32 * 0.35), 16);
    EXPECT_EQ(make_divisible(3.0), 8);
}

TEST(MobileNetV2, InvalidArguments) {
    EXPECT_THROW((void)mobilenet_v2_preset(0.0), Error);
    EXPECT_THROW((void)mobilenet_v2_preset(1.0, 16), Error);
}
