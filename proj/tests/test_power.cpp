#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lsw/power.hpp"

using lsw::PowerModelParams;

namespace {

// Two lasers and two gates for every started band.
double tm_oracle(int n, const PowerModelParams& p) {
    const int bands = (n + p.channels_per_band - 1) / p.channels_per_band;
    return bands * 2.0 * (p.laser_power_w + p.soa_power_w);
}

}  // namespace

TEST(Power, TimeMultiplexedIsFlatWithinABand) {
    const PowerModelParams p;
    EXPECT_DOUBLE_EQ(lsw::power_time_multiplexed(1, p), 6.0);
    EXPECT_DOUBLE_EQ(lsw::power_time_multiplexed(122, p), lsw::power_time_multiplexed(1, p));
    EXPECT_DOUBLE_EQ(lsw::power_time_multiplexed(123, p), 2 * lsw::power_time_multiplexed(1, p));
    EXPECT_DOUBLE_EQ(lsw::power_time_multiplexed(366, p), 3 * lsw::power_time_multiplexed(1, p));
    for (int n = 1; n <= 366; ++n) ASSERT_DOUBLE_EQ(lsw::power_time_multiplexed(n, p), tm_oracle(n, p)) << n;
}

TEST(Power, OutOfRangeAndInvalidCounts) {
    const PowerModelParams p;
    EXPECT_THROW((void)lsw::power_time_multiplexed(367, p), std::out_of_range);
    EXPECT_THROW((void)lsw::power_time_multiplexed(0, p), std::invalid_argument);
    EXPECT_THROW((void)lsw::power_per_channel_design(0, p), std::invalid_argument);
}

TEST(Power, PerChannelDesignIsLinear) {
    const PowerModelParams p;
    for (int n : {1, 7, 122, 366}) EXPECT_NEAR(lsw::power_per_channel_design(n, p), 0.8 * n, 1e-12) << n;
}

TEST(Power, CrossoverAtEightChannelsForDefaults) {
    const PowerModelParams p;
    const auto c = lsw::crossover_channels(p);
    ASSERT_TRUE(c.has_value());
    EXPECT_EQ(*c, 8);
    EXPECT_GE(lsw::power_time_multiplexed(7, p), lsw::power_per_channel_design(7, p));
    EXPECT_LT(lsw::power_time_multiplexed(8, p), lsw::power_per_channel_design(8, p));
}

TEST(Power, CrossoverExtremes) {
    PowerModelParams hungry;
    hungry.per_channel_source_power_w = 100.0;
    EXPECT_EQ(lsw::crossover_channels(hungry), 1);

    PowerModelParams free_channels;
    free_channels.per_channel_source_power_w = 0.0;
    free_channels.per_channel_gate_power_w = 0.0;
    EXPECT_FALSE(lsw::crossover_channels(free_channels).has_value());
}

TEST(Power, ParameterValidation) {
    PowerModelParams p;
    p.bands = 4;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.bands = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Power, JsonRoundTrip) {
    PowerModelParams p;
    p.laser_power_w = 3.25;
    p.bands = 2;
    const auto q = lsw::power_params_from_json(lsw::to_json(p));
    EXPECT_EQ(q.laser_power_w, 3.25);
    EXPECT_EQ(q.bands, 2);
    EXPECT_EQ(q.channels_per_band, 122);
}

TEST(Endpoints, SmallestAndReferenceNetworks) {
    auto e = lsw::pulse_endpoints(1, 1);
    EXPECT_EQ(e.endpoints, 1);
    EXPECT_EQ(e.star_couplers, 1);
    e = lsw::pulse_endpoints(122, 16);
    EXPECT_EQ(e.endpoints, 1952);
    EXPECT_EQ(e.star_couplers, 256);
    EXPECT_THROW((void)lsw::pulse_endpoints(0, 4), std::invalid_argument);
    EXPECT_THROW((void)lsw::pulse_endpoints(4, 0), std::invalid_argument);
}

TEST(Endpoints, MonotoneInBothArguments) {
    for (long long n = 1; n < 40; ++n)
        for (long long x = 1; x < 20; ++x) {
            const auto e = lsw::pulse_endpoints(n, x);
            ASSERT_LT(e.endpoints, lsw::pulse_endpoints(n + 1, x).endpoints);
            ASSERT_LT(e.endpoints, lsw::pulse_endpoints(n, x + 1).endpoints);
            ASSERT_LT(e.star_couplers, lsw::pulse_endpoints(n, x + 1).star_couplers);
        }
}
