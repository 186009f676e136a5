#include <gtest/gtest.h>

#include <ctime>

#include "ehr/timestamp.hpp"
#include "ehr/synth_bench.hpp"

using namespace ehr;

TEST(Timestamp, ParsesSecondsAndFraction) {
    const auto t = parse_timestamp("2150-01-10 10:00:00", "%Y-%m-%d %H:%M:%S");
    ASSERT_TRUE(t);
    EXPECT_EQ(*t, micros_from_civil(2150, 1, 10, 10, 0, 0, 0));
    const auto f = parse_timestamp("2000-02-29T23:59:59.25", "%Y-%m-%dT%H:%M:%S.%f");
    ASSERT_TRUE(f);
    EXPECT_EQ(*f % kMicrosPerSecond, 250000);
}

TEST(Timestamp, RejectsMismatches) {
    const char* fmt = "%Y-%m-%d %H:%M:%S";
    EXPECT_FALSE(parse_timestamp("2150-13-01 00:00:00", fmt));
    EXPECT_FALSE(parse_timestamp("2150-02-30 00:00:00", fmt));
    EXPECT_FALSE(parse_timestamp("2150-01-01 24:00:00", fmt));
    EXPECT_FALSE(parse_timestamp("2150-01-01", fmt));
    EXPECT_FALSE(parse_timestamp("2150-01-01 00:00:00x", fmt));
    EXPECT_FALSE(parse_timestamp("", fmt));
    EXPECT_TRUE(parse_timestamp("5%", "%d%%"));
}

TEST(Timestamp, FormatRoundTrip) {
    const Micros t = micros_from_civil(1999, 12, 31, 23, 59, 58, 0);
    EXPECT_EQ(format_timestamp(t), "1999-12-31 23:59:58");
    EXPECT_EQ(format_timestamp(t + 5), "1999-12-31 23:59:58.000005");
}

TEST(Timestamp, AgreesWithTimegmOnRandomDates) {
    synth::Pcg32 rng(7);
    for (int i = 0; i < 1000; ++i) {
        std::tm tm{};
        tm.tm_year = static_cast<int>(rng.uniform_int(1900, 2300)) - 1900;
        tm.tm_mon = static_cast<int>(rng.uniform_int(0, 11));
        tm.tm_mday = static_cast<int>(rng.uniform_int(1, 28));
        tm.tm_hour = static_cast<int>(rng.uniform_int(0, 23));
        tm.tm_min = static_cast<int>(rng.uniform_int(0, 59));
        tm.tm_sec = static_cast<int>(rng.uniform_int(0, 59));
        std::tm copy = tm;
        const Micros expect = static_cast<Micros>(::timegm(&copy)) * kMicrosPerSecond;
        EXPECT_EQ(micros_from_civil(tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                                    tm.tm_min, tm.tm_sec, 0),
                  expect);
        EXPECT_EQ(parse_timestamp(format_timestamp(expect), "%Y-%m-%d %H:%M:%S"), expect);
    }
}
