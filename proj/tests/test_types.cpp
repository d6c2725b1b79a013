#include <gtest/gtest.h>

#include <random>

#include "exas/errors.hpp"
#include "exas/hash.hpp"
#include "exas/time.hpp"
#include "exas/types.hpp"

using namespace exas;

TEST(ResourceVector, ArithmeticIsComponentwise) {
    const ResourceVector a{8, 1, 20, 0};
    const ResourceVector b{3, 0, 5, 2};
    EXPECT_EQ(a + b, (ResourceVector{11, 1, 25, 2}));
    EXPECT_EQ(a - b, (ResourceVector{5, 1, 15, -2}));
    EXPECT_EQ(a * 3, (ResourceVector{24, 3, 60, 0}));
    EXPECT_FALSE((a - b).non_negative());
}

TEST(ResourceVector, FitsWithinReportsFirstAxis) {
    const ResourceVector cap{3000, 30, 500000, 4};
    EXPECT_TRUE((ResourceVector{8, 0, 20, 0}).fits_within(cap));
    EXPECT_EQ((ResourceVector{0, 31, 0, 0}).first_exceeding_axis(cap), "vgpus");
    EXPECT_EQ((ResourceVector{3001, 31, 0, 5}).first_exceeding_axis(cap), "cpu_cores");
    EXPECT_FALSE((ResourceVector{1, 0, 0, 0}).first_exceeding_axis(cap).has_value());
}

TEST(ResourceVector, PartialOrderProperty) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::int64_t> d(0, 10);
    for (int i = 0; i < 2000; ++i) {
        const ResourceVector a{d(rng), d(rng), d(rng), d(rng)};
        const ResourceVector b{d(rng), d(rng), d(rng), d(rng)};
        const auto aa = a.axes();
        const auto bb = b.axes();
        bool le = true;
        for (int k = 0; k < 4; ++k) le = le && aa[k] <= bb[k];
        EXPECT_EQ(a.fits_within(b), le);
        EXPECT_EQ(a.fits_within(b), !a.first_exceeding_axis(b).has_value());
        EXPECT_TRUE(a.fits_within(a + b));
        EXPECT_EQ((a + b) - b, a);
    }
}

TEST(ResourceVector, JsonRejectsNegatives) {
    nlohmann::json j = ResourceVector{1, 2, 3, 4};
    EXPECT_EQ(j.get<ResourceVector>(), (ResourceVector{1, 2, 3, 4}));
    j["vgpus"] = -1;
    EXPECT_THROW(j.get<ResourceVector>(), ValidationError);
}

TEST(Enums, RoundTrip) {
    for (auto m : {Modality::simulation, Modality::emulation, Modality::in_lab, Modality::outdoors}) {
        EXPECT_EQ(modality_from_string(to_string(m)), m);
    }
    EXPECT_EQ(to_string(Modality::in_lab), "in-lab");
    EXPECT_FALSE(modality_from_string("lab").has_value());
    EXPECT_EQ(traffic_from_string("udp"), TrafficKind::udp);
}

TEST(Hash, KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_TRUE(is_hex_digest(sha256_hex("x")));
    EXPECT_FALSE(is_hex_digest("ABC"));
}

TEST(Time, Rfc3339RoundTrip) {
    const auto t = parse_rfc3339("2026-10-15T08:30:00Z");
    EXPECT_EQ(format_rfc3339(t), "2026-10-15T08:30:00Z");
    EXPECT_EQ(utc_date_compact(t), "20261015");
    EXPECT_THROW(parse_rfc3339("2026-10-15 08:30:00"), ValidationError);
    EXPECT_THROW(parse_rfc3339("2026-02-30T00:00:00Z"), ValidationError);
}

TEST(Time, SimClockCompressesAndStops) {
    SimClock clock(1000.0);
    EXPECT_EQ(clock.to_wall(2.0), std::chrono::milliseconds(2));
    std::stop_source src;
    src.request_stop();
    const auto t0 = std::chrono::steady_clock::now();
    EXPECT_FALSE(clock.sleep_for(3600.0, src.get_token()));
    EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::milliseconds(500));
    EXPECT_TRUE(clock.sleep_for(1.0));
}
