// SPDX-License-Identifier: Apache-2.0

#include "irsnoma/channel.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <filesystem>

using namespace irsnoma;
using namespace irsnoma::testing;

TEST_SUITE("channel")
{

TEST_CASE("default geometry distances")
{
    const NetworkConfig cfg = defaultConfig();
    for (const auto &u : cfg.userPositions)
        for (const auto &b : cfg.bsPositions)
            CHECK(distance(u, b) > 0.0);
    CHECK(distance(cfg.bsPositions[0], cfg.irsPosition) == doctest::Approx(std::sqrt(100.0 * 100.0 + 50.0 * 50.0)));
    CHECK(distance(cfg.bsPositions[0], cfg.irsPosition) == doctest::Approx(111.80).epsilon(1e-4));
    CHECK(cfg.userPositions[0] == Vec3{50.0, 30.0, 0.0});
    CHECK(cfg.bsPositions[2] == Vec3{300.0, 0.0, 20.0});
}

TEST_CASE("pathloss reference values")
{
    CHECK(channel::pathloss(1.0, 3.5) == doctest::Approx(1e-3).epsilon(1e-14));
    CHECK(channel::pathloss(1.0, 2.2) == doctest::Approx(1e-3).epsilon(1e-14));
    CHECK(channel::pathloss(10.0, 2.0) == doctest::Approx(1e-5).epsilon(1e-14));
    const double d = 111.80;
    CHECK(relTo(channel::pathloss(d, 2.2), 1e-3 * std::pow(d, -2.2)) < 1e-12);
    CHECK_THROWS_AS(channel::pathloss(0.0, 2.0), std::invalid_argument);
}

TEST_CASE("same seed gives identical channels, different seeds differ")
{
    const NetworkConfig cfg = defaultConfig();
    const ChannelSet a = channel::generateChannels(cfg, 99);
    const ChannelSet b = channel::generateChannels(cfg, 99);
    const ChannelSet c = channel::generateChannels(cfg, 100);
    CHECK(a.direct == b.direct);
    CHECK(a.bsToIrs == b.bsToIrs);
    CHECK(a.irsToUser == b.irsToUser);
    CHECK(a.direct(0, 0, 0) != c.direct(0, 0, 0));
    CHECK(a.matches(cfg));
    CHECK(a.allFinite());
}

TEST_CASE("direct links have unit mean power after pathloss normalization")
{
    NetworkConfig cfg = defaultConfig();
    cfg.numElements = 1;
    double sum = 0.0;
    int n = 0;
    for (std::uint64_t s = 0; n < 10000; ++s)
    {
        const ChannelSet ch = channel::generateChannels(cfg, s);
        for (int i = 0; i < cfg.numUsers; ++i)
            for (int j = 0; j < cfg.numBs; ++j)
            {
                const double pl = channel::pathloss(distance(cfg.userPositions[i], cfg.bsPositions[j]), 3.5);
                for (int k = 0; k < cfg.numSubchannels; ++k, ++n)
                    sum += std::norm(ch.direct(i, j, k)) / pl;
            }
    }
    CHECK(std::abs(sum / n - 1.0) < 0.05);
}

TEST_CASE("BS-surface links average to the scaled line-of-sight term")
{
    NetworkConfig cfg = defaultConfig();
    cfg.numElements = 3;
    const int draws = 10000;
    std::vector<Eigen::VectorXcd> mean(cfg.numBs, Eigen::VectorXcd::Zero(3));
    for (int s = 0; s < draws; ++s)
    {
        const ChannelSet ch = channel::generateChannels(cfg, static_cast<std::uint64_t>(s) + 7);
        for (int j = 0; j < cfg.numBs; ++j)
            mean[j] += ch.f(j, 0) / double(draws);
    }
    const double kappa = cfg.ricianFactor;
    for (int j = 0; j < cfg.numBs; ++j)
    {
        const double pl = channel::pathloss(distance(cfg.bsPositions[j], cfg.irsPosition), 2.2);
        const Eigen::VectorXcd los = channel::bsIrsLineOfSight(cfg, j);
        const Eigen::VectorXcd expect = los * std::sqrt(kappa / (kappa + 1.0)) * std::sqrt(pl);
        for (int m = 0; m < 3; ++m)
            CHECK(std::abs(mean[j](m) - expect(m)) < 0.05 * std::abs(expect(m)));
    }
}

TEST_CASE("line-of-sight response is unit modulus with the ULA phase progression")
{
    const NetworkConfig cfg = defaultConfig();
    for (int j = 0; j < cfg.numBs; ++j)
    {
        const Eigen::VectorXcd a = channel::bsIrsLineOfSight(cfg, j);
        const double az = std::atan2(cfg.irsPosition[1] - cfg.bsPositions[j][1],
                                     cfg.irsPosition[0] - cfg.bsPositions[j][0]);
        for (int m = 0; m < a.size(); ++m)
        {
            CHECK(std::abs(std::abs(a(m)) - 1.0) < 1e-12);
            CHECK(std::abs(a(m) - std::polar(1.0, -3.14159265358979323846 * m * std::sin(az))) < 1e-9);
        }
    }
}

TEST_CASE("moving a user away lowers its channel energy by the pathloss ratio")
{
    NetworkConfig near = defaultConfig();
    NetworkConfig far = near;
    far.userPositions[0] = {50.0, 90.0, 0.0};
    const ChannelSet a = channel::generateChannels(near, 5);
    const ChannelSet b = channel::generateChannels(far, 5);
    for (int j = 0; j < near.numBs; ++j)
    {
        const double ratio = channel::pathloss(distance(far.userPositions[0], far.bsPositions[j]), 3.5) /
                             channel::pathloss(distance(near.userPositions[0], near.bsPositions[j]), 3.5);
        CHECK(ratio < 1.0);
        CHECK(relTo(std::norm(b.direct(0, j, 0)), ratio * std::norm(a.direct(0, j, 0))) < 1e-12);
    }
}

TEST_CASE("surface vectors do not depend on the element count beyond their length")
{
    NetworkConfig small = defaultConfig();
    small.numElements = 20;
    const ChannelSet a = channel::generateChannels(small, 3);
    const ChannelSet b = channel::generateChannels(defaultConfig(), 3);
    CHECK(a.direct == b.direct);
    for (int m = 0; m < 20; ++m)
    {
        CHECK(a.f(1, 2)(m) == b.f(1, 2)(m));
        CHECK(a.g(4, 0)(m) == b.g(4, 0)(m));
    }
}

TEST_CASE("coincident nodes are rejected")
{
    NetworkConfig cfg = defaultConfig();
    cfg.userPositions[1] = cfg.bsPositions[0];
    CHECK_THROWS_AS(channel::generateChannels(cfg, 1), std::invalid_argument);
}

TEST_CASE("channel dump round-trips")
{
    NetworkConfig cfg = defaultConfig();
    cfg.numElements = 4;
    const ChannelSet a = channel::generateChannels(cfg, 12);
    const ChannelSet b = channel::channelsFromJson(channel::channelsToJson(a));
    CHECK(a.direct == b.direct);
    CHECK(a.bsToIrs == b.bsToIrs);
    CHECK(a.irsToUser == b.irsToUser);
}

} // TEST_SUITE
