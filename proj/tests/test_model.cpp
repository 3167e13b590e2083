// SPDX-License-Identifier: Apache-2.0

#include "irsnoma/model.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <random>

using namespace irsnoma;
using namespace irsnoma::testing;

TEST_SUITE("model")
{

TEST_CASE("combined gain without reflected path is the direct link")
{
    NetworkConfig cfg = smallConfig(1, 1, 1, 3);
    ChannelSet ch(1, 1, 1, 3);
    ch.direct(0, 0, 0) = {0.3, 0.4};
    ch.f(0, 0) = Eigen::VectorXcd::Ones(3);
    ch.g(0, 0) = Eigen::VectorXcd::Zero(3);
    std::mt19937_64 rng(1);
    const cplx h = model::combinedGain(ch, randomPhaseConfig(rng, 3), 0, 0, 0);
    CHECK(h.real() == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(h.imag() == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("combined gain with one element at zero phase")
{
    ChannelSet ch(1, 1, 1, 1);
    ch.direct(0, 0, 0) = 0.0;
    ch.f(0, 0) = Eigen::VectorXcd::Ones(1);
    ch.g(0, 0) = Eigen::VectorXcd::Ones(1);
    const cplx h = model::combinedGain(ch, PhaseConfig(1), 0, 0, 0);
    CHECK(std::abs(h - cplx(1.0, 0.0)) < 1e-15);
}

TEST_CASE("combined gain matches a term-by-term expansion")
{
    std::mt19937_64 rng(11);
    for (int t = 0; t < 50; ++t)
    {
        ChannelSet ch(1, 1, 1, 4);
        ch.direct(0, 0, 0) = randomCn(rng);
        ch.f(0, 0) = randomVec(rng, 4);
        ch.g(0, 0) = randomVec(rng, 4);
        const PhaseConfig ph = randomPhaseConfig(rng, 4);
        // Oracle: h + sum_m exp(-j theta_m) conj(g_m) f_m, built from cos/sin.
        double re = ch.direct(0, 0, 0).real();
        double im = ch.direct(0, 0, 0).imag();
        for (int m = 0; m < 4; ++m)
        {
            const double c = std::cos(ph.theta()(m));
            const double s = -std::sin(ph.theta()(m));
            const double gr = ch.g(0, 0)(m).real();
            const double gi = -ch.g(0, 0)(m).imag();
            const double fr = ch.f(0, 0)(m).real();
            const double fi = ch.f(0, 0)(m).imag();
            const double ar = gr * fr - gi * fi;
            const double ai = gr * fi + gi * fr;
            re += c * ar - s * ai;
            im += c * ai + s * ar;
        }
        const cplx h = model::combinedGain(ch, ph, 0, 0, 0);
        CHECK(std::abs(h.real() - re) < 1e-12);
        CHECK(std::abs(h.imag() - im) < 1e-12);
    }
}

TEST_CASE("removing the surface makes gains independent of the phases")
{
    const NetworkConfig cfg = smallConfig(4, 2, 2, 8);
    std::mt19937_64 rng(3);
    const ChannelSet ch = randomChannels(cfg, rng).withoutSurface();
    const GainTable a = model::gainTable(ch, randomPhaseConfig(rng, 8));
    const GainTable b = model::gainTable(ch, randomPhaseConfig(rng, 8));
    CHECK(a == b);
}

TEST_CASE("single user SINR has no interference terms")
{
    NetworkConfig cfg = smallConfig(1, 1, 1, 1);
    cfg.maxClusterSize = 1;
    ChannelSet ch(1, 1, 1, 1);
    ch.direct(0, 0, 0) = {2e-4, -1e-4};
    Allocation a(cfg);
    a.assoc(0, 0) = 1;
    a.subch(0, 0) = 1;
    a.decodeOrder(0, 0) = {0};
    a.power(0, 0, 0) = 0.1;
    const auto s = model::sinr(cfg, ch, a);
    CHECK(s(0, 0, 0) == doctest::Approx(5e-8 * 0.1 / cfg.noisePower).epsilon(1e-12));
}

TEST_CASE("zero power gives zero SINR and zero rate")
{
    const NetworkConfig cfg = defaultConfig();
    std::mt19937_64 rng(5);
    const ChannelSet ch = randomChannels(cfg, rng, 1e-4);
    const Allocation a = pairedAllocation(cfg);
    const RateReport r = model::rates(cfg, ch, a);
    for (double v : r.sinr.flat())
        CHECK(v == 0.0);
    CHECK(r.sumRate == 0.0);
}

TEST_CASE("two-user cluster SINR matches a hand expansion")
{
    // Two BSs on one subchannel, two users on BS 0 and one on BS 1.
    NetworkConfig cfg = smallConfig(3, 2, 1, 2);
    cfg.maxClusterSize = 2;
    std::mt19937_64 rng(17);
    const ChannelSet ch = randomChannels(cfg, rng, 1e-3);
    Allocation a(cfg);
    a.assoc(0, 0) = a.assoc(1, 0) = a.assoc(2, 1) = 1;
    a.subch(0, 0) = a.subch(1, 0) = 1;
    a.decodeOrder(0, 0) = {1, 0};  // user 1 decoded first
    a.decodeOrder(1, 0) = {2};
    a.power(0, 0, 0) = 0.05;
    a.power(1, 0, 0) = 0.12;
    a.power(2, 1, 0) = 0.08;
    a.phases = randomPhaseConfig(rng, 2);
    auto G = [&](int i, int j) { return std::norm(model::combinedGain(ch, a.phases, i, j, 0)); };
    const double s2 = cfg.noisePower;
    // User 1 is decoded first, so user 0 (decoded later) interferes with it.
    const double sinr0 = G(0, 0) * 0.05 / (G(0, 1) * 0.08 + s2);
    const double sinr1 = G(1, 0) * 0.12 / (G(1, 0) * 0.05 + G(1, 1) * 0.08 + s2);
    const double sinr2 = G(2, 1) * 0.08 / (G(2, 0) * (0.05 + 0.12) + s2);
    const auto s = model::sinr(cfg, ch, a);
    CHECK(relTo(s(0, 0, 0), sinr0) < 1e-12);
    CHECK(relTo(s(1, 0, 0), sinr1) < 1e-12);
    CHECK(relTo(s(2, 1, 0), sinr2) < 1e-12);

    const RateReport r = model::rates(cfg, ch, a);
    double sum = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j)
        {
            const double expect = cfg.subchannelBandwidth() * std::log2(1.0 + r.sinr(i, j, 0));
            CHECK(std::abs(r.rate(i, j, 0) - expect) <= 1e-12 * std::max(1.0, expect));
            sum += r.rate(i, j, 0);
        }
    CHECK(r.sumRate == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("Shannon rate reference values")
{
    NetworkConfig cfg;
    cfg.bandwidth = 3e6;
    cfg.numSubchannels = 3;
    CHECK(model::shannonRate(cfg, 1.0) == doctest::Approx(1e6).epsilon(1e-12));
    CHECK(model::shannonRate(cfg, 0.0) == 0.0);
    CHECK(model::shannonRate(cfg, 3.0) == doctest::Approx(2e6).epsilon(1e-12));
    CHECK(model::shannonRate(cfg, 3.0, 2) == doctest::Approx(1e6).epsilon(1e-12));
}

TEST_CASE("rates are nonincreasing in noise power and in inter-cell power")
{
    const NetworkConfig base = defaultConfig();
    std::mt19937_64 rng(23);
    for (int t = 0; t < 20; ++t)
    {
        const ChannelSet ch = randomChannels(base, rng, 1e-4);
        Allocation a = pairedAllocation(base);
        a.phases = randomPhaseConfig(rng, base.numElements);
        model::equalPowerSplit(base, a, 0.5);
        const RateReport r0 = model::rates(base, ch, a);

        NetworkConfig noisy = base;
        noisy.noisePower *= 3.0;
        const RateReport r1 = model::rates(noisy, ch, a);

        Allocation louder = a;
        for (int k : louder.subchannelsOf(2))
            for (int i : louder.clusterOf(2))
                louder.power(i, 2, k) *= 2.0;
        const RateReport r2 = model::rates(base, ch, louder);
        for (int i = 0; i < base.numUsers; ++i)
            for (int j = 0; j < base.numBs; ++j)
                for (int k = 0; k < base.numSubchannels; ++k)
                {
                    CHECK(r1.rate(i, j, k) <= r0.rate(i, j, k) + 1e-9);
                    if (j != 2)
                        CHECK(r2.rate(i, j, k) <= r0.rate(i, j, k) + 1e-9);
                }
    }
}

TEST_CASE("SIC margin identities")
{
    NetworkConfig cfg = smallConfig(3, 2, 1, 4);
    std::mt19937_64 rng(29);
    Allocation a(cfg);
    a.assoc(0, 0) = a.assoc(1, 0) = a.assoc(2, 1) = 1;
    a.subch(0, 0) = a.subch(1, 0) = 1;
    a.decodeOrder(0, 0) = {0, 1};
    a.decodeOrder(1, 0) = {2};
    a.power(0, 0, 0) = 0.1;
    a.power(1, 0, 0) = 0.05;
    a.power(2, 1, 0) = 0.07;

    SUBCASE("antisymmetry")
    {
        for (int t = 0; t < 100; ++t)
        {
            const ChannelSet ch = randomChannels(cfg, rng, 1e-3);
            const GainTable g = model::gainTable(ch, a.phases);
            const double d01 = model::sicMargin(cfg, g, a, 0, 0, 0, 1);
            const double d10 = model::sicMargin(cfg, g, a, 0, 0, 1, 0);
            CHECK(std::abs(d01 + d10) <= 1e-12 * model::sicMarginScale(cfg, g, a, 0, 0, 0, 1));
        }
    }
    SUBCASE("equal gains and equal interference give zero margin")
    {
        GainTable g(3, 2, 1, 1e-6);
        CHECK(model::sicMargin(cfg, g, a, 0, 0, 0, 1) == 0.0);
    }
    SUBCASE("without inter-cell interference the margin is the gain gap times noise")
    {
        Allocation solo = a;
        solo.power(2, 1, 0) = 0.0;
        const ChannelSet ch = randomChannels(cfg, rng, 1e-3);
        const GainTable g = model::gainTable(ch, solo.phases);
        const double expect = (g(1, 0, 0) - g(0, 0, 0)) * cfg.noisePower;
        CHECK(model::sicMargin(cfg, g, solo, 0, 0, 0, 1) == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("users outside the cluster are rejected")
    {
        const GainTable g(3, 2, 1, 1e-6);
        CHECK_THROWS_AS(model::sicMargin(cfg, g, a, 0, 0, 0, 2), std::invalid_argument);
    }
}

TEST_CASE("SIC consistent order makes every margin nonnegative")
{
    const NetworkConfig cfg = defaultConfig();
    std::mt19937_64 rng(31);
    for (int t = 0; t < 30; ++t)
    {
        const ChannelSet ch = randomChannels(cfg, rng, 1e-4);
        Allocation a = pairedAllocation(cfg);
        model::equalPowerSplit(cfg, a, 1.0);
        const GainTable g = model::gainTable(ch, a.phases);
        a.order = model::sicConsistentOrder(cfg, g, a);
        for (int j = 0; j < cfg.numBs; ++j)
            for (int k : a.subchannelsOf(j))
            {
                const auto &o = a.decodeOrder(j, k);
                for (std::size_t x = 0; x < o.size(); ++x)
                    for (std::size_t y = x + 1; y < o.size(); ++y)
                        CHECK(model::sicMargin(cfg, g, a, j, k, o[x], o[y]) >=
                              -1e-12 * model::sicMarginScale(cfg, g, a, j, k, o[x], o[y]));
            }
    }
}

TEST_CASE("validation of the default two-users-per-BS layout")
{
    const NetworkConfig cfg = defaultConfig();
    Allocation a = pairedAllocation(cfg);
    model::equalPowerSplit(cfg, a, 1.0);
    CHECK(model::validateAllocation(cfg, a).empty());

    SUBCASE("an unassociated user violates the association constraint")
    {
        a.assoc.row(5).setZero();
        for (int k = 0; k < cfg.numSubchannels; ++k)
            a.power(5, 2, k) = 0.0;
        CHECK(model::hasViolation(model::validateAllocation(cfg, a), model::Constraint::UserAssociation));
    }
    SUBCASE("a BS exceeding its budget by 1 W violates the power constraint")
    {
        const int k = a.subchannelsOf(0).front();
        a.power(0, 0, k) += 1.0;
        const auto v = model::validateAllocation(cfg, a);
        CHECK(model::hasViolation(v, model::Constraint::BsPower));
    }
    SUBCASE("power on an unserved tuple is flagged")
    {
        a.power(0, 1, 0) = 0.01;
        CHECK(model::hasViolation(model::validateAllocation(cfg, a), model::Constraint::PowerSupport));
    }
    SUBCASE("an oversized cluster violates the cluster constraint")
    {
        a.assoc.row(2).setZero();
        a.assoc(2, 0) = 1;
        CHECK(model::hasViolation(model::validateAllocation(cfg, a), model::Constraint::ClusterSize));
    }
}

TEST_CASE("full validation reports unmet minimum rates")
{
    NetworkConfig cfg = defaultConfig();
    cfg.minRate = 1e12;
    std::mt19937_64 rng(37);
    const ChannelSet ch = randomChannels(cfg, rng, 1e-4);
    Allocation a = pairedAllocation(cfg);
    model::equalPowerSplit(cfg, a, 1.0);
    const GainTable g = model::gainTable(ch, a.phases);
    a.order = model::sicConsistentOrder(cfg, g, a);
    const RateReport r = model::evaluateRates(cfg, g, a);
    const auto v = model::validateAllocation(cfg, a, g, r);
    CHECK(model::hasViolation(v, model::Constraint::MinRate));
    CHECK_FALSE(model::hasViolation(v, model::Constraint::SicOrder));
}

TEST_CASE("OMA with single-user clusters equals NOMA")
{
    NetworkConfig cfg = smallConfig(3, 3, 3, 4);
    cfg.maxClusterSize = 1;
    std::mt19937_64 rng(41);
    const ChannelSet ch = randomChannels(cfg, rng, 1e-4);
    Allocation a(cfg);
    for (int i = 0; i < 3; ++i)
    {
        a.assoc(i, i) = 1;
        a.subch(i, i) = 1;
        a.decodeOrder(i, i) = {i};
    }
    model::equalPowerSplit(cfg, a, 1.0);
    const RateReport n = model::rates(cfg, ch, a, model::MultipleAccess::Noma);
    const RateReport o = model::rates(cfg, ch, a, model::MultipleAccess::Oma);
    CHECK(n.sumRate == doctest::Approx(o.sumRate).epsilon(1e-12));
}

TEST_CASE("constraint names are stable")
{
    CHECK(std::string(model::constraintName(model::Constraint::MinRate)).find("min-rate") != std::string::npos);
    CHECK(std::string(model::constraintName(model::Constraint::BsPower)).size() > 0);
}

} // TEST_SUITE
