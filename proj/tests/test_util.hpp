// SPDX-License-Identifier: Apache-2.0
//
// Small builders shared by the unit tests.

#pragma once

#include "irsnoma/matching.hpp"
#include "irsnoma/model.hpp"
#include "irsnoma/types.hpp"

#include <cmath>
#include <random>

namespace irsnoma::testing
{

inline double relErr(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }
inline double relTo(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline cplx randomCn(std::mt19937_64 &rng, double scale = 1.0)
{
    std::normal_distribution<double> n(0.0, std::sqrt(0.5) * scale);
    return {n(rng), n(rng)};
}

inline Eigen::VectorXcd randomVec(std::mt19937_64 &rng, int m, double scale = 1.0)
{
    Eigen::VectorXcd v(m);
    for (int n = 0; n < m; ++n)
        v(n) = randomCn(rng, scale);
    return v;
}

inline PhaseConfig randomPhaseConfig(std::mt19937_64 &rng, int m)
{
    std::uniform_real_distribution<double> u(0.0, 2.0 * 3.14159265358979323846);
    Eigen::VectorXd th(m);
    for (int n = 0; n < m; ++n)
        th(n) = u(rng);
    return PhaseConfig::fromTheta(th);
}

// Small config with default geometry and the given sizes.
inline NetworkConfig smallConfig(int users, int bss, int subchannels, int elements)
{
    NetworkConfig cfg;
    cfg.numUsers = users;
    cfg.numBs = bss;
    cfg.numSubchannels = subchannels;
    cfg.numElements = elements;
    cfg.subchannelsPerBs = 1;
    applyDefaultGeometry(cfg);
    return cfg;
}

// Random channel set with unit-scale entries for algebraic tests.
inline ChannelSet randomChannels(const NetworkConfig &cfg, std::mt19937_64 &rng, double scale = 1.0)
{
    ChannelSet ch(cfg.numUsers, cfg.numBs, cfg.numSubchannels, cfg.numElements);
    for (int i = 0; i < cfg.numUsers; ++i)
        for (int j = 0; j < cfg.numBs; ++j)
            for (int k = 0; k < cfg.numSubchannels; ++k)
                ch.direct(i, j, k) = randomCn(rng, scale);
    for (auto &f : ch.bsToIrs)
        f = randomVec(rng, cfg.numElements, scale);
    for (auto &g : ch.irsToUser)
        g = randomVec(rng, cfg.numElements, scale);
    return ch;
}

// Users 2j and 2j+1 on BS j, BS j on subchannel j mod K, orders by index.
inline Allocation pairedAllocation(const NetworkConfig &cfg)
{
    Allocation a(cfg);
    for (int i = 0; i < cfg.numUsers; ++i)
        a.assoc(i, std::min(i / 2, cfg.numBs - 1)) = 1;
    for (int j = 0; j < cfg.numBs; ++j)
        a.subch(j, j % cfg.numSubchannels) = 1;
    for (int k = 0; k < cfg.numSubchannels; ++k)
        if (a.subch.col(k).sum() == 0)
            a.subch(0, k) = 1;
    for (int j = 0; j < cfg.numBs; ++j)
        for (int k : a.subchannelsOf(j))
            a.decodeOrder(j, k) = a.clusterOf(j);
    return a;
}

// Matched association and subchannels on real channels at zero phases, equal
// power split at `fraction` of P_max, SIC-consistent orders.
inline Allocation matchedAllocation(const NetworkConfig &cfg, const ChannelSet &ch, double fraction = 0.8)
{
    Allocation a(cfg);
    const GainTable g = model::gainTable(ch, a.phases);
    a.assoc = matching::initUserAssociation(cfg, g);
    a.subch = matching::initSubchannelAssignment(cfg, g, a.assoc);
    a.order = model::sicConsistentOrder(cfg, g, a);
    model::equalPowerSplit(cfg, a, fraction);
    return a;
}

} // namespace irsnoma::testing
