// SPDX-License-Identifier: Apache-2.0

#include "irsnoma/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace irsnoma
{

double dbmToWatt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double wattToDbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }

double distance(const Vec3 &a, const Vec3 &b)
{
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void NetworkConfig::validate() const
{
    auto fail = [](const std::string &msg) { throw std::invalid_argument("NetworkConfig: " + msg); };

    if (numUsers < 1 || numBs < 1 || numSubchannels < 1 || numElements < 1)
        fail("numUsers, numBs, numSubchannels and numElements must all be >= 1");
    if (maxClusterSize < 2)
        fail("maxClusterSize must be >= 2");
    if (2 * numBs > numUsers || numUsers > numBs * maxClusterSize)
        fail("cluster quotas unsatisfiable: need 2*numBs <= numUsers <= numBs*maxClusterSize (numUsers=" +
             std::to_string(numUsers) + ", numBs=" + std::to_string(numBs) +
             ", maxClusterSize=" + std::to_string(maxClusterSize) + ")");
    if (!(bandwidth > 0.0) || !(noisePower > 0.0) || !(maxBsPower > 0.0))
        fail("bandwidth, noisePower and maxBsPower must be > 0");
    if (!(minRate >= 0.0))
        fail("minRate must be >= 0");
    if (!(interThreshold >= 0.0))
        fail("interThreshold must be >= 0");
    if (!(tolerance > 0.0))
        fail("tolerance must be > 0");
    if (maxPowerIters < 0 || maxScaIters < 0 || maxOuterIters < 1)
        fail("iteration caps must be nonnegative (maxOuterIters >= 1)");
    if (subchannelsPerBs < 1)
        fail("subchannelsPerBs must be >= 1");
    if (numBs * std::min(subchannelsPerBs, numSubchannels) < numSubchannels)
        fail("numBs * subchannelsPerBs must cover every subchannel");
    if (static_cast<int>(userPositions.size()) != numUsers)
        fail("userPositions must have numUsers entries");
    if (static_cast<int>(bsPositions.size()) != numBs)
        fail("bsPositions must have numBs entries");
    if (!(ricianFactor >= 0.0))
        fail("ricianFactor must be >= 0");
}

void applyDefaultGeometry(NetworkConfig &cfg)
{
    if (static_cast<int>(cfg.userPositions.size()) != cfg.numUsers)
    {
        cfg.userPositions.clear();
        for (int i = 0; i < cfg.numUsers; ++i)
            cfg.userPositions.push_back({50.0 * (i + 1), 30.0, 0.0});
    }
    if (static_cast<int>(cfg.bsPositions.size()) != cfg.numBs)
    {
        cfg.bsPositions.clear();
        for (int j = 0; j < cfg.numBs; ++j)
            cfg.bsPositions.push_back({100.0 * (j + 1), 0.0, 20.0});
    }
}

NetworkConfig defaultConfig()
{
    NetworkConfig cfg;
    applyDefaultGeometry(cfg);
    return cfg;
}

ChannelSet::ChannelSet(int users, int bss, int subchannels, int elements)
    : numUsers(users), numBs(bss), numSubchannels(subchannels), numElements(elements),
      direct(users, bss, subchannels, cplx{}),
      bsToIrs(static_cast<std::size_t>(bss) * subchannels, Eigen::VectorXcd::Zero(elements)),
      irsToUser(static_cast<std::size_t>(users) * subchannels, Eigen::VectorXcd::Zero(elements))
{
}

ChannelSet ChannelSet::withoutSurface() const
{
    ChannelSet out = *this;
    for (auto &g : out.irsToUser)
        g.setZero();
    return out;
}

bool ChannelSet::matches(const NetworkConfig &cfg) const
{
    return numUsers == cfg.numUsers && numBs == cfg.numBs && numSubchannels == cfg.numSubchannels &&
           numElements == cfg.numElements && direct.sameShape(numUsers, numBs, numSubchannels);
}

bool ChannelSet::allFinite() const
{
    for (const auto &h : direct.flat())
        if (!std::isfinite(h.real()) || !std::isfinite(h.imag()))
            return false;
    for (const auto &f : bsToIrs)
        if (!f.allFinite())
            return false;
    for (const auto &g : irsToUser)
        if (!g.allFinite())
            return false;
    return true;
}

PhaseConfig::PhaseConfig(int elements)
    : theta_(Eigen::VectorXd::Zero(elements)), nu_(Eigen::VectorXcd::Ones(elements))
{
}

PhaseConfig PhaseConfig::fromTheta(const Eigen::VectorXd &theta)
{
    constexpr double twoPi = 2.0 * std::numbers::pi;
    PhaseConfig out(static_cast<int>(theta.size()));
    for (Eigen::Index m = 0; m < theta.size(); ++m)
    {
        double t = std::fmod(theta(m), twoPi);
        if (t < 0.0)
            t += twoPi;
        if (t >= twoPi)
            t = 0.0;
        out.theta_(m) = t;
        out.nu_(m) = std::polar(1.0, t);
    }
    return out;
}

PhaseConfig PhaseConfig::fromNu(const Eigen::VectorXcd &nu)
{
    Eigen::VectorXd theta(nu.size());
    for (Eigen::Index m = 0; m < nu.size(); ++m)
        theta(m) = std::abs(nu(m)) > 0.0 ? std::arg(nu(m)) : 0.0;
    return fromTheta(theta);
}

Allocation::Allocation(const NetworkConfig &cfg)
    : assoc(Eigen::MatrixXi::Zero(cfg.numUsers, cfg.numBs)),
      subch(Eigen::MatrixXi::Zero(cfg.numBs, cfg.numSubchannels)),
      power(cfg.numUsers, cfg.numBs, cfg.numSubchannels, 0.0),
      order(static_cast<std::size_t>(cfg.numBs) * cfg.numSubchannels),
      phases(cfg.numElements)
{
}

int Allocation::bsOf(int i) const
{
    int found = -1;
    for (int j = 0; j < numBs(); ++j)
    {
        if (assoc(i, j) == 1)
        {
            if (found >= 0)
                return -1;
            found = j;
        }
    }
    return found;
}

std::vector<int> Allocation::clusterOf(int j) const
{
    std::vector<int> out;
    for (int i = 0; i < numUsers(); ++i)
        if (assoc(i, j) == 1)
            out.push_back(i);
    return out;
}

std::vector<int> Allocation::subchannelsOf(int j) const
{
    std::vector<int> out;
    for (int k = 0; k < numSubchannels(); ++k)
        if (subch(j, k) == 1)
            out.push_back(k);
    return out;
}

std::vector<int> Allocation::bssOn(int k) const
{
    std::vector<int> out;
    for (int j = 0; j < numBs(); ++j)
        if (subch(j, k) == 1)
            out.push_back(j);
    return out;
}

int Allocation::rank(int i, int j, int k) const
{
    const auto &seq = decodeOrder(j, k);
    for (std::size_t n = 0; n < seq.size(); ++n)
        if (seq[n] == i)
            return static_cast<int>(n) + 1;
    return 0;
}

} // namespace irsnoma
