// SPDX-License-Identifier: Apache-2.0

#include "irsnoma/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace irsnoma::model
{

namespace
{

void requireShape(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc)
{
    const int I = cfg.numUsers, J = cfg.numBs, K = cfg.numSubchannels;
    if (!gains.sameShape(I, J, K))
        throw std::invalid_argument("gain table dimensions do not match the configuration");
    if (alloc.assoc.rows() != I || alloc.assoc.cols() != J || alloc.subch.rows() != J ||
        alloc.subch.cols() != K || !alloc.power.sameShape(I, J, K) ||
        alloc.order.size() != static_cast<std::size_t>(J) * K)
        throw std::invalid_argument("allocation dimensions do not match the configuration");
}

std::string tupleName(int i, int j, int k)
{
    return "(user " + std::to_string(i + 1) + ", BS " + std::to_string(j + 1) + ", subchannel " +
           std::to_string(k + 1) + ")";
}

} // namespace

cplx combinedGain(const ChannelSet &ch, const PhaseConfig &ph, int i, int j, int k)
{
    const Eigen::VectorXcd &g = ch.g(i, k);
    const Eigen::VectorXcd &f = ch.f(j, k);
    const Eigen::VectorXcd &nu = ph.nu();
    cplx acc = ch.direct(i, j, k);
    for (Eigen::Index m = 0; m < f.size(); ++m)
        acc += std::conj(nu(m)) * std::conj(g(m)) * f(m);
    return acc;
}

GainTable gainTable(const ChannelSet &ch, const PhaseConfig &ph)
{
    if (ph.size() != ch.numElements)
        throw std::invalid_argument("phase configuration size does not match the surface");
    GainTable out(ch.numUsers, ch.numBs, ch.numSubchannels, 0.0);
    for (int i = 0; i < ch.numUsers; ++i)
        for (int j = 0; j < ch.numBs; ++j)
            for (int k = 0; k < ch.numSubchannels; ++k)
                out(i, j, k) = std::norm(combinedGain(ch, ph, i, j, k));
    return out;
}

double shannonRate(const NetworkConfig &cfg, double sinrValue, int clusterSize)
{
    return cfg.subchannelBandwidth() / std::max(clusterSize, 1) * std::log2(1.0 + sinrValue);
}

double interCellInterference(const GainTable &gains, const Allocation &alloc, int i, int j, int k)
{
    double acc = 0.0;
    for (int s = 0; s < alloc.numBs(); ++s)
    {
        if (s == j || alloc.subch(s, k) != 1)
            continue;
        double total = 0.0;
        for (int u = 0; u < alloc.numUsers(); ++u)
            total += alloc.effectivePower(u, s, k);
        acc += gains(i, s, k) * total;
    }
    return acc;
}

RateReport evaluateRates(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc,
                         MultipleAccess access)
{
    requireShape(cfg, gains, alloc);
    const int I = cfg.numUsers, J = cfg.numBs, K = cfg.numSubchannels;

    RateReport rep;
    rep.sinr = Grid3<double>(I, J, K, 0.0);
    rep.rate = Grid3<double>(I, J, K, 0.0);
    rep.intra = Grid3<double>(I, J, K, 0.0);
    rep.inter = Grid3<double>(I, J, K, 0.0);
    rep.perUserRate.assign(I, 0.0);

    // Total transmitted power per (BS, subchannel).
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(J, K);
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j)
            for (int k = 0; k < K; ++k)
                total(j, k) += alloc.effectivePower(i, j, k);

    std::vector<int> clusterSize(J, 0);
    for (int j = 0; j < J; ++j)
        clusterSize[j] = static_cast<int>(alloc.assoc.col(j).sum());

    for (int j = 0; j < J; ++j)
    {
        for (int k = 0; k < K; ++k)
        {
            if (alloc.subch(j, k) != 1)
                continue;
            const auto &seq = alloc.decodeOrder(j, k);
            for (int i = 0; i < I; ++i)
            {
                if (alloc.assoc(i, j) != 1)
                    continue;
                double inter = 0.0;
                for (int s = 0; s < J; ++s)
                    if (s != j)
                        inter += gains(i, s, k) * total(s, k);

                double intra = 0.0;
                if (access == MultipleAccess::Noma)
                {
                    const auto pos = std::find(seq.begin(), seq.end(), i);
                    if (pos == seq.end())
                        throw std::invalid_argument("user missing from decoding order at " + tupleName(i, j, k));
                    double later = 0.0;
                    for (auto it = pos + 1; it != seq.end(); ++it)
                        later += alloc.effectivePower(*it, j, k);
                    intra = gains(i, j, k) * later;
                }

                const double p = alloc.effectivePower(i, j, k);
                const double s = gains(i, j, k) * p / (intra + inter + cfg.noisePower);
                const int share = access == MultipleAccess::Noma ? 1 : clusterSize[j];
                const double r = shannonRate(cfg, s, share);
                rep.sinr(i, j, k) = s;
                rep.rate(i, j, k) = r;
                rep.intra(i, j, k) = intra;
                rep.inter(i, j, k) = inter;
                rep.perUserRate[i] += r;
                rep.sumRate += r;
            }
        }
    }
    return rep;
}

Grid3<double> sinr(const NetworkConfig &cfg, const ChannelSet &ch, const Allocation &alloc)
{
    return rates(cfg, ch, alloc).sinr;
}

RateReport rates(const NetworkConfig &cfg, const ChannelSet &ch, const Allocation &alloc, MultipleAccess access)
{
    if (!ch.matches(cfg))
        throw std::invalid_argument("channel set dimensions do not match the configuration");
    return evaluateRates(cfg, gainTable(ch, alloc.phases), alloc, access);
}

double sicMargin(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc, int j, int k, int i,
                 int itilde)
{
    if (i == itilde)
        throw std::invalid_argument("sicMargin needs two distinct users");
    if (!alloc.served(i, j, k) || !alloc.served(itilde, j, k))
        throw std::invalid_argument("sicMargin users are not co-clustered on " + tupleName(i, j, k));
    const double interI = interCellInterference(gains, alloc, i, j, k);
    const double interT = interCellInterference(gains, alloc, itilde, j, k);
    return gains(itilde, j, k) * (interI + cfg.noisePower) - gains(i, j, k) * (interT + cfg.noisePower);
}

double sicMargin(const NetworkConfig &cfg, const ChannelSet &ch, const Allocation &alloc, int j, int k, int i,
                 int itilde)
{
    return sicMargin(cfg, gainTable(ch, alloc.phases), alloc, j, k, i, itilde);
}

double sicMarginScale(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc, int j, int k,
                      int i, int itilde)
{
    const double interI = interCellInterference(gains, alloc, i, j, k);
    const double interT = interCellInterference(gains, alloc, itilde, j, k);
    return gains(itilde, j, k) * (interI + cfg.noisePower) + gains(i, j, k) * (interT + cfg.noisePower);
}

std::vector<std::vector<int>> sicConsistentOrder(const NetworkConfig &cfg, const GainTable &gains,
                                                 const Allocation &alloc)
{
    const int J = alloc.numBs(), K = alloc.numSubchannels();
    std::vector<std::vector<int>> out(static_cast<std::size_t>(J) * K);
    for (int j = 0; j < J; ++j)
    {
        for (int k = 0; k < K; ++k)
        {
            if (alloc.subch(j, k) != 1)
                continue;
            std::vector<int> users = alloc.clusterOf(j);
            std::vector<double> key(alloc.numUsers(), 0.0);
            for (int i : users)
                key[i] = gains(i, j, k) / (interCellInterference(gains, alloc, i, j, k) + cfg.noisePower);
            std::stable_sort(users.begin(), users.end(), [&](int a, int b) { return key[a] < key[b]; });
            out[static_cast<std::size_t>(j) * K + k] = std::move(users);
        }
    }
    return out;
}

const char *constraintName(Constraint c)
{
    switch (c)
    {
    case Constraint::SicOrder: return "sic-order";
    case Constraint::MinRate: return "min-rate";
    case Constraint::BsPower: return "bs-power";
    case Constraint::UserAssociation: return "user-association";
    case Constraint::ClusterSize: return "cluster-size";
    case Constraint::BsSubchannel: return "bs-subchannel";
    case Constraint::SubchannelCover: return "subchannel-cover";
    case Constraint::PowerSupport: return "power-support";
    case Constraint::DecodingOrder: return "decoding-order";
    case Constraint::Dimensions: return "dimensions";
    }
    return "unknown";
}

std::vector<Violation> validateAllocation(const NetworkConfig &cfg, const Allocation &alloc)
{
    std::vector<Violation> out;
    const int I = cfg.numUsers, J = cfg.numBs, K = cfg.numSubchannels;
    if (alloc.assoc.rows() != I || alloc.assoc.cols() != J || alloc.subch.rows() != J ||
        alloc.subch.cols() != K || !alloc.power.sameShape(I, J, K) ||
        alloc.order.size() != static_cast<std::size_t>(J) * K)
    {
        out.push_back({Constraint::Dimensions, "allocation shape does not match configuration"});
        return out;
    }

    for (int i = 0; i < I; ++i)
    {
        const int count = alloc.assoc.row(i).sum();
        if (count != 1)
            out.push_back({Constraint::UserAssociation,
                           "user " + std::to_string(i + 1) + " associated with " + std::to_string(count) + " BSs"});
    }
    for (int j = 0; j < J; ++j)
    {
        const int size = alloc.assoc.col(j).sum();
        if (size < 2 || size > cfg.maxClusterSize)
            out.push_back({Constraint::ClusterSize,
                           "BS " + std::to_string(j + 1) + " serves " + std::to_string(size) + " users"});
        if (alloc.subch.row(j).sum() < 1)
            out.push_back({Constraint::BsSubchannel, "BS " + std::to_string(j + 1) + " holds no subchannel"});

        double total = 0.0;
        for (int i = 0; i < I; ++i)
            for (int k = 0; k < K; ++k)
                total += alloc.effectivePower(i, j, k);
        if (total > cfg.maxBsPower + ValidationOptions{}.powerSlack)
            out.push_back({Constraint::BsPower, "BS " + std::to_string(j + 1) + " transmits " +
                                                    std::to_string(total) + " W"});
    }
    for (int k = 0; k < K; ++k)
        if (alloc.subch.col(k).sum() < 1)
            out.push_back({Constraint::SubchannelCover, "subchannel " + std::to_string(k + 1) + " unused"});

    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j)
            for (int k = 0; k < K; ++k)
            {
                const double p = alloc.power(i, j, k);
                if (p < 0.0 || (p > 0.0 && !alloc.served(i, j, k)))
                    out.push_back({Constraint::PowerSupport, "power on " + tupleName(i, j, k)});
            }

    for (int j = 0; j < J; ++j)
        for (int k = 0; k < K; ++k)
        {
            const auto &seq = alloc.decodeOrder(j, k);
            std::vector<int> expected = alloc.subch(j, k) == 1 ? alloc.clusterOf(j) : std::vector<int>{};
            std::vector<int> sorted = seq;
            std::sort(sorted.begin(), sorted.end());
            if (sorted != expected)
                out.push_back({Constraint::DecodingOrder, "order of BS " + std::to_string(j + 1) +
                                                              " subchannel " + std::to_string(k + 1) +
                                                              " does not match its cluster"});
        }
    return out;
}

std::vector<Violation> validateAllocation(const NetworkConfig &cfg, const Allocation &alloc, const GainTable &gains,
                                          const RateReport &report, const ValidationOptions &opt)
{
    std::vector<Violation> out = validateAllocation(cfg, alloc);
    if (hasViolation(out, Constraint::Dimensions))
        return out;

    const int I = cfg.numUsers, J = cfg.numBs, K = cfg.numSubchannels;
    if (opt.checkSic && !hasViolation(out, Constraint::DecodingOrder))
    {
        for (int j = 0; j < J; ++j)
            for (int k = 0; k < K; ++k)
            {
                const auto &seq = alloc.decodeOrder(j, k);
                for (std::size_t a = 0; a < seq.size(); ++a)
                    for (std::size_t b = a + 1; b < seq.size(); ++b)
                    {
                        const double delta = sicMargin(cfg, gains, alloc, j, k, seq[a], seq[b]);
                        const double scale = sicMarginScale(cfg, gains, alloc, j, k, seq[a], seq[b]);
                        if (delta < -opt.sicRelativeSlack * scale)
                            out.push_back({Constraint::SicOrder,
                                           "negative SIC margin for users " + std::to_string(seq[a] + 1) + " -> " +
                                               std::to_string(seq[b] + 1) + " at BS " + std::to_string(j + 1) +
                                               " subchannel " + std::to_string(k + 1)});
                    }
            }
    }

    for (int i = 0; i < I; ++i)
        if (i < static_cast<int>(report.perUserRate.size()) && report.perUserRate[i] < cfg.minRate - opt.rateSlack)
            out.push_back({Constraint::MinRate, "user " + std::to_string(i + 1) + " rate " +
                                                    std::to_string(report.perUserRate[i]) + " bit/s"});
    return out;
}

bool hasViolation(const std::vector<Violation> &v, Constraint c)
{
    return std::any_of(v.begin(), v.end(), [c](const Violation &x) { return x.constraint == c; });
}

void equalPowerSplit(const NetworkConfig &cfg, Allocation &alloc, double fraction)
{
    alloc.power.fill(0.0);
    for (int j = 0; j < alloc.numBs(); ++j)
    {
        const auto users = alloc.clusterOf(j);
        const auto subs = alloc.subchannelsOf(j);
        if (users.empty() || subs.empty())
            continue;
        const double share = fraction * cfg.maxBsPower / static_cast<double>(users.size() * subs.size());
        for (int i : users)
            for (int k : subs)
                alloc.power(i, j, k) = share;
    }
}

} // namespace irsnoma::model
