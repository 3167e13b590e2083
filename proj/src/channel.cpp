// SPDX-License-Identifier: Apache-2.0

#include "irsnoma/channel.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

namespace irsnoma::channel
{

namespace
{

enum class Link : std::uint64_t
{
    Direct = 1,
    BsIrs = 2,
    IrsUser = 3
};

std::mt19937_64 substream(std::uint64_t seed, Link link, int a, int b, int c)
{
    std::uint64_t s = mixSeed(seed, static_cast<std::uint64_t>(link));
    s = mixSeed(s, static_cast<std::uint64_t>(a));
    s = mixSeed(s, static_cast<std::uint64_t>(b));
    s = mixSeed(s, static_cast<std::uint64_t>(c));
    return std::mt19937_64(s);
}

// Circularly-symmetric unit-variance complex Gaussian.
cplx drawCn(std::mt19937_64 &rng, std::normal_distribution<double> &n)
{
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

double checkedDistance(const Vec3 &a, const Vec3 &b, const char *what)
{
    const double d = distance(a, b);
    if (!(d > 0.0))
        throw std::invalid_argument(std::string("coincident node positions: ") + what);
    return d;
}

} // namespace

double pathloss(double d, double exponent)
{
    if (!(d > 0.0))
        throw std::invalid_argument("pathloss distance must be positive");
    return std::pow(10.0, -(30.0 + 10.0 * exponent * std::log10(d)) / 10.0);
}

std::uint64_t mixSeed(std::uint64_t a, std::uint64_t b)
{
    // splitmix64 finalizer over a combined state
    std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Eigen::VectorXcd bsIrsLineOfSight(const NetworkConfig &cfg, int j)
{
    const Vec3 &bs = cfg.bsPositions[j];
    const double azimuth = std::atan2(cfg.irsPosition[1] - bs[1], cfg.irsPosition[0] - bs[0]);
    Eigen::VectorXcd a(cfg.numElements);
    for (int m = 0; m < cfg.numElements; ++m)
        a(m) = std::polar(1.0, -std::numbers::pi * m * std::sin(azimuth));
    return a;
}

ChannelSet generateChannels(const NetworkConfig &cfg, std::uint64_t seed)
{
    cfg.validate();
    const int I = cfg.numUsers, J = cfg.numBs, K = cfg.numSubchannels, M = cfg.numElements;
    ChannelSet ch(I, J, K, M);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));

    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j)
        {
            const double amp =
                std::sqrt(pathloss(checkedDistance(cfg.userPositions[i], cfg.bsPositions[j], "user/BS"),
                                   cfg.exponents.direct));
            for (int k = 0; k < K; ++k)
            {
                auto rng = substream(seed, Link::Direct, i, j, k);
                normal.reset();
                ch.direct(i, j, k) = amp * drawCn(rng, normal);
            }
        }

    const double kappa = cfg.ricianFactor;
    const double losWeight = std::sqrt(kappa / (kappa + 1.0));
    const double nlosWeight = std::sqrt(1.0 / (kappa + 1.0));
    for (int j = 0; j < J; ++j)
    {
        const double amp = std::sqrt(
            pathloss(checkedDistance(cfg.bsPositions[j], cfg.irsPosition, "BS/surface"), cfg.exponents.bsIrs));
        const Eigen::VectorXcd los = bsIrsLineOfSight(cfg, j);
        for (int k = 0; k < K; ++k)
        {
            auto rng = substream(seed, Link::BsIrs, j, k, 0);
            normal.reset();
            Eigen::VectorXcd &f = ch.f(j, k);
            for (int m = 0; m < M; ++m)
                f(m) = amp * (losWeight * los(m) + nlosWeight * drawCn(rng, normal));
        }
    }

    for (int i = 0; i < I; ++i)
    {
        const double amp = std::sqrt(pathloss(
            checkedDistance(cfg.irsPosition, cfg.userPositions[i], "surface/user"), cfg.exponents.irsUser));
        for (int k = 0; k < K; ++k)
        {
            auto rng = substream(seed, Link::IrsUser, i, k, 0);
            normal.reset();
            Eigen::VectorXcd &g = ch.g(i, k);
            for (int m = 0; m < M; ++m)
                g(m) = amp * drawCn(rng, normal);
        }
    }
    return ch;
}

std::string channelsToJson(const ChannelSet &ch)
{
    using nlohmann::json;
    json doc;
    doc["numUsers"] = ch.numUsers;
    doc["numBs"] = ch.numBs;
    doc["numSubchannels"] = ch.numSubchannels;
    doc["numElements"] = ch.numElements;

    auto vecToJson = [](const Eigen::VectorXcd &v) {
        json re = json::array(), im = json::array();
        for (Eigen::Index m = 0; m < v.size(); ++m)
        {
            re.push_back(v(m).real());
            im.push_back(v(m).imag());
        }
        return std::pair{re, im};
    };

    json direct = json::array();
    for (int i = 0; i < ch.numUsers; ++i)
        for (int j = 0; j < ch.numBs; ++j)
            for (int k = 0; k < ch.numSubchannels; ++k)
                direct.push_back({{"i", i}, {"j", j}, {"k", k},
                                  {"re", ch.direct(i, j, k).real()}, {"im", ch.direct(i, j, k).imag()}});
    doc["direct"] = direct;

    json f = json::array();
    for (int j = 0; j < ch.numBs; ++j)
        for (int k = 0; k < ch.numSubchannels; ++k)
        {
            auto [re, im] = vecToJson(ch.f(j, k));
            f.push_back({{"j", j}, {"k", k}, {"re", re}, {"im", im}});
        }
    doc["bsToIrs"] = f;

    json g = json::array();
    for (int i = 0; i < ch.numUsers; ++i)
        for (int k = 0; k < ch.numSubchannels; ++k)
        {
            auto [re, im] = vecToJson(ch.g(i, k));
            g.push_back({{"i", i}, {"k", k}, {"re", re}, {"im", im}});
        }
    doc["irsToUser"] = g;
    return doc.dump(1);
}

void writeChannels(const ChannelSet &ch, const std::filesystem::path &path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open channel dump file " + path.string());
    out << channelsToJson(ch) << '\n';
    if (!out)
        throw std::runtime_error("failed writing channel dump file " + path.string());
}

ChannelSet channelsFromJson(const std::string &text)
{
    using nlohmann::json;
    const json doc = json::parse(text);
    ChannelSet ch(doc.at("numUsers").get<int>(), doc.at("numBs").get<int>(), doc.at("numSubchannels").get<int>(),
                  doc.at("numElements").get<int>());
    for (const auto &r : doc.at("direct"))
        ch.direct(r.at("i").get<int>(), r.at("j").get<int>(), r.at("k").get<int>()) =
            cplx(r.at("re").get<double>(), r.at("im").get<double>());

    auto readVec = [&](const json &r, Eigen::VectorXcd &v) {
        const auto &re = r.at("re");
        const auto &im = r.at("im");
        if (static_cast<int>(re.size()) != ch.numElements || static_cast<int>(im.size()) != ch.numElements)
            throw std::invalid_argument("channel dump vector length mismatch");
        for (int m = 0; m < ch.numElements; ++m)
            v(m) = cplx(re[m].get<double>(), im[m].get<double>());
    };
    for (const auto &r : doc.at("bsToIrs"))
        readVec(r, ch.f(r.at("j").get<int>(), r.at("k").get<int>()));
    for (const auto &r : doc.at("irsToUser"))
        readVec(r, ch.g(r.at("i").get<int>(), r.at("k").get<int>()));
    return ch;
}

} // namespace irsnoma::channel
