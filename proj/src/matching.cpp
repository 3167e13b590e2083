// SPDX-License-Identifier: Apache-2.0

#include "irsnoma/matching.hpp"

#include "irsnoma/reflect.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace irsnoma::matching
{

std::vector<int> MatchingState::partnersOfA(int a) const
{
    std::vector<int> out;
    const auto &m = mapping();
    for (int b = 0; b < m.cols(); ++b)
        if (m(a, b) == 1)
            out.push_back(b);
    return out;
}

std::vector<int> MatchingState::partnersOfB(int b) const
{
    std::vector<int> out;
    const auto &m = mapping();
    for (int a = 0; a < m.rows(); ++a)
        if (m(a, b) == 1)
            out.push_back(a);
    return out;
}

bool MatchingState::quotasHold() const
{
    for (int i = 0; i < assoc.rows(); ++i)
        if (assoc.row(i).sum() != 1)
            return false;
    for (int j = 0; j < assoc.cols(); ++j)
    {
        const int n = assoc.col(j).sum();
        if (n < minCluster || n > maxCluster)
            return false;
    }
    for (int j = 0; j < subch.rows(); ++j)
        if (subch.row(j).sum() < 1)
            return false;
    for (int k = 0; k < subch.cols(); ++k)
        if (subch.col(k).sum() < 1)
            return false;
    return true;
}

MatchingState makeState(const NetworkConfig &cfg, const Allocation &alloc, Mode mode)
{
    MatchingState s;
    s.mode = mode;
    s.assoc = alloc.assoc;
    s.subch = alloc.subch;
    s.minCluster = 2;
    s.maxCluster = cfg.maxClusterSize;
    return s;
}

ProvisionalEvaluator::ProvisionalEvaluator(const NetworkConfig &cfg, const GainTable &gains,
                                           model::MultipleAccess access, double powerFraction)
    : cfg_(cfg), gains_(gains), access_(access), fraction_(powerFraction)
{
}

Allocation ProvisionalEvaluator::provisional(const Eigen::MatrixXi &assoc, const Eigen::MatrixXi &subch) const
{
    Allocation a(cfg_);
    a.assoc = assoc;
    a.subch = subch;
    model::equalPowerSplit(cfg_, a, fraction_);
    a.order = reflect::decodingOrder(gains_, a);
    return a;
}

RateReport ProvisionalEvaluator::evaluate(const Eigen::MatrixXi &assoc, const Eigen::MatrixXi &subch) const
{
    return model::evaluateRates(cfg_, gains_, provisional(assoc, subch), access_);
}

double userBsUtility(const RateReport &r, int i, int j)
{
    double u = 0.0;
    for (int k = 0; k < r.rate.dim2(); ++k)
        u += r.rate(i, j, k);
    return u;
}

double bsUtility(const RateReport &r, const Eigen::MatrixXi &assoc, int j)
{
    double u = 0.0;
    for (int i = 0; i < assoc.rows(); ++i)
        if (assoc(i, j) == 1)
            u += userBsUtility(r, i, j);
    return u;
}

double bsSubchannelUtility(const RateReport &r, const Eigen::MatrixXi &assoc, int j, int k)
{
    double u = 0.0;
    for (int i = 0; i < assoc.rows(); ++i)
        if (assoc(i, j) == 1)
            u += r.rate(i, j, k);
    return u;
}

double subchannelUtility(const RateReport &r, const Eigen::MatrixXi &assoc, const Eigen::MatrixXi &subch, int k)
{
    double u = 0.0;
    for (int j = 0; j < subch.rows(); ++j)
        if (subch(j, k) == 1)
            u += bsSubchannelUtility(r, assoc, j, k);
    return u;
}

double playerUtility(const MatchingState &s, const RateReport &r, bool isA, int player)
{
    if (s.mode == Mode::UserAssociation)
    {
        if (isA)
        {
            double u = 0.0;
            for (int j = 0; j < s.assoc.cols(); ++j)
                if (s.assoc(player, j) == 1)
                    u += userBsUtility(r, player, j);
            return u;
        }
        return bsUtility(r, s.assoc, player);
    }
    if (isA)
    {
        double u = 0.0;
        for (int k = 0; k < s.subch.cols(); ++k)
            if (s.subch(player, k) == 1)
                u += bsSubchannelUtility(r, s.assoc, player, k);
        return u;
    }
    return subchannelUtility(r, s.assoc, s.subch, player);
}

std::vector<SwapPair> candidateSwaps(const MatchingState &s, int e, int e2)
{
    std::vector<SwapPair> out;
    if (e == e2)
        return out;
    const auto &m = s.mapping();
    if (s.mode == Mode::UserAssociation)
    {
        const auto a = s.partnersOfA(e);
        const auto b = s.partnersOfA(e2);
        if (a.size() == 1 && b.size() == 1 && a[0] != b[0])
            out.push_back({e, e2, a[0], b[0], {}});
        return out;
    }
    for (int w = 0; w < m.cols(); ++w)
    {
        if (m(e, w) != 1 || m(e2, w) != 0)
            continue;
        for (int w2 = 0; w2 < m.cols(); ++w2)
            if (m(e2, w2) == 1 && m(e, w2) == 0)
                out.push_back({e, e2, w, w2, {}});
    }
    return out;
}

namespace
{

void requireLegal(const MatchingState &s, const SwapPair &p)
{
    const auto &m = s.mapping();
    const bool inRange = p.e >= 0 && p.e2 >= 0 && p.e < m.rows() && p.e2 < m.rows() && p.w >= 0 && p.w2 >= 0 &&
                         p.w < m.cols() && p.w2 < m.cols();
    if (!inRange || p.e == p.e2 || p.w == p.w2)
        throw std::invalid_argument("swap: players and partners must be distinct and in range");
    if (m(p.e, p.w) != 1 || m(p.e2, p.w2) != 1 || m(p.e, p.w2) != 0 || m(p.e2, p.w) != 0)
        throw std::invalid_argument("swap: not a legal partner exchange");
    if (s.mode == Mode::UserAssociation && (m.row(p.e).sum() != 1 || m.row(p.e2).sum() != 1))
        throw std::invalid_argument("swap: users must hold exactly one BS");
}

// Fills pair.delta and the after-swap sum rate; returns the blocking verdict.
bool judge(const MatchingState &s, SwapPair &pair, const Evaluator &eval, const RateReport &before,
           double &totalAfter)
{
    const MatchingState swapped = applySwap(s, pair);
    const RateReport after = eval.evaluate(swapped.assoc, swapped.subch);
    totalAfter = after.sumRate;
    const int players[4] = {pair.e, pair.e2, pair.w, pair.w2};
    bool weak = true;
    bool strict = false;
    for (int n = 0; n < 4; ++n)
    {
        const bool isA = n < 2;
        const double u0 = playerUtility(s, before, isA, players[n]);
        const double u1 = playerUtility(swapped, after, isA, players[n]);
        pair.delta[n] = u1 - u0;
        weak = weak && u1 >= u0;
        strict = strict || u1 > u0 + kStrictness;
    }
    return weak && strict;
}

void cacheUtilities(MatchingState &s, const RateReport &r)
{
    s.utilityCache.clear();
    for (int a = 0; a < s.sideA(); ++a)
        s.utilityCache.push_back(playerUtility(s, r, true, a));
    for (int b = 0; b < s.sideB(); ++b)
        s.utilityCache.push_back(playerUtility(s, r, false, b));
}

int scanCap(const MatchingState &s)
{
    return 10 * static_cast<int>(s.assoc.rows()) * static_cast<int>(s.assoc.cols());
}

} // namespace

bool isSwapBlocking(const MatchingState &s, SwapPair &pair, const Evaluator &eval)
{
    requireLegal(s, pair);
    const RateReport before = eval.evaluate(s.assoc, s.subch);
    double total = 0.0;
    return judge(s, pair, eval, before, total);
}

MatchingState applySwap(const MatchingState &s, const SwapPair &pair)
{
    requireLegal(s, pair);
    MatchingState out = s;
    auto &m = out.mapping();
    m(pair.e, pair.w) = 0;
    m(pair.e2, pair.w2) = 0;
    m(pair.e, pair.w2) = 1;
    m(pair.e2, pair.w) = 1;
    out.utilityCache.clear();
    return out;
}

MatchingResult matchUsersToBs(const MatchingState &init, const Evaluator &eval, const SwapObserver &observer)
{
    if (init.mode != Mode::UserAssociation)
        throw std::invalid_argument("matchUsersToBs needs a user-association state");
    MatchingResult res;
    res.state = init;
    RateReport current = eval.evaluate(res.state.assoc, res.state.subch);
    const int I = res.state.sideA();
    const int cap = scanCap(res.state);

    bool found = true;
    while (found)
    {
        if (res.scans >= cap)
        {
            res.capHit = true;
            break;
        }
        ++res.scans;
        found = false;
        for (int e = 0; e < I && !found; ++e)
            for (int e2 = e + 1; e2 < I && !found; ++e2)
                for (SwapPair p : candidateSwaps(res.state, e, e2))
                {
                    double total = 0.0;
                    if (!judge(res.state, p, eval, current, total))
                        continue;
                    SwapRecord rec{p, current.sumRate, total};
                    res.state = applySwap(res.state, p);
                    current = eval.evaluate(res.state.assoc, res.state.subch);
                    rec.totalAfter = current.sumRate;
                    res.swaps.push_back(rec);
                    if (observer)
                        observer(rec);
                    found = true;
                    break;
                }
    }
    cacheUtilities(res.state, current);
    return res;
}

MatchingResult matchBsToSubchannels(const MatchingState &init, const Evaluator &eval, const SwapObserver &observer)
{
    if (init.mode != Mode::SubchannelAssignment)
        throw std::invalid_argument("matchBsToSubchannels needs a subchannel-assignment state");
    MatchingResult res;
    res.state = init;
    RateReport current = eval.evaluate(res.state.assoc, res.state.subch);
    const int J = res.state.sideA();
    const int cap = scanCap(res.state);

    bool changed = true;
    while (changed)
    {
        if (res.scans >= cap)
        {
            res.capHit = true;
            break;
        }
        ++res.scans;
        changed = false;
        for (int j = 0; j < J; ++j)
        {
            bool have = false;
            SwapPair best;
            double bestTotal = 0.0;
            for (int j2 = 0; j2 < J; ++j2)
                for (SwapPair p : candidateSwaps(res.state, j, j2))
                {
                    double total = 0.0;
                    if (judge(res.state, p, eval, current, total) && (!have || total > bestTotal))
                    {
                        have = true;
                        best = p;
                        bestTotal = total;
                    }
                }
            if (!have)
                continue;
            SwapRecord rec{best, current.sumRate, bestTotal};
            res.state = applySwap(res.state, best);
            current = eval.evaluate(res.state.assoc, res.state.subch);
            rec.totalAfter = current.sumRate;
            res.swaps.push_back(rec);
            if (observer)
                observer(rec);
            changed = true;
        }
    }
    cacheUtilities(res.state, current);
    return res;
}

std::vector<SwapPair> blockingPairs(const MatchingState &s, const Evaluator &eval)
{
    std::vector<SwapPair> out;
    const RateReport before = eval.evaluate(s.assoc, s.subch);
    for (int e = 0; e < s.sideA(); ++e)
        for (int e2 = e + 1; e2 < s.sideA(); ++e2)
            for (SwapPair p : candidateSwaps(s, e, e2))
            {
                double total = 0.0;
                if (judge(s, p, eval, before, total))
                    out.push_back(p);
            }
    return out;
}

Eigen::MatrixXi initUserAssociation(const NetworkConfig &cfg, const GainTable &gains)
{
    const int I = cfg.numUsers;
    const int J = cfg.numBs;
    const int K = cfg.numSubchannels;
    Eigen::MatrixXd u(I, J);
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j)
        {
            double s = 0.0;
            for (int k = 0; k < K; ++k)
                s += std::log2(1.0 + gains(i, j, k) * cfg.maxBsPower / cfg.noisePower);
            u(i, j) = s;
        }

    std::vector<std::vector<int>> pref(I);
    for (int i = 0; i < I; ++i)
    {
        pref[i].resize(J);
        std::iota(pref[i].begin(), pref[i].end(), 0);
        std::stable_sort(pref[i].begin(), pref[i].end(), [&](int a, int b) { return u(i, a) > u(i, b); });
    }
    std::vector<int> next(I, 0);
    std::vector<std::vector<int>> held(J);
    std::deque<int> free;
    for (int i = 0; i < I; ++i)
        free.push_back(i);
    // BS j ranks users by u(., j), ties toward the lower index.
    auto worse = [&](int j, int a, int b) { return u(a, j) < u(b, j) || (u(a, j) == u(b, j) && a > b); };

    while (!free.empty())
    {
        const int i = free.front();
        free.pop_front();
        if (next[i] >= J)
            throw std::logic_error("initUserAssociation: user rejected by every BS");
        const int j = pref[i][next[i]++];
        held[j].push_back(i);
        if (static_cast<int>(held[j].size()) > cfg.maxClusterSize)
        {
            auto it = std::max_element(held[j].begin(), held[j].end(),
                                       [&](int a, int b) { return worse(j, b, a); });
            free.push_back(*it);
            held[j].erase(it);
        }
    }

    // Lower quota: move the best-suited user from an over-full BS.
    for (int j = 0; j < J; ++j)
        while (held[j].size() < 2)
        {
            int donor = -1;
            int pick = -1;
            for (int j2 = 0; j2 < J; ++j2)
            {
                if (j2 == j || held[j2].size() <= 2)
                    continue;
                for (int i : held[j2])
                    if (pick < 0 || u(i, j) > u(pick, j))
                    {
                        pick = i;
                        donor = j2;
                    }
            }
            if (pick < 0)
                throw std::logic_error("initUserAssociation: lower cluster quota unsatisfiable");
            auto &d = held[donor];
            d.erase(std::find(d.begin(), d.end(), pick));
            held[j].push_back(pick);
        }

    Eigen::MatrixXi assoc = Eigen::MatrixXi::Zero(I, J);
    for (int j = 0; j < J; ++j)
        for (int i : held[j])
            assoc(i, j) = 1;
    return assoc;
}

Eigen::MatrixXi initSubchannelAssignment(const NetworkConfig &cfg, const GainTable &gains, const Eigen::MatrixXi &assoc)
{
    const int J = cfg.numBs;
    const int K = cfg.numSubchannels;
    const int q = std::min(cfg.subchannelsPerBs, K);
    const int quota = (J * q + K - 1) / K;
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(J, K);
    for (int j = 0; j < J; ++j)
        for (int k = 0; k < K; ++k)
            for (int i = 0; i < assoc.rows(); ++i)
                if (assoc(i, j) == 1)
                    v(j, k) += std::log2(1.0 + gains(i, j, k) * cfg.maxBsPower / cfg.noisePower);

    std::vector<std::vector<int>> pref(J);
    for (int j = 0; j < J; ++j)
    {
        pref[j].resize(K);
        std::iota(pref[j].begin(), pref[j].end(), 0);
        std::stable_sort(pref[j].begin(), pref[j].end(), [&](int a, int b) { return v(j, a) > v(j, b); });
    }
    std::vector<int> next(J, 0);
    Eigen::MatrixXi subch = Eigen::MatrixXi::Zero(J, K);
    auto worse = [&](int k, int a, int b) { return v(a, k) < v(b, k) || (v(a, k) == v(b, k) && a > b); };

    bool progress = true;
    while (progress)
    {
        progress = false;
        for (int j = 0; j < J; ++j)
        {
            if (subch.row(j).sum() >= q || next[j] >= K)
                continue;
            const int k = pref[j][next[j]++];
            progress = true;
            subch(j, k) = 1;
            if (subch.col(k).sum() > quota)
            {
                int drop = -1;
                for (int j2 = 0; j2 < J; ++j2)
                    if (subch(j2, k) == 1 && (drop < 0 || worse(k, j2, drop)))
                        drop = j2;
                subch(drop, k) = 0;
            }
        }
    }

    for (int k = 0; k < K; ++k)
        while (subch.col(k).sum() < 1)
        {
            int pj = -1;
            int pk = -1;
            for (int j = 0; j < J; ++j)
                for (int k2 = 0; k2 < K; ++k2)
                    if (subch(j, k2) == 1 && subch.col(k2).sum() > 1 && (pj < 0 || v(j, k) > v(pj, k)))
                    {
                        pj = j;
                        pk = k2;
                    }
            if (pj < 0)
                throw std::logic_error("initSubchannelAssignment: cannot cover every subchannel");
            subch(pj, pk) = 0;
            subch(pj, k) = 1;
        }
    return subch;
}

} // namespace irsnoma::matching
