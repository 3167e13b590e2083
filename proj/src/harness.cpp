// SPDX-License-Identifier: Apache-2.0

#include "irsnoma/harness.hpp"

#include "irsnoma/channel.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace irsnoma::harness
{

const char *schemeTag(Scheme s)
{
    switch (s)
    {
    case Scheme::NomaIrs: return "noma-irs";
    case Scheme::NomaNoIrs: return "noma-noirs";
    case Scheme::OmaIrs: return "oma-irs";
    case Scheme::OmaNoIrs: return "oma-noirs";
    }
    return "unknown";
}

Scheme parseScheme(const std::string &tag)
{
    for (Scheme s : kAllSchemes)
        if (tag == schemeTag(s))
            return s;
    throw std::invalid_argument("unknown scheme '" + tag + "' (expected noma-irs, noma-noirs, oma-irs or oma-noirs)");
}

bool usesSurface(Scheme s) { return s == Scheme::NomaIrs || s == Scheme::OmaIrs; }

model::MultipleAccess accessOf(Scheme s)
{
    return s == Scheme::NomaIrs || s == Scheme::NomaNoIrs ? model::MultipleAccess::Noma : model::MultipleAccess::Oma;
}

const char *runStatusName(RunStatus s)
{
    switch (s)
    {
    case RunStatus::Ok: return "ok";
    case RunStatus::Infeasible: return "infeasible";
    case RunStatus::Error: return "error";
    }
    return "unknown";
}

RunStatus parseRunStatus(const std::string &name)
{
    for (RunStatus s : {RunStatus::Ok, RunStatus::Infeasible, RunStatus::Error})
        if (name == runStatusName(s))
            return s;
    throw std::invalid_argument("unknown run status '" + name + "'");
}

namespace
{

// A complete candidate state with the inputs of its last power solve.
struct Candidate
{
    Allocation alloc;
    RateReport report;
    bool feasible = false;
    double shortfall = 0.0;  // sum over users of max(0, R_min - R_i), bit/s
    std::string firstViolation;
    power::CubState power;
    power::InterferenceLevels interference;
};

// Feasible states rank by sum rate, infeasible ones by smaller shortfall.
bool ranksAtLeast(const Candidate &a, const Candidate &b)
{
    if (a.feasible != b.feasible)
        return a.feasible;
    if (a.feasible)
        return a.report.sumRate >= b.report.sumRate;
    return a.shortfall <= b.shortfall;
}

// Strictly better than b by a margin of tol relative to the ranking quantity.
bool ranksAbove(const Candidate &a, const Candidate &b, double tol, double rateScale)
{
    if (a.feasible != b.feasible)
        return a.feasible;
    if (a.feasible)
        return a.report.sumRate - b.report.sumRate > tol * std::abs(a.report.sumRate);
    return b.shortfall - a.shortfall > tol * rateScale;
}

void judge(const NetworkConfig &cfg, const GainTable &gains, model::MultipleAccess access, Candidate &c)
{
    c.report = model::evaluateRates(cfg, gains, c.alloc, access);
    model::ValidationOptions vo;
    vo.checkSic = access == model::MultipleAccess::Noma;
    const auto v = model::validateAllocation(cfg, c.alloc, gains, c.report, vo);
    c.feasible = v.empty();
    c.shortfall = 0.0;
    for (double r : c.report.perUserRate)
        c.shortfall += std::max(0.0, cfg.minRate - r);
    c.firstViolation = v.empty() ? std::string{} : std::string(model::constraintName(v.front().constraint)) + ": " +
                                                       v.front().detail;
}

void maxInto(power::InterferenceLevels &acc, const power::InterferenceLevels &add)
{
    for (std::size_t n = 0; n < acc.size(); ++n)
        acc[n] = std::max(acc[n], add[n]);
}

std::vector<std::vector<int>> orderFor(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc,
                                       model::MultipleAccess access)
{
    return access == model::MultipleAccess::Noma ? model::sicConsistentOrder(cfg, gains, alloc)
                                                 : reflect::decodingOrder(gains, alloc);
}

// Decoding order, then power allocation against the interference the
// candidate itself produces. Levels only grow between re-solves, and the
// order is re-derived from actual interference whenever SIC fails.
Candidate powerBlock(const NetworkConfig &cfg, const ChannelSet &ch, Allocation alloc, model::MultipleAccess access,
                     int refreshes)
{
    const GainTable gains = model::gainTable(ch, alloc.phases);
    alloc.order = orderFor(cfg, gains, alloc, access);
    power::InterferenceLevels levels = power::observedInterference(cfg, gains, alloc);

    Candidate best;
    bool have = false;
    for (int r = 0; r <= refreshes; ++r)
    {
        power::PowerOptions po;
        po.access = access;
        po.interference = levels;
        po.warmStart = true;
        power::PowerResult pr = power::allocatePower(cfg, gains, alloc, po);

        Candidate c;
        c.alloc = std::move(pr.alloc);
        c.power = std::move(pr.state);
        c.interference = levels;
        judge(cfg, gains, access, c);
        if (!have || ranksAtLeast(c, best))
        {
            best = c;
            have = true;
        }
        if (c.feasible)
            break;

        maxInto(levels, power::observedInterference(cfg, gains, c.alloc));
        alloc.power = c.alloc.power;
        alloc.order = orderFor(cfg, gains, c.alloc, access);
    }
    return best;
}

// Best-ranked single move among user exchanges, subchannel exchanges and
// three-BS user rotations, each scored with a full power block; repeated while
// the state is infeasible and the shortfall keeps shrinking.
Candidate repairFeasibility(const NetworkConfig &cfg, const ChannelSet &ch, Candidate cur,
                            model::MultipleAccess access, int refreshes)
{
    const double scale = std::max(cfg.minRate, 1.0) * cfg.numUsers;
    const int maxSteps = cfg.numUsers * cfg.numBs;
    for (int step = 0; step < maxSteps && !cur.feasible; ++step)
    {
        Candidate best;
        bool have = false;
        auto score = [&](const Eigen::MatrixXi &assoc, const Eigen::MatrixXi &subch) {
            Allocation a = cur.alloc;
            a.assoc = assoc;
            a.subch = subch;
            model::equalPowerSplit(cfg, a, 1.0);
            Candidate c = powerBlock(cfg, ch, std::move(a), access, refreshes);
            if (!have || (ranksAtLeast(c, best) && !ranksAtLeast(best, c)))
            {
                best = std::move(c);
                have = true;
            }
        };
        auto exchanges = [&](const matching::MatchingState &s) {
            for (int e = 0; e < s.sideA(); ++e)
                for (int e2 = e + 1; e2 < s.sideA(); ++e2)
                    for (const auto &pair : matching::candidateSwaps(s, e, e2))
                    {
                        const auto swapped = matching::applySwap(s, pair);
                        score(swapped.assoc, swapped.subch);
                    }
        };
        exchanges(matching::makeState(cfg, cur.alloc, matching::Mode::UserAssociation));
        exchanges(matching::makeState(cfg, cur.alloc, matching::Mode::SubchannelAssignment));

        // Cyclic moves of one user from each of three BSs; these escape states
        // where every pairwise exchange leaves some user short.
        const int J = cfg.numBs;
        for (int j1 = 0; j1 < J; ++j1)
            for (int j2 = j1 + 1; j2 < J; ++j2)
                for (int j3 = j2 + 1; j3 < J; ++j3)
                    for (int a : cur.alloc.clusterOf(j1))
                        for (int b : cur.alloc.clusterOf(j2))
                            for (int c : cur.alloc.clusterOf(j3))
                                for (int dir = 0; dir < 2; ++dir)
                                {
                                    Eigen::MatrixXi assoc = cur.alloc.assoc;
                                    assoc(a, j1) = assoc(b, j2) = assoc(c, j3) = 0;
                                    if (dir == 0)
                                        assoc(a, j2) = assoc(b, j3) = assoc(c, j1) = 1;
                                    else
                                        assoc(a, j3) = assoc(b, j1) = assoc(c, j2) = 1;
                                    score(assoc, cur.alloc.subch);
                                }
        if (!have || !ranksAbove(best, cur, cfg.tolerance, scale))
            break;
        cur = std::move(best);
    }
    return cur;
}

PhaseConfig randomPhases(int elements, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    Eigen::VectorXd theta(elements);
    for (int m = 0; m < elements; ++m)
        theta(m) = u(rng);
    return PhaseConfig::fromTheta(theta);
}

} // namespace

Outcome alternatingOptimize(const NetworkConfig &cfg, const ChannelSet &ch, const PipelineOptions &opt)
{
    cfg.validate();
    if (!ch.matches(cfg))
        throw std::invalid_argument("alternatingOptimize: channel set does not match configuration");

    const auto t0 = std::chrono::steady_clock::now();
    const bool surface = usesSurface(opt.scheme);
    const model::MultipleAccess access = accessOf(opt.scheme);
    const ChannelSet eff = surface ? ch : ch.withoutSurface();
    const bool designPhases = surface && !opt.randomPhases;
    const bool refine = designPhases && opt.feasibilityRefinement && access == model::MultipleAccess::Noma;

    Allocation init(cfg);
    init.phases = surface && opt.randomPhases ? randomPhases(cfg.numElements, opt.phaseSeed)
                                              : PhaseConfig(cfg.numElements);
    {
        const GainTable g0 = model::gainTable(eff, init.phases);
        init.assoc = matching::initUserAssociation(cfg, g0);
        init.subch = matching::initSubchannelAssignment(cfg, g0, init.assoc);
    }
    model::equalPowerSplit(cfg, init, 1.0);

    Candidate cur = powerBlock(cfg, eff, init, access, opt.interferenceRefreshes);
    Outcome out;
    if (cur.feasible)
        out.result.outerTrace.push_back(cur.report.sumRate);

    auto offer = [&](Candidate &&c) {
        if (ranksAtLeast(c, cur))
            cur = std::move(c);
    };

    int outer = 0;
    for (; outer < cfg.maxOuterIters; ++outer)
    {
        const Candidate before = cur;

        if (designPhases)
        {
            reflect::PhaseDesignOptions po;
            po.strategy = opt.phaseStrategy;
            po.seed = channel::mixSeed(opt.phaseSeed, static_cast<std::uint64_t>(outer));
            Allocation a = cur.alloc;
            a.phases = reflect::designPhases(reflect::cascade(eff, cur.alloc), cur.alloc.phases, po);
            offer(powerBlock(cfg, eff, std::move(a), access, opt.interferenceRefreshes));
        }
        if (refine && cur.feasible)
        {
            const auto cc = reflect::cascade(cfg, eff, cur.alloc, cur.power, cur.interference);
            reflect::FeasibilityOptions fo;
            fo.maxIterations = cfg.maxScaIters;
            fo.tolerance = cfg.tolerance;
            const auto fr = reflect::feasibilityDesign(cc, cur.alloc.phases, cur.alloc, fo);
            if (fr.status == reflect::FeasibilityStatus::Feasible)
            {
                Allocation a = cur.alloc;
                a.phases = fr.phases;
                offer(powerBlock(cfg, eff, std::move(a), access, opt.interferenceRefreshes));
            }
        }
        if (opt.userMatching)
        {
            const GainTable gains = model::gainTable(eff, cur.alloc.phases);
            const matching::ProvisionalEvaluator eval(cfg, gains, access);
            const auto mr = matching::matchUsersToBs(
                matching::makeState(cfg, cur.alloc, matching::Mode::UserAssociation), eval, opt.userSwapObserver);
            if (!mr.swaps.empty())
            {
                Allocation a = cur.alloc;
                a.assoc = mr.state.assoc;
                model::equalPowerSplit(cfg, a, 1.0);
                offer(powerBlock(cfg, eff, std::move(a), access, opt.interferenceRefreshes));
            }
        }
        if (opt.subchannelMatching)
        {
            const GainTable gains = model::gainTable(eff, cur.alloc.phases);
            const matching::ProvisionalEvaluator eval(cfg, gains, access);
            const auto mr = matching::matchBsToSubchannels(
                matching::makeState(cfg, cur.alloc, matching::Mode::SubchannelAssignment), eval,
                opt.subchannelSwapObserver);
            if (!mr.swaps.empty())
            {
                Allocation a = cur.alloc;
                a.subch = mr.state.subch;
                model::equalPowerSplit(cfg, a, 1.0);
                offer(powerBlock(cfg, eff, std::move(a), access, opt.interferenceRefreshes));
            }
        }

        if (!cur.feasible)
            cur = repairFeasibility(cfg, eff, std::move(cur), access, opt.interferenceRefreshes);

        if (cur.feasible)
            out.result.outerTrace.push_back(cur.report.sumRate);
        if (!ranksAbove(cur, before, cfg.tolerance, std::max(cfg.minRate, 1.0) * cfg.numUsers))
        {
            ++outer;
            break;
        }
    }

    out.alloc = cur.alloc;
    out.report = cur.report;
    out.feasible = cur.feasible;
    out.result.scheme = opt.randomPhases && surface ? std::string(schemeTag(opt.scheme)) + "-random"
                                                    : std::string(schemeTag(opt.scheme));
    out.result.sumRate = cur.report.sumRate;
    out.result.perUserRates = cur.report.perUserRate;
    out.result.outerIterations = outer;
    out.result.status = cur.feasible ? RunStatus::Ok : RunStatus::Infeasible;
    out.result.message = cur.firstViolation;
    out.result.wallSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

Outcome baselineOma(const NetworkConfig &cfg, const ChannelSet &ch, bool withIrs)
{
    PipelineOptions opt;
    opt.scheme = withIrs ? Scheme::OmaIrs : Scheme::OmaNoIrs;
    return alternatingOptimize(cfg, ch, opt);
}

RunResult runScheme(const NetworkConfig &cfg, std::uint64_t channelSeed, const PipelineOptions &opt)
{
    RunResult r;
    r.scheme = schemeTag(opt.scheme);
    r.seed = channelSeed;
    try
    {
        const ChannelSet ch = channel::generateChannels(cfg, channelSeed);
        PipelineOptions o = opt;
        o.phaseSeed = channel::mixSeed(channelSeed, 0x5eed);
        r = alternatingOptimize(cfg, ch, o).result;
        r.seed = channelSeed;
    }
    catch (const std::exception &e)
    {
        r.status = RunStatus::Error;
        r.message = e.what();
    }
    return r;
}

const char *sweepParameterName(SweepParameter p) { return p == SweepParameter::MaxBsPower ? "pmax" : "elements"; }

void SweepSpec::validate() const
{
    if (values.empty())
        throw std::invalid_argument("sweep grid is empty");
    for (std::size_t n = 1; n < values.size(); ++n)
        if (!(values[n] > values[n - 1]))
            throw std::invalid_argument("sweep grid must be strictly increasing");
    if (parameter == SweepParameter::NumElements)
        for (double v : values)
            if (v < 1.0 || v != std::floor(v))
                throw std::invalid_argument("element counts must be positive integers");
    if (runsPerPoint < 1)
        throw std::invalid_argument("runs per point must be >= 1");
    if (schemes.empty())
        throw std::invalid_argument("sweep needs at least one scheme");
}

SweepSpec parseSweep(const std::string &text)
{
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ':');)
        parts.push_back(item);
    if (parts.size() != 4)
        throw std::invalid_argument("sweep '" + text + "' must look like pmax:lo:hi:step or elements:lo:hi:step");
    SweepSpec s;
    if (parts[0] == "pmax")
        s.parameter = SweepParameter::MaxBsPower;
    else if (parts[0] == "elements")
        s.parameter = SweepParameter::NumElements;
    else
        throw std::invalid_argument("unknown sweep parameter '" + parts[0] + "'");
    double lo = 0.0, hi = 0.0, step = 0.0;
    try
    {
        lo = std::stod(parts[1]);
        hi = std::stod(parts[2]);
        step = std::stod(parts[3]);
    }
    catch (const std::exception &)
    {
        throw std::invalid_argument("sweep '" + text + "' has a non-numeric bound");
    }
    if (!(step > 0.0) || !(hi >= lo))
        throw std::invalid_argument("sweep '" + text + "' needs lo <= hi and step > 0");
    const long count = std::lround(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (long n = 0; n < count; ++n)
        s.values.push_back(lo + static_cast<double>(n) * step);
    s.validate();
    return s;
}

SweepSpec singlePoint(const NetworkConfig &cfg)
{
    SweepSpec s;
    s.parameter = SweepParameter::MaxBsPower;
    s.values = {wattToDbm(cfg.maxBsPower)};
    return s;
}

NetworkConfig configAt(const NetworkConfig &cfg, SweepParameter p, double value)
{
    NetworkConfig out = cfg;
    if (p == SweepParameter::MaxBsPower)
        out.maxBsPower = dbmToWatt(value);
    else
        out.numElements = static_cast<int>(std::lround(value));
    return out;
}

int defaultWorkerCount()
{
    if (const char *env = std::getenv("IRSNOMA_WORKERS"))
    {
        char *end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
            return static_cast<int>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

ResultTable runMonteCarlo(const NetworkConfig &cfg, const SweepSpec &sweep, std::uint64_t masterSeed, int workers)
{
    sweep.validate();
    cfg.validate();
    struct Job
    {
        std::size_t point;
        Scheme scheme;
        int run;
    };
    std::vector<Job> jobs;
    for (std::size_t pt = 0; pt < sweep.values.size(); ++pt)
        for (Scheme s : sweep.schemes)
            for (int r = 0; r < sweep.runsPerPoint; ++r)
                jobs.push_back({pt, s, r});

    std::vector<NetworkConfig> configs;
    for (double v : sweep.values)
    {
        configs.push_back(configAt(cfg, sweep.parameter, v));
        configs.back().validate();
    }

    ResultTable table;
    table.rows.resize(jobs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (std::size_t n = next++; n < jobs.size(); n = next++)
        {
            const Job &job = jobs[n];
            PipelineOptions opt;
            opt.scheme = job.scheme;
            opt.randomPhases = sweep.randomPhases;
            const std::uint64_t seed = channel::mixSeed(masterSeed, static_cast<std::uint64_t>(job.run));
            const RunResult r = runScheme(configs[job.point], seed, opt);
            table.rows[n] = {r.scheme, sweepParameterName(sweep.parameter), sweep.values[job.point], seed,
                             r.status == RunStatus::Ok ? r.sumRate : 0.0, r.status};
        }
    };

    const int n = std::max(1, std::min<int>(workers > 0 ? workers : defaultWorkerCount(),
                                            static_cast<int>(jobs.size())));
    if (n == 1)
        work();
    else
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < n; ++w)
            pool.emplace_back(work);
    }
    return table;
}

double percentile(std::vector<double> values, double q)
{
    if (values.empty())
        throw std::invalid_argument("percentile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0))
        throw std::invalid_argument("percentile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace
{

using GroupKey = std::pair<std::string, double>;

// Groups rows by (scheme, param value) in first-appearance order.
std::vector<std::pair<GroupKey, std::vector<const ResultRow *>>> groups(const ResultTable &table)
{
    std::vector<std::pair<GroupKey, std::vector<const ResultRow *>>> out;
    std::map<GroupKey, std::size_t> index;
    for (const auto &row : table.rows)
    {
        const GroupKey key{row.scheme, row.paramValue};
        auto it = index.find(key);
        if (it == index.end())
        {
            it = index.emplace(key, out.size()).first;
            out.push_back({key, {}});
        }
        out[it->second].second.push_back(&row);
    }
    return out;
}

} // namespace

std::vector<SummaryRow> summarize(const ResultTable &table)
{
    std::vector<SummaryRow> out;
    for (const auto &[key, rows] : groups(table))
    {
        SummaryRow s;
        s.scheme = key.first;
        s.paramValue = key.second;
        std::vector<double> ok;
        for (const ResultRow *r : rows)
        {
            if (r->status == RunStatus::Ok)
                ok.push_back(r->sumRate);
            else
                ++s.excluded;
        }
        s.included = static_cast<int>(ok.size());
        if (!ok.empty())
        {
            double sum = 0.0;
            for (double v : ok)
                sum += v;
            s.mean = sum / static_cast<double>(ok.size());
            s.p05 = percentile(ok, 0.05);
            s.p95 = percentile(ok, 0.95);
        }
        out.push_back(s);
    }
    return out;
}

std::vector<CdfRow> empiricalCdf(const ResultTable &table)
{
    std::vector<CdfRow> out;
    for (const auto &[key, rows] : groups(table))
    {
        std::vector<double> ok;
        for (const ResultRow *r : rows)
            if (r->status == RunStatus::Ok)
                ok.push_back(r->sumRate);
        if (ok.empty())
            continue;
        std::sort(ok.begin(), ok.end());
        out.push_back({key.first, key.second, ok.front(), 0.0});
        for (std::size_t n = 0; n < ok.size(); ++n)
            out.push_back({key.first, key.second, ok[n], static_cast<double>(n + 1) / static_cast<double>(ok.size())});
    }
    return out;
}

} // namespace irsnoma::harness
