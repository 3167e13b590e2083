// SPDX-License-Identifier: Apache-2.0
//
// Outer alternating optimization over phases, power, association and
// subchannel assignment; the OMA and surface-free baselines; and the seeded
// Monte-Carlo batch runner with its summary statistics.

#pragma once

#include "irsnoma/matching.hpp"
#include "irsnoma/model.hpp"
#include "irsnoma/power.hpp"
#include "irsnoma/reflect.hpp"
#include "irsnoma/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace irsnoma::harness
{

enum class Scheme
{
    NomaIrs,
    NomaNoIrs,
    OmaIrs,
    OmaNoIrs
};

inline constexpr Scheme kAllSchemes[] = {Scheme::NomaIrs, Scheme::NomaNoIrs, Scheme::OmaIrs, Scheme::OmaNoIrs};

// "noma-irs", "noma-noirs", "oma-irs", "oma-noirs".
const char *schemeTag(Scheme s);
// Throws std::invalid_argument for an unknown tag.
Scheme parseScheme(const std::string &tag);
bool usesSurface(Scheme s);
model::MultipleAccess accessOf(Scheme s);

enum class RunStatus
{
    Ok,
    Infeasible,  // no state met every constraint; excluded from averages
    Error        // exception inside the run; excluded from averages
};

const char *runStatusName(RunStatus s);
RunStatus parseRunStatus(const std::string &name);

struct RunResult
{
    std::string scheme;
    std::uint64_t seed = 0;
    double sumRate = 0.0;  // bit/s
    std::vector<double> perUserRates;
    // Sum rate after every outer iteration whose state was feasible.
    std::vector<double> outerTrace;
    int outerIterations = 0;
    double wallSeconds = 0.0;
    RunStatus status = RunStatus::Ok;
    std::string message;
};

struct PipelineOptions
{
    Scheme scheme = Scheme::NomaIrs;
    // Surface schemes only: keep seeded uniform phases instead of designing them.
    bool randomPhases = false;
    std::uint64_t phaseSeed = 0;
    reflect::PhaseStrategy phaseStrategy = reflect::PhaseStrategy::Bcd;
    bool feasibilityRefinement = true;
    bool userMatching = true;
    bool subchannelMatching = true;
    // Power re-solves with refreshed interference levels per power block.
    int interferenceRefreshes = 4;
    matching::SwapObserver userSwapObserver;
    matching::SwapObserver subchannelSwapObserver;
};

struct Outcome
{
    Allocation alloc;
    RateReport report;
    RunResult result;
    bool feasible = false;
};

// Blocks per outer iteration: phase design, power, feasibility refinement,
// user matching, subchannel matching. Each block is kept only when the state
// ranks at least as high under (feasible, sum rate).
Outcome alternatingOptimize(const NetworkConfig &cfg, const ChannelSet &ch, const PipelineOptions &opt = {});

// OMA with the same machinery; surface removed when withIrs is false.
Outcome baselineOma(const NetworkConfig &cfg, const ChannelSet &ch, bool withIrs);

// One seeded run of a scheme, with failures captured in the status.
RunResult runScheme(const NetworkConfig &cfg, std::uint64_t channelSeed, const PipelineOptions &opt);

enum class SweepParameter
{
    MaxBsPower,   // grid in dBm
    NumElements
};

const char *sweepParameterName(SweepParameter p);  // "pmax" or "elements"

struct SweepSpec
{
    SweepParameter parameter = SweepParameter::MaxBsPower;
    std::vector<double> values;
    int runsPerPoint = 1;
    std::vector<Scheme> schemes{Scheme::NomaIrs};
    bool randomPhases = false;

    // Throws std::invalid_argument unless values is nonempty and strictly increasing.
    void validate() const;
};

// "pmax:10:30:2" or "elements:20:100:20", both ends inclusive.
SweepSpec parseSweep(const std::string &text);
// Single point at the configuration's own P_max.
SweepSpec singlePoint(const NetworkConfig &cfg);

// Sweep values applied to a copy of cfg.
NetworkConfig configAt(const NetworkConfig &cfg, SweepParameter p, double value);

struct ResultRow
{
    std::string scheme;
    std::string paramName;
    double paramValue = 0.0;
    std::uint64_t seed = 0;
    double sumRate = 0.0;
    RunStatus status = RunStatus::Ok;
};

struct SummaryRow
{
    std::string scheme;
    double paramValue = 0.0;
    double mean = 0.0;
    double p05 = 0.0;
    double p95 = 0.0;
    int included = 0;
    int excluded = 0;
};

struct CdfRow
{
    std::string scheme;
    double paramValue = 0.0;
    double sumRate = 0.0;
    double cdf = 0.0;
};

struct ResultTable
{
    std::vector<ResultRow> rows;
};

// Channel seed of run r: channel::mixSeed(masterSeed, r), shared by every
// scheme and grid point. Rows are ordered by grid point, scheme, run.
ResultTable runMonteCarlo(const NetworkConfig &cfg, const SweepSpec &sweep, std::uint64_t masterSeed,
                          int workers = 0);

// IRSNOMA_WORKERS when set to a positive integer, else hardware concurrency.
int defaultWorkerCount();

// Linear interpolation between order statistics; q in [0, 1]. Throws on empty input.
double percentile(std::vector<double> values, double q);

// Per (scheme, grid point) in first-appearance order; only Ok rows enter the statistics.
std::vector<SummaryRow> summarize(const ResultTable &table);
// Empirical CDF per (scheme, grid point): a leading 0 at the smallest sample,
// then i/n at the i-th order statistic.
std::vector<CdfRow> empiricalCdf(const ResultTable &table);

} // namespace irsnoma::harness
