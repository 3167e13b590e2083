// SPDX-License-Identifier: Apache-2.0
//
// Combined channel gains, SINR and rate evaluation, SIC ordering margins and
// constraint validation for the sum-rate problem.

#pragma once

#include "irsnoma/types.hpp"

#include <string>
#include <vector>

namespace irsnoma::model
{

enum class MultipleAccess
{
    Noma,  // power-domain superposition with SIC
    Oma    // co-clustered users share the subchannel in equal time fractions
};

// H = h + nu^H rho with rho_m = conj(g_m) f_m.
cplx combinedGain(const ChannelSet &ch, const PhaseConfig &ph, int i, int j, int k);

GainTable gainTable(const ChannelSet &ch, const PhaseConfig &ph);

// Full report computed from a precomputed gain table. Throws std::invalid_argument
// on dimension mismatch or when a served user is missing from its decoding order.
RateReport evaluateRates(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc,
                         MultipleAccess access = MultipleAccess::Noma);

Grid3<double> sinr(const NetworkConfig &cfg, const ChannelSet &ch, const Allocation &alloc);
RateReport rates(const NetworkConfig &cfg, const ChannelSet &ch, const Allocation &alloc,
                 MultipleAccess access = MultipleAccess::Noma);

// Rate of one subchannel slot for a given SINR; OMA shares it over clusterSize users.
double shannonRate(const NetworkConfig &cfg, double sinrValue, int clusterSize = 1);

// Inter-cell interference seen by user i when listening to BS j on subchannel k.
double interCellInterference(const GainTable &gains, const Allocation &alloc, int i, int j, int k);

// SIC margin Delta_jk(i, itilde) in W^2-scaled units; >= 0 certifies that itilde
// can decode i's message at least as well as i itself.
double sicMargin(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc, int j, int k, int i,
                 int itilde);
double sicMargin(const NetworkConfig &cfg, const ChannelSet &ch, const Allocation &alloc, int j, int k, int i,
                 int itilde);

// Scale against which a margin is judged: |H_it|^2 (I_i + s2) + |H_i|^2 (I_it + s2).
double sicMarginScale(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc, int j, int k,
                      int i, int itilde);

// Cluster orders sorted by |H|^2 / (inter-cell + noise), the ordering under which
// every SIC margin is nonnegative. Ties keep ascending user index.
std::vector<std::vector<int>> sicConsistentOrder(const NetworkConfig &cfg, const GainTable &gains,
                                                 const Allocation &alloc);

enum class Constraint
{
    SicOrder,          // every SIC margin of a decoded pair >= 0
    MinRate,           // every user rate >= R_min
    BsPower,           // each BS transmits at most P_max in total
    UserAssociation,   // each user on exactly one BS
    ClusterSize,       // every BS serves between 2 and A_max users
    BsSubchannel,      // each BS on at least one subchannel
    SubchannelCover,   // each subchannel serves at least one BS
    PowerSupport,      // power placed on an unserved tuple, or negative
    DecodingOrder,     // order table does not list the cluster exactly
    Dimensions
};

const char *constraintName(Constraint c);

struct Violation
{
    Constraint constraint;
    std::string detail;
};

struct ValidationOptions
{
    double sicRelativeSlack = 1e-9;
    double rateSlack = 1e-6;        // bit/s
    double powerSlack = 1e-12;      // W
    bool checkSic = true;
};

// Structural and power checks.
std::vector<Violation> validateAllocation(const NetworkConfig &cfg, const Allocation &alloc);

// Adds SIC margins and minimum rates evaluated against a report built from `gains`.
std::vector<Violation> validateAllocation(const NetworkConfig &cfg, const Allocation &alloc, const GainTable &gains,
                                          const RateReport &report, const ValidationOptions &opt = {});

bool hasViolation(const std::vector<Violation> &v, Constraint c);

// Equal split of fraction*P_max over each BS's served (user, subchannel) pairs.
void equalPowerSplit(const NetworkConfig &cfg, Allocation &alloc, double fraction);

} // namespace irsnoma::model
