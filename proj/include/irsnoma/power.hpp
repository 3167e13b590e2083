// SPDX-License-Identifier: Apache-2.0
//
// Iterative power allocation with a convex upper bound (CUB) on the bilinear
// SINR term. For fixed association, subchannels, phases and decoding order the
// problem splits per BS; each MM step solves the convex restriction
//
//     maximize   sum (W/K) log2(1 + gamma)
//     subject to sum_{i,k} p <= P_max
//                sum_k (W/K) log2(1 + gamma_ik) >= R_min
//                p >= (lambda/2) gamma^2 + pHat^2 / (2 lambda) + gamma xi
//
// where pHat sums the powers of later-decoded co-cluster users and
// xi = (I + sigma^2) / |H|^2 with I the assumed inter-cell interference.

#pragma once

#include "irsnoma/model.hpp"
#include "irsnoma/types.hpp"

#include <filesystem>
#include <vector>

namespace irsnoma::power
{

inline constexpr double kLambdaFloor = 1e-6;    // W per unit SINR
inline constexpr double kLambdaCeiling = 1e6;   // W per unit SINR

// (lambda/2) gamma^2 + pHat^2 / (2 lambda). Throws std::invalid_argument for lambda <= 0.
double cubValue(double gamma, double pHat, double lambda);

// pHat / gamma; kLambdaFloor when pHat = 0, kLambdaCeiling when only gamma = 0.
double updateLambda(double pHat, double gamma);

enum class Status
{
    Converged,
    MaxIterations,
    Infeasible
};

const char *statusName(Status s);

// Assumed inter-cell interference per cluster, index j*K + k, in W.
using InterferenceLevels = std::vector<double>;

InterferenceLevels uniformInterference(const NetworkConfig &cfg, double level);
// Largest inter-cell interference any member of cluster (j, k) sees under alloc.
InterferenceLevels observedInterference(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc);

struct CubState
{
    Grid3<double> p;       // W
    Grid3<double> gamma;
    Grid3<double> lambda;  // W per unit SINR
    Grid3<double> xi;      // W
    Grid3<double> pHat;    // W
    std::vector<double> utilityTrace;  // bit/s per accepted iterate
    std::vector<double> kktTrace;      // largest per-BS KKT residual of each solve
    int iterations = 0;
    Status status = Status::Converged;

    CubState() = default;
    explicit CubState(const NetworkConfig &cfg);
};

// lambda <- pHat / gamma on every served tuple.
void updateLambda(const Allocation &alloc, CubState &state);

// Recomputes pHat from p along each decoding order.
void refreshPHat(const Allocation &alloc, CubState &state);

struct SubproblemResult
{
    bool feasible = false;
    Grid3<double> p;
    Grid3<double> gamma;
    double utility = 0.0;       // bit/s
    // Residual of the normalized program (power / P_max, objective in bits).
    double kktResidual = 0.0;
};

// One convex restriction at the given lambda. `start` supplies (p, gamma) for
// the interior-point start; phase I recovers from infeasible starts.
SubproblemResult solvePowerSubproblem(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc,
                                      const InterferenceLevels &interference, const CubState &start);

// Concave OMA power problem with equal time sharing inside each cluster.
SubproblemResult solveOmaPower(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc,
                               const InterferenceLevels &interference);

struct PowerOptions
{
    model::MultipleAccess access = model::MultipleAccess::Noma;
    // Defaults to cfg.interThreshold on every cluster when empty.
    InterferenceLevels interference;
    // Take alloc.power as the initial point when it is feasible.
    bool warmStart = false;
};

struct PowerResult
{
    Allocation alloc;
    CubState state;
};

// Alternates updateLambda and solvePowerSubproblem until the relative utility
// change drops below cfg.tolerance or cfg.maxPowerIters solves have run.
// Only iterates that do not lower the utility are accepted.
PowerResult allocatePower(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc,
                          const PowerOptions &opt = {});

// Columns: iter, U, maxKktResidual.
void writeTrace(const CubState &state, const std::filesystem::path &path);

} // namespace irsnoma::power
