// SPDX-License-Identifier: Apache-2.0
//
// Surface phase design: slack-maximizing successive convex approximation of
// the SIC-order and SINR-target constraints, closed-form block-coordinate
// ascent on the sum of combined gains, its semidefinite relaxation with
// Gaussian randomization, and decoding-order determination.
//
// Convention: H = h + nu^H rho with rho_m = conj(g_m) f_m and nu_m = exp(j theta_m).

#pragma once

#include "irsnoma/power.hpp"
#include "irsnoma/types.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace irsnoma::reflect
{

struct CascadedLink
{
    int i = 0;
    int j = 0;
    int k = 0;
    cplx h;
    Eigen::VectorXcd rho;
    double phi = 0.0;    // gamma pHat / p
    double xiHat = 0.0;  // gamma (I + sigma^2) / p, in |H|^2 units
};

struct CascadedChannel
{
    int numElements = 0;
    std::vector<CascadedLink> links;
};

// rho for every served link of alloc, without power-dependent terms.
CascadedChannel cascade(const ChannelSet &ch, const Allocation &alloc);
// Adds phi and xiHat from a power allocation. Throws std::invalid_argument when
// a served link carries no power.
CascadedChannel cascade(const NetworkConfig &cfg, const ChannelSet &ch, const Allocation &alloc,
                        const power::CubState &state, const power::InterferenceLevels &interference);

cplx linkGain(const CascadedLink &link, const Eigen::VectorXcd &nu);

// Sum of |H|^2 over all links.
double sumGain(const CascadedChannel &cc, const Eigen::VectorXcd &nu);

struct TaylorPoint
{
    std::vector<double> x, y;            // Re H, Im H at the current phases
    std::vector<double> xTilde, yTilde;  // expansion point
};

// x = xTilde and y = yTilde at the given phases.
TaylorPoint taylorPoint(const CascadedChannel &cc, const PhaseConfig &phases);

// First-order lower bound of x^2 + y^2 around (xt, yt).
double taylorLowerBound(double xt, double yt, double x, double y);

enum class FeasibilityStatus
{
    Feasible,
    NoImprovement
};

struct FeasibilityResult
{
    PhaseConfig phases;
    double slack = 0.0;         // best normalized minimum slack reached
    double initialSlack = 0.0;  // at the input phases
    FeasibilityStatus status = FeasibilityStatus::NoImprovement;
    int iterations = 0;
};

struct FeasibilityOptions
{
    int maxIterations = 30;
    double tolerance = 1e-4;
};

// Normalized minimum slack of the SIC-order and SINR-target constraints at nu.
double minimumSlack(const CascadedChannel &cc, const Allocation &alloc, const Eigen::VectorXcd &nu);

// Links must carry phi and xiHat. The decoding order is read from alloc.
FeasibilityResult feasibilityDesign(const CascadedChannel &cc, const PhaseConfig &phases, const Allocation &alloc,
                                    const FeasibilityOptions &opt = {});

struct BcdOptions
{
    double tolerance = 1e-4;  // relative objective change per sweep
    int maxSweeps = 200;
};

// Cyclic closed-form element updates starting from init.
PhaseConfig sumGainBcd(const CascadedChannel &cc, const PhaseConfig &init, const BcdOptions &opt = {});

struct LiftedProblem
{
    std::vector<Eigen::MatrixXcd> C;  // per link, (M+1) x (M+1)
    Eigen::MatrixXcd Csum;
    double directGain = 0.0;          // sum |h|^2
};

// C = [rho rho^H, conj(h) rho; h rho^H, 0] so that
// nuBar^H C nuBar + |h|^2 = |h + nu^H rho|^2 with nuBar = [nu; 1].
LiftedProblem liftProblem(const CascadedChannel &cc);
// Rank-one lift of a phase vector, nuBar nuBar^H.
Eigen::MatrixXcd liftPhases(const Eigen::VectorXcd &nu);
double liftedObjective(const LiftedProblem &lp, const Eigen::MatrixXcd &V);

struct SdpSolution
{
    Eigen::MatrixXcd V;
    double primal = 0.0;      // tr(C V)
    double dualBound = 0.0;   // certified upper bound on tr(C V) over the feasible set
    bool converged = false;
    int iterations = 0;
};

// maximize tr(C V) subject to diag(V) = 1, V PSD, C Hermitian.
class SdpBackend
{
  public:
    virtual ~SdpBackend() = default;
    virtual SdpSolution solve(const Eigen::MatrixXcd &C) const = 0;
};

// Primal-dual path-following method with interior iterates.
class InteriorPointSdp final : public SdpBackend
{
  public:
    explicit InteriorPointSdp(double relativeGap = 1e-9, int maxIterations = 100)
        : relativeGap_(relativeGap), maxIterations_(maxIterations)
    {
    }
    SdpSolution solve(const Eigen::MatrixXcd &C) const override;

  private:
    double relativeGap_;
    int maxIterations_;
};

enum class SdrStatus
{
    Solved,
    SizeCapExceeded,
    NotConverged
};

struct SdrResult
{
    SdrStatus status = SdrStatus::Solved;
    Eigen::MatrixXcd V;
    double upperBound = 0.0;  // bound on the sum-gain objective, including sum |h|^2
    double relaxedValue = 0.0;
};

inline constexpr int kDefaultSdpSizeCap = 33;

SdrResult sdrSolve(const LiftedProblem &lp, const SdpBackend &backend, int sizeCap = kDefaultSdpSizeCap);
SdrResult sdrSolve(const LiftedProblem &lp, int sizeCap = kDefaultSdpSizeCap);

// Best of `samples` unit-modulus draws from CN(0, V) and the leading eigenvector.
PhaseConfig gaussianRandomization(const Eigen::MatrixXcd &V, const LiftedProblem &lp, int samples,
                                  std::uint64_t seed);

enum class PhaseStrategy
{
    Bcd,
    Sdr
};

struct PhaseDesignOptions
{
    PhaseStrategy strategy = PhaseStrategy::Bcd;
    int grSamples = 200;
    int sdpSizeCap = kDefaultSdpSizeCap;
    std::uint64_t seed = 0;
    BcdOptions bcd;
};

// Sum-gain phase design by the selected strategy; SDR falls back to BCD above the size cap.
PhaseConfig designPhases(const CascadedChannel &cc, const PhaseConfig &init, const PhaseDesignOptions &opt = {});

// Each cluster sorted by ascending |H|^2, ties by ascending user index.
std::vector<std::vector<int>> decodingOrder(const GainTable &gains, const Allocation &alloc);
std::vector<std::vector<int>> decodingOrder(const ChannelSet &ch, const PhaseConfig &phases, const Allocation &alloc);

} // namespace irsnoma::reflect
