// SPDX-License-Identifier: Apache-2.0
//
// Swap matching with externalities. In user-association mode users are matched
// to BSs (many-to-one, cluster quotas); in subchannel mode BSs are matched to
// subchannels (many-to-many). A swap exchanges the partners of two side-A
// players and is blocking when all four affected players are weakly better off
// and at least one is better by more than kStrictness.

#pragma once

#include "irsnoma/model.hpp"
#include "irsnoma/types.hpp"

#include <functional>
#include <vector>

namespace irsnoma::matching
{

inline constexpr double kStrictness = 1e-9;  // bit/s

enum class Mode
{
    UserAssociation,     // side A = users, side B = BSs, mapping = assoc
    SubchannelAssignment // side A = BSs, side B = subchannels, mapping = subch
};

struct MatchingState
{
    Mode mode = Mode::UserAssociation;
    Eigen::MatrixXi assoc;  // I x J
    Eigen::MatrixXi subch;  // J x K
    int minCluster = 2;
    int maxCluster = 2;
    // Last utilities seen per player: side A then side B.
    std::vector<double> utilityCache;

    const Eigen::MatrixXi &mapping() const { return mode == Mode::UserAssociation ? assoc : subch; }
    Eigen::MatrixXi &mapping() { return mode == Mode::UserAssociation ? assoc : subch; }
    int sideA() const { return static_cast<int>(mapping().rows()); }
    int sideB() const { return static_cast<int>(mapping().cols()); }
    std::vector<int> partnersOfA(int a) const;
    std::vector<int> partnersOfB(int b) const;

    // Cluster quotas for assoc; BS and subchannel coverage for subch.
    bool quotasHold() const;
};

MatchingState makeState(const NetworkConfig &cfg, const Allocation &alloc, Mode mode);

struct SwapPair
{
    int e = 0;
    int e2 = 0;
    int w = 0;   // partner of e handed to e2
    int w2 = 0;  // partner of e2 handed to e
    // Utility change of e, e2, w, w2 (after minus before).
    double delta[4] = {0.0, 0.0, 0.0, 0.0};
};

// Rates for a candidate (assoc, subch) pair under a fixed provisional policy.
class Evaluator
{
  public:
    virtual ~Evaluator() = default;
    virtual RateReport evaluate(const Eigen::MatrixXi &assoc, const Eigen::MatrixXi &subch) const = 0;
};

// Equal power split of P_max over each BS's served pairs, decoding order by
// ascending |H|^2, fixed phases (gains precomputed).
class ProvisionalEvaluator final : public Evaluator
{
  public:
    ProvisionalEvaluator(const NetworkConfig &cfg, const GainTable &gains,
                         model::MultipleAccess access = model::MultipleAccess::Noma, double powerFraction = 1.0);
    RateReport evaluate(const Eigen::MatrixXi &assoc, const Eigen::MatrixXi &subch) const override;
    Allocation provisional(const Eigen::MatrixXi &assoc, const Eigen::MatrixXi &subch) const;

  private:
    const NetworkConfig &cfg_;
    const GainTable &gains_;
    model::MultipleAccess access_;
    double fraction_;
};

// Preference utilities.
double userBsUtility(const RateReport &r, int i, int j);
double bsUtility(const RateReport &r, const Eigen::MatrixXi &assoc, int j);
double bsSubchannelUtility(const RateReport &r, const Eigen::MatrixXi &assoc, int j, int k);
double subchannelUtility(const RateReport &r, const Eigen::MatrixXi &assoc, const Eigen::MatrixXi &subch, int k);

// Utility of a side-A (isA) or side-B player under state's mode.
double playerUtility(const MatchingState &s, const RateReport &r, bool isA, int player);

// Swap candidates between side-A players e and e2: one pair in user mode, every
// (w, w2) with w in mu(e)\mu(e2) and w2 in mu(e2)\mu(e) in subchannel mode.
std::vector<SwapPair> candidateSwaps(const MatchingState &s, int e, int e2);

// True iff pair is a swap-blocking pair; fills pair.delta. Throws
// std::invalid_argument when the swap is not a legal exchange.
bool isSwapBlocking(const MatchingState &s, SwapPair &pair, const Evaluator &eval);

MatchingState applySwap(const MatchingState &s, const SwapPair &pair);

struct SwapRecord
{
    SwapPair pair;
    double totalBefore = 0.0;  // sum rate
    double totalAfter = 0.0;
};

struct MatchingResult
{
    MatchingState state;
    std::vector<SwapRecord> swaps;
    int scans = 0;
    bool capHit = false;
};

using SwapObserver = std::function<void(const SwapRecord &)>;

// Deferred acceptance on single-user provisional rates, then lower-quota repair.
Eigen::MatrixXi initUserAssociation(const NetworkConfig &cfg, const GainTable &gains);
// Deferred acceptance of BSs over subchannels (at most cfg.subchannelsPerBs each,
// ceil(J q / K) BSs per subchannel), then repair so that every subchannel serves
// at least one BS.
Eigen::MatrixXi initSubchannelAssignment(const NetworkConfig &cfg, const GainTable &gains, const Eigen::MatrixXi &assoc);

// First blocking pair in lexicographic order is applied; repeats until a full
// scan finds none or 10 I J scans have run.
MatchingResult matchUsersToBs(const MatchingState &init, const Evaluator &eval, const SwapObserver &observer = {});
// For each BS the blocking swap with the largest resulting sum rate is applied;
// repeats until no blocking pair remains or the scan cap is hit.
MatchingResult matchBsToSubchannels(const MatchingState &init, const Evaluator &eval,
                                    const SwapObserver &observer = {});

// Every blocking pair of the state, by exhaustive enumeration.
std::vector<SwapPair> blockingPairs(const MatchingState &s, const Evaluator &eval);

} // namespace irsnoma::matching
