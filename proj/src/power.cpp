// SPDX-License-Identifier: Apache-2.0

#include "irsnoma/power.hpp"

#include "irsnoma/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace irsnoma::power
{

namespace
{

constexpr double kLn2 = std::numbers::ln2;

// One served (user, subchannel) pair of a BS, in units normalized by P_max.
struct Tuple
{
    int i = 0;
    int k = 0;
    int user = 0;            // index into BsProblem::users
    std::vector<int> later;  // tuple indices decoded after this one on the same subchannel
    int clusterSize = 1;
    double xi = 0.0;
    double lambda = 1.0;
};

struct BsProblem
{
    int j = 0;
    std::vector<Tuple> tuples;
    std::vector<int> users;                    // global user index
    std::vector<std::vector<int>> userTuples;  // tuples of each user
    double rateTarget = 0.0;                   // bits per subchannel use
};

BsProblem buildProblem(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc,
                       const InterferenceLevels &interference, int j, const Grid3<double> *lambda)
{
    BsProblem bp;
    bp.j = j;
    bp.rateTarget = cfg.minRate / cfg.subchannelBandwidth();
    const int K = cfg.numSubchannels;
    for (int k : alloc.subchannelsOf(j))
    {
        const auto &seq = alloc.decodeOrder(j, k);
        const int first = static_cast<int>(bp.tuples.size());
        for (int i : seq)
        {
            const double g = gains(i, j, k);
            if (!(g > 0.0))
                throw std::invalid_argument("power allocation needs |H|^2 > 0 on every served link");
            Tuple t;
            t.i = i;
            t.k = k;
            t.clusterSize = static_cast<int>(seq.size());
            t.xi = (interference[static_cast<std::size_t>(j) * K + k] + cfg.noisePower) / g / cfg.maxBsPower;
            if (lambda)
                t.lambda = (*lambda)(i, j, k) / cfg.maxBsPower;
            auto it = std::find(bp.users.begin(), bp.users.end(), i);
            if (it == bp.users.end())
            {
                bp.users.push_back(i);
                bp.userTuples.emplace_back();
                t.user = static_cast<int>(bp.users.size()) - 1;
            }
            else
            {
                t.user = static_cast<int>(it - bp.users.begin());
            }
            bp.tuples.push_back(t);
        }
        const int last = static_cast<int>(bp.tuples.size());
        for (int a = first; a < last; ++a)
            for (int b = a + 1; b < last; ++b)
                bp.tuples[a].later.push_back(b);
    }
    for (int s = 0; s < static_cast<int>(bp.tuples.size()); ++s)
        bp.userTuples[bp.tuples[s].user].push_back(s);
    return bp;
}

// x = [p_0 .. p_{S-1}, gamma_0 .. gamma_{S-1}]
class NomaProgram final : public opt::ConvexProgram
{
  public:
    explicit NomaProgram(const BsProblem &bp)
        : bp_(bp), S_(static_cast<int>(bp.tuples.size())),
          R_(bp.rateTarget > 0.0 ? static_cast<int>(bp.users.size()) : 0)
    {
    }

    int numVariables() const override { return 2 * S_; }
    int numConstraints() const override { return 1 + R_ + 2 * S_; }

    double objective(const Eigen::VectorXd &x) const override
    {
        return -(x.tail(S_).array().log1p()).sum() / kLn2;
    }

    void objectiveDerivatives(const Eigen::VectorXd &x, Eigen::VectorXd &grad, Eigen::MatrixXd &hess) const override
    {
        grad.setZero(2 * S_);
        hess.setZero(2 * S_, 2 * S_);
        for (int s = 0; s < S_; ++s)
        {
            const double a = 1.0 / (1.0 + x(S_ + s));
            grad(S_ + s) = -a / kLn2;
            hess(S_ + s, S_ + s) = a * a / kLn2;
        }
    }

    void constraintValues(const Eigen::VectorXd &x, Eigen::VectorXd &f) const override
    {
        f.resize(numConstraints());
        f(0) = x.head(S_).sum() - 1.0;
        for (int u = 0; u < R_; ++u)
        {
            double bits = 0.0;
            for (int s : bp_.userTuples[u])
                bits += std::log1p(x(S_ + s)) / kLn2;
            f(1 + u) = bp_.rateTarget - bits;
        }
        for (int s = 0; s < S_; ++s)
        {
            const Tuple &t = bp_.tuples[s];
            const double gam = x(S_ + s);
            double val = gam * t.xi - x(s);
            if (!t.later.empty())
            {
                double q = 0.0;
                for (int l : t.later)
                    q += x(l);
                val += 0.5 * t.lambda * gam * gam + q * q / (2.0 * t.lambda);
            }
            f(1 + R_ + s) = val;
            f(1 + R_ + S_ + s) = -gam;
        }
    }

    void constraintJacobian(const Eigen::VectorXd &x, Eigen::MatrixXd &jac) const override
    {
        jac.setZero(numConstraints(), 2 * S_);
        jac.row(0).head(S_).setOnes();
        for (int u = 0; u < R_; ++u)
            for (int s : bp_.userTuples[u])
                jac(1 + u, S_ + s) = -1.0 / ((1.0 + x(S_ + s)) * kLn2);
        for (int s = 0; s < S_; ++s)
        {
            const Tuple &t = bp_.tuples[s];
            const int row = 1 + R_ + s;
            const double gam = x(S_ + s);
            jac(row, s) = -1.0;
            jac(row, S_ + s) = t.xi;
            if (!t.later.empty())
            {
                double q = 0.0;
                for (int l : t.later)
                    q += x(l);
                jac(row, S_ + s) += t.lambda * gam;
                for (int l : t.later)
                    jac(row, l) += q / t.lambda;
            }
            jac(1 + R_ + S_ + s, S_ + s) = -1.0;
        }
    }

    void addConstraintHessians(const Eigen::VectorXd &x, const Eigen::VectorXd &w, Eigen::MatrixXd &hess) const override
    {
        for (int u = 0; u < R_; ++u)
            for (int s : bp_.userTuples[u])
            {
                const double a = 1.0 / (1.0 + x(S_ + s));
                hess(S_ + s, S_ + s) += w(1 + u) * a * a / kLn2;
            }
        for (int s = 0; s < S_; ++s)
        {
            const Tuple &t = bp_.tuples[s];
            if (t.later.empty())
                continue;
            const double ws = w(1 + R_ + s);
            hess(S_ + s, S_ + s) += ws * t.lambda;
            for (int a : t.later)
                for (int b : t.later)
                    hess(a, b) += ws / t.lambda;
        }
    }

  private:
    const BsProblem &bp_;
    int S_;
    int R_;
};

// x = [p_0 .. p_{S-1}]; tuple rate (1/n) log2(1 + p / xi).
class OmaProgram final : public opt::ConvexProgram
{
  public:
    explicit OmaProgram(const BsProblem &bp)
        : bp_(bp), S_(static_cast<int>(bp.tuples.size())),
          R_(bp.rateTarget > 0.0 ? static_cast<int>(bp.users.size()) : 0)
    {
    }

    int numVariables() const override { return S_; }
    int numConstraints() const override { return 1 + R_ + S_; }

    double bits(const Eigen::VectorXd &x, int s) const
    {
        const Tuple &t = bp_.tuples[s];
        return std::log1p(x(s) / t.xi) / (kLn2 * t.clusterSize);
    }
    double d1(const Eigen::VectorXd &x, int s) const
    {
        const Tuple &t = bp_.tuples[s];
        return 1.0 / ((t.xi + x(s)) * kLn2 * t.clusterSize);
    }
    double d2(const Eigen::VectorXd &x, int s) const
    {
        const Tuple &t = bp_.tuples[s];
        const double a = t.xi + x(s);
        return -1.0 / (a * a * kLn2 * t.clusterSize);
    }

    double objective(const Eigen::VectorXd &x) const override
    {
        double v = 0.0;
        for (int s = 0; s < S_; ++s)
            v -= bits(x, s);
        return v;
    }

    void objectiveDerivatives(const Eigen::VectorXd &x, Eigen::VectorXd &grad, Eigen::MatrixXd &hess) const override
    {
        grad.resize(S_);
        hess.setZero(S_, S_);
        for (int s = 0; s < S_; ++s)
        {
            grad(s) = -d1(x, s);
            hess(s, s) = -d2(x, s);
        }
    }

    void constraintValues(const Eigen::VectorXd &x, Eigen::VectorXd &f) const override
    {
        f.resize(numConstraints());
        f(0) = x.sum() - 1.0;
        for (int u = 0; u < R_; ++u)
        {
            double b = 0.0;
            for (int s : bp_.userTuples[u])
                b += bits(x, s);
            f(1 + u) = bp_.rateTarget - b;
        }
        for (int s = 0; s < S_; ++s)
            f(1 + R_ + s) = -x(s);
    }

    void constraintJacobian(const Eigen::VectorXd &x, Eigen::MatrixXd &jac) const override
    {
        jac.setZero(numConstraints(), S_);
        jac.row(0).setOnes();
        for (int u = 0; u < R_; ++u)
            for (int s : bp_.userTuples[u])
                jac(1 + u, s) = -d1(x, s);
        for (int s = 0; s < S_; ++s)
            jac(1 + R_ + s, s) = -1.0;
    }

    void addConstraintHessians(const Eigen::VectorXd &x, const Eigen::VectorXd &w, Eigen::MatrixXd &hess) const override
    {
        for (int u = 0; u < R_; ++u)
            for (int s : bp_.userTuples[u])
                hess(s, s) -= w(1 + u) * d2(x, s);
    }

  private:
    const BsProblem &bp_;
    int S_;
    int R_;
};

opt::BarrierOptions powerBarrierOptions()
{
    opt::BarrierOptions o;
    o.gapTolerance = 2e-7;
    o.newtonTolerance = 1e-20;
    o.maxNewtonPerStage = 100;
    o.maxTotalNewton = 3000;
    return o;
}

double utilityOf(const NetworkConfig &cfg, const Allocation &alloc, const Grid3<double> &gamma)
{
    double u = 0.0;
    for (int j = 0; j < alloc.numBs(); ++j)
        for (int k : alloc.subchannelsOf(j))
            for (int i : alloc.decodeOrder(j, k))
                u += cfg.subchannelBandwidth() * std::log2(1.0 + gamma(i, j, k));
    return u;
}

bool meetsMinRate(const NetworkConfig &cfg, const Allocation &alloc, const Grid3<double> &gamma)
{
    for (int i = 0; i < alloc.numUsers(); ++i)
    {
        const int j = alloc.bsOf(i);
        if (j < 0)
            return false;
        double r = 0.0;
        for (int k : alloc.subchannelsOf(j))
            r += cfg.subchannelBandwidth() * std::log2(1.0 + gamma(i, j, k));
        if (r < cfg.minRate)
            return false;
    }
    return true;
}

void fillXi(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc,
            const InterferenceLevels &interference, CubState &state)
{
    state.xi.fill(0.0);
    for (int j = 0; j < alloc.numBs(); ++j)
        for (int k : alloc.subchannelsOf(j))
            for (int i : alloc.decodeOrder(j, k))
                state.xi(i, j, k) =
                    (interference[static_cast<std::size_t>(j) * cfg.numSubchannels + k] + cfg.noisePower) /
                    gains(i, j, k);
}

// gamma = p / (pHat + xi): the SINR achieved under the assumed interference.
void achievedGamma(const Allocation &alloc, CubState &state)
{
    state.gamma.fill(0.0);
    for (int j = 0; j < alloc.numBs(); ++j)
        for (int k : alloc.subchannelsOf(j))
            for (int i : alloc.decodeOrder(j, k))
                state.gamma(i, j, k) = state.p(i, j, k) / (state.pHat(i, j, k) + state.xi(i, j, k));
}

// Smallest-power point giving each user an equal SINR target on each of its
// subchannels; false when some BS would exceed P_max.
bool minimumPowerPoint(const NetworkConfig &cfg, const Allocation &alloc, CubState &state)
{
    state.p.fill(0.0);
    const double bits = cfg.minRate / cfg.subchannelBandwidth();
    for (int j = 0; j < alloc.numBs(); ++j)
    {
        const auto subs = alloc.subchannelsOf(j);
        const double target = (std::exp2(bits / static_cast<double>(subs.size())) - 1.0) * (1.0 + 1e-6);
        double total = 0.0;
        for (int k : subs)
        {
            const auto &seq = alloc.decodeOrder(j, k);
            double tail = 0.0;
            for (auto it = seq.rbegin(); it != seq.rend(); ++it)
            {
                const double p = target * (tail + state.xi(*it, j, k));
                state.p(*it, j, k) = p;
                tail += p;
            }
            total += tail;
        }
        if (!(total < cfg.maxBsPower))
            return false;
    }
    refreshPHat(alloc, state);
    achievedGamma(alloc, state);
    return true;
}

bool warmStartUsable(const NetworkConfig &cfg, const Allocation &alloc)
{
    for (int j = 0; j < alloc.numBs(); ++j)
    {
        double total = 0.0;
        for (int k : alloc.subchannelsOf(j))
            for (int i : alloc.decodeOrder(j, k))
            {
                const double p = alloc.power(i, j, k);
                if (!(p > 0.0) || !std::isfinite(p))
                    return false;
                total += p;
            }
        if (total > cfg.maxBsPower)
            return false;
    }
    return true;
}

} // namespace

double cubValue(double gamma, double pHat, double lambda)
{
    if (!(lambda > 0.0))
        throw std::invalid_argument("cubValue: lambda must be > 0");
    return 0.5 * lambda * gamma * gamma + pHat * pHat / (2.0 * lambda);
}

double updateLambda(double pHat, double gamma)
{
    if (!(pHat > 0.0))
        return kLambdaFloor;
    if (!(gamma > 0.0))
        return kLambdaCeiling;
    return pHat / gamma;
}

const char *statusName(Status s)
{
    switch (s)
    {
    case Status::Converged:
        return "converged";
    case Status::MaxIterations:
        return "max-iterations";
    case Status::Infeasible:
        return "infeasible";
    }
    return "unknown";
}

InterferenceLevels uniformInterference(const NetworkConfig &cfg, double level)
{
    return InterferenceLevels(static_cast<std::size_t>(cfg.numBs) * cfg.numSubchannels, level);
}

InterferenceLevels observedInterference(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc)
{
    InterferenceLevels out = uniformInterference(cfg, 0.0);
    for (int j = 0; j < alloc.numBs(); ++j)
        for (int k : alloc.subchannelsOf(j))
        {
            double worst = 0.0;
            for (int i : alloc.clusterOf(j))
                worst = std::max(worst, model::interCellInterference(gains, alloc, i, j, k));
            out[static_cast<std::size_t>(j) * cfg.numSubchannels + k] = worst;
        }
    return out;
}

CubState::CubState(const NetworkConfig &cfg)
    : p(cfg.numUsers, cfg.numBs, cfg.numSubchannels, 0.0), gamma(p), lambda(cfg.numUsers, cfg.numBs,
                                                                          cfg.numSubchannels, kLambdaFloor),
      xi(p), pHat(p)
{
}

void refreshPHat(const Allocation &alloc, CubState &state)
{
    state.pHat.fill(0.0);
    for (int j = 0; j < alloc.numBs(); ++j)
        for (int k : alloc.subchannelsOf(j))
        {
            const auto &seq = alloc.decodeOrder(j, k);
            double tail = 0.0;
            for (auto it = seq.rbegin(); it != seq.rend(); ++it)
            {
                state.pHat(*it, j, k) = tail;
                tail += state.p(*it, j, k);
            }
        }
}

void updateLambda(const Allocation &alloc, CubState &state)
{
    refreshPHat(alloc, state);
    for (int j = 0; j < alloc.numBs(); ++j)
        for (int k : alloc.subchannelsOf(j))
            for (int i : alloc.decodeOrder(j, k))
                state.lambda(i, j, k) = updateLambda(state.pHat(i, j, k), state.gamma(i, j, k));
}

SubproblemResult solvePowerSubproblem(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc,
                                      const InterferenceLevels &interference, const CubState &start)
{
    SubproblemResult res;
    res.p = Grid3<double>(cfg.numUsers, cfg.numBs, cfg.numSubchannels, 0.0);
    res.gamma = res.p;
    res.feasible = true;
    const auto bopt = powerBarrierOptions();

    for (int j = 0; j < cfg.numBs; ++j)
    {
        const BsProblem bp = buildProblem(cfg, gains, alloc, interference, j, &start.lambda);
        const int S = static_cast<int>(bp.tuples.size());
        if (S == 0)
            continue;
        NomaProgram prog(bp);
        Eigen::VectorXd x0(2 * S);
        for (int s = 0; s < S; ++s)
        {
            const Tuple &t = bp.tuples[s];
            x0(s) = start.p(t.i, j, t.k) / cfg.maxBsPower;
            // Targets pulled inside so the start is interior to the surrogate SINR constraint.
            x0(S + s) = start.gamma(t.i, j, t.k) * (1.0 - 1e-6);
        }
        const auto r = opt::solveBarrier(prog, x0, bopt);
        if (r.status == opt::BarrierStatus::Infeasible ||
            (r.status == opt::BarrierStatus::IterationLimit && r.duals.size() == 0))
        {
            res.feasible = false;
            return res;
        }
        for (int s = 0; s < S; ++s)
        {
            const Tuple &t = bp.tuples[s];
            res.p(t.i, j, t.k) = r.x(s) * cfg.maxBsPower;
            res.gamma(t.i, j, t.k) = r.x(S + s);
        }
        res.kktResidual = std::max(res.kktResidual, r.kktResidual);
    }
    res.utility = utilityOf(cfg, alloc, res.gamma);
    return res;
}

SubproblemResult solveOmaPower(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc,
                               const InterferenceLevels &interference)
{
    SubproblemResult res;
    res.p = Grid3<double>(cfg.numUsers, cfg.numBs, cfg.numSubchannels, 0.0);
    res.gamma = res.p;
    res.feasible = true;
    const auto bopt = powerBarrierOptions();
    double bitsTotal = 0.0;

    for (int j = 0; j < cfg.numBs; ++j)
    {
        const BsProblem bp = buildProblem(cfg, gains, alloc, interference, j, nullptr);
        const int S = static_cast<int>(bp.tuples.size());
        if (S == 0)
            continue;
        OmaProgram prog(bp);
        Eigen::VectorXd x0 = Eigen::VectorXd::Constant(S, 0.8 / S);
        const auto r = opt::solveBarrier(prog, x0, bopt);
        if (r.status == opt::BarrierStatus::Infeasible ||
            (r.status == opt::BarrierStatus::IterationLimit && r.duals.size() == 0))
        {
            res.feasible = false;
            return res;
        }
        for (int s = 0; s < S; ++s)
        {
            const Tuple &t = bp.tuples[s];
            res.p(t.i, j, t.k) = r.x(s) * cfg.maxBsPower;
            res.gamma(t.i, j, t.k) = r.x(s) / t.xi;
            bitsTotal += prog.bits(r.x, s);
        }
        res.kktResidual = std::max(res.kktResidual, r.kktResidual);
    }
    res.utility = bitsTotal * cfg.subchannelBandwidth();
    return res;
}

PowerResult allocatePower(const NetworkConfig &cfg, const GainTable &gains, const Allocation &alloc,
                          const PowerOptions &opt)
{
    const InterferenceLevels interference =
        opt.interference.empty() ? uniformInterference(cfg, cfg.interThreshold) : opt.interference;
    if (interference.size() != static_cast<std::size_t>(cfg.numBs) * cfg.numSubchannels)
        throw std::invalid_argument("allocatePower: interference table has wrong size");

    PowerResult out{alloc, CubState(cfg)};
    CubState &st = out.state;
    fillXi(cfg, gains, alloc, interference, st);

    auto commit = [&]() {
        out.alloc.power.fill(0.0);
        for (int j = 0; j < alloc.numBs(); ++j)
            for (int k : alloc.subchannelsOf(j))
                for (int i : alloc.decodeOrder(j, k))
                    out.alloc.power(i, j, k) = st.p(i, j, k);
    };

    if (opt.access == model::MultipleAccess::Oma)
    {
        if (cfg.maxPowerIters == 0)
        {
            model::equalPowerSplit(cfg, out.alloc, 0.8);
            return out;
        }
        const auto r = solveOmaPower(cfg, gains, alloc, interference);
        st.iterations = 1;
        if (!r.feasible)
        {
            st.status = Status::Infeasible;
            return out;
        }
        st.p = r.p;
        st.gamma = r.gamma;
        st.utilityTrace.push_back(r.utility);
        st.kktTrace.push_back(r.kktResidual);
        commit();
        return out;
    }

    if (opt.warmStart && warmStartUsable(cfg, alloc))
    {
        st.p = alloc.power;
    }
    else
    {
        Allocation eq = alloc;
        model::equalPowerSplit(cfg, eq, 0.8);
        st.p = eq.power;
    }
    refreshPHat(alloc, st);
    achievedGamma(alloc, st);

    bool startFeasible = meetsMinRate(cfg, alloc, st.gamma);
    if (!startFeasible)
    {
        CubState alt = st;
        if (minimumPowerPoint(cfg, alloc, alt))
        {
            st = alt;
            startFeasible = true;
        }
    }
    if (startFeasible)
    {
        st.utilityTrace.push_back(utilityOf(cfg, alloc, st.gamma));
        st.kktTrace.push_back(0.0);
    }
    commit();

    if (cfg.maxPowerIters == 0)
        return out;

    st.status = Status::MaxIterations;
    for (int n = 1; n <= cfg.maxPowerIters; ++n)
    {
        updateLambda(alloc, st);
        const auto r = solvePowerSubproblem(cfg, gains, alloc, interference, st);
        st.iterations = n;
        if (!r.feasible)
        {
            st.status = st.utilityTrace.empty() ? Status::Infeasible : Status::Converged;
            break;
        }
        if (!st.utilityTrace.empty() && r.utility < st.utilityTrace.back())
        {
            st.status = Status::Converged;
            break;
        }
        st.p = r.p;
        st.gamma = r.gamma;
        refreshPHat(alloc, st);
        const double prev = st.utilityTrace.empty() ? std::numeric_limits<double>::quiet_NaN() : st.utilityTrace.back();
        st.utilityTrace.push_back(r.utility);
        st.kktTrace.push_back(r.kktResidual);
        if (std::isfinite(prev) && std::abs(r.utility - prev) < cfg.tolerance * std::abs(r.utility))
        {
            st.status = Status::Converged;
            break;
        }
    }
    if (st.status != Status::Infeasible)
        commit();
    return out;
}

void writeTrace(const CubState &state, const std::filesystem::path &path)
{
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    os.precision(12);
    os << "iter,U,maxKktResidual\n";
    for (std::size_t n = 0; n < state.utilityTrace.size(); ++n)
        os << n << ',' << state.utilityTrace[n] << ',' << state.kktTrace[n] << '\n';
    if (!os)
        throw std::runtime_error("write failed for " + path.string());
}

} // namespace irsnoma::power
