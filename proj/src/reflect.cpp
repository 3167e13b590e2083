// SPDX-License-Identifier: Apache-2.0

#include "irsnoma/reflect.hpp"

#include "irsnoma/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace irsnoma::reflect
{

CascadedChannel cascade(const ChannelSet &ch, const Allocation &alloc)
{
    CascadedChannel cc;
    cc.numElements = ch.numElements;
    for (int j = 0; j < alloc.numBs(); ++j)
        for (int k : alloc.subchannelsOf(j))
            for (int i : alloc.clusterOf(j))
            {
                CascadedLink l;
                l.i = i;
                l.j = j;
                l.k = k;
                l.h = ch.direct(i, j, k);
                l.rho = ch.g(i, k).conjugate().cwiseProduct(ch.f(j, k));
                cc.links.push_back(std::move(l));
            }
    return cc;
}

CascadedChannel cascade(const NetworkConfig &cfg, const ChannelSet &ch, const Allocation &alloc,
                        const power::CubState &state, const power::InterferenceLevels &interference)
{
    CascadedChannel cc = cascade(ch, alloc);
    for (auto &l : cc.links)
    {
        const double p = state.p(l.i, l.j, l.k);
        if (!(p > 0.0))
            throw std::invalid_argument("cascade: served link without power");
        const double gam = state.gamma(l.i, l.j, l.k);
        const double level = interference[static_cast<std::size_t>(l.j) * cfg.numSubchannels + l.k];
        l.phi = gam * state.pHat(l.i, l.j, l.k) / p;
        l.xiHat = gam * (level + cfg.noisePower) / p;
    }
    return cc;
}

cplx linkGain(const CascadedLink &link, const Eigen::VectorXcd &nu)
{
    return link.h + nu.dot(link.rho);  // dot conjugates its first argument
}

double sumGain(const CascadedChannel &cc, const Eigen::VectorXcd &nu)
{
    double s = 0.0;
    for (const auto &l : cc.links)
        s += std::norm(linkGain(l, nu));
    return s;
}

TaylorPoint taylorPoint(const CascadedChannel &cc, const PhaseConfig &phases)
{
    TaylorPoint tp;
    for (const auto &l : cc.links)
    {
        const cplx H = linkGain(l, phases.nu());
        tp.x.push_back(H.real());
        tp.y.push_back(H.imag());
    }
    tp.xTilde = tp.x;
    tp.yTilde = tp.y;
    return tp;
}

double taylorLowerBound(double xt, double yt, double x, double y)
{
    return xt * xt + yt * yt + 2.0 * xt * (x - xt) + 2.0 * yt * (y - yt);
}

namespace
{

// Real parametrization z = [a_0, b_0, a_1, b_1, ...] with nu = a + j b, so that
// Re H = Re h + ux . z and Im H = Im h + uy . z.
struct RealLink
{
    double xh = 0.0;
    double yh = 0.0;
    Eigen::VectorXd ux;
    Eigen::VectorXd uy;
};

RealLink realLink(const CascadedLink &l)
{
    const int M = static_cast<int>(l.rho.size());
    RealLink r;
    r.xh = l.h.real();
    r.yh = l.h.imag();
    r.ux.resize(2 * M);
    r.uy.resize(2 * M);
    for (int m = 0; m < M; ++m)
    {
        r.ux(2 * m) = l.rho(m).real();
        r.ux(2 * m + 1) = l.rho(m).imag();
        r.uy(2 * m) = l.rho(m).imag();
        r.uy(2 * m + 1) = -l.rho(m).real();
    }
    return r;
}

struct Pair
{
    int weak = 0;    // link decoded earlier
    int strong = 0;  // link decoded later
};

std::vector<Pair> orderPairs(const CascadedChannel &cc, const Allocation &alloc)
{
    std::map<std::tuple<int, int, int>, int> index;
    for (int n = 0; n < static_cast<int>(cc.links.size()); ++n)
        index[{cc.links[n].i, cc.links[n].j, cc.links[n].k}] = n;
    std::vector<Pair> pairs;
    for (int j = 0; j < alloc.numBs(); ++j)
        for (int k = 0; k < alloc.numSubchannels(); ++k)
        {
            const auto &seq = alloc.decodeOrder(j, k);
            for (std::size_t a = 0; a < seq.size(); ++a)
                for (std::size_t b = a + 1; b < seq.size(); ++b)
                {
                    auto wa = index.find({seq[a], j, k});
                    auto wb = index.find({seq[b], j, k});
                    if (wa != index.end() && wb != index.end())
                        pairs.push_back({wa->second, wb->second});
                }
        }
    return pairs;
}

// Minimum over constraints of the true slack divided by scale.
double slackAt(const CascadedChannel &cc, const std::vector<Pair> &pairs, const Eigen::VectorXcd &nu,
               double scale)
{
    std::vector<double> g(cc.links.size());
    for (std::size_t n = 0; n < cc.links.size(); ++n)
        g[n] = std::norm(linkGain(cc.links[n], nu));
    double s = std::numeric_limits<double>::infinity();
    for (const auto &p : pairs)
        s = std::min(s, (g[p.strong] - g[p.weak]) / scale);
    for (std::size_t n = 0; n < cc.links.size(); ++n)
        s = std::min(s, ((1.0 - cc.links[n].phi) * g[n] - cc.links[n].xiHat) / scale);
    return s;
}

// One convex restriction around an anchor, in w = [z; t]:
//   maximize t
//   s.t. t + (|H_weak(z)|^2 - tau_strong(z)) / s <= 0   for each order pair
//        t + (xiHat - (1 - phi) tau(z)) / s <= 0         for each link
//        a_m^2 + b_m^2 <= 1,  t <= tUpper
// The barrier Hessian is block-diagonal (2x2 per element, scalar for t) plus a
// low-rank term, so each Newton system is solved through the Woodbury identity.
class SlackProgram
{
  public:
    SlackProgram(const CascadedChannel &cc, const std::vector<Pair> &pairs, const std::vector<RealLink> &rl,
                 const Eigen::VectorXcd &anchor, double scale, double tUpper)
        : M_(cc.numElements), n_(2 * cc.numElements + 1), rl_(rl), tUpper_(tUpper)
    {
        const int L = static_cast<int>(cc.links.size());
        // tau_l(z) = tauConst_l + tauGrad_l . z
        std::vector<double> tauConst(L);
        std::vector<Eigen::VectorXd> tauGrad(L);
        for (int l = 0; l < L; ++l)
        {
            const cplx Ht = linkGain(cc.links[l], anchor);
            const double xt = Ht.real();
            const double yt = Ht.imag();
            tauConst[l] = 2.0 * xt * rl[l].xh + 2.0 * yt * rl[l].yh - (xt * xt + yt * yt);
            tauGrad[l] = 2.0 * xt * rl[l].ux + 2.0 * yt * rl[l].uy;
        }
        for (const auto &p : pairs)
        {
            General g;
            g.quadLink = p.weak;
            g.lin = -tauGrad[p.strong] / scale;
            g.cst = -tauConst[p.strong] / scale;
            g.quadScale = 1.0 / scale;
            gen_.push_back(std::move(g));
        }
        for (int l = 0; l < L; ++l)
        {
            const double w = 1.0 - cc.links[l].phi;
            General g;
            g.lin = -w * tauGrad[l] / scale;
            g.cst = (cc.links[l].xiHat - w * tauConst[l]) / scale;
            gen_.push_back(std::move(g));
        }
        numQuad_ = static_cast<int>(pairs.size());
    }

    int numVariables() const { return n_; }
    int numConstraints() const { return static_cast<int>(gen_.size()) + M_ + 1; }

    // Values of all constraints; false if any is >= 0.
    bool values(const Eigen::VectorXd &w, Eigen::VectorXd &gv, Eigen::VectorXd &box, double &top) const
    {
        const auto z = w.head(2 * M_);
        const double t = w(2 * M_);
        gv.resize(static_cast<Eigen::Index>(gen_.size()));
        bool ok = true;
        for (std::size_t c = 0; c < gen_.size(); ++c)
        {
            const General &g = gen_[c];
            double v = t + g.lin.dot(z) + g.cst;
            if (g.quadLink >= 0)
            {
                const RealLink &r = rl_[g.quadLink];
                const double x = r.xh + r.ux.dot(z);
                const double y = r.yh + r.uy.dot(z);
                v += g.quadScale * (x * x + y * y);
            }
            gv(static_cast<Eigen::Index>(c)) = v;
            ok = ok && v < 0.0;
        }
        box.resize(M_);
        for (int m = 0; m < M_; ++m)
        {
            box(m) = z(2 * m) * z(2 * m) + z(2 * m + 1) * z(2 * m + 1) - 1.0;
            ok = ok && box(m) < 0.0;
        }
        top = t - tUpper_;
        return ok && top < 0.0;
    }

    double barrier(const Eigen::VectorXd &w, double tb) const
    {
        Eigen::VectorXd gv, box;
        double top;
        if (!values(w, gv, box, top))
            return std::numeric_limits<double>::infinity();
        return -tb * w(2 * M_) - (-gv.array()).log().sum() - (-box.array()).log().sum() - std::log(-top);
    }

    // Newton step for the barrier at parameter tb; returns the decrement.
    double newton(const Eigen::VectorXd &w, double tb, Eigen::VectorXd &dx) const
    {
        Eigen::VectorXd gv, box;
        double top;
        values(w, gv, box, top);
        const auto z = w.head(2 * M_);
        const int G = static_cast<int>(gen_.size());
        const int r = G + 2 * numQuad_;

        Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_);
        grad(2 * M_) = -tb;
        Eigen::MatrixXd U(n_, r);
        int col = 0;
        for (int c = 0; c < G; ++c)
        {
            const General &g = gen_[c];
            const double d = 1.0 / (-gv(c));
            Eigen::VectorXd gc = Eigen::VectorXd::Zero(n_);
            gc.head(2 * M_) = g.lin;
            gc(2 * M_) = 1.0;
            if (g.quadLink >= 0)
            {
                const RealLink &rl = rl_[g.quadLink];
                const double x = rl.xh + rl.ux.dot(z);
                const double y = rl.yh + rl.uy.dot(z);
                gc.head(2 * M_) += 2.0 * g.quadScale * (x * rl.ux + y * rl.uy);
                const double s = std::sqrt(2.0 * g.quadScale * d);
                U.col(G + 2 * col).setZero();
                U.col(G + 2 * col).head(2 * M_) = s * rl.ux;
                U.col(G + 2 * col + 1).setZero();
                U.col(G + 2 * col + 1).head(2 * M_) = s * rl.uy;
                ++col;
            }
            grad += d * gc;
            U.col(c) = d * gc;
        }

        // Block-diagonal part and its inverse.
        std::vector<Eigen::Matrix2d> Dinv(M_);
        for (int m = 0; m < M_; ++m)
        {
            const double d = 1.0 / (-box(m));
            const Eigen::Vector2d v(z(2 * m), z(2 * m + 1));
            grad.segment<2>(2 * m) += d * 2.0 * v;
            const Eigen::Matrix2d B = 4.0 * d * d * v * v.transpose() + 2.0 * d * Eigen::Matrix2d::Identity();
            Dinv[m] = B.inverse();
        }
        const double dt = 1.0 / (-top);
        grad(2 * M_) += dt;
        const double DinvT = 1.0 / (dt * dt);

        auto applyDinv = [&](const Eigen::VectorXd &v) {
            Eigen::VectorXd out(n_);
            for (int m = 0; m < M_; ++m)
                out.segment<2>(2 * m) = Dinv[m] * v.segment<2>(2 * m);
            out(2 * M_) = DinvT * v(2 * M_);
            return out;
        };

        Eigen::MatrixXd DU(n_, r);
        for (int c = 0; c < r; ++c)
            DU.col(c) = applyDinv(U.col(c));
        Eigen::MatrixXd cap = Eigen::MatrixXd::Identity(r, r) + U.transpose() * DU;
        const Eigen::VectorXd Dg = applyDinv(grad);
        Eigen::LLT<Eigen::MatrixXd> llt(cap);
        dx = -(Dg - DU * llt.solve(U.transpose() * Dg));
        return -grad.dot(dx);
    }

  private:
    struct General
    {
        int quadLink = -1;
        double quadScale = 0.0;
        Eigen::VectorXd lin;
        double cst = 0.0;
    };

    int M_;
    int n_;
    const std::vector<RealLink> &rl_;
    double tUpper_;
    std::vector<General> gen_;
    int numQuad_ = 0;
};

Eigen::VectorXcd solveSlack(const SlackProgram &prog, const Eigen::VectorXcd &anchor, int M)
{
    Eigen::VectorXd w(2 * M + 1);
    for (int m = 0; m < M; ++m)
    {
        w(2 * m) = 0.98 * anchor(m).real();
        w(2 * m + 1) = 0.98 * anchor(m).imag();
    }
    // Choose t strictly inside every constraint.
    w(2 * M) = 0.0;
    Eigen::VectorXd gv, box;
    double top;
    prog.values(w, gv, box, top);
    const double worst = gv.size() ? gv.maxCoeff() : -1.0;
    w(2 * M) = std::min(-worst - 1.0, -top - 1.0);  // top = -tUpper at t = 0

    const double m = prog.numConstraints();
    double tb = 1.0;
    int budget = 600;
    Eigen::VectorXd dx;
    while (budget > 0)
    {
        double best = std::numeric_limits<double>::infinity();
        int stalled = 0;
        for (int it = 0; it < 100 && budget > 0; ++it, --budget)
        {
            const double dec = prog.newton(w, tb, dx);
            if (!std::isfinite(dec) || dec <= 1e-14)
                break;
            if (dec < 1e-6 && dec > 0.5 * best && ++stalled >= 3)
                break;
            best = std::min(best, dec);
            const double phi = prog.barrier(w, tb);
            double step = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 60; ++ls)
            {
                const Eigen::VectorXd wn = w + step * dx;
                const double pn = prog.barrier(wn, tb);
                if (std::isfinite(pn) && (dec < 0.1 || pn <= phi - 0.01 * step * dec))
                {
                    w = wn;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!moved)
                break;
        }
        if (m / tb < 1e-7)
            break;
        tb *= 20.0;
    }
    Eigen::VectorXcd nu(M);
    for (int q = 0; q < M; ++q)
        nu(q) = cplx(w(2 * q), w(2 * q + 1));
    return nu;
}

Eigen::VectorXcd projectUnitModulus(const Eigen::VectorXcd &nu, const Eigen::VectorXcd &fallback)
{
    Eigen::VectorXcd out(nu.size());
    for (Eigen::Index m = 0; m < nu.size(); ++m)
    {
        const double a = std::abs(nu(m));
        out(m) = a > 1e-12 ? nu(m) / a : fallback(m);
    }
    return out;
}

double slackScale(const CascadedChannel &cc, const Eigen::VectorXcd &nu)
{
    double s = 0.0;
    for (const auto &l : cc.links)
        s = std::max(s, std::norm(linkGain(l, nu)));
    return s > 0.0 ? s : 1.0;
}

} // namespace

double minimumSlack(const CascadedChannel &cc, const Allocation &alloc, const Eigen::VectorXcd &nu)
{
    return slackAt(cc, orderPairs(cc, alloc), nu, slackScale(cc, nu));
}

FeasibilityResult feasibilityDesign(const CascadedChannel &cc, const PhaseConfig &phases, const Allocation &alloc,
                                    const FeasibilityOptions &opt)
{
    FeasibilityResult res;
    res.phases = phases;
    const auto pairs = orderPairs(cc, alloc);
    if (cc.links.empty())
    {
        res.status = FeasibilityStatus::Feasible;
        return res;
    }
    const int M = cc.numElements;
    const double scale = slackScale(cc, phases.nu());
    double boundR = 0.0;
    for (const auto &l : cc.links)
        boundR = std::max(boundR, std::abs(l.h) + l.rho.cwiseAbs().sum());
    const double tUpper = 2.0 * boundR * boundR / scale + 1.0;

    std::vector<RealLink> rl;
    rl.reserve(cc.links.size());
    for (const auto &l : cc.links)
        rl.push_back(realLink(l));

    res.initialSlack = slackAt(cc, pairs, phases.nu(), scale);
    res.slack = res.initialSlack;
    Eigen::VectorXcd best = phases.nu();
    Eigen::VectorXcd anchor = phases.nu();
    double previous = res.initialSlack;

    if (M > 0)
    {
        for (int n = 1; n <= opt.maxIterations; ++n)
        {
            res.iterations = n;
            SlackProgram prog(cc, pairs, rl, anchor, scale, tUpper);
            const Eigen::VectorXcd relaxed = solveSlack(prog, anchor, M);
            const Eigen::VectorXcd projected = projectUnitModulus(relaxed, anchor);
            const double s = slackAt(cc, pairs, projected, scale);
            if (s > res.slack)
            {
                res.slack = s;
                best = projected;
            }
            anchor = projected;
            if (std::abs(s - previous) < opt.tolerance)
                break;
            previous = s;
        }
    }

    if (res.slack >= 0.0)
    {
        res.status = FeasibilityStatus::Feasible;
        if (res.slack > res.initialSlack)
            res.phases = PhaseConfig::fromNu(best);
    }
    else
    {
        res.status = FeasibilityStatus::NoImprovement;
        res.slack = std::max(res.slack, res.initialSlack);
    }
    return res;
}

PhaseConfig sumGainBcd(const CascadedChannel &cc, const PhaseConfig &init, const BcdOptions &opt)
{
    const int M = cc.numElements;
    const int L = static_cast<int>(cc.links.size());
    Eigen::VectorXcd nu = init.size() == M ? init.nu() : Eigen::VectorXcd::Ones(M);
    if (M == 0 || L == 0)
        return PhaseConfig::fromNu(nu);

    std::vector<cplx> H(L);
    for (int l = 0; l < L; ++l)
        H[l] = linkGain(cc.links[l], nu);
    auto objective = [&]() {
        double s = 0.0;
        for (const cplx &v : H)
            s += std::norm(v);
        return s;
    };

    double obj = objective();
    for (int sweep = 0; sweep < opt.maxSweeps; ++sweep)
    {
        for (int m = 0; m < M; ++m)
        {
            cplx A{};
            for (int l = 0; l < L; ++l)
            {
                const cplx rho = cc.links[l].rho(m);
                const cplx c = H[l] - std::conj(nu(m)) * rho;
                A += rho * std::conj(c);
            }
            const double a = std::abs(A);
            if (!(a > 0.0))
                continue;
            const cplx next = A / a;
            for (int l = 0; l < L; ++l)
                H[l] += std::conj(next - nu(m)) * cc.links[l].rho(m);
            nu(m) = next;
        }
        const double updated = objective();
        const bool done = updated - obj <= opt.tolerance * std::abs(updated);
        obj = updated;
        if (done)
            break;
    }
    return PhaseConfig::fromNu(nu);
}

LiftedProblem liftProblem(const CascadedChannel &cc)
{
    const int M = cc.numElements;
    LiftedProblem lp;
    lp.Csum = Eigen::MatrixXcd::Zero(M + 1, M + 1);
    for (const auto &l : cc.links)
    {
        Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(M + 1, M + 1);
        C.topLeftCorner(M, M) = l.rho * l.rho.adjoint();
        C.topRightCorner(M, 1) = std::conj(l.h) * l.rho;
        C.bottomLeftCorner(1, M) = l.h * l.rho.adjoint();
        lp.Csum += C;
        lp.C.push_back(std::move(C));
        lp.directGain += std::norm(l.h);
    }
    return lp;
}

Eigen::MatrixXcd liftPhases(const Eigen::VectorXcd &nu)
{
    Eigen::VectorXcd bar(nu.size() + 1);
    bar.head(nu.size()) = nu;
    bar(nu.size()) = 1.0;
    return bar * bar.adjoint();
}

double liftedObjective(const LiftedProblem &lp, const Eigen::MatrixXcd &V)
{
    return (lp.Csum * V).trace().real() + lp.directGain;
}

PhaseConfig designPhases(const CascadedChannel &cc, const PhaseConfig &init, const PhaseDesignOptions &opt)
{
    if (opt.strategy == PhaseStrategy::Sdr && cc.numElements + 1 <= opt.sdpSizeCap && !cc.links.empty())
    {
        const LiftedProblem lp = liftProblem(cc);
        const SdrResult r = sdrSolve(lp, opt.sdpSizeCap);
        if (r.status != SdrStatus::SizeCapExceeded)
            return gaussianRandomization(r.V, lp, opt.grSamples, opt.seed);
    }
    return sumGainBcd(cc, init, opt.bcd);
}

std::vector<std::vector<int>> decodingOrder(const GainTable &gains, const Allocation &alloc)
{
    std::vector<std::vector<int>> out(static_cast<std::size_t>(alloc.numBs()) * alloc.numSubchannels());
    for (int j = 0; j < alloc.numBs(); ++j)
    {
        const auto users = alloc.clusterOf(j);
        for (int k : alloc.subchannelsOf(j))
        {
            auto seq = users;
            std::stable_sort(seq.begin(), seq.end(),
                             [&](int a, int b) { return gains(a, j, k) < gains(b, j, k); });
            out[static_cast<std::size_t>(j) * alloc.numSubchannels() + k] = std::move(seq);
        }
    }
    return out;
}

std::vector<std::vector<int>> decodingOrder(const ChannelSet &ch, const PhaseConfig &phases, const Allocation &alloc)
{
    return decodingOrder(model::gainTable(ch, phases), alloc);
}

} // namespace irsnoma::reflect
