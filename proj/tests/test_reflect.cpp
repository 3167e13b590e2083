// SPDX-License-Identifier: Apache-2.0

#include "irsnoma/channel.hpp"
#include "irsnoma/reflect.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <random>

using namespace irsnoma;
using namespace irsnoma::testing;

namespace
{

reflect::CascadedChannel randomCascade(std::mt19937_64 &rng, int links, int m, double rhoScale = 1.0)
{
    reflect::CascadedChannel cc;
    cc.numElements = m;
    for (int l = 0; l < links; ++l)
    {
        reflect::CascadedLink link;
        link.i = l;
        link.h = randomCn(rng);
        link.rho = randomVec(rng, m, rhoScale);
        cc.links.push_back(link);
    }
    return cc;
}

// Exhaustive grid maximum of the sum gain at M = 2.
double gridMaximum(const reflect::CascadedChannel &cc, int levels)
{
    double best = 0.0;
    for (int a = 0; a < levels; ++a)
        for (int b = 0; b < levels; ++b)
        {
            Eigen::VectorXcd nu(2);
            nu(0) = std::polar(1.0, 2.0 * std::numbers::pi * a / levels);
            nu(1) = std::polar(1.0, 2.0 * std::numbers::pi * b / levels);
            best = std::max(best, reflect::sumGain(cc, nu));
        }
    return best;
}

// One cluster of `users` users on BS 0, subchannel 0, decoded in index order.
Allocation clusterAllocation(int users, int m)
{
    NetworkConfig cfg;
    cfg.numUsers = users;
    cfg.numBs = 1;
    cfg.numSubchannels = 1;
    cfg.numElements = m;
    Allocation a(cfg);
    for (int i = 0; i < users; ++i)
    {
        a.assoc(i, 0) = 1;
        a.decodeOrder(0, 0).push_back(i);
    }
    a.subch(0, 0) = 1;
    a.phases = PhaseConfig(m);
    return a;
}

} // namespace

TEST_SUITE("reflect")
{

TEST_CASE("cascade of all-ones vectors is all ones")
{
    NetworkConfig cfg = smallConfig(2, 1, 1, 5);
    ChannelSet ch(2, 1, 1, 5);
    ch.f(0, 0) = Eigen::VectorXcd::Ones(5);
    ch.g(0, 0) = ch.g(1, 0) = Eigen::VectorXcd::Ones(5);
    const Allocation a = clusterAllocation(2, 5);
    const auto cc = reflect::cascade(ch, a);
    REQUIRE(cc.links.size() == 2);
    for (const auto &l : cc.links)
        CHECK((l.rho - Eigen::VectorXcd::Ones(5)).norm() == 0.0);
}

TEST_CASE("cascaded link gain equals the combined gain")
{
    const NetworkConfig cfg = defaultConfig();
    std::mt19937_64 rng(5);
    const ChannelSet ch = channel::generateChannels(cfg, 17);
    Allocation a = pairedAllocation(cfg);
    for (int t = 0; t < 10; ++t)
    {
        a.phases = randomPhaseConfig(rng, cfg.numElements);
        for (const auto &l : reflect::cascade(ch, a).links)
        {
            const cplx expect = model::combinedGain(ch, a.phases, l.i, l.j, l.k);
            const double got = std::abs(reflect::linkGain(l, a.phases.nu()));
            CHECK(std::abs(got - std::abs(expect)) <= 1e-12 * std::max(std::abs(expect), 1e-300));
        }
    }
}

TEST_CASE("power-dependent cascade terms")
{
    NetworkConfig cfg = smallConfig(2, 1, 1, 3);
    std::mt19937_64 rng(9);
    const ChannelSet ch = randomChannels(cfg, rng, 1e-3);
    const Allocation a = clusterAllocation(2, 3);
    power::CubState st(cfg);
    st.p(0, 0, 0) = 0.05;
    st.p(1, 0, 0) = 0.1;
    st.gamma(0, 0, 0) = 2.0;
    st.gamma(1, 0, 0) = 7.0;
    power::refreshPHat(a, st);
    const auto lv = power::uniformInterference(cfg, 3e-11);
    const auto cc = reflect::cascade(cfg, ch, a, st, lv);
    REQUIRE(cc.links.size() == 2);
    for (const auto &l : cc.links)
    {
        const double p = st.p(l.i, 0, 0);
        const double g = st.gamma(l.i, 0, 0);
        CHECK(l.phi == doctest::Approx(g * st.pHat(l.i, 0, 0) / p).epsilon(1e-14));
        CHECK(l.xiHat == doctest::Approx(g * (3e-11 + cfg.noisePower) / p).epsilon(1e-14));
    }
    // User 1 is decoded last and sees no intra-cell interference.
    CHECK(cc.links[1].phi == 0.0);

    st.p(0, 0, 0) = 0.0;
    CHECK_THROWS_AS(reflect::cascade(cfg, ch, a, st, lv), std::invalid_argument);
}

TEST_CASE("Taylor lower bound")
{
    CHECK(reflect::taylorLowerBound(0.3, -0.7, 0.3, -0.7) == doctest::Approx(0.58).epsilon(1e-15));
    CHECK(reflect::taylorLowerBound(0.0, 0.0, 1.5, 2.0) == 0.0);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int t = 0; t < 10000; ++t)
    {
        const double xt = u(rng), yt = u(rng), x = u(rng), y = u(rng);
        CHECK(reflect::taylorLowerBound(xt, yt, x, y) <= x * x + y * y + 1e-12);
    }
}

TEST_CASE("Taylor point is synchronized with the phases")
{
    std::mt19937_64 rng(15);
    const auto cc = randomCascade(rng, 4, 6);
    const PhaseConfig ph = randomPhaseConfig(rng, 6);
    const auto tp = reflect::taylorPoint(cc, ph);
    for (std::size_t l = 0; l < cc.links.size(); ++l)
    {
        CHECK(tp.x[l] == tp.xTilde[l]);
        CHECK(tp.y[l] == tp.yTilde[l]);
        const double g = std::norm(reflect::linkGain(cc.links[l], ph.nu()));
        CHECK(std::abs(tp.x[l] * tp.x[l] + tp.y[l] * tp.y[l] - g) <= 1e-12 * g);
    }
}

TEST_CASE("feasibility design on satisfied and unreachable targets")
{
    std::mt19937_64 rng(21);
    const Allocation one = clusterAllocation(1, 4);
    auto cc = randomCascade(rng, 1, 4, 0.1);
    cc.links[0].h = 1.0;
    const PhaseConfig ph(4);
    const double g = std::norm(reflect::linkGain(cc.links[0], ph.nu()));

    cc.links[0].phi = 0.0;
    cc.links[0].xiHat = 0.5 * g;
    const auto ok = reflect::feasibilityDesign(cc, ph, one);
    CHECK(ok.status == reflect::FeasibilityStatus::Feasible);
    CHECK(ok.slack >= 0.0);

    cc.links[0].xiHat = 1e6 * std::norm(cc.links[0].h);
    const auto bad = reflect::feasibilityDesign(cc, ph, one);
    CHECK(bad.status == reflect::FeasibilityStatus::NoImprovement);
    CHECK(bad.phases.theta() == ph.theta());
}

TEST_CASE("feasibility design never lowers the minimum slack")
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Allocation a = clusterAllocation(2, 4);
    for (int t = 0; t < 100; ++t)
    {
        auto cc = randomCascade(rng, 2, 4, 0.5);
        const PhaseConfig ph = randomPhaseConfig(rng, 4);
        for (auto &l : cc.links)
        {
            const double g = std::norm(reflect::linkGain(l, ph.nu()));
            l.phi = 0.3 * u(rng);
            l.xiHat = (0.2 + 1.2 * u(rng)) * g;
        }
        // Oracle: unnormalized minimum slack of the order and SINR constraints.
        auto trueSlack = [&](const Eigen::VectorXcd &nu) {
            const double g0 = std::norm(reflect::linkGain(cc.links[0], nu));
            const double g1 = std::norm(reflect::linkGain(cc.links[1], nu));
            double s = g1 - g0;
            s = std::min(s, (1.0 - cc.links[0].phi) * g0 - cc.links[0].xiHat);
            s = std::min(s, (1.0 - cc.links[1].phi) * g1 - cc.links[1].xiHat);
            return s;
        };
        const auto r = reflect::feasibilityDesign(cc, ph, a);
        CHECK(r.slack >= r.initialSlack - 1e-9);
        const double before = trueSlack(ph.nu());
        const double after = trueSlack(r.phases.nu());
        CHECK(after >= before - 1e-9 * (1.0 + std::abs(before)));
        if (r.status == reflect::FeasibilityStatus::Feasible)
            CHECK(after >= -1e-12);
        else
            CHECK(r.phases.theta() == ph.theta());
        for (int m = 0; m < 4; ++m)
            CHECK(std::abs(std::abs(r.phases.nu()(m)) - 1.0) < 1e-12);
    }
}

TEST_CASE("block coordinate ascent aligns a single element")
{
    reflect::CascadedChannel cc;
    cc.numElements = 1;
    reflect::CascadedLink l;
    l.h = 1.0;
    l.rho = Eigen::VectorXcd::Ones(1);
    cc.links.push_back(l);
    Eigen::VectorXd th(1);
    th(0) = 2.0;
    const PhaseConfig out = reflect::sumGainBcd(cc, PhaseConfig::fromTheta(th));
    const double theta = std::remainder(out.theta()(0), 2.0 * std::numbers::pi);
    CHECK(std::abs(theta) < 1e-12);
    CHECK(reflect::sumGain(cc, out.nu()) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("block coordinate ascent without reflected paths keeps the direct gain")
{
    std::mt19937_64 rng(25);
    auto cc = randomCascade(rng, 3, 4, 0.0);
    double direct = 0.0;
    for (auto &l : cc.links)
        direct += std::norm(l.h);
    const PhaseConfig out = reflect::sumGainBcd(cc, randomPhaseConfig(rng, 4));
    CHECK(reflect::sumGain(cc, out.nu()) == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("block coordinate ascent matches the phase-grid optimum at M = 2")
{
    std::mt19937_64 rng(27);
    for (int t = 0; t < 20; ++t)
    {
        const auto cc = randomCascade(rng, 3, 2);
        const PhaseConfig out = reflect::sumGainBcd(cc, PhaseConfig(2));
        const double grid = gridMaximum(cc, 64);
        CHECK(reflect::sumGain(cc, out.nu()) >= grid * (1.0 - 1e-3));
    }
}

TEST_CASE("block coordinate ascent is monotone from any start")
{
    std::mt19937_64 rng(29);
    for (int t = 0; t < 20; ++t)
    {
        const auto cc = randomCascade(rng, 6, 16);
        const PhaseConfig init = randomPhaseConfig(rng, 16);
        const PhaseConfig out = reflect::sumGainBcd(cc, init);
        CHECK(reflect::sumGain(cc, out.nu()) >= reflect::sumGain(cc, init.nu()) * (1.0 - 1e-12));
    }
}

TEST_CASE("lifting identity")
{
    std::mt19937_64 rng(31);
    SUBCASE("zero reflected path lifts to a zero matrix")
    {
        auto cc = randomCascade(rng, 1, 3, 0.0);
        const auto lp = reflect::liftProblem(cc);
        CHECK(lp.C[0].norm() == 0.0);
        CHECK(lp.directGain == doctest::Approx(std::norm(cc.links[0].h)));
    }
    SUBCASE("real direct link against the expanded form")
    {
        for (int t = 0; t < 200; ++t)
        {
            auto cc = randomCascade(rng, 1, 5);
            cc.links[0].h = cc.links[0].h.real();
            const Eigen::VectorXcd nu = randomPhaseConfig(rng, 5).nu();
            const auto lp = reflect::liftProblem(cc);
            const double h = cc.links[0].h.real();
            const cplx ups = nu.dot(cc.links[0].rho);
            const double expanded = h * h + 2.0 * h * ups.real() + std::norm(ups);
            CHECK(relErr(reflect::liftedObjective(lp, reflect::liftPhases(nu)), expanded) < 1e-12);
        }
    }
    SUBCASE("complex direct link against the combined gain")
    {
        for (int t = 0; t < 200; ++t)
        {
            const auto cc = randomCascade(rng, 1, 5);
            const Eigen::VectorXcd nu = randomPhaseConfig(rng, 5).nu();
            const auto lp = reflect::liftProblem(cc);
            Eigen::VectorXcd bar(6);
            bar.head(5) = nu;
            bar(5) = 1.0;
            const double quad = (bar.adjoint() * lp.C[0] * bar)(0, 0).real() + std::norm(cc.links[0].h);
            const double direct = std::norm(cc.links[0].h + nu.dot(cc.links[0].rho));
            CHECK(std::abs(quad - direct) <= 1e-12 * direct);
        }
    }
}

TEST_CASE("semidefinite relaxation at M = 1 is exact")
{
    std::mt19937_64 rng(33);
    for (int t = 0; t < 10; ++t)
    {
        const auto cc = randomCascade(rng, 3, 1);
        double grid = 0.0;
        for (int a = 0; a < 10000; ++a)
        {
            Eigen::VectorXcd nu(1);
            nu(0) = std::polar(1.0, 2.0 * std::numbers::pi * a / 10000.0);
            grid = std::max(grid, reflect::sumGain(cc, nu));
        }
        const auto r = reflect::sdrSolve(reflect::liftProblem(cc));
        REQUIRE(r.status == reflect::SdrStatus::Solved);
        CHECK(r.upperBound >= grid * (1.0 - 1e-9));
        CHECK(relTo(r.upperBound, grid) < 1e-6);
    }
}

TEST_CASE("semidefinite relaxation output is a feasible upper bound")
{
    std::mt19937_64 rng(35);
    for (int t = 0; t < 10; ++t)
    {
        const auto cc = randomCascade(rng, 3, 2);
        const auto lp = reflect::liftProblem(cc);
        const auto r = reflect::sdrSolve(lp);
        REQUIRE(r.status == reflect::SdrStatus::Solved);
        for (int d = 0; d < r.V.rows(); ++d)
            CHECK(std::abs(r.V(d, d) - 1.0) < 1e-9);
        CHECK((r.V - r.V.adjoint()).norm() < 1e-9);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(r.V);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-9);
        CHECK(r.upperBound >= gridMaximum(cc, 64) * (1.0 - 1e-12));
        CHECK(r.upperBound >= r.relaxedValue - 1e-9 * r.upperBound);
    }
}

TEST_CASE("semidefinite relaxation is tight on a single link")
{
    std::mt19937_64 rng(37);
    for (int t = 0; t < 5; ++t)
    {
        const auto cc = randomCascade(rng, 1, 6);
        const double closed = std::pow(std::abs(cc.links[0].h) + cc.links[0].rho.cwiseAbs().sum(), 2);
        const auto r = reflect::sdrSolve(reflect::liftProblem(cc));
        reflect::BcdOptions tight;
        tight.tolerance = 1e-14;
        tight.maxSweeps = 10000;
        const PhaseConfig bcd = reflect::sumGainBcd(cc, PhaseConfig(6), tight);
        CHECK(relTo(r.upperBound, closed) < 1e-6);
        CHECK(relTo(r.relaxedValue, reflect::sumGain(cc, bcd.nu())) < 1e-6);
    }
}

TEST_CASE("size cap directs callers to block coordinate ascent")
{
    std::mt19937_64 rng(39);
    const auto cc = randomCascade(rng, 2, 40);
    CHECK(reflect::sdrSolve(reflect::liftProblem(cc)).status == reflect::SdrStatus::SizeCapExceeded);
    reflect::PhaseDesignOptions opt;
    opt.strategy = reflect::PhaseStrategy::Sdr;
    const PhaseConfig out = reflect::designPhases(cc, PhaseConfig(40), opt);
    CHECK(out.size() == 40);
}

TEST_CASE("Gaussian randomization")
{
    std::mt19937_64 rng(41);
    SUBCASE("rank-one input is recovered exactly")
    {
        const auto cc = randomCascade(rng, 3, 4);
        const auto lp = reflect::liftProblem(cc);
        const Eigen::VectorXcd nu = randomPhaseConfig(rng, 4).nu();
        const Eigen::MatrixXcd V = reflect::liftPhases(nu);
        const PhaseConfig out = reflect::gaussianRandomization(V, lp, 20, 1);
        CHECK(relTo(reflect::sumGain(cc, out.nu()), reflect::liftedObjective(lp, V)) < 1e-9);
    }
    SUBCASE("candidates are unit modulus and below the bound")
    {
        double ratio = 0.0;
        const int seeds = 20;
        for (int t = 0; t < seeds; ++t)
        {
            const auto cc = randomCascade(rng, 3, 8);
            const auto lp = reflect::liftProblem(cc);
            const auto r = reflect::sdrSolve(lp);
            const PhaseConfig out = reflect::gaussianRandomization(r.V, lp, 200, t);
            for (int m = 0; m < 8; ++m)
                CHECK(std::abs(std::abs(out.nu()(m)) - 1.0) < 1e-12);
            const double v = reflect::sumGain(cc, out.nu());
            CHECK(v <= r.upperBound * (1.0 + 1e-9));
            ratio += v / r.upperBound / seeds;
        }
        CHECK(ratio >= 0.8);
    }
}

TEST_CASE("decoding order sorts by ascending gain")
{
    const Allocation a = clusterAllocation(2, 1);
    GainTable g(2, 1, 1, 0.0);
    g(0, 0, 0) = 0.1;
    g(1, 0, 0) = 0.5;
    CHECK(reflect::decodingOrder(g, a)[0] == std::vector<int>{0, 1});
    g(0, 0, 0) = 0.9;
    CHECK(reflect::decodingOrder(g, a)[0] == std::vector<int>{1, 0});
    g(0, 0, 0) = 0.5;
    CHECK(reflect::decodingOrder(g, a)[0] == std::vector<int>{0, 1});
}

TEST_CASE("decoding order matches a rank-counting oracle")
{
    NetworkConfig cfg = smallConfig(8, 2, 2, 1);
    cfg.maxClusterSize = 4;
    std::mt19937_64 rng(43);
    std::uniform_int_distribution<int> level(0, 5);
    Allocation a(cfg);
    for (int i = 0; i < 8; ++i)
        a.assoc(i, i % 2) = 1;
    a.subch.setOnes();
    for (int t = 0; t < 50; ++t)
    {
        GainTable g(8, 2, 2, 0.0);
        for (double &v : g.flat())
            v = level(rng);  // coarse levels force ties
        const auto order = reflect::decodingOrder(g, a);
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
            {
                const auto &seq = order[j * 2 + k];
                const auto users = a.clusterOf(j);
                REQUIRE(seq.size() == users.size());
                for (int i : users)
                {
                    std::size_t rank = 0;
                    for (int o : users)
                        if (g(o, j, k) < g(i, j, k) || (g(o, j, k) == g(i, j, k) && o < i))
                            ++rank;
                    CHECK(seq[rank] == i);
                }
            }
    }
}

} // TEST_SUITE
