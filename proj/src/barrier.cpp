// SPDX-License-Identifier: Apache-2.0

#include "irsnoma/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace irsnoma::opt
{

namespace
{

// minimize s  s.t.  f_c(x) - s <= 0,  -1 - s <= 0
class PhaseOne final : public ConvexProgram
{
  public:
    explicit PhaseOne(const ConvexProgram &base) : base_(base), n_(base.numVariables()), m_(base.numConstraints()) {}

    int numVariables() const override { return n_ + 1; }
    int numConstraints() const override { return m_ + 1; }

    double objective(const Eigen::VectorXd &z) const override { return z(n_); }
    void objectiveDerivatives(const Eigen::VectorXd &, Eigen::VectorXd &grad, Eigen::MatrixXd &hess) const override
    {
        grad.setZero(n_ + 1);
        grad(n_) = 1.0;
        hess.setZero(n_ + 1, n_ + 1);
    }

    void constraintValues(const Eigen::VectorXd &z, Eigen::VectorXd &values) const override
    {
        Eigen::VectorXd f;
        base_.constraintValues(z.head(n_), f);
        values.resize(m_ + 1);
        values.head(m_) = f.array() - z(n_);
        values(m_) = -1.0 - z(n_);
    }

    void constraintJacobian(const Eigen::VectorXd &z, Eigen::MatrixXd &jac) const override
    {
        Eigen::MatrixXd j;
        base_.constraintJacobian(z.head(n_), j);
        jac.setZero(m_ + 1, n_ + 1);
        jac.topLeftCorner(m_, n_) = j;
        jac.col(n_).head(m_).setConstant(-1.0);
        jac(m_, n_) = -1.0;
    }

    void addConstraintHessians(const Eigen::VectorXd &z, const Eigen::VectorXd &weights,
                               Eigen::MatrixXd &hess) const override
    {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n_, n_);
        base_.addConstraintHessians(z.head(n_), weights.head(m_), h);
        hess.topLeftCorner(n_, n_) += h;
    }

  private:
    const ConvexProgram &base_;
    int n_;
    int m_;
};

bool strictlyFeasible(const Eigen::VectorXd &f) { return f.size() == 0 || f.maxCoeff() < 0.0; }

double barrierValue(const ConvexProgram &prog, const Eigen::VectorXd &x, double t, Eigen::VectorXd &f)
{
    prog.constraintValues(x, f);
    if (!strictlyFeasible(f))
        return std::numeric_limits<double>::infinity();
    return t * prog.objective(x) - (-f.array()).log().sum();
}

// Newton centering for  t f0(x) - sum log(-f_c(x)). Returns false on step budget exhaustion.
bool center(const ConvexProgram &prog, Eigen::VectorXd &x, double t, const BarrierOptions &opt, int &budget)
{
    const int n = prog.numVariables();
    Eigen::VectorXd f, g0, d, grad, dx, xn, fn;
    Eigen::MatrixXd h0, jac, hess;
    double bestDecrement = std::numeric_limits<double>::infinity();
    int stalled = 0;

    for (int it = 0; it < opt.maxNewtonPerStage; ++it)
    {
        if (budget-- <= 0)
            return false;
        prog.constraintValues(x, f);
        d = (-f.array()).inverse();
        prog.objectiveDerivatives(x, g0, h0);
        prog.constraintJacobian(x, jac);

        grad = t * g0 + jac.transpose() * d;
        hess = t * h0;
        hess.noalias() += jac.transpose() * d.array().square().matrix().asDiagonal() * jac;
        prog.addConstraintHessians(x, d, hess);

        Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        dx = ldlt.solve(-grad);
        double decrement = -grad.dot(dx);
        if (ldlt.info() != Eigen::Success || !std::isfinite(decrement) || decrement < 0.0)
        {
            const double reg = 1e-12 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
            hess.diagonal().array() += reg;
            dx = hess.ldlt().solve(-grad);
            decrement = -grad.dot(dx);
            if (!std::isfinite(decrement) || decrement < 0.0)
                return true;
        }
        if (0.5 * decrement <= opt.newtonTolerance)
            return true;
        // Round-off floor: the decrement stops shrinking once it is tiny.
        if (decrement < 1e-6 && decrement > 0.5 * bestDecrement)
        {
            if (++stalled >= 3)
                return true;
        }
        else
        {
            stalled = 0;
        }
        bestDecrement = std::min(bestDecrement, decrement);

        // Inside the quadratic-convergence region the Armijo test is dominated by
        // round-off in t*f0, so only feasibility is enforced there.
        const bool pureNewton = decrement < 0.1;
        const double phi = barrierValue(prog, x, t, fn);
        double step = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 80; ++ls)
        {
            xn = x + step * dx;
            const double phiNew = barrierValue(prog, xn, t, fn);
            if (std::isfinite(phiNew) && (pureNewton || phiNew <= phi - 0.01 * step * decrement))
            {
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved)
            return true;  // no further progress representable
        x = xn;
        (void)n;
    }
    return true;
}

// Least-squares multipliers on the constraints carrying most of the barrier
// duals' weight. The barrier duals 1 / (-t f) inherit the round-off of f near
// zero; the refined set replaces them only if it is nonnegative and certifies a
// smaller residual.
Eigen::VectorXd refineDuals(const ConvexProgram &prog, const Eigen::VectorXd &x, const Eigen::VectorXd &duals)
{
    Eigen::VectorXd g0, f;
    Eigen::MatrixXd h0, jac;
    prog.objectiveDerivatives(x, g0, h0);
    prog.constraintJacobian(x, jac);
    const double top = duals.size() ? duals.maxCoeff() : 0.0;
    std::vector<int> active;
    for (int c = 0; c < duals.size(); ++c)
        if (duals(c) >= 1e-4 * top)
            active.push_back(c);
    if (active.empty())
        return duals;
    Eigen::MatrixXd A(jac.cols(), static_cast<int>(active.size()));
    for (int a = 0; a < static_cast<int>(active.size()); ++a)
        A.col(a) = jac.row(active[a]).transpose();
    const Eigen::VectorXd ua = A.completeOrthogonalDecomposition().solve(-g0);
    if (!ua.allFinite() || ua.minCoeff() < 0.0)
        return duals;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(duals.size());
    for (int a = 0; a < static_cast<int>(active.size()); ++a)
        out(active[a]) = ua(a);
    return out;
}

} // namespace

double kktResidual(const ConvexProgram &prog, const Eigen::VectorXd &x, const Eigen::VectorXd &duals)
{
    Eigen::VectorXd g0, f;
    Eigen::MatrixXd h0, jac;
    prog.objectiveDerivatives(x, g0, h0);
    prog.constraintJacobian(x, jac);
    prog.constraintValues(x, f);
    double stat = (g0 + jac.transpose() * duals).cwiseAbs().maxCoeff();
    double comp = f.size() ? (duals.array() * f.array().abs()).maxCoeff() : 0.0;
    return std::max(stat, comp);
}

BarrierResult solveBarrier(const ConvexProgram &prog, const Eigen::VectorXd &start, const BarrierOptions &opt)
{
    BarrierResult res;
    const int n = prog.numVariables();
    const int m = prog.numConstraints();
    int budget = opt.maxTotalNewton;

    Eigen::VectorXd x = start;
    Eigen::VectorXd f;
    prog.constraintValues(x, f);

    // A start on the boundary to round-off pins Newton against the barrier wall.
    if (!strictlyFeasible(f) || f.maxCoeff() > -opt.phaseOneMargin)
    {
        PhaseOne p1(prog);
        Eigen::VectorXd z(n + 1);
        z.head(n) = x;
        z(n) = std::max(f.maxCoeff(), 0.0) + 1.0;
        double t = opt.initialT;
        bool found = false;
        while (true)
        {
            const bool ok = center(p1, z, t, opt, budget);
            prog.constraintValues(z.head(n), f);
            if (strictlyFeasible(f) && f.maxCoeff() <= -opt.phaseOneMargin)
            {
                found = true;
                break;
            }
            if (!ok)
                break;
            if ((m + 1) / t < opt.gapTolerance)
                break;
            t *= opt.tGrowth;
        }
        res.newtonSteps = opt.maxTotalNewton - budget;
        if (!found)
        {
            res.status = budget <= 0 ? BarrierStatus::IterationLimit : BarrierStatus::Infeasible;
            res.x = z.head(n);
            return res;
        }
        x = z.head(n);
    }

    // The last stage lands exactly on m / t = gapTolerance; overshooting t only
    // raises the round-off floor of the centering gradient.
    const double tFinal = std::max(opt.initialT, m / opt.gapTolerance);
    double t = std::min(opt.initialT, tFinal);
    bool ok = true;
    while (true)
    {
        ok = center(prog, x, t, opt, budget);
        if (!ok || t >= tFinal)
            break;
        t = std::min(t * opt.tGrowth, tFinal);
    }

    prog.constraintValues(x, f);
    res.x = x;
    res.duals = (-t * f.array()).inverse();
    res.objective = prog.objective(x);
    res.dualityGap = m / t;
    res.kktResidual = kktResidual(prog, x, res.duals);
    if (m > 0)
    {
        const Eigen::VectorXd refined = refineDuals(prog, x, res.duals);
        const double r = kktResidual(prog, x, refined);
        if (r < res.kktResidual)
        {
            res.duals = refined;
            res.kktResidual = r;
        }
    }
    res.newtonSteps = opt.maxTotalNewton - budget;
    res.status = ok ? BarrierStatus::Optimal : BarrierStatus::IterationLimit;
    return res;
}

} // namespace irsnoma::opt
