// SPDX-License-Identifier: Apache-2.0
//
// Dense log-barrier interior-point method for small smooth convex programs
//
//     minimize f0(x)  subject to  f_c(x) <= 0,  c = 1..m
//
// with a phase-I search when the starting point is not strictly feasible.

#pragma once

#include <Eigen/Dense>

namespace irsnoma::opt
{

class ConvexProgram
{
  public:
    virtual ~ConvexProgram() = default;

    virtual int numVariables() const = 0;
    virtual int numConstraints() const = 0;

    virtual double objective(const Eigen::VectorXd &x) const = 0;
    virtual void objectiveDerivatives(const Eigen::VectorXd &x, Eigen::VectorXd &grad,
                                      Eigen::MatrixXd &hess) const = 0;

    virtual void constraintValues(const Eigen::VectorXd &x, Eigen::VectorXd &values) const = 0;
    // Row c holds the gradient of f_c.
    virtual void constraintJacobian(const Eigen::VectorXd &x, Eigen::MatrixXd &jac) const = 0;
    // hess += sum_c weights(c) * hessian(f_c)
    virtual void addConstraintHessians(const Eigen::VectorXd &x, const Eigen::VectorXd &weights,
                                       Eigen::MatrixXd &hess) const = 0;
};

struct BarrierOptions
{
    double initialT = 1.0;
    double tGrowth = 20.0;
    double gapTolerance = 2e-7;       // m / t at exit; tighter values lose multiplier accuracy
    double newtonTolerance = 1e-10;   // half squared Newton decrement
    int maxNewtonPerStage = 200;
    int maxTotalNewton = 5000;
    // Phase I stops as soon as max_c f_c(x) <= -phaseOneMargin.
    double phaseOneMargin = 1e-9;
};

enum class BarrierStatus
{
    Optimal,
    Infeasible,
    IterationLimit
};

struct BarrierResult
{
    BarrierStatus status = BarrierStatus::IterationLimit;
    Eigen::VectorXd x;
    Eigen::VectorXd duals;   // u_c = 1 / (-t f_c(x))
    double objective = 0.0;
    double dualityGap = 0.0; // m / t
    double kktResidual = 0.0;
    int newtonSteps = 0;
};

// Max of stationarity (inf-norm of grad f0 + J^T u) and complementarity (max u_c |f_c|).
double kktResidual(const ConvexProgram &prog, const Eigen::VectorXd &x, const Eigen::VectorXd &duals);

BarrierResult solveBarrier(const ConvexProgram &prog, const Eigen::VectorXd &start, const BarrierOptions &opt = {});

} // namespace irsnoma::opt
