// SPDX-License-Identifier: Apache-2.0
//
// Complex primal-dual interior-point method for
//
//     minimize tr(A X)  s.t.  diag(X) = e,  X PSD        (A = -C)
//     maximize e^T y    s.t.  Z = A - Diag(y) PSD
//
// following the central path Z X = mu I with the XZ search direction.
// Note tr(Z X) = tr(A X) - e^T y is the duality gap.

#include "irsnoma/reflect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace irsnoma::reflect
{

namespace
{

// Largest alpha in (0, 1] keeping P + alpha dP positive definite, damped by 0.95.
double stepLength(const Eigen::MatrixXcd &P, const Eigen::MatrixXcd &dP)
{
    Eigen::LLT<Eigen::MatrixXcd> llt(P);
    const Eigen::MatrixXcd Linv = llt.matrixL().solve(Eigen::MatrixXcd::Identity(P.rows(), P.cols()));
    Eigen::MatrixXcd S = Linv * dP * Linv.adjoint();
    S = 0.5 * (S + S.adjoint()).eval();
    const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(S, Eigen::EigenvaluesOnly).eigenvalues()(0);
    if (lmin >= 0.0)
        return 1.0;
    return std::min(1.0, 0.95 * (-1.0 / lmin));
}

Eigen::MatrixXcd hermitian(const Eigen::MatrixXcd &M) { return 0.5 * (M + M.adjoint()); }

} // namespace

SdpSolution InteriorPointSdp::solve(const Eigen::MatrixXcd &C) const
{
    const int n = static_cast<int>(C.rows());
    const Eigen::MatrixXcd A = -hermitian(C);
    SdpSolution sol;

    Eigen::MatrixXcd X = Eigen::MatrixXcd::Identity(n, n);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i)
        y(i) = A(i, i).real() - A.row(i).cwiseAbs().sum() - 1.0;
    auto slackOf = [&](const Eigen::VectorXd &yy) {
        Eigen::MatrixXcd Z = A;
        Z.diagonal() -= yy.cast<cplx>();
        return Z;
    };
    Eigen::MatrixXcd Z = slackOf(y);

    for (int it = 0; it < maxIterations_; ++it)
    {
        sol.iterations = it;
        const double gap = (Z * X).trace().real();
        const double dual = y.sum();
        if (gap <= relativeGap_ * (1.0 + std::abs(dual)))
        {
            sol.converged = true;
            break;
        }
        const double mu = gap / (2.0 * n);
        const Eigen::MatrixXcd Zi = hermitian(Z.llt().solve(Eigen::MatrixXcd::Identity(n, n)));

        // Re(Zi o conj(X)) dy = e - mu diag(Zi)
        Eigen::MatrixXd schur(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                schur(a, b) = (Zi(a, b) * std::conj(X(a, b))).real();
        Eigen::VectorXd rhs = Eigen::VectorXd::Ones(n) - mu * Zi.diagonal().real();
        const Eigen::VectorXd dy = schur.ldlt().solve(rhs);

        Eigen::MatrixXcd dZ = Eigen::MatrixXcd::Zero(n, n);
        dZ.diagonal() = -dy.cast<cplx>();
        Eigen::MatrixXcd dX = mu * Zi - X - Zi * dZ * X;
        dX = hermitian(dX);

        const double ap = stepLength(X, dX);
        const double ad = stepLength(Z, dZ);
        X = hermitian(X + ap * dX);
        X.diagonal().setOnes();
        y += ad * dy;
        Z = slackOf(y);
        sol.iterations = it + 1;
    }

    sol.V = X;
    sol.primal = (C * X).trace().real();
    sol.dualBound = -y.sum();
    return sol;
}

SdrResult sdrSolve(const LiftedProblem &lp, const SdpBackend &backend, int sizeCap)
{
    SdrResult r;
    const int n = static_cast<int>(lp.Csum.rows());
    if (n > sizeCap)
    {
        r.status = SdrStatus::SizeCapExceeded;
        return r;
    }
    const SdpSolution s = backend.solve(lp.Csum);
    r.V = s.V;
    r.upperBound = s.dualBound + lp.directGain;
    r.relaxedValue = s.primal + lp.directGain;
    r.status = s.converged ? SdrStatus::Solved : SdrStatus::NotConverged;
    return r;
}

SdrResult sdrSolve(const LiftedProblem &lp, int sizeCap)
{
    return sdrSolve(lp, InteriorPointSdp{}, sizeCap);
}

PhaseConfig gaussianRandomization(const Eigen::MatrixXcd &V, const LiftedProblem &lp, int samples,
                                  std::uint64_t seed)
{
    const int n = static_cast<int>(V.rows());
    const int M = n - 1;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(hermitian(V));
    // Round-off eigenvalues are dropped so a rank-one V samples its own direction.
    Eigen::VectorXd lam = eig.eigenvalues();
    const double floor = 1e-12 * std::max(lam.maxCoeff(), 0.0);
    lam = lam.unaryExpr([floor](double v) { return v > floor ? v : 0.0; });
    const Eigen::MatrixXcd L = eig.eigenvectors() * lam.cwiseSqrt().asDiagonal();

    auto candidate = [&](const Eigen::VectorXcd &xi) {
        Eigen::VectorXcd bar(n);
        for (int m = 0; m < n; ++m)
        {
            const double a = std::abs(xi(m));
            bar(m) = a > 0.0 ? xi(m) / a : cplx(1.0, 0.0);
        }
        // Divide by the last entry so nuBar ends in exactly 1.
        const cplx ref = std::conj(bar(M));
        Eigen::VectorXcd nu(M);
        for (int m = 0; m < M; ++m)
            nu(m) = bar(m) * ref;
        return nu;
    };
    auto value = [&](const Eigen::VectorXcd &nu) {
        Eigen::VectorXcd bar(n);
        bar.head(M) = nu;
        bar(M) = 1.0;
        return (bar.adjoint() * lp.Csum * bar)(0, 0).real() + lp.directGain;
    };

    Eigen::VectorXcd best = candidate(eig.eigenvectors().col(n - 1));
    double bestValue = value(best);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    Eigen::VectorXcd w(n);
    for (int s = 0; s < samples; ++s)
    {
        for (int m = 0; m < n; ++m)
            w(m) = cplx(normal(rng), normal(rng));
        const Eigen::VectorXcd nu = candidate(L * w);
        const double v = value(nu);
        if (v > bestValue)
        {
            bestValue = v;
            best = nu;
        }
    }
    return PhaseConfig::fromNu(best);
}

} // namespace irsnoma::reflect
