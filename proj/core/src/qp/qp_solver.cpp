#include <dcmwalk/qp/qp_solver.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace dcmwalk
{

const char* statusString(QpStatus status)
{
    switch (status)
    {
    case QpStatus::Solved:
        return "solved";
    case QpStatus::MaxIterations:
        return "max_iterations";
    case QpStatus::PrimalInfeasible:
        return "primal_infeasible";
    case QpStatus::DualInfeasible:
        return "dual_infeasible";
    }
    return "unknown";
}

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Row-wise nonzero list of A. The constraint blocks produced by the
/// controllers are mostly sparse (polygon rows touch two variables), so
/// mat-vec products and the rho-weighted Gram matrix are accumulated from
/// explicit nonzeros instead of dense GEMM.
struct ConstraintRows
{
    std::vector<std::vector<std::pair<int, double>>> rows;

    explicit ConstraintRows(const Eigen::MatrixXd& a)
    {
        rows.resize(static_cast<size_t>(a.rows()));
        for (Eigen::Index i = 0; i < a.rows(); i++)
        {
            auto& row = rows[static_cast<size_t>(i)];
            for (Eigen::Index j = 0; j < a.cols(); j++)
            {
                if (a(i, j) != 0.0)
                {
                    row.emplace_back(static_cast<int>(j), a(i, j));
                }
            }
        }
    }

    void multiply(const Eigen::VectorXd& x, Eigen::VectorXd& out) const
    {
        for (size_t i = 0; i < rows.size(); i++)
        {
            double acc = 0.0;
            for (const auto& [j, v] : rows[i])
            {
                acc += v * x(j);
            }
            out(static_cast<Eigen::Index>(i)) = acc;
        }
    }

    void multiplyTransposed(const Eigen::VectorXd& w, Eigen::VectorXd& out) const
    {
        out.setZero();
        for (size_t i = 0; i < rows.size(); i++)
        {
            const double wi = w(static_cast<Eigen::Index>(i));
            if (wi == 0.0)
            {
                continue;
            }
            for (const auto& [j, v] : rows[i])
            {
                out(j) += v * wi;
            }
        }
    }

    /// Adds A^T diag(rho) A into m.
    void addWeightedGram(const Eigen::VectorXd& rho, Eigen::MatrixXd& m) const
    {
        for (size_t i = 0; i < rows.size(); i++)
        {
            const double ri = rho(static_cast<Eigen::Index>(i));
            for (const auto& [j, vj] : rows[i])
            {
                for (const auto& [k, vk] : rows[i])
                {
                    m(j, k) += ri * vj * vk;
                }
            }
        }
    }
};

double supportValue(const Eigen::VectorXd& lower,
                    const Eigen::VectorXd& upper,
                    const Eigen::VectorXd& v,
                    double tol,
                    bool& bounded,
                    double& scale)
{
    double s = 0.0;
    bounded = true;
    scale = 0.0;
    for (Eigen::Index i = 0; i < v.size(); i++)
    {
        if (v(i) > tol)
        {
            if (upper(i) >= kQpInfinity)
            {
                bounded = false;
                return 0.0;
            }
            s += v(i) * upper(i);
            scale += std::abs(v(i) * upper(i));
        }
        else if (v(i) < -tol)
        {
            if (lower(i) <= -kQpInfinity)
            {
                bounded = false;
                return 0.0;
            }
            s += v(i) * lower(i);
            scale += std::abs(v(i) * lower(i));
        }
    }
    return s;
}

struct Residuals
{
    double primal = 0.0;
    double dual = 0.0;
    double primalTol = 0.0;
    double dualTol = 0.0;
    double primalScale = 0.0;
    double dualScale = 0.0;

    bool converged() const { return primal <= primalTol && dual <= dualTol; }
};

Residuals computeResiduals(const QpProblem& problem,
                           const ConstraintRows& rowsA,
                           const QpSettings& settings,
                           const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y)
{
    const Eigen::Index m = problem.numConstraints();
    Residuals res;

    Eigen::VectorXd hx = problem.hessian * x;
    Eigen::VectorXd aty = Eigen::VectorXd::Zero(x.size());
    Eigen::VectorXd ax = Eigen::VectorXd::Zero(m);
    if (m > 0)
    {
        rowsA.multiplyTransposed(y, aty);
        rowsA.multiply(x, ax);
    }

    double primal = 0.0;
    double axNorm = 0.0;
    for (Eigen::Index i = 0; i < m; i++)
    {
        const double lo = problem.lowerBound(i);
        const double hi = problem.upperBound(i);
        const double clamped = std::min(std::max(ax(i), lo), hi);
        primal = std::max(primal, std::abs(ax(i) - clamped));
        axNorm = std::max(axNorm, std::abs(ax(i)));
        if (std::abs(clamped) < kQpInfinity)
        {
            axNorm = std::max(axNorm, std::abs(clamped));
        }
    }

    res.primal = primal;
    res.dual = (hx + problem.gradient + aty).lpNorm<Eigen::Infinity>();
    res.primalScale = axNorm;
    res.dualScale = std::max({hx.lpNorm<Eigen::Infinity>(),
                              aty.lpNorm<Eigen::Infinity>(),
                              problem.gradient.lpNorm<Eigen::Infinity>()});
    res.primalTol = settings.epsAbs + settings.epsRel * res.primalScale;
    res.dualTol = settings.epsAbs + settings.epsRel * res.dualScale;
    return res;
}

/// Equality-constrained re-solve on the active set guessed from the signs of
/// the ADMM duals. Returns true and overwrites (x, y) only when the polished
/// point satisfies the full optimality conditions.
bool tryPolish(const QpProblem& problem,
               const ConstraintRows& rowsA,
               const QpSettings& settings,
               Eigen::VectorXd& x,
               Eigen::VectorXd& y,
               Residuals& res)
{
    const Eigen::Index n = problem.numVariables();
    const Eigen::Index m = problem.numConstraints();

    enum class Side
    {
        Lower,
        Upper,
        Equality
    };
    std::vector<std::pair<Eigen::Index, Side>> active;
    for (Eigen::Index i = 0; i < m; i++)
    {
        const double lo = problem.lowerBound(i);
        const double hi = problem.upperBound(i);
        if (lo == hi)
        {
            active.emplace_back(i, Side::Equality);
        }
        else if (y(i) < 0.0 && lo > -kQpInfinity)
        {
            active.emplace_back(i, Side::Lower);
        }
        else if (y(i) > 0.0 && hi < kQpInfinity)
        {
            active.emplace_back(i, Side::Upper);
        }
    }

    const Eigen::Index na = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + na, n + na);
    Eigen::MatrixXd kktReg;
    kkt.topLeftCorner(n, n) = problem.hessian;
    Eigen::VectorXd rhs(n + na);
    rhs.head(n) = -problem.gradient;
    for (Eigen::Index k = 0; k < na; k++)
    {
        const auto [row, side] = active[static_cast<size_t>(k)];
        kkt.block(n + k, 0, 1, n) = problem.constraintMatrix.row(row);
        kkt.block(0, n + k, n, 1) = problem.constraintMatrix.row(row).transpose();
        rhs(n + k) = side == Side::Upper ? problem.upperBound(row) : problem.lowerBound(row);
    }

    kktReg = kkt;
    kktReg.topLeftCorner(n, n).diagonal().array() += settings.polishRegularization;
    kktReg.bottomRightCorner(na, na).diagonal().array() -= settings.polishRegularization;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(kktReg);
    Eigen::VectorXd sol = lu.solve(rhs);
    // Two rounds of iterative refinement against the unregularized system.
    for (int round = 0; round < 2; round++)
    {
        sol += lu.solve(rhs - kkt * sol);
    }
    if (!sol.allFinite())
    {
        return false;
    }

    Eigen::VectorXd xp = sol.head(n);
    Eigen::VectorXd yp = Eigen::VectorXd::Zero(m);
    for (Eigen::Index k = 0; k < na; k++)
    {
        yp(active[static_cast<size_t>(k)].first) = sol(n + k);
    }

    // Multiplier signs must be consistent with the bound each row sits on,
    // otherwise the guessed active set was wrong.
    const double signTol = 1e-9 * std::max(1.0, yp.lpNorm<Eigen::Infinity>());
    for (Eigen::Index k = 0; k < na; k++)
    {
        const auto [row, side] = active[static_cast<size_t>(k)];
        if (side == Side::Lower && yp(row) > signTol)
        {
            return false;
        }
        if (side == Side::Upper && yp(row) < -signTol)
        {
            return false;
        }
    }

    Residuals polished = computeResiduals(problem, rowsA, settings, xp, yp);
    if (!polished.converged())
    {
        return false;
    }
    x = std::move(xp);
    y = std::move(yp);
    res = polished;
    return true;
}

} // namespace

QpSolution solveQp(const QpProblem& problem,
                   const QpSettings& settings,
                   const std::optional<QpWarmStart>& warmStart)
{
    problem.validate();

    const Eigen::Index n = problem.numVariables();
    const Eigen::Index m = problem.numConstraints();

    QpSolution solution;
    solution.primal = Eigen::VectorXd::Zero(n);
    solution.dual = Eigen::VectorXd::Zero(m);

    // Unconstrained problems collapse to one linear solve.
    if (m == 0)
    {
        Eigen::MatrixXd h = problem.hessian;
        h.diagonal().array() += settings.polishRegularization;
        solution.primal = Eigen::LDLT<Eigen::MatrixXd>(h).solve(-problem.gradient);
        solution.dualResidual =
            (problem.hessian * solution.primal + problem.gradient).lpNorm<Eigen::Infinity>();
        solution.status = QpStatus::Solved;
        solution.iterations = 1;
        return solution;
    }

    const ConstraintRows rowsA(problem.constraintMatrix);

    double rhoBase = settings.rho;
    Eigen::VectorXd rho(m);
    Eigen::VectorXd rhoInv(m);
    Eigen::MatrixXd kkt;
    Eigen::LDLT<Eigen::MatrixXd> kktFactor;
    const auto refactor = [&]() {
        for (Eigen::Index i = 0; i < m; i++)
        {
            const bool equality = problem.lowerBound(i) == problem.upperBound(i);
            rho(i) = equality ? rhoBase * settings.rhoEqualityScale : rhoBase;
            rhoInv(i) = 1.0 / rho(i);
        }
        kkt = problem.hessian;
        kkt.diagonal().array() += settings.sigma;
        rowsA.addWeightedGram(rho, kkt);
        kktFactor.compute(kkt);
    };
    refactor();

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    if (warmStart && warmStart->primal.size() == n && warmStart->dual.size() == m)
    {
        x = warmStart->primal;
        y = warmStart->dual;
    }
    Eigen::VectorXd z(m);
    rowsA.multiply(x, z);
    z = z.cwiseMax(problem.lowerBound).cwiseMin(problem.upperBound);

    Eigen::VectorXd rhs(n), xTilde(n), zTilde(m), zRelax(m), xPrev(n), yPrev(m);
    Eigen::VectorXd deltaX = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd deltaY = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd scratchN(n), scratchM(m);

    // Polishing is attempted once the iterate is roughly converged; this gate
    // saves most of the tail iterations of the first-order method.
    const double looseFactor = 1e4;

    for (int iteration = 1; iteration <= settings.maxIterations; iteration++)
    {
        xPrev = x;
        yPrev = y;

        scratchM = rho.cwiseProduct(z) - y;
        rowsA.multiplyTransposed(scratchM, rhs);
        rhs += settings.sigma * x - problem.gradient;
        xTilde = kktFactor.solve(rhs);
        rowsA.multiply(xTilde, zTilde);

        x = settings.alpha * xTilde + (1.0 - settings.alpha) * x;
        zRelax = settings.alpha * zTilde + (1.0 - settings.alpha) * z;
        z = (zRelax + rhoInv.cwiseProduct(y))
                .cwiseMax(problem.lowerBound)
                .cwiseMin(problem.upperBound);
        y += rho.cwiseProduct(zRelax - z);

        deltaX = x - xPrev;
        deltaY = y - yPrev;

        const bool lastIteration = iteration == settings.maxIterations;
        if (iteration % settings.checkInterval != 0 && !lastIteration)
        {
            continue;
        }

        Residuals res = computeResiduals(problem, rowsA, settings, x, y);
        const bool nearConverged =
            res.primal <= res.primalTol * looseFactor && res.dual <= res.dualTol * looseFactor;
        // Periodic unconditional attempt: the active-set guess is often right
        // well before the first-order residuals shrink, and a successful
        // polish is verified against the full optimality conditions anyway.
        const bool periodicPolish = iteration % (settings.checkInterval * 10) == 0;
        if (settings.polish && (res.converged() || nearConverged || periodicPolish || lastIteration))
        {
            Eigen::VectorXd xp = x;
            Eigen::VectorXd yp = y;
            Residuals resp = res;
            if (tryPolish(problem, rowsA, settings, xp, yp, resp))
            {
                solution.primal = std::move(xp);
                solution.dual = std::move(yp);
                solution.status = QpStatus::Solved;
                solution.iterations = iteration;
                solution.primalResidual = resp.primal;
                solution.dualResidual = resp.dual;
                solution.polished = true;
                return solution;
            }
        }
        if (res.converged())
        {
            solution.primal = x;
            solution.dual = y;
            solution.status = QpStatus::Solved;
            solution.iterations = iteration;
            solution.primalResidual = res.primal;
            solution.dualResidual = res.dual;
            return solution;
        }

        // Infeasibility certificates from the one-step differences. The
        // support condition is relative to the participating bound magnitudes
        // so cancellation noise from a consistent right hand side (null-space
        // directions of a wide constraint matrix) cannot fake a certificate.
        const double normDy = deltaY.lpNorm<Eigen::Infinity>();
        if (normDy > 1e-14)
        {
            const Eigen::VectorXd v = deltaY / normDy;
            rowsA.multiplyTransposed(v, scratchN);
            if (scratchN.lpNorm<Eigen::Infinity>() <= settings.infeasibilityTol)
            {
                bool bounded = false;
                double supportScale = 0.0;
                const double support = supportValue(problem.lowerBound, problem.upperBound, v,
                                                   settings.infeasibilityTol, bounded,
                                                   supportScale);
                if (bounded
                    && support
                           <= -settings.infeasibilityTol * std::max(1.0, supportScale))
                {
                    solution.primal = x;
                    solution.dual = v;
                    solution.status = QpStatus::PrimalInfeasible;
                    solution.iterations = iteration;
                    solution.primalResidual = res.primal;
                    solution.dualResidual = res.dual;
                    return solution;
                }
            }
        }
        const double normDx = deltaX.lpNorm<Eigen::Infinity>();
        if (normDx > 1e-14)
        {
            const Eigen::VectorXd d = deltaX / normDx;
            const double descentScale =
                std::max(1.0, problem.gradient.cwiseAbs().dot(d.cwiseAbs()));
            if ((problem.hessian * d).lpNorm<Eigen::Infinity>() <= settings.infeasibilityTol
                && problem.gradient.dot(d) <= -settings.infeasibilityTol * descentScale)
            {
                rowsA.multiply(d, scratchM);
                bool recession = true;
                for (Eigen::Index i = 0; i < m && recession; i++)
                {
                    if (problem.upperBound(i) < kQpInfinity
                        && scratchM(i) > settings.infeasibilityTol)
                    {
                        recession = false;
                    }
                    if (problem.lowerBound(i) > -kQpInfinity
                        && scratchM(i) < -settings.infeasibilityTol)
                    {
                        recession = false;
                    }
                }
                if (recession)
                {
                    solution.primal = d;
                    solution.dual = y;
                    solution.status = QpStatus::DualInfeasible;
                    solution.iterations = iteration;
                    solution.primalResidual = res.primal;
                    solution.dualResidual = res.dual;
                    return solution;
                }
            }
        }

        // Residual-balancing step size adaptation. Deterministic (driven only
        // by the iterates) and infrequent, so the refactorization stays cheap.
        if (iteration % (settings.checkInterval * 4) == 0 && !lastIteration)
        {
            const double primalNorm = res.primal / std::max(res.primalScale, 1e-12);
            const double dualNorm = res.dual / std::max(res.dualScale, 1e-12);
            if (primalNorm > 1e-15 && dualNorm > 1e-15)
            {
                const double scale = std::sqrt(primalNorm / dualNorm);
                if (scale > 5.0 || scale < 0.2)
                {
                    rhoBase = std::min(std::max(rhoBase * scale, 1e-6), 1e6);
                    refactor();
                }
            }
        }

        if (lastIteration)
        {
            solution.primal = x;
            solution.dual = y;
            solution.status = QpStatus::MaxIterations;
            solution.iterations = iteration;
            solution.primalResidual = res.primal;
            solution.dualResidual = res.dual;
        }
    }
    return solution;
}

} // namespace dcmwalk
