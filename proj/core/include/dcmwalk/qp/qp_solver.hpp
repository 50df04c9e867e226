#pragma once

#include <optional>

#include <dcmwalk/qp/qp_problem.hpp>

namespace dcmwalk
{

enum class QpStatus
{
    Solved,            ///< residuals below tolerance (possibly after polishing)
    MaxIterations,     ///< budget exhausted, best iterate returned
    PrimalInfeasible,  ///< certificate of primal infeasibility found
    DualInfeasible     ///< certificate of unboundedness found
};

const char* statusString(QpStatus status);

struct QpSettings
{
    double epsAbs = 1e-8;
    double epsRel = 1e-8;
    int maxIterations = 4000;

    double rho = 0.1;              ///< ADMM step for inequality rows
    double rhoEqualityScale = 1e3; ///< multiplier applied to rho on equality rows
    double sigma = 1e-6;
    double alpha = 1.6;            ///< over-relaxation
    int checkInterval = 25;        ///< iterations between convergence checks
    double infeasibilityTol = 1e-8;
    double polishRegularization = 1e-10;
    bool polish = true;
};

/// Optional initial iterate; sizes must match the problem or the hint is ignored.
struct QpWarmStart
{
    Eigen::VectorXd primal;
    Eigen::VectorXd dual;
};

struct QpSolution
{
    QpStatus status = QpStatus::MaxIterations;
    Eigen::VectorXd primal; ///< x
    Eigen::VectorXd dual;   ///< y, one multiplier per constraint row
    int iterations = 0;
    double primalResidual = 0.0; ///< inf-norm of Ax - clamp(Ax, l, u)
    double dualResidual = 0.0;   ///< inf-norm of Hx + g + A^T y
    bool polished = false;
};

/**
 * Dense operator-splitting QP solver (ADMM with over-relaxation and an
 * active-set polishing step). Deterministic: identical inputs give bitwise
 * identical outputs. Thread safe as long as each call owns its problem data.
 */
QpSolution solveQp(const QpProblem& problem,
                   const QpSettings& settings = {},
                   const std::optional<QpWarmStart>& warmStart = std::nullopt);

} // namespace dcmwalk
