#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace dcmwalk
{

/// Thrown on malformed solver input (dimension mismatch, asymmetric Hessian,
/// crossed bounds). Carries a human readable description of the offending field.
struct InvalidProblem : std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

/// Bounds with magnitude at or above this value are treated as absent.
constexpr double kQpInfinity = 1e20;

/**
 * Convex quadratic program
 *
 *   min  1/2 x^T H x + g^T x
 *   s.t. l <= A x <= u
 *
 * H must be symmetric positive semi-definite. An equality row is expressed as
 * l_i == u_i, a one-sided row by setting the missing bound to +-kQpInfinity.
 */
struct QpProblem
{
    Eigen::MatrixXd hessian;          ///< H, n x n
    Eigen::VectorXd gradient;         ///< g, n
    Eigen::MatrixXd constraintMatrix; ///< A, m x n (m may be zero)
    Eigen::VectorXd lowerBound;       ///< l, m
    Eigen::VectorXd upperBound;       ///< u, m

    int numVariables() const { return static_cast<int>(gradient.size()); }
    int numConstraints() const { return static_cast<int>(lowerBound.size()); }

    /// Throws InvalidProblem if shapes disagree, H is not symmetric or l > u.
    void validate() const;
};

/// Writes the problem to a plain text file (full precision), for offline replay.
void saveQpProblem(const QpProblem& problem, const std::string& path);

/// Inverse of saveQpProblem. Throws std::runtime_error on parse failure.
QpProblem loadQpProblem(const std::string& path);

} // namespace dcmwalk
