#pragma once

#include <Eigen/Dense>

namespace dcmwalk
{

/// Gains of the instantaneous dcm tracking law. Stability of the closed loop
/// requires the proportional gain to dominate the identity and the integral
/// gain to be positive semidefinite; validate() enforces exactly that.
struct DcmGains
{
    Eigen::Matrix2d proportional = 2.0 * Eigen::Matrix2d::Identity();
    Eigen::Matrix2d integral = 0.5 * Eigen::Matrix2d::Identity();
    Eigen::Vector2d integralLimit = Eigen::Vector2d::Constant(0.05);

    /// Throws std::invalid_argument unless proportional - I is positive
    /// definite and integral is positive semidefinite.
    void validate() const;
};

/**
 * Feedback law turning the measured dcm into a desired zmp:
 *
 *   r* = xi_ref - b xiDot_ref + Kp (xi - xi_ref) + Ki \int (xi - xi_ref)
 *
 * The stateful controller accumulates the integral by the trapezoidal rule
 * with a component wise anti windup clamp; the static law() is the pure map
 * used by the closed loop oracles.
 */
class InstantaneousDcmController
{
public:
    InstantaneousDcmController(const DcmGains& gains, double timeConstant, double timeStep);

    static Eigen::Vector2d law(const DcmGains& gains,
                               double timeConstant,
                               const Eigen::Vector2d& dcm,
                               const Eigen::Vector2d& dcmReference,
                               const Eigen::Vector2d& dcmVelocityReference,
                               const Eigen::Vector2d& integralState);

    /// Advances the integral state and returns the desired zmp.
    Eigen::Vector2d control(const Eigen::Vector2d& dcm,
                            const Eigen::Vector2d& dcmReference,
                            const Eigen::Vector2d& dcmVelocityReference);

    const Eigen::Vector2d& integralState() const { return m_integral; }
    void reset();

private:
    DcmGains m_gains;
    double m_timeConstant = 0.0;
    double m_timeStep = 0.0;
    Eigen::Vector2d m_integral = Eigen::Vector2d::Zero();
    Eigen::Vector2d m_previousError = Eigen::Vector2d::Zero();
};

} // namespace dcmwalk
