#include <dcmwalk/control/instantaneous_dcm.hpp>

#include <stdexcept>

namespace dcmwalk
{

namespace
{

double minSymmetricEigenvalue(const Eigen::Matrix2d& matrix)
{
    const Eigen::Matrix2d symmetric = 0.5 * (matrix + matrix.transpose());
    return Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(symmetric).eigenvalues().minCoeff();
}

} // namespace

void DcmGains::validate() const
{
    if (minSymmetricEigenvalue(proportional - Eigen::Matrix2d::Identity()) <= 0.0)
    {
        throw std::invalid_argument(
            "DcmGains: proportional gain must exceed the identity for stability");
    }
    if (minSymmetricEigenvalue(integral) < -1e-12)
    {
        throw std::invalid_argument("DcmGains: integral gain must be positive semidefinite");
    }
    if ((integralLimit.array() < 0.0).any())
    {
        throw std::invalid_argument("DcmGains: integral limit must be non-negative");
    }
}

InstantaneousDcmController::InstantaneousDcmController(const DcmGains& gains,
                                                       double timeConstant,
                                                       double timeStep)
    : m_gains(gains)
    , m_timeConstant(timeConstant)
    , m_timeStep(timeStep)
{
    m_gains.validate();
    if (!(timeConstant > 0.0) || !(timeStep > 0.0))
    {
        throw std::invalid_argument(
            "InstantaneousDcmController: time constant and step must be positive");
    }
}

Eigen::Vector2d InstantaneousDcmController::law(const DcmGains& gains,
                                                double timeConstant,
                                                const Eigen::Vector2d& dcm,
                                                const Eigen::Vector2d& dcmReference,
                                                const Eigen::Vector2d& dcmVelocityReference,
                                                const Eigen::Vector2d& integralState)
{
    const Eigen::Vector2d error = dcm - dcmReference;
    return dcmReference - timeConstant * dcmVelocityReference + gains.proportional * error
           + gains.integral * integralState;
}

Eigen::Vector2d InstantaneousDcmController::control(const Eigen::Vector2d& dcm,
                                                    const Eigen::Vector2d& dcmReference,
                                                    const Eigen::Vector2d& dcmVelocityReference)
{
    const Eigen::Vector2d error = dcm - dcmReference;
    m_integral += 0.5 * m_timeStep * (m_previousError + error);
    m_integral =
        m_integral.cwiseMax(-m_gains.integralLimit).cwiseMin(m_gains.integralLimit).eval();
    m_previousError = error;

    return law(m_gains, m_timeConstant, dcm, dcmReference, dcmVelocityReference, m_integral);
}

void InstantaneousDcmController::reset()
{
    m_integral.setZero();
    m_previousError.setZero();
}

} // namespace dcmwalk
