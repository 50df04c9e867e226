#include <dcmwalk/control/zmp_com.hpp>

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

void ZmpComGains::validate(double timeConstant) const
{
    if (!(timeConstant > 0.0))
    {
        throw std::invalid_argument("ZmpComGains: time constant must be positive");
    }
    const Eigen::Matrix2d inverseB = Eigen::Matrix2d::Identity() / timeConstant;
    if (minSymmetricEigenvalue(com - inverseB) <= 0.0)
    {
        throw std::invalid_argument("ZmpComGains: com gain must exceed 1/b");
    }
    if (minSymmetricEigenvalue(zmp) <= 0.0)
    {
        throw std::invalid_argument("ZmpComGains: zmp gain must be positive definite");
    }
    if (minSymmetricEigenvalue(inverseB - zmp) <= 0.0)
    {
        throw std::invalid_argument("ZmpComGains: zmp gain must stay below 1/b");
    }
}

ZmpComController::ZmpComController(const ZmpComGains& gains, double timeConstant)
    : m_gains(gains)
{
    m_gains.validate(timeConstant);
}

Eigen::Vector2d ZmpComController::law(const ZmpComGains& gains,
                                      const Eigen::Vector2d& desiredZmp,
                                      const Eigen::Vector2d& measuredZmp,
                                      const Eigen::Vector2d& comReference,
                                      const Eigen::Vector2d& measuredCom,
                                      const Eigen::Vector2d& comVelocityReference)
{
    return comVelocityReference - gains.zmp * (desiredZmp - measuredZmp)
           + gains.com * (comReference - measuredCom);
}

} // namespace dcmwalk
