#include <dcmwalk/harness/lipm_plant.hpp>

#include <cmath>
#include <stdexcept>

namespace dcmwalk
{

LipmState lipmStep(const LipmState& state,
                   const Eigen::Vector2d& zmp,
                   double timeConstant,
                   double timeStep)
{
    if (!(timeConstant > 0.0) || !(timeStep > 0.0))
    {
        throw std::invalid_argument("lipmStep: time constant and step must be positive");
    }
    const double growth = std::exp(timeStep / timeConstant);
    const double decay = std::exp(-timeStep / timeConstant);

    const Eigen::Vector2d divergent = state.position + timeConstant * state.velocity;
    const Eigen::Vector2d convergent = state.position - timeConstant * state.velocity;
    const Eigen::Vector2d nextDivergent = growth * divergent + (1.0 - growth) * zmp;
    const Eigen::Vector2d nextConvergent = decay * convergent + (1.0 - decay) * zmp;

    LipmState next;
    next.position = 0.5 * (nextDivergent + nextConvergent);
    next.velocity = (nextDivergent - nextConvergent) / (2.0 * timeConstant);
    return next;
}

Eigen::Matrix2d lipmContinuousMatrix(double timeConstant)
{
    Eigen::Matrix2d a;
    a << 0.0, 1.0, 1.0 / (timeConstant * timeConstant), 0.0;
    return a;
}

Eigen::Matrix2d lipmDiscreteMatrix(double timeConstant, double timeStep)
{
    const double growth = std::exp(timeStep / timeConstant);
    const double decay = std::exp(-timeStep / timeConstant);
    Eigen::Matrix2d f;
    f << 0.5 * (growth + decay), 0.5 * timeConstant * (growth - decay),
        0.5 * (growth - decay) / timeConstant, 0.5 * (growth + decay);
    return f;
}

} // namespace dcmwalk
