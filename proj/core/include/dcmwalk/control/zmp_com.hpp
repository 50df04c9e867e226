#pragma once

#include <Eigen/Dense>

namespace dcmwalk
{

/// Gains of the zmp-com tracking loop. The loop is stable when the com gain
/// exceeds 1/b and the zmp gain lies strictly between zero and 1/b.
struct ZmpComGains
{
    Eigen::Matrix2d zmp = 2.0 * Eigen::Matrix2d::Identity();
    Eigen::Matrix2d com = 6.0 * Eigen::Matrix2d::Identity();

    /// Throws std::invalid_argument unless com - I/b and I/b - zmp are
    /// positive definite and zmp itself is positive definite.
    void validate(double timeConstant) const;
};

/**
 * Outer loop turning the desired zmp into a com velocity command:
 *
 *   v* = v_ref - Kzmp (r* - r_measured) + Kcom (p_ref - p_measured)
 *
 * Pure map; the gains are validated once at construction.
 */
class ZmpComController
{
public:
    ZmpComController(const ZmpComGains& gains, double timeConstant);

    static Eigen::Vector2d law(const ZmpComGains& gains,
                               const Eigen::Vector2d& desiredZmp,
                               const Eigen::Vector2d& measuredZmp,
                               const Eigen::Vector2d& comReference,
                               const Eigen::Vector2d& measuredCom,
                               const Eigen::Vector2d& comVelocityReference);

    Eigen::Vector2d control(const Eigen::Vector2d& desiredZmp,
                            const Eigen::Vector2d& measuredZmp,
                            const Eigen::Vector2d& comReference,
                            const Eigen::Vector2d& measuredCom,
                            const Eigen::Vector2d& comVelocityReference) const
    {
        return law(m_gains, desiredZmp, measuredZmp, comReference, measuredCom,
                   comVelocityReference);
    }

    const ZmpComGains& gains() const { return m_gains; }

private:
    ZmpComGains m_gains;
};

} // namespace dcmwalk
