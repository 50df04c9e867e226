#include <dcmwalk/rigidbody/zmp.hpp>

#include <cmath>
#include <stdexcept>

namespace dcmwalk
{

std::optional<Eigen::Vector2d> localZmp(const Eigen::Matrix<double, 6, 1>& soleWrench,
                                        double minNormalForce)
{
    const double fz = soleWrench(2);
    if (fz < minNormalForce)
    {
        return std::nullopt;
    }
    return Eigen::Vector2d(-soleWrench(4) / fz, soleWrench(3) / fz);
}

std::optional<Eigen::Vector2d> globalZmp(const std::vector<SoleWrench>& contacts,
                                         double minNormalForce)
{
    // The weighted average is only meaningful when every sole lies in one
    // common plane; reject clearly separated or tilted contact surfaces.
    constexpr double coplanarTol = 1e-6;
    for (std::size_t i = 0; i + 1 < contacts.size(); i++)
    {
        const Eigen::Vector3d normal = contacts[i].solePose.linear().col(2);
        for (std::size_t j = i + 1; j < contacts.size(); j++)
        {
            const Eigen::Vector3d other = contacts[j].solePose.linear().col(2);
            const double offset = std::abs(normal.dot(contacts[j].solePose.translation()
                                                      - contacts[i].solePose.translation()));
            if (normal.cross(other).norm() > coplanarTol || offset > coplanarTol)
            {
                throw std::invalid_argument("globalZmp: contact soles are not coplanar");
            }
        }
    }

    Eigen::Vector2d weighted = Eigen::Vector2d::Zero();
    double totalWeight = 0.0;
    for (const SoleWrench& contact : contacts)
    {
        const auto local = localZmp(contact.wrench, minNormalForce);
        if (!local)
        {
            continue;
        }
        // Weight by the normal force in the sole frame.
        const double weight = contact.wrench(2);
        const Eigen::Vector3d world =
            contact.solePose * Eigen::Vector3d(local->x(), local->y(), 0.0);
        weighted += weight * world.head<2>();
        totalWeight += weight;
    }
    if (totalWeight < minNormalForce)
    {
        return std::nullopt;
    }
    return Eigen::Vector2d(weighted / totalWeight);
}

} // namespace dcmwalk
