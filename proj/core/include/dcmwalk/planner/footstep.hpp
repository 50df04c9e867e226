#pragma once

#include <Eigen/Dense>

namespace dcmwalk
{

enum class Side
{
    Left,
    Right
};

inline const char* sideName(Side side)
{
    return side == Side::Left ? "left" : "right";
}

inline Side oppositeSide(Side side)
{
    return side == Side::Left ? Side::Right : Side::Left;
}

/// One footprint on the ground. The position is the sole center in world
/// coordinates; impactTime is when the sole touches down and duration how
/// long the step that produced it took. The two initial stance feet carry
/// impactTime 0 and duration 0.
struct Footstep
{
    Side side = Side::Left;
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    double yaw = 0.0;
    double impactTime = 0.0;
    double duration = 0.0;
};

} // namespace dcmwalk
