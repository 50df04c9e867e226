#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <dcmwalk/estimation/schmitt_trigger.hpp>
#include <dcmwalk/planner/footstep.hpp>
#include <dcmwalk/rigidbody/kindyn.hpp>
#include <dcmwalk/rigidbody/model.hpp>

namespace dcmwalk
{

struct OdometrySettings
{
    SchmittSettings schmitt;
    Side initialFixedSide = Side::Left;
};

/**
 * Floating-base estimation from kinematics and contact switching alone.
 *
 * One sole frame is assumed rigidly attached to the world while it is in
 * contact. The base pose follows from the fixed-sole pose and the joint
 * positions, the base velocity from the constraint that the fixed sole has
 * zero twist. The fixed sole is kept through double support and handed over
 * when its contact deactivates, composing the anchor pose through the
 * relative sole transform at the switch instant.
 */
class LeggedOdometry
{
public:
    explicit LeggedOdometry(const Model& model, const OdometrySettings& settings = {});

    /// Anchors the world pose of the initial fixed sole from a known base
    /// pose, so the estimate starts on the ground truth. Both contacts start
    /// in the given states without waiting for the trigger dwell.
    void reset(const Eigen::VectorXd& jointPositions,
               const Eigen::Isometry3d& basePose,
               ContactState leftState = ContactState::Active,
               ContactState rightState = ContactState::Active);

    /// Feeds one sample of joint positions and contact normal forces.
    /// Timestamps must be nondecreasing.
    void advance(const Eigen::VectorXd& jointPositions,
                 double leftNormalForce,
                 double rightNormalForce,
                 double timestamp);

    /// Estimated base pose at the last advanced sample. Throws when every
    /// contact is inactive: without a fixed sole there is no world anchor.
    const Eigen::Isometry3d& basePose() const;

    /// Base twist solving J_fixed [v; sdot] = 0 through the 6x6 base block.
    Eigen::Matrix<double, 6, 1> baseVelocity(const Eigen::VectorXd& jointVelocities);

    bool hasFixedFrame() const { return m_hasFixedFrame; }
    Side fixedSide() const { return m_fixedSide; }
    ContactState leftContact() const { return m_leftTrigger.state(); }
    ContactState rightContact() const { return m_rightTrigger.state(); }
    int switchCount() const { return m_switchCount; }

private:
    void anchorTo(Side side);
    int soleFrame(Side side) const;

    const Model* m_model;
    OdometrySettings m_settings;
    KinDyn m_kinDyn;
    SchmittTrigger m_leftTrigger;
    SchmittTrigger m_rightTrigger;

    bool m_hasFixedFrame = false;
    Side m_fixedSide = Side::Left;
    Eigen::Isometry3d m_worldFromFixed = Eigen::Isometry3d::Identity();
    Eigen::Isometry3d m_basePose = Eigen::Isometry3d::Identity();
    Eigen::VectorXd m_jointPositions;
    int m_switchCount = 0;
};

} // namespace dcmwalk
