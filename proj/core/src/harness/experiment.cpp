#include <dcmwalk/harness/experiment.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <system_error>

#include <dcmwalk/control/support_polygon.hpp>
#include <dcmwalk/estimation/legged_odometry.hpp>
#include <dcmwalk/harness/lipm_plant.hpp>
#include <dcmwalk/math_utils.hpp>
#include <dcmwalk/rigidbody/kindyn.hpp>
#include <dcmwalk/wbc/torque_controller.hpp>

namespace dcmwalk
{

namespace
{

std::string formatNumber(double value)
{
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (result.ec != std::errc())
        throw std::runtime_error("experiment: number formatting failed");
    return std::string(buffer, result.ptr);
}

Eigen::Isometry3d flatSolePose(const Eigen::Vector3d& position, double yaw)
{
    Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
    pose.linear() = rotationZ(yaw);
    pose.translation() = position;
    return pose;
}

Eigen::Isometry3d integrateBasePose(const Eigen::Isometry3d& pose,
                                    const Eigen::Matrix<double, 6, 1>& twist,
                                    double timeStep)
{
    Eigen::Isometry3d next = pose;
    next.translation() += timeStep * twist.head<3>();
    next.linear() = projectToRotation(expSkew(timeStep * twist.tail<3>()) * pose.linear());
    return next;
}

/// Base twist that keeps the given sole frame still for the joint rates.
Eigen::Matrix<double, 6, 1> pinnedBaseTwist(const KinDyn& kinDyn,
                                            int soleFrame,
                                            const Eigen::VectorXd& jointVelocities)
{
    const Eigen::MatrixXd jacobian = kinDyn.frameJacobian(soleFrame);
    const Eigen::Matrix<double, 6, 6> baseBlock = jacobian.leftCols<6>();
    const Eigen::Matrix<double, 6, 1> bias
        = -jacobian.rightCols(jointVelocities.size()) * jointVelocities;
    return baseBlock.partialPivLu().solve(bias);
}

int soleIndex(const Model& model, Side side)
{
    return side == Side::Left ? model.leftFoot().frameIndex : model.rightFoot().frameIndex;
}

/// Per sample support polygon and anchor side (the planned stance sole that
/// defines the plant base pose).
struct StancePlan
{
    std::vector<SupportPolygon> polygons;
    std::vector<Side> anchors;
};

StancePlan buildStancePlan(const WalkingPlan& plan, const Model& model, Side firstSupport)
{
    StancePlan out;
    out.polygons.reserve(plan.samples());
    out.anchors.reserve(plan.samples());
    Side anchor = firstSupport;
    for (std::size_t k = 0; k < plan.samples(); ++k)
    {
        if (plan.phase[k] == SupportPhase::SingleSupportLeft)
            anchor = Side::Left;
        else if (plan.phase[k] == SupportPhase::SingleSupportRight)
            anchor = Side::Right;
        out.anchors.push_back(anchor);

        const SupportPolygon left = SupportPolygon::footRectangle(
            plan.leftFoot[k].position.head<2>(), plan.leftFoot[k].yaw, model.leftFoot().length,
            model.leftFoot().width);
        const SupportPolygon right = SupportPolygon::footRectangle(
            plan.rightFoot[k].position.head<2>(), plan.rightFoot[k].yaw, model.rightFoot().length,
            model.rightFoot().width);
        if (plan.phase[k] == SupportPhase::SingleSupportLeft)
            out.polygons.push_back(left);
        else if (plan.phase[k] == SupportPhase::SingleSupportRight)
            out.polygons.push_back(right);
        else
            out.polygons.push_back(SupportPolygon::merge(left, right));
    }
    return out;
}

int mpcStatusCode(MpcStatus status)
{
    switch (status)
    {
    case MpcStatus::Solved:
        return 0;
    case MpcStatus::Infeasible:
        return 1;
    default:
        return 2;
    }
}

int ikStatusCode(IkStatus status)
{
    switch (status)
    {
    case IkStatus::Solved:
        return 0;
    case IkStatus::Infeasible:
        return 1;
    default:
        return 2;
    }
}

int torqueStatusCode(TorqueStatus status)
{
    switch (status)
    {
    case TorqueStatus::Solved:
        return 0;
    case TorqueStatus::Infeasible:
        return 1;
    case TorqueStatus::ZmpReferenceInfeasible:
        return 3;
    default:
        return 2;
    }
}

/// Runs the simplified layer for one tick and applies the predictive
/// fallback: when the MPC does not solve, hold the previous zmp projected
/// into the current polygon.
struct SimplifiedLayerState
{
    InstantaneousDcmController instantaneous;
    MpcController predictive;
    SimplifiedLayer kind;

    SimplifiedLayerState(const ExperimentConfig& config, double timeConstant)
        : instantaneous(config.dcmGains, timeConstant, config.planner.timeStep)
        , predictive(config.mpc, timeConstant)
        , kind(config.simplified)
    {
    }
};

struct SimplifiedTick
{
    Eigen::Vector2d zmp = Eigen::Vector2d::Zero();
    int status = 0;
    int iterations = 0;
    bool fallback = false;
};

SimplifiedTick runSimplifiedLayer(SimplifiedLayerState& layer,
                                  const WalkingPlan& plan,
                                  const StancePlan& stance,
                                  std::size_t k,
                                  const Eigen::Vector2d& measuredDcm,
                                  const Eigen::Vector2d& previousZmp)
{
    SimplifiedTick tick;
    if (layer.kind == SimplifiedLayer::Instantaneous)
    {
        tick.zmp = layer.instantaneous.control(measuredDcm, plan.dcm[k], plan.dcmVelocity[k]);
        return tick;
    }

    const int horizon = layer.predictive.settings().horizon;
    const std::size_t last = plan.samples() - 1;
    std::vector<Eigen::Vector2d> references(static_cast<std::size_t>(horizon) + 1);
    for (int j = 0; j <= horizon; ++j)
        references[static_cast<std::size_t>(j)] = plan.dcm[std::min(k + static_cast<std::size_t>(j), last)];
    std::vector<const SupportPolygon*> polygons(static_cast<std::size_t>(horizon));
    for (int j = 0; j < horizon; ++j)
        polygons[static_cast<std::size_t>(j)]
            = &stance.polygons[std::min(k + static_cast<std::size_t>(j), last)];

    const MpcResult result = layer.predictive.solve(measuredDcm, references, polygons, previousZmp);
    tick.status = mpcStatusCode(result.status);
    tick.iterations = result.iterations;
    if (result.status == MpcStatus::Solved)
    {
        tick.zmp = result.zmp;
    }
    else
    {
        tick.zmp = projectOntoPolygon(previousZmp, stance.polygons[k]);
        tick.fallback = true;
        layer.predictive.resetWarmStart();
    }
    return tick;
}

/// Contact wrenches and joint torques consistent with the observed motion:
/// the base rows of the dynamics determine the wrenches (uniquely in single
/// support, least norm in double support), the joint rows then give tau.
Eigen::VectorXd reconstructTorques(const KinDyn& kinDyn,
                                   const Eigen::VectorXd& accelerations,
                                   bool leftContact,
                                   bool rightContact)
{
    const int joints = kinDyn.numJoints();
    const Eigen::VectorXd demand
        = kinDyn.massMatrix() * accelerations + kinDyn.generalizedBias();

    std::vector<Eigen::MatrixXd> jacobians;
    if (leftContact)
        jacobians.push_back(kinDyn.frameJacobian(kinDyn.model().leftFoot().frameIndex));
    if (rightContact)
        jacobians.push_back(kinDyn.frameJacobian(kinDyn.model().rightFoot().frameIndex));
    if (jacobians.empty())
        throw std::invalid_argument("torque reconstruction needs a stance foot");

    Eigen::VectorXd wrenches;
    if (jacobians.size() == 1)
    {
        const Eigen::Matrix<double, 6, 6> baseBlock
            = jacobians.front().leftCols<6>().transpose();
        wrenches = baseBlock.partialPivLu().solve(demand.head<6>());
    }
    else
    {
        Eigen::Matrix<double, 6, 12> stacked;
        stacked.leftCols<6>() = jacobians[0].leftCols<6>().transpose();
        stacked.rightCols<6>() = jacobians[1].leftCols<6>().transpose();
        const Eigen::Matrix<double, 6, 6> gram = stacked * stacked.transpose();
        wrenches = stacked.transpose() * gram.ldlt().solve(demand.head<6>());
    }

    Eigen::VectorXd torques = demand.tail(joints);
    for (std::size_t c = 0; c < jacobians.size(); ++c)
        torques -= jacobians[c].rightCols(joints).transpose()
                   * wrenches.segment<6>(static_cast<Eigen::Index>(6 * c));
    return torques;
}

std::vector<DisturbanceEvent> sortedDisturbances(const ExperimentConfig& config)
{
    std::vector<DisturbanceEvent> events = config.disturbances;
    std::stable_sort(events.begin(), events.end(),
                     [](const DisturbanceEvent& a, const DisturbanceEvent& b) {
                         return a.time < b.time;
                     });
    return events;
}

struct NoiseSource
{
    std::mt19937_64 engine;
    std::normal_distribution<double> normal{0.0, 1.0};
    double scale = 0.0;

    NoiseSource(std::uint64_t seed, double standardDeviation)
        : engine(seed), scale(standardDeviation)
    {
    }

    Eigen::Vector2d draw()
    {
        if (scale <= 0.0)
            return Eigen::Vector2d::Zero();
        const double x = normal(engine);
        const double y = normal(engine);
        return {scale * x, scale * y};
    }
};

ExperimentResult runLipmExperiment(const Model& model,
                                   const ExperimentConfig& config,
                                   ExperimentResult result)
{
    const WalkingPlan& plan = result.plan;
    const double b = plan.timeConstant;
    const double timeStep = plan.timeStep;
    const StancePlan stance
        = buildStancePlan(plan, model, oppositeSide(config.planner.firstSwing));

    SimplifiedLayerState simplified(config, b);
    ZmpComController zmpCom(config.zmpComGains, b);
    NoiseSource noise(config.seed, config.simulation.zmpNoiseStd);

    ControlTickLog& log = result.log;
    log.timeStep = timeStep;
    log.numJoints = 0;
    log.commandNames = {"zmp_applied_x", "zmp_applied_y"};
    log.records.reserve(plan.samples());

    LipmState state{plan.com[0], plan.comVelocity[0]};
    Eigen::Vector2d appliedZmp = plan.zmp[0];
    const std::vector<DisturbanceEvent> disturbances = sortedDisturbances(config);
    std::size_t nextDisturbance = 0;

    for (std::size_t k = 0; k < plan.samples(); ++k)
    {
        const double time = plan.time[k];

        Eigen::Vector2d zmpOffset = Eigen::Vector2d::Zero();
        while (nextDisturbance < disturbances.size()
               && disturbances[nextDisturbance].time < time + timeStep)
        {
            const DisturbanceEvent& event = disturbances[nextDisturbance++];
            if (event.target == DisturbanceEvent::Target::Dcm)
                state.velocity += event.offset / b;
            else
                zmpOffset += event.offset;
        }

        const Eigen::Vector2d measuredDcm = state.dcm(b);
        const Eigen::Vector2d measuredZmp = appliedZmp + noise.draw() + zmpOffset;

        const SimplifiedTick tick
            = runSimplifiedLayer(simplified, plan, stance, k, measuredDcm, appliedZmp);
        const Eigen::Vector2d comVelocityCommand = zmpCom.control(
            tick.zmp, measuredZmp, plan.com[k], state.position, plan.comVelocity[k]);

        // The plant can only realize a zmp inside the support region.
        const Eigen::Vector2d applied = projectOntoPolygon(tick.zmp, stance.polygons[k]);

        TickRecord record;
        record.time = time;
        record.phase = static_cast<int>(plan.phase[k]);
        record.contactLeft = plan.leftFoot[k].contact ? 1 : 0;
        record.contactRight = plan.rightFoot[k].contact ? 1 : 0;
        record.dcmReference = plan.dcm[k];
        record.dcmVelocityReference = plan.dcmVelocity[k];
        record.zmpReference = plan.zmp[k];
        record.comReference = plan.com[k];
        record.comVelocityReference = plan.comVelocity[k];
        record.leftFootReference = plan.leftFoot[k].position;
        record.rightFootReference = plan.rightFoot[k].position;
        record.dcm = measuredDcm;
        record.com = state.position;
        record.comVelocity = state.velocity;
        record.leftFoot = plan.leftFoot[k].position;
        record.rightFoot = plan.rightFoot[k].position;
        record.measuredZmp = measuredZmp;
        record.commandedZmp = tick.zmp;
        record.comVelocityCommand = comVelocityCommand;
        record.simplifiedStatus = tick.status;
        record.simplifiedIterations = tick.iterations;
        record.fallback = tick.fallback ? 1 : 0;
        record.estimatedBase = Eigen::Vector3d(state.position.x(), state.position.y(),
                                               plan.comHeight);
        record.torques = Eigen::VectorXd();
        record.jointVelocities = Eigen::VectorXd();
        record.commands = applied;
        log.records.push_back(std::move(record));

        if ((measuredDcm - plan.dcm[k]).norm() > config.simulation.fallThreshold)
        {
            result.fell = true;
            result.fallTime = time;
            break;
        }

        state = lipmStep(state, applied, b, timeStep);
        appliedZmp = applied;
    }
    return result;
}

void fillPlanReferences(TickRecord& record, const WalkingPlan& plan, std::size_t k)
{
    record.time = plan.time[k];
    record.phase = static_cast<int>(plan.phase[k]);
    record.dcmReference = plan.dcm[k];
    record.dcmVelocityReference = plan.dcmVelocity[k];
    record.zmpReference = plan.zmp[k];
    record.comReference = plan.com[k];
    record.comVelocityReference = plan.comVelocity[k];
    record.leftFootReference = plan.leftFoot[k].position;
    record.rightFootReference = plan.rightFoot[k].position;
}

IkReferences ikReferencesAt(const WalkingPlan& plan,
                            std::size_t k,
                            const Eigen::Vector2d& comPosition,
                            const Eigen::Vector2d& comVelocityCommand,
                            const Eigen::VectorXd& posture)
{
    IkReferences refs;
    refs.comPosition = Eigen::Vector3d(comPosition.x(), comPosition.y(), plan.comHeight);
    refs.comVelocity
        = Eigen::Vector3d(comVelocityCommand.x(), comVelocityCommand.y(), 0.0);
    const auto fillFoot = [](IkFootReference& foot, const FootReference& reference) {
        foot.position = reference.position;
        foot.rotation = rotationZ(reference.yaw);
        foot.twist.head<3>() = reference.velocity;
        foot.twist.tail<3>() = Eigen::Vector3d(0.0, 0.0, reference.yawRate);
        foot.inContact = reference.contact;
    };
    fillFoot(refs.leftFoot, plan.leftFoot[k]);
    fillFoot(refs.rightFoot, plan.rightFoot[k]);
    refs.torsoRotation = Eigen::Matrix3d::Identity();
    refs.posture = posture;
    return refs;
}

TorqueReferences torqueReferencesAt(const WalkingPlan& plan,
                                    std::size_t k,
                                    const Eigen::Vector2d& zmp,
                                    const Eigen::VectorXd& posture)
{
    TorqueReferences refs;
    const auto fillFoot = [](TorqueFootReference& foot, const FootReference& reference) {
        foot.position = reference.position;
        foot.rotation = rotationZ(reference.yaw);
        foot.twist.head<3>() = reference.velocity;
        foot.twist.tail<3>() = Eigen::Vector3d(0.0, 0.0, reference.yawRate);
        foot.twistRate.head<3>() = reference.acceleration;
        foot.inContact = reference.contact;
    };
    fillFoot(refs.leftFoot, plan.leftFoot[k]);
    fillFoot(refs.rightFoot, plan.rightFoot[k]);
    refs.comHeight = plan.comHeight;
    refs.posture = posture;
    refs.postureVelocity = Eigen::VectorXd::Zero(posture.size());
    refs.zmp = zmp;
    return refs;
}

ExperimentResult runKinematicExperiment(const Model& model,
                                        const ExperimentConfig& config,
                                        ExperimentResult result)
{
    const WalkingPlan& plan = result.plan;
    const double b = plan.timeConstant;
    const double timeStep = plan.timeStep;
    const int joints = model.numJoints();
    const Side firstSupport = oppositeSide(config.planner.firstSwing);
    const StancePlan stance = buildStancePlan(plan, model, firstSupport);

    const RestPosture rest = settleRestPosture(model, config.ikGains, plan.comHeight,
                                               config.planner.feetDistance, timeStep);

    SimplifiedLayerState simplified(config, b);
    ZmpComController zmpCom(config.zmpComGains, b);
    IkController ik(config.ikGains, timeStep);
    TorqueController torque(config.torqueGains);
    NoiseSource noise(config.seed, config.simulation.zmpNoiseStd);

    OdometrySettings odometrySettings;
    odometrySettings.schmitt = config.schmitt;
    odometrySettings.initialFixedSide = firstSupport;
    LeggedOdometry odometry(model, odometrySettings);

    KinDyn fkKinDyn(model);   // identity base forward kinematics
    KinDyn measKinDyn(model); // estimated state fed to the controllers
    KinDyn trueKinDyn(model); // plant state used for torque reconstruction

    ControlTickLog& log = result.log;
    log.timeStep = timeStep;
    log.numJoints = joints;
    switch (config.wholeBody)
    {
    case WholeBodyLayer::Position:
        for (int j = 0; j < joints; ++j)
            log.commandNames.push_back("qcmd_" + std::to_string(j));
        break;
    case WholeBodyLayer::Velocity:
        for (int j = 0; j < joints; ++j)
            log.commandNames.push_back("sdotcmd_" + std::to_string(j));
        break;
    case WholeBodyLayer::TorqueOpenLoop:
        log.commandNames = {"zmp_qp_x", "zmp_qp_y"};
        break;
    }
    log.records.reserve(plan.samples());

    // Plant state: the com follows the pendulum driven by the applied zmp,
    // the articulated robot tracks that pendulum kinematically. Feeding the
    // executed com velocity straight back into the dcm would instead close an
    // algebraic loop with magnitude near one and destabilize the discrete
    // system, a loop the inertia of a physical robot does not have.
    LipmState comState{plan.com[0], plan.comVelocity[0]};
    Eigen::VectorXd s = rest.jointPositions;
    Eigen::VectorXd sdotRealized = Eigen::VectorXd::Zero(joints);
    Eigen::VectorXd sdotLag = Eigen::VectorXd::Zero(joints);
    Eigen::VectorXd previousGeneralizedVelocity = Eigen::VectorXd::Zero(6 + joints);
    Eigen::Vector2d appliedZmp = plan.zmp[0];
    const std::vector<DisturbanceEvent> disturbances = sortedDisturbances(config);
    std::size_t nextDisturbance = 0;

    const Eigen::VectorXd lowerLimits = model.jointPositionLower();
    const Eigen::VectorXd upperLimits = model.jointPositionUpper();

    // The plant base hangs off the current stance sole. Anchor handovers
    // capture the landed sole where it actually is, mirroring the estimator;
    // snapping to the planned pose instead would teleport the base by the
    // swing tracking error at every stride.
    Side currentAnchor = firstSupport;
    const FootReference& firstAnchorReference
        = currentAnchor == Side::Left ? plan.leftFoot[0] : plan.rightFoot[0];
    Eigen::Isometry3d worldFromAnchorSole
        = flatSolePose(firstAnchorReference.position, firstAnchorReference.yaw);

    const auto refreshKinematics = [&]() {
        fkKinDyn.setState(Eigen::Isometry3d::Identity(), s,
                          Eigen::Matrix<double, 6, 1>::Zero(), Eigen::VectorXd::Zero(joints));
    };
    const auto anchoredBasePose = [&]() {
        Eigen::Isometry3d pose
            = worldFromAnchorSole * fkKinDyn.frameTransform(soleIndex(model, currentAnchor)).inverse();
        pose.linear() = projectToRotation(pose.linear());
        return pose;
    };

    refreshKinematics();
    Eigen::Isometry3d basePose = anchoredBasePose();
    odometry.reset(s, basePose, ContactState::Active, ContactState::Active);

    for (std::size_t k = 0; k < plan.samples(); ++k)
    {
        const double time = plan.time[k];
        refreshKinematics();
        if (stance.anchors[k] != currentAnchor)
        {
            const Eigen::Isometry3d baseNow = anchoredBasePose();
            currentAnchor = stance.anchors[k];
            worldFromAnchorSole
                = baseNow * fkKinDyn.frameTransform(soleIndex(model, currentAnchor));
            worldFromAnchorSole.linear() = projectToRotation(worldFromAnchorSole.linear());
        }
        basePose = anchoredBasePose();

        // Scripted contact forces follow the plan; the estimator sees them
        // through its Schmitt triggers.
        const double leftForce
            = plan.leftFoot[k].contact ? config.simulation.contactForce : 0.0;
        const double rightForce
            = plan.rightFoot[k].contact ? config.simulation.contactForce : 0.0;
        odometry.advance(s, leftForce, rightForce, time);

        Eigen::Vector2d zmpOffset = Eigen::Vector2d::Zero();
        while (nextDisturbance < disturbances.size()
               && disturbances[nextDisturbance].time < time + timeStep)
        {
            const DisturbanceEvent& event = disturbances[nextDisturbance++];
            if (event.target == DisturbanceEvent::Target::Dcm)
                comState.velocity += event.offset / b;
            else
                zmpOffset += event.offset;
        }

        // Measurements: pendulum com state, estimated base, exact joints.
        const Eigen::Isometry3d estimatedBase = odometry.basePose();
        const Eigen::Matrix<double, 6, 1> estimatedBaseVelocity
            = odometry.baseVelocity(sdotRealized);
        measKinDyn.setState(estimatedBase, s, estimatedBaseVelocity, sdotRealized);

        const Eigen::Vector2d measuredDcm = comState.dcm(b);
        const Eigen::Vector2d measuredZmp = appliedZmp + noise.draw() + zmpOffset;

        // True sole poses from the anchored plant state.
        const Eigen::Vector3d leftSolePosition
            = (basePose * fkKinDyn.frameTransform(soleIndex(model, Side::Left))).translation();
        const Eigen::Vector3d rightSolePosition
            = (basePose * fkKinDyn.frameTransform(soleIndex(model, Side::Right))).translation();

        // Simplified model layer.
        const SimplifiedTick tick
            = runSimplifiedLayer(simplified, plan, stance, k, measuredDcm, appliedZmp);
        const Eigen::Vector2d comVelocityCommand
            = zmpCom.control(tick.zmp, measuredZmp, plan.com[k], comState.position,
                             plan.comVelocity[k]);

        // Whole body layer: the velocity controller always runs (it drives
        // the kinematic plant); the torque controller replays the same tick.
        const IkReferences ikRefs = ikReferencesAt(plan, k, comState.position,
                                                   comVelocityCommand, rest.jointPositions);
        const IkResult ikResult = ik.solve(measKinDyn, ikRefs);
        const Eigen::VectorXd sdotCommand = ikResult.status == IkStatus::Solved
                                                ? ikResult.generalizedVelocity.tail(joints).eval()
                                                : Eigen::VectorXd::Zero(joints).eval();

        TickRecord record;
        fillPlanReferences(record, plan, k);
        record.contactLeft = odometry.leftContact() == ContactState::Active ? 1 : 0;
        record.contactRight = odometry.rightContact() == ContactState::Active ? 1 : 0;
        record.dcm = measuredDcm;
        record.com = comState.position;
        record.comVelocity = comState.velocity;
        record.leftFoot = leftSolePosition;
        record.rightFoot = rightSolePosition;
        record.measuredZmp = measuredZmp;
        record.commandedZmp = tick.zmp;
        record.comVelocityCommand = comVelocityCommand;
        record.simplifiedStatus = tick.status;
        record.simplifiedIterations = tick.iterations;
        record.fallback = tick.fallback ? 1 : 0;
        record.estimatedBase = estimatedBase.translation();
        record.estimatorSwitches = odometry.switchCount();

        int wholeBodyStatus = ikStatusCode(ikResult.status);
        int wholeBodyIterations = ikResult.iterations;

        Eigen::VectorXd qpTorques;
        Eigen::Vector2d torqueZmp = tick.zmp;
        if (config.wholeBody == WholeBodyLayer::TorqueOpenLoop)
        {
            TorqueReferences torqueRefs
                = torqueReferencesAt(plan, k, tick.zmp, rest.jointPositions);
            TorqueResult torqueResult = torque.solve(measKinDyn, torqueRefs);
            if (torqueResult.status == TorqueStatus::ZmpReferenceInfeasible)
            {
                torqueZmp = projectOntoPolygon(tick.zmp, stance.polygons[k]);
                torqueRefs.zmp = torqueZmp;
                record.fallback = 1;
                torqueResult = torque.solve(measKinDyn, torqueRefs);
            }
            wholeBodyStatus = torqueStatusCode(torqueResult.status);
            wholeBodyIterations = torqueResult.iterations;
            if (torqueResult.status == TorqueStatus::Solved)
                qpTorques = torqueResult.torques;
        }
        record.wholeBodyStatus = wholeBodyStatus;
        record.wholeBodyIterations = wholeBodyIterations;

        // Advance the plant.
        Eigen::VectorXd sNext;
        switch (config.wholeBody)
        {
        case WholeBodyLayer::Velocity:
        {
            const double mix = 1.0 - std::exp(-timeStep / config.simulation.velocityLag);
            sdotLag += mix * (sdotCommand - sdotLag);
            sNext = integrateJointPositions(s, sdotLag, timeStep, lowerLimits, upperLimits);
            record.commands = sdotCommand;
            break;
        }
        case WholeBodyLayer::Position:
            sNext = integrateJointPositions(s, sdotCommand, timeStep, lowerLimits, upperLimits);
            record.commands = sNext;
            break;
        case WholeBodyLayer::TorqueOpenLoop:
            sNext = integrateJointPositions(s, sdotCommand, timeStep, lowerLimits, upperLimits);
            record.commands = torqueZmp;
            break;
        }
        sdotRealized = (sNext - s) / timeStep;

        // Joint torques: reconstructed from the realized motion, or the QP
        // output when the torque controller solved.
        Eigen::Matrix<double, 6, 1> realizedBaseTwist;
        {
            trueKinDyn.setState(basePose, s, Eigen::Matrix<double, 6, 1>::Zero(), sdotRealized);
            realizedBaseTwist
                = pinnedBaseTwist(trueKinDyn, soleIndex(model, stance.anchors[k]), sdotRealized);
            trueKinDyn.setState(basePose, s, realizedBaseTwist, sdotRealized);
        }
        Eigen::VectorXd generalizedVelocity(6 + joints);
        generalizedVelocity.head<6>() = realizedBaseTwist;
        generalizedVelocity.tail(joints) = sdotRealized;
        const Eigen::VectorXd accelerations
            = (generalizedVelocity - previousGeneralizedVelocity) / timeStep;
        previousGeneralizedVelocity = generalizedVelocity;

        if (qpTorques.size() == joints)
            record.torques = qpTorques;
        else
            record.torques = reconstructTorques(trueKinDyn, accelerations,
                                                plan.leftFoot[k].contact,
                                                plan.rightFoot[k].contact);
        record.jointVelocities = sdotRealized;
        log.records.push_back(std::move(record));

        if ((measuredDcm - plan.dcm[k]).norm() > config.simulation.fallThreshold)
        {
            result.fell = true;
            result.fallTime = time;
            break;
        }

        // Advance the pendulum with the zmp the stance can actually realize.
        const Eigen::Vector2d applied = projectOntoPolygon(tick.zmp, stance.polygons[k]);
        comState = lipmStep(comState, applied, b, timeStep);
        appliedZmp = applied;
        s = sNext;
    }
    return result;
}

} // namespace

RestPosture settleRestPosture(const Model& model,
                              const IkGains& gains,
                              double comHeight,
                              double feetDistance,
                              double timeStep)
{
    if (!(comHeight > 0.0) || !(feetDistance > 0.0) || !(timeStep > 0.0))
        throw std::invalid_argument("rest posture: height, distance, time step must be positive");

    const int joints = model.numJoints();
    Eigen::VectorXd s = Eigen::VectorXd::Zero(joints);
    for (const std::string prefix : {"l_", "r_"})
    {
        s[model.jointIndex(prefix + "hip_pitch")] = -0.5;
        s[model.jointIndex(prefix + "knee")] = 1.0;
        s[model.jointIndex(prefix + "ankle_pitch")] = -0.5;
    }

    // Drop the base so the soles rest on the ground, centered on the origin.
    KinDyn kinDyn(model);
    kinDyn.setState(Eigen::Isometry3d::Identity(), s, Eigen::Matrix<double, 6, 1>::Zero(),
                    Eigen::VectorXd::Zero(joints));
    const Eigen::Vector3d leftSole
        = kinDyn.frameTransform(model.leftFoot().frameIndex).translation();
    const Eigen::Vector3d rightSole
        = kinDyn.frameTransform(model.rightFoot().frameIndex).translation();
    Eigen::Isometry3d basePose = Eigen::Isometry3d::Identity();
    basePose.translation() = -0.5 * (leftSole + rightSole);

    // Matching the integral to the proportional gain turns the slow
    // integrator mode into a critically damped pair, so the posture settles
    // to machine precision within the fixed iteration budget.
    IkGains settleGains = gains;
    settleGains.comIntegralGain = settleGains.comGain;
    settleGains.footIntegralGain = settleGains.footLinearGain;
    IkController controller(settleGains, timeStep);
    IkReferences refs;
    refs.comPosition = Eigen::Vector3d(0.0, 0.0, comHeight);
    refs.leftFoot.position = Eigen::Vector3d(0.0, 0.5 * feetDistance, 0.0);
    refs.leftFoot.inContact = false;
    refs.rightFoot.position = Eigen::Vector3d(0.0, -0.5 * feetDistance, 0.0);
    refs.rightFoot.inContact = false;
    refs.posture = s;

    const Eigen::VectorXd lower = model.jointPositionLower();
    const Eigen::VectorXd upper = model.jointPositionUpper();
    const int ticks = 1500;
    for (int it = 0; it < ticks; ++it)
    {
        kinDyn.setState(basePose, s, Eigen::Matrix<double, 6, 1>::Zero(),
                        Eigen::VectorXd::Zero(joints));
        const IkResult result = controller.solve(kinDyn, refs);
        if (result.status != IkStatus::Solved)
            throw std::runtime_error("rest posture: ik failed (" + result.diagnosis + ")");
        basePose
            = integrateBasePose(basePose, result.generalizedVelocity.head<6>(), timeStep);
        s = integrateJointPositions(s, result.generalizedVelocity.tail(joints), timeStep,
                                    lower, upper);
    }

    kinDyn.setState(basePose, s, Eigen::Matrix<double, 6, 1>::Zero(),
                    Eigen::VectorXd::Zero(joints));
    const double leftError = (kinDyn.frameTransform(model.leftFoot().frameIndex).translation()
                              - refs.leftFoot.position)
                                 .norm();
    const double rightError = (kinDyn.frameTransform(model.rightFoot().frameIndex).translation()
                               - refs.rightFoot.position)
                                  .norm();
    const double comError = (kinDyn.comPosition() - refs.comPosition).norm();
    if (leftError > 1e-6 || rightError > 1e-6 || comError > 1e-6)
        throw std::runtime_error("rest posture did not settle (feet "
                                 + formatNumber(std::max(leftError, rightError)) + " m, com "
                                 + formatNumber(comError) + " m)");

    RestPosture rest;
    rest.basePose = basePose;
    rest.jointPositions = s;
    return rest;
}

ExperimentResult runExperiment(const Model& model, const ExperimentConfig& config)
{
    config.validate();
    if (config.plant == PlantType::KinematicFullBody && model.numJoints() == 0)
        throw std::invalid_argument("experiment: the kinematic plant needs an articulated model");

    ExperimentResult result;
    result.plan = planWalk(config.planner);

    if (config.plant == PlantType::LipmOnly)
        result = runLipmExperiment(model, config, std::move(result));
    else
        result = runKinematicExperiment(model, config, std::move(result));

    result.metrics = computeMetrics(result.log, result.plan.footsteps, model.totalMass());
    result.metrics.fell = result.fell;
    result.metrics.fallTime = result.fallTime;
    result.exitCode = result.fell ? 2 : 0;
    return result;
}

std::string formatFootsteps(const std::vector<Footstep>& footsteps)
{
    std::string out = "# side x y yaw impact_time duration\n";
    for (const Footstep& step : footsteps)
    {
        out += sideName(step.side);
        out += ' ';
        out += formatNumber(step.position.x());
        out += ' ';
        out += formatNumber(step.position.y());
        out += ' ';
        out += formatNumber(step.yaw);
        out += ' ';
        out += formatNumber(step.impactTime);
        out += ' ';
        out += formatNumber(step.duration);
        out += '\n';
    }
    return out;
}

void exportResult(const ExperimentResult& result, const std::string& directory)
{
    std::filesystem::create_directories(directory);
    const std::filesystem::path base(directory);
    writeCsvFile(result.log, (base / "log.csv").string());

    const auto writeText = [&base](const char* name, const std::string& content) {
        const std::filesystem::path path = base / name;
        std::ofstream stream(path, std::ios::binary);
        if (!stream)
            throw std::runtime_error("experiment: cannot open '" + path.string() + "'");
        stream.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!stream)
            throw std::runtime_error("experiment: write to '" + path.string() + "' failed");
    };
    writeText("metrics.txt", formatMetrics(result.metrics));
    writeText("footsteps.txt", formatFootsteps(result.plan.footsteps));
}

} // namespace dcmwalk
