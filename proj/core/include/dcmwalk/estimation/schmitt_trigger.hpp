#pragma once

#include <optional>

namespace dcmwalk
{

enum class ContactState
{
    Inactive,
    Active
};

/// Hysteresis thresholds on the contact normal force. A switch fires only
/// after the force has stayed beyond the threshold for the dwell time, so
/// impact bounces and brief unloading do not toggle the contact.
struct SchmittSettings
{
    double onThreshold = 30.0;   ///< N, rising switch level
    double offThreshold = 10.0;  ///< N, falling switch level
    double onDwell = 0.05;       ///< s the force must hold above onThreshold
    double offDwell = 0.05;      ///< s the force must hold below offThreshold

    void validate() const;
};

class SchmittTrigger
{
public:
    explicit SchmittTrigger(const SchmittSettings& settings,
                            ContactState initialState = ContactState::Inactive);

    /// Feeds one force sample. Timestamps must be nondecreasing.
    ContactState update(double force, double timestamp);

    ContactState state() const { return m_state; }

    void reset(ContactState state);

private:
    SchmittSettings m_settings;
    ContactState m_state;
    std::optional<double> m_crossingSince; ///< when the force entered the switching region
    std::optional<double> m_lastTimestamp;
};

} // namespace dcmwalk
