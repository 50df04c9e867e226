#include <dcmwalk/estimation/schmitt_trigger.hpp>

#include <stdexcept>

namespace dcmwalk
{

void SchmittSettings::validate() const
{
    if (!(offThreshold < onThreshold))
    {
        throw std::invalid_argument(
            "SchmittSettings: offThreshold must be below onThreshold");
    }
    if (onDwell < 0.0 || offDwell < 0.0)
    {
        throw std::invalid_argument("SchmittSettings: dwell times must be non-negative");
    }
}

SchmittTrigger::SchmittTrigger(const SchmittSettings& settings, ContactState initialState)
    : m_settings(settings)
    , m_state(initialState)
{
    m_settings.validate();
}

ContactState SchmittTrigger::update(double force, double timestamp)
{
    if (m_lastTimestamp && timestamp < *m_lastTimestamp)
    {
        throw std::invalid_argument("SchmittTrigger: timestamps must be nondecreasing");
    }
    m_lastTimestamp = timestamp;

    const bool crossing = m_state == ContactState::Inactive
                              ? force >= m_settings.onThreshold
                              : force <= m_settings.offThreshold;
    if (!crossing)
    {
        m_crossingSince.reset();
        return m_state;
    }
    if (!m_crossingSince)
    {
        m_crossingSince = timestamp;
    }
    const double dwell =
        m_state == ContactState::Inactive ? m_settings.onDwell : m_settings.offDwell;
    // A nanosecond of slack so representation noise on sampled clocks cannot
    // delay the switch by a whole extra sample.
    if (timestamp - *m_crossingSince >= dwell - 1e-9)
    {
        m_state = m_state == ContactState::Inactive ? ContactState::Active
                                                    : ContactState::Inactive;
        m_crossingSince.reset();
    }
    return m_state;
}

void SchmittTrigger::reset(ContactState state)
{
    m_state = state;
    m_crossingSince.reset();
    m_lastTimestamp.reset();
}

} // namespace dcmwalk
