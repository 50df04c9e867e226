#include <dcmwalk/harness/tick_log.hpp>

#include <charconv>
#include <cstddef>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string_view>
#include <system_error>

namespace dcmwalk
{

namespace
{

constexpr std::string_view kMagic = "# dcmwalk log v";

void appendNumber(std::string& out, double value)
{
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (result.ec != std::errc())
        throw std::runtime_error("tick log: number formatting failed");
    out.append(buffer, result.ptr);
}

void appendNumber(std::string& out, int value)
{
    out.append(std::to_string(value));
}

std::vector<std::string> headerColumns(int numJoints, const std::vector<std::string>& commandNames)
{
    std::vector<std::string> columns
        = {"time",           "phase",          "contact_left",   "contact_right",
           "dcm_ref_x",      "dcm_ref_y",      "dcm_vel_ref_x",  "dcm_vel_ref_y",
           "zmp_ref_x",      "zmp_ref_y",      "com_ref_x",      "com_ref_y",
           "com_vel_ref_x",  "com_vel_ref_y",  "left_foot_ref_x", "left_foot_ref_y",
           "left_foot_ref_z", "right_foot_ref_x", "right_foot_ref_y", "right_foot_ref_z",
           "dcm_x",          "dcm_y",          "com_x",          "com_y",
           "com_vel_x",      "com_vel_y",      "left_foot_x",    "left_foot_y",
           "left_foot_z",    "right_foot_x",   "right_foot_y",   "right_foot_z",
           "zmp_meas_x",     "zmp_meas_y",     "zmp_cmd_x",      "zmp_cmd_y",
           "com_vel_cmd_x",  "com_vel_cmd_y",  "simplified_status", "simplified_iterations",
           "wholebody_status", "wholebody_iterations", "fallback",
           "base_est_x",     "base_est_y",     "base_est_z",     "est_switches"};
    for (int j = 0; j < numJoints; ++j)
        columns.push_back("tau_" + std::to_string(j));
    for (int j = 0; j < numJoints; ++j)
        columns.push_back("sdot_" + std::to_string(j));
    for (const std::string& name : commandNames)
        columns.push_back(name);
    return columns;
}

std::vector<std::string_view> splitLine(std::string_view line, char separator)
{
    std::vector<std::string_view> tokens;
    std::size_t start = 0;
    while (true)
    {
        const std::size_t end = line.find(separator, start);
        if (end == std::string_view::npos)
        {
            tokens.push_back(line.substr(start));
            return tokens;
        }
        tokens.push_back(line.substr(start, end - start));
        start = end + 1;
    }
}

class RowReader
{
public:
    RowReader(const std::vector<std::string_view>& tokens, int line)
        : m_tokens(tokens), m_line(line)
    {
    }

    double number()
    {
        if (m_cursor >= m_tokens.size())
            throw std::runtime_error("tick log: row " + std::to_string(m_line) + " is too short");
        const std::string_view token = m_tokens[m_cursor++];
        double value = 0.0;
        const auto result = std::from_chars(token.data(), token.data() + token.size(), value);
        if (result.ec != std::errc() || result.ptr != token.data() + token.size())
            throw std::runtime_error("tick log: bad number '" + std::string(token) + "' on row "
                                     + std::to_string(m_line));
        return value;
    }

    int integer() { return static_cast<int>(number()); }

    Eigen::Vector2d vec2()
    {
        Eigen::Vector2d value;
        value.x() = number();
        value.y() = number();
        return value;
    }

    Eigen::Vector3d vec3()
    {
        Eigen::Vector3d value;
        value.x() = number();
        value.y() = number();
        value.z() = number();
        return value;
    }

    Eigen::VectorXd vector(int size)
    {
        Eigen::VectorXd value(size);
        for (int i = 0; i < size; ++i)
            value[i] = number();
        return value;
    }

private:
    const std::vector<std::string_view>& m_tokens;
    int m_line = 0;
    std::size_t m_cursor = 0;
};

} // namespace

std::string writeCsv(const ControlTickLog& log)
{
    std::string out;
    out.reserve(256 + log.records.size() * 1024);

    out.append(kMagic);
    appendNumber(out, log.schemaVersion);
    out.append(" dt=");
    appendNumber(out, log.timeStep);
    out.push_back('\n');

    const std::vector<std::string> columns = headerColumns(log.numJoints, log.commandNames);
    for (std::size_t i = 0; i < columns.size(); ++i)
    {
        if (i > 0)
            out.push_back(',');
        out.append(columns[i]);
    }
    out.push_back('\n');

    for (const TickRecord& record : log.records)
    {
        if (record.torques.size() != log.numJoints
            || record.jointVelocities.size() != log.numJoints
            || record.commands.size() != static_cast<Eigen::Index>(log.commandNames.size()))
            throw std::invalid_argument("tick log: record sizes do not match the header");

        appendNumber(out, record.time);
        const auto put = [&out](double value) {
            out.push_back(',');
            appendNumber(out, value);
        };
        const auto putInt = [&out](int value) {
            out.push_back(',');
            appendNumber(out, value);
        };
        putInt(record.phase);
        putInt(record.contactLeft);
        putInt(record.contactRight);
        for (int i = 0; i < 2; ++i)
            put(record.dcmReference[i]);
        for (int i = 0; i < 2; ++i)
            put(record.dcmVelocityReference[i]);
        for (int i = 0; i < 2; ++i)
            put(record.zmpReference[i]);
        for (int i = 0; i < 2; ++i)
            put(record.comReference[i]);
        for (int i = 0; i < 2; ++i)
            put(record.comVelocityReference[i]);
        for (int i = 0; i < 3; ++i)
            put(record.leftFootReference[i]);
        for (int i = 0; i < 3; ++i)
            put(record.rightFootReference[i]);
        for (int i = 0; i < 2; ++i)
            put(record.dcm[i]);
        for (int i = 0; i < 2; ++i)
            put(record.com[i]);
        for (int i = 0; i < 2; ++i)
            put(record.comVelocity[i]);
        for (int i = 0; i < 3; ++i)
            put(record.leftFoot[i]);
        for (int i = 0; i < 3; ++i)
            put(record.rightFoot[i]);
        for (int i = 0; i < 2; ++i)
            put(record.measuredZmp[i]);
        for (int i = 0; i < 2; ++i)
            put(record.commandedZmp[i]);
        for (int i = 0; i < 2; ++i)
            put(record.comVelocityCommand[i]);
        putInt(record.simplifiedStatus);
        putInt(record.simplifiedIterations);
        putInt(record.wholeBodyStatus);
        putInt(record.wholeBodyIterations);
        putInt(record.fallback);
        for (int i = 0; i < 3; ++i)
            put(record.estimatedBase[i]);
        putInt(record.estimatorSwitches);
        for (Eigen::Index i = 0; i < record.torques.size(); ++i)
            put(record.torques[i]);
        for (Eigen::Index i = 0; i < record.jointVelocities.size(); ++i)
            put(record.jointVelocities[i]);
        for (Eigen::Index i = 0; i < record.commands.size(); ++i)
            put(record.commands[i]);
        out.push_back('\n');
    }
    return out;
}

void writeCsvFile(const ControlTickLog& log, const std::string& path)
{
    std::ofstream stream(path, std::ios::binary);
    if (!stream)
        throw std::runtime_error("tick log: cannot open '" + path + "' for writing");
    const std::string content = writeCsv(log);
    stream.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!stream)
        throw std::runtime_error("tick log: write to '" + path + "' failed");
}

ControlTickLog readCsv(const std::string& content)
{
    std::vector<std::string_view> lines;
    for (std::string_view rest = content; !rest.empty();)
    {
        const std::size_t end = rest.find('\n');
        if (end == std::string_view::npos)
        {
            lines.push_back(rest);
            break;
        }
        lines.push_back(rest.substr(0, end));
        rest = rest.substr(end + 1);
    }
    if (lines.size() < 2)
        throw std::runtime_error("tick log: missing header");

    ControlTickLog log;
    {
        const std::string_view magic = lines[0];
        if (magic.substr(0, kMagic.size()) != kMagic)
            throw std::runtime_error("tick log: unrecognized file magic");
        std::string_view tail = magic.substr(kMagic.size());
        const std::size_t space = tail.find(' ');
        if (space == std::string_view::npos || tail.substr(space + 1, 3) != "dt=")
            throw std::runtime_error("tick log: malformed header line");
        const std::string_view version = tail.substr(0, space);
        const std::string_view dt = tail.substr(space + 4);
        auto result
            = std::from_chars(version.data(), version.data() + version.size(), log.schemaVersion);
        if (result.ec != std::errc())
            throw std::runtime_error("tick log: bad schema version");
        result = std::from_chars(dt.data(), dt.data() + dt.size(), log.timeStep);
        if (result.ec != std::errc())
            throw std::runtime_error("tick log: bad time step");
    }

    const std::vector<std::string_view> names = splitLine(lines[1], ',');
    std::size_t firstTau = names.size();
    for (std::size_t i = 0; i < names.size(); ++i)
    {
        if (names[i] == "tau_0")
        {
            firstTau = i;
            break;
        }
    }
    if (firstTau == names.size())
        throw std::runtime_error("tick log: header misses the torque columns");
    int numJoints = 0;
    while (firstTau + numJoints < names.size()
           && names[firstTau + numJoints] == "tau_" + std::to_string(numJoints))
        ++numJoints;
    log.numJoints = numJoints;
    const std::size_t firstCommand = firstTau + 2 * static_cast<std::size_t>(numJoints);
    for (std::size_t i = firstCommand; i < names.size(); ++i)
        log.commandNames.emplace_back(names[i]);

    const std::vector<std::string> expected = headerColumns(numJoints, log.commandNames);
    if (expected.size() != names.size())
        throw std::runtime_error("tick log: unexpected column count");
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] != expected[i])
            throw std::runtime_error("tick log: unexpected column '" + std::string(names[i])
                                     + "' at position " + std::to_string(i));

    log.records.reserve(lines.size() - 2);
    for (std::size_t row = 2; row < lines.size(); ++row)
    {
        if (lines[row].empty())
            continue;
        const std::vector<std::string_view> tokens = splitLine(lines[row], ',');
        if (tokens.size() != names.size())
            throw std::runtime_error("tick log: row " + std::to_string(row + 1)
                                     + " has the wrong field count");
        RowReader reader(tokens, static_cast<int>(row + 1));
        TickRecord record;
        record.time = reader.number();
        record.phase = reader.integer();
        record.contactLeft = reader.integer();
        record.contactRight = reader.integer();
        record.dcmReference = reader.vec2();
        record.dcmVelocityReference = reader.vec2();
        record.zmpReference = reader.vec2();
        record.comReference = reader.vec2();
        record.comVelocityReference = reader.vec2();
        record.leftFootReference = reader.vec3();
        record.rightFootReference = reader.vec3();
        record.dcm = reader.vec2();
        record.com = reader.vec2();
        record.comVelocity = reader.vec2();
        record.leftFoot = reader.vec3();
        record.rightFoot = reader.vec3();
        record.measuredZmp = reader.vec2();
        record.commandedZmp = reader.vec2();
        record.comVelocityCommand = reader.vec2();
        record.simplifiedStatus = reader.integer();
        record.simplifiedIterations = reader.integer();
        record.wholeBodyStatus = reader.integer();
        record.wholeBodyIterations = reader.integer();
        record.fallback = reader.integer();
        record.estimatedBase = reader.vec3();
        record.estimatorSwitches = reader.integer();
        record.torques = reader.vector(numJoints);
        record.jointVelocities = reader.vector(numJoints);
        record.commands = reader.vector(static_cast<int>(log.commandNames.size()));
        log.records.push_back(std::move(record));
    }
    return log;
}

ControlTickLog readCsvFile(const std::string& path)
{
    std::ifstream stream(path, std::ios::binary);
    if (!stream)
        throw std::runtime_error("tick log: cannot open '" + path + "'");
    std::string content((std::istreambuf_iterator<char>(stream)), std::istreambuf_iterator<char>());
    return readCsv(content);
}

} // namespace dcmwalk
