#include <dcmwalk/text/structured_text.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace dcmwalk
{

namespace
{

std::vector<std::string> tokenize(const std::string& line)
{
    std::vector<std::string> tokens;
    std::istringstream stream(line);
    std::string token;
    while (stream >> token)
    {
        tokens.push_back(token);
    }
    return tokens;
}

double parseNumber(const TextNode& node, const TextEntry& entry, const std::string& token)
{
    try
    {
        size_t consumed = 0;
        const double value = std::stod(token, &consumed);
        if (consumed == token.size())
        {
            return value;
        }
    }
    catch (const std::exception&)
    {
    }
    throw TextFormatError(node.file + ":" + std::to_string(entry.line) + ": key '" + entry.key
                          + "': '" + token + "' is not a number");
}

} // namespace

std::string TextNode::location() const
{
    std::string where = file + ":" + std::to_string(line);
    if (!type.empty())
    {
        where += ": " + type;
        if (!label.empty())
        {
            where += " " + label;
        }
    }
    return where;
}

bool TextNode::hasEntry(const std::string& key) const
{
    for (const TextEntry& e : entries)
    {
        if (e.key == key)
        {
            return true;
        }
    }
    return false;
}

const TextEntry& TextNode::entry(const std::string& key) const
{
    for (const TextEntry& e : entries)
    {
        if (e.key == key)
        {
            return e;
        }
    }
    throw TextFormatError(location() + ": missing key '" + key + "'");
}

double TextNode::scalarEntry(const std::string& key) const
{
    const TextEntry& e = entry(key);
    if (e.values.size() != 1)
    {
        throw TextFormatError(file + ":" + std::to_string(e.line) + ": key '" + key
                              + "' expects exactly one value");
    }
    return parseNumber(*this, e, e.values[0]);
}

double TextNode::scalarEntryOr(const std::string& key, double fallback) const
{
    return hasEntry(key) ? scalarEntry(key) : fallback;
}

int TextNode::intEntry(const std::string& key) const
{
    const double value = scalarEntry(key);
    const int rounded = static_cast<int>(std::lround(value));
    if (std::abs(value - rounded) > 1e-9)
    {
        const TextEntry& e = entry(key);
        throw TextFormatError(file + ":" + std::to_string(e.line) + ": key '" + key
                              + "' expects an integer");
    }
    return rounded;
}

std::string TextNode::stringEntry(const std::string& key) const
{
    const TextEntry& e = entry(key);
    if (e.values.size() != 1)
    {
        throw TextFormatError(file + ":" + std::to_string(e.line) + ": key '" + key
                              + "' expects exactly one value");
    }
    return e.values[0];
}

std::string TextNode::stringEntryOr(const std::string& key, const std::string& fallback) const
{
    return hasEntry(key) ? stringEntry(key) : fallback;
}

bool TextNode::boolEntryOr(const std::string& key, bool fallback) const
{
    if (!hasEntry(key))
    {
        return fallback;
    }
    const std::string value = stringEntry(key);
    if (value == "true" || value == "1" || value == "on")
    {
        return true;
    }
    if (value == "false" || value == "0" || value == "off")
    {
        return false;
    }
    const TextEntry& e = entry(key);
    throw TextFormatError(file + ":" + std::to_string(e.line) + ": key '" + key
                          + "' expects true/false");
}

Eigen::Vector2d TextNode::vec2Entry(const std::string& key) const
{
    const TextEntry& e = entry(key);
    if (e.values.size() != 2)
    {
        throw TextFormatError(file + ":" + std::to_string(e.line) + ": key '" + key
                              + "' expects 2 values");
    }
    return {parseNumber(*this, e, e.values[0]), parseNumber(*this, e, e.values[1])};
}

Eigen::Vector3d TextNode::vec3Entry(const std::string& key) const
{
    const TextEntry& e = entry(key);
    if (e.values.size() != 3)
    {
        throw TextFormatError(file + ":" + std::to_string(e.line) + ": key '" + key
                              + "' expects 3 values");
    }
    return {parseNumber(*this, e, e.values[0]), parseNumber(*this, e, e.values[1]),
            parseNumber(*this, e, e.values[2])};
}

std::vector<double> TextNode::numberListEntry(const std::string& key) const
{
    const TextEntry& e = entry(key);
    std::vector<double> values;
    values.reserve(e.values.size());
    for (const std::string& token : e.values)
    {
        values.push_back(parseNumber(*this, e, token));
    }
    return values;
}

const TextNode* TextNode::findChild(const std::string& childType) const
{
    for (const TextNode& node : children)
    {
        if (node.type == childType)
        {
            return &node;
        }
    }
    return nullptr;
}

const TextNode* TextNode::findChild(const std::string& childType,
                                    const std::string& childLabel) const
{
    for (const TextNode& node : children)
    {
        if (node.type == childType && node.label == childLabel)
        {
            return &node;
        }
    }
    return nullptr;
}

const TextNode& TextNode::child(const std::string& childType) const
{
    if (const TextNode* node = findChild(childType))
    {
        return *node;
    }
    throw TextFormatError(location() + ": missing block '" + childType + "'");
}

const TextNode& TextNode::child(const std::string& childType, const std::string& childLabel) const
{
    if (const TextNode* node = findChild(childType, childLabel))
    {
        return *node;
    }
    throw TextFormatError(location() + ": missing block '" + childType + " " + childLabel + "'");
}

std::vector<const TextNode*> TextNode::childrenOfType(const std::string& childType) const
{
    std::vector<const TextNode*> result;
    for (const TextNode& node : children)
    {
        if (node.type == childType)
        {
            result.push_back(&node);
        }
    }
    return result;
}

TextNode parseStructuredText(const std::string& content, const std::string& fileName)
{
    TextNode root;
    root.file = fileName;
    root.line = 1;

    std::vector<TextNode*> stack{&root};
    std::istringstream stream(content);
    std::string line;
    int lineNumber = 0;

    while (std::getline(stream, line))
    {
        lineNumber++;
        if (const size_t hash = line.find('#'); hash != std::string::npos)
        {
            line.erase(hash);
        }
        std::vector<std::string> tokens = tokenize(line);
        if (tokens.empty())
        {
            continue;
        }

        if (tokens.back() == "}")
        {
            if (tokens.size() != 1)
            {
                throw TextFormatError(fileName + ":" + std::to_string(lineNumber)
                                      + ": '}' must stand alone");
            }
            if (stack.size() == 1)
            {
                throw TextFormatError(fileName + ":" + std::to_string(lineNumber)
                                      + ": unmatched '}'");
            }
            stack.pop_back();
            continue;
        }

        if (tokens.back() == "{")
        {
            tokens.pop_back();
            if (tokens.empty() || tokens.size() > 2)
            {
                throw TextFormatError(fileName + ":" + std::to_string(lineNumber)
                                      + ": block header must be 'type [label] {'");
            }
            TextNode node;
            node.type = tokens[0];
            node.label = tokens.size() == 2 ? tokens[1] : "";
            node.line = lineNumber;
            node.file = fileName;
            stack.back()->children.push_back(std::move(node));
            stack.push_back(&stack.back()->children.back());
            continue;
        }

        TextEntry entry;
        entry.key = tokens[0];
        entry.values.assign(tokens.begin() + 1, tokens.end());
        entry.line = lineNumber;
        stack.back()->entries.push_back(std::move(entry));
    }

    if (stack.size() != 1)
    {
        throw TextFormatError(fileName + ":" + std::to_string(lineNumber) + ": unclosed block '"
                              + stack.back()->type + "' opened on line "
                              + std::to_string(stack.back()->line));
    }
    return root;
}

TextNode parseStructuredTextFile(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw TextFormatError(path + ":1: cannot open file");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parseStructuredText(buffer.str(), path);
}

} // namespace dcmwalk
