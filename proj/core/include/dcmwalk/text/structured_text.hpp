#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dcmwalk
{

/// Parse or lookup failure in a structured text file. The message always
/// starts with "<file>:<line>:" so tooling can jump to the offending spot.
struct TextFormatError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct TextEntry
{
    std::string key;
    std::vector<std::string> values;
    int line = 0;
};

/**
 * One block of a structured text file. The format is line oriented:
 *
 *   # comment
 *   key value [value ...]
 *   type [label] {
 *     ...nested entries and blocks...
 *   }
 *
 * The root node has empty type/label and holds the top level entries.
 */
struct TextNode
{
    std::string type;
    std::string label;
    int line = 0;
    std::string file;
    std::vector<TextEntry> entries;
    std::vector<TextNode> children;

    std::string location() const;

    bool hasEntry(const std::string& key) const;
    const TextEntry& entry(const std::string& key) const;

    double scalarEntry(const std::string& key) const;
    double scalarEntryOr(const std::string& key, double fallback) const;
    int intEntry(const std::string& key) const;
    std::string stringEntry(const std::string& key) const;
    std::string stringEntryOr(const std::string& key, const std::string& fallback) const;
    bool boolEntryOr(const std::string& key, bool fallback) const;
    Eigen::Vector2d vec2Entry(const std::string& key) const;
    Eigen::Vector3d vec3Entry(const std::string& key) const;
    std::vector<double> numberListEntry(const std::string& key) const;

    const TextNode* findChild(const std::string& type) const;
    const TextNode* findChild(const std::string& type, const std::string& label) const;
    const TextNode& child(const std::string& type) const;
    const TextNode& child(const std::string& type, const std::string& label) const;
    std::vector<const TextNode*> childrenOfType(const std::string& type) const;
};

TextNode parseStructuredText(const std::string& content, const std::string& fileName);
TextNode parseStructuredTextFile(const std::string& path);

} // namespace dcmwalk
