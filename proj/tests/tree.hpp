#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace treecmp {

/// Relative path -> contents of every regular file under `root`.
inline std::map<std::string, std::string> snapshot(const std::filesystem::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        out[std::filesystem::relative(e.path(), root).generic_string()] =
            std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    return out;
}

/// Paths that are missing on one side or differ in content; empty when equal.
inline std::vector<std::string> differences(const std::filesystem::path& a, const std::filesystem::path& b) {
    const auto x = snapshot(a);
    const auto y = snapshot(b);
    std::vector<std::string> diff;
    for (const auto& [path, text] : x) {
        auto it = y.find(path);
        if (it == y.end() || it->second != text) diff.push_back(path);
    }
    for (const auto& [path, text] : y) {
        if (!x.count(path)) diff.push_back(path);
    }
    return diff;
}

}  // namespace treecmp
