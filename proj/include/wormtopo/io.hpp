#pragma once

#include "wormtopo/embed.hpp"
#include "wormtopo/homology.hpp"
#include "wormtopo/landscape.hpp"
#include "wormtopo/stats.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace wormtopo {

using KeyValues = std::map<std::string, std::string>;

/// FNV-1a 64 of the canonical "key=value\n" rendering, as 16 hex digits.
std::string config_hash(const KeyValues& config);
std::string format_key_values(const KeyValues& config);

/// Shortest decimal that reads back to the same double; "inf" / "-inf".
std::string format_double(double v);
/// Inverse of format_double; throws DataError naming `what` on bad input.
double parse_double(std::string_view token, const std::string& what = "number");

/// Every CSV starts with "# config_hash=<hash>"; readers skip '#' lines.
std::string header_line(const std::string& hash);

/// Creates parent directories and replaces the file contents.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Optional column header row, then one comma-separated row per matrix row.
std::string format_matrix(const Eigen::MatrixXd& m, const std::string& hash,
                          const std::vector<std::string>& columns = {});
/// Numeric rows; a non-numeric first row is taken as a header.
Eigen::MatrixXd parse_matrix(const std::string& text, const std::string& source = "matrix");
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

std::string format_point_cloud(const PointCloud& pc, const std::string& hash);

/// Rows "patch,degree,birth,death" with essential deaths written as inf.
/// `diagrams[p]` belongs to patch p.
std::string format_diagrams(const std::vector<std::vector<PersistenceDiagram>>& diagrams, const std::string& hash);
/// Inverse of format_diagrams, grouped by patch then ascending degree.
std::vector<std::vector<PersistenceDiagram>> parse_diagrams(const std::string& text);

/// "# grid t_min=...,t_max=...,samples=G,depths=K", then K rows of G values.
std::string format_landscape(const DiscretizedLandscape& l, const std::string& hash);
DiscretizedLandscape parse_landscape(const std::string& text);

/// One "id,label" per line, or "id,label,path" for manifests.
struct LabelRow {
    std::string id;
    std::string label;
    std::string path;
};
std::vector<LabelRow> parse_labels(const std::string& text);

}  // namespace wormtopo
