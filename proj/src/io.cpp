#include "wormtopo/io.hpp"

#include "wormtopo/error.hpp"

#include <charconv>
#include <cstdio>
#include <limits>
#include <cmath>
#include <fstream>
#include <sstream>

namespace wormtopo {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename F>
void for_each_data_line(const std::string& text, F&& f) {
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = text.find('\n', start);
        std::string_view line(text.data() + start, (end == std::string::npos ? text.size() : end) - start);
        ++lineno;
        line = trim(line);
        if (!line.empty() && line.front() != '#') f(line, lineno);
        if (end == std::string::npos) break;
        start = end + 1;
    }
}

bool try_parse_double(std::string_view token, double& out) {
    token = trim(token);
    if (token == "inf" || token == "+inf") { out = std::numeric_limits<double>::infinity(); return true; }
    if (token == "-inf") { out = -std::numeric_limits<double>::infinity(); return true; }
    const auto res = std::from_chars(token.data(), token.data() + token.size(), out);
    return res.ec == std::errc() && res.ptr == token.data() + token.size() && !token.empty();
}

std::string key_of(std::string_view header, std::string_view key) {
    for (auto part : split(header, ',')) {
        part = trim(part);
        if (part.substr(0, key.size()) == key && part.size() > key.size() && part[key.size()] == '=') {
            return std::string(part.substr(key.size() + 1));
        }
    }
    throw DataError("landscape header is missing " + std::string(key));
}

}  // namespace

std::string format_key_values(const KeyValues& config) {
    std::string out;
    for (const auto& [k, v] : config) out += k + "=" + v + "\n";
    return out;
}

std::string config_hash(const KeyValues& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : format_key_values(config)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view token, const std::string& what) {
    double v = 0.0;
    if (!try_parse_double(token, v)) throw DataError("cannot parse " + what + " from '" + std::string(token) + "'");
    return v;
}

std::string header_line(const std::string& hash) { return "# config_hash=" + hash + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw DataError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_matrix(const Eigen::MatrixXd& m, const std::string& hash, const std::vector<std::string>& columns) {
    std::string out = header_line(hash);
    if (!columns.empty()) {
        for (std::size_t j = 0; j < columns.size(); ++j) out += (j ? "," : "") + columns[j];
        out += '\n';
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += format_double(m(i, j));
        }
        out += '\n';
    }
    return out;
}

Eigen::MatrixXd parse_matrix(const std::string& text, const std::string& source) {
    std::vector<std::vector<double>> rows;
    bool first = true;
    for_each_data_line(text, [&](std::string_view line, std::size_t lineno) {
        const auto tokens = split(line, ',');
        std::vector<double> row(tokens.size());
        for (std::size_t j = 0; j < tokens.size(); ++j) {
            if (!try_parse_double(tokens[j], row[j])) {
                if (first) { first = false; return; }
                throw ParseError(lineno, source + ": bad token '" + std::string(tokens[j]) + "'");
            }
        }
        first = false;
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError(lineno, source + ": expected " + std::to_string(rows.front().size()) + " columns");
        }
        rows.push_back(std::move(row));
    });
    if (rows.empty()) throw InsufficientDataError(source + ": no data rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) { return parse_matrix(read_text(path), path.string()); }

std::string format_point_cloud(const PointCloud& pc, const std::string& hash) {
    std::string out = header_line(hash);
    if (pc.provenance) {
        out += "# parent=" + pc.provenance->parent_id + ",window=" + std::to_string(pc.provenance->window_length) + "\n";
    }
    return out + format_matrix(pc.points, hash).substr(header_line(hash).size());
}

std::string format_diagrams(const std::vector<std::vector<PersistenceDiagram>>& diagrams, const std::string& hash) {
    // The layout line keeps empty diagrams and pairless patches on a round trip.
    std::string out = header_line(hash) + "# layout patches=" + std::to_string(diagrams.size()) + ",degrees=";
    if (!diagrams.empty()) {
        for (std::size_t i = 0; i < diagrams[0].size(); ++i) {
            if (i) out += ';';
            out += std::to_string(diagrams[0][i].degree);
        }
    }
    out += "\npatch,degree,birth,death\n";
    for (std::size_t p = 0; p < diagrams.size(); ++p) {
        for (const auto& d : diagrams[p]) {
            for (const auto& pair : d.pairs) {
                out += std::to_string(p) + "," + std::to_string(d.degree) + "," + format_double(pair.birth) + "," +
                       format_double(pair.death) + "\n";
            }
        }
    }
    return out;
}

std::vector<std::vector<PersistenceDiagram>> parse_diagrams(const std::string& text) {
    std::map<std::size_t, std::map<int, PersistenceDiagram>> grouped;
    for_each_data_line(text, [&](std::string_view line, std::size_t lineno) {
        const auto tokens = split(line, ',');
        if (tokens.size() != 4) throw ParseError(lineno, "diagram rows have 4 fields");
        if (trim(tokens[0]) == "patch") return;
        double patch = 0.0;
        double degree = 0.0;
        PersistencePair pair;
        if (!try_parse_double(tokens[0], patch) || !try_parse_double(tokens[1], degree) ||
            !try_parse_double(tokens[2], pair.birth) || !try_parse_double(tokens[3], pair.death) || patch < 0 ||
            degree < 0 || pair.death < pair.birth) {
            throw ParseError(lineno, "bad diagram row '" + std::string(line) + "'");
        }
        auto& d = grouped[static_cast<std::size_t>(patch)][static_cast<int>(degree)];
        d.degree = static_cast<int>(degree);
        d.pairs.push_back(pair);
    });
    const auto pos = text.find("# layout patches=");
    if (pos != std::string::npos) {
        const auto end = text.find('\n', pos);
        const std::string line = text.substr(pos + 17, end == std::string::npos ? std::string::npos : end - pos - 17);
        const auto comma = line.find(",degrees=");
        if (comma == std::string::npos) throw ParseError(0, "bad diagram layout line");
        const auto patches = static_cast<std::size_t>(parse_double(line.substr(0, comma), "patch count"));
        std::vector<int> degrees;
        for (const auto token : split(std::string_view(line).substr(comma + 9), ';')) {
            if (!trim(token).empty()) degrees.push_back(static_cast<int>(parse_double(token, "degree")));
        }
        for (std::size_t p = 0; p < patches; ++p) {
            for (int deg : degrees) grouped[p][deg].degree = deg;
        }
    }
    std::vector<std::vector<PersistenceDiagram>> out;
    for (auto& [p, by_degree] : grouped) {
        out.resize(p + 1);
        for (auto& [deg, d] : by_degree) out[p].push_back(std::move(d));
    }
    return out;
}

std::string format_landscape(const DiscretizedLandscape& l, const std::string& hash) {
    std::string out = header_line(hash);
    out += "# grid t_min=" + format_double(l.grid.t_min) + ",t_max=" + format_double(l.grid.t_max) +
           ",samples=" + std::to_string(l.grid.samples) + ",depths=" + std::to_string(l.depths) + "\n";
    for (Eigen::Index k = 0; k < l.depths; ++k) {
        const auto row = l.row(k);
        for (Eigen::Index i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_double(row(i));
        }
        out += '\n';
    }
    return out;
}

DiscretizedLandscape parse_landscape(const std::string& text) {
    const auto pos = text.find("# grid ");
    if (pos == std::string::npos) throw DataError("landscape file has no grid header");
    const auto end = text.find('\n', pos);
    const std::string_view header(text.data() + pos + 7, (end == std::string::npos ? text.size() : end) - pos - 7);
    DiscretizedLandscape l;
    l.grid.t_min = parse_double(key_of(header, "t_min"), "t_min");
    l.grid.t_max = parse_double(key_of(header, "t_max"), "t_max");
    l.grid.samples = static_cast<Eigen::Index>(parse_double(key_of(header, "samples"), "samples"));
    l.depths = static_cast<Eigen::Index>(parse_double(key_of(header, "depths"), "depths"));
    l.grid.validate();
    const Eigen::MatrixXd rows = parse_matrix(text, "landscape");
    if (rows.rows() != l.depths || rows.cols() != l.grid.samples) {
        throw DataError("landscape body does not match its grid header");
    }
    l.values.resize(l.depths * l.grid.samples);
    for (Eigen::Index k = 0; k < l.depths; ++k) l.row(k) = rows.row(k).transpose();
    return l;
}

std::vector<LabelRow> parse_labels(const std::string& text) {
    std::vector<LabelRow> out;
    for_each_data_line(text, [&](std::string_view line, std::size_t lineno) {
        const auto tokens = split(line, ',');
        if (tokens.size() < 2 || tokens.size() > 3) throw ParseError(lineno, "expected id,label[,path]");
        LabelRow r{std::string(trim(tokens[0])), std::string(trim(tokens[1])),
                   tokens.size() == 3 ? std::string(trim(tokens[2])) : std::string()};
        if (r.id == "id" && r.label == "label") return;
        if (r.id.empty() || r.label.empty()) throw ParseError(lineno, "empty id or label");
        out.push_back(std::move(r));
    });
    return out;
}

}  // namespace wormtopo
