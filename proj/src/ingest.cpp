#include "wormtopo/ingest.hpp"

#include "wormtopo/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace wormtopo {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool is_missing_token(std::string_view tok) {
    if (tok.empty()) return true;
    std::string lower(tok);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return lower == "nan" || lower == "-nan" || lower == "na";
}

enum class TokenStatus { Value, Missing, Bad };

TokenStatus parse_token(std::string_view tok, double& out) {
    tok = trim(tok);
    if (is_missing_token(tok)) return TokenStatus::Missing;
    if (tok.front() == '+') tok.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) return TokenStatus::Bad;
    if (std::isnan(out)) return TokenStatus::Missing;
    if (!std::isfinite(out)) return TokenStatus::Bad;
    return TokenStatus::Value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return fields;
}

}  // namespace

TimeSeries::TimeSeries(Eigen::MatrixXd frames, double frame_rate_hz, std::optional<std::string> label)
    : frames_(std::move(frames)), frame_rate_hz_(frame_rate_hz), label_(std::move(label)) {
    if (frames_.rows() == 0) throw InsufficientDataError("time series has no frames");
    if (frames_.cols() == 0) throw ParameterError("time series dimension must be positive");
    if (!(frame_rate_hz_ > 0.0) || !std::isfinite(frame_rate_hz_)) {
        throw ParameterError("frame rate must be a positive real");
    }
    if (!frames_.allFinite()) throw DataError("time series contains non-finite entries");
}

TimeSeries TimeSeries::with_label(std::optional<std::string> label) const {
    return TimeSeries(frames_, frame_rate_hz_, std::move(label));
}

TimeSeries parse_postures(const std::string& text, Eigen::Index dim, double frame_rate_hz,
                          const std::string& source) {
    if (dim <= 0) throw ParameterError("posture dimension must be positive");
    std::vector<double> data;
    std::vector<double> last_complete;
    std::vector<double> row(static_cast<std::size_t>(dim));
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool seen_data = false;
    Eigen::Index rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto fields = split_fields(view);
        bool missing = false;
        bool bad = false;
        for (std::size_t i = 0; i < fields.size() && i < row.size(); ++i) {
            switch (parse_token(fields[i], row[i])) {
                case TokenStatus::Missing: missing = true; break;
                case TokenStatus::Bad: bad = true; break;
                case TokenStatus::Value: break;
            }
        }
        if (bad && !seen_data) {
            // A non-numeric first row is a header.
            seen_data = true;
            continue;
        }
        seen_data = true;
        if (static_cast<Eigen::Index>(fields.size()) != dim) {
            throw ParseError(line_no, source + ": expected " + std::to_string(dim) + " fields, got " +
                                          std::to_string(fields.size()));
        }
        if (bad) throw ParseError(line_no, source + ": unparseable token");
        if (missing) {
            if (last_complete.empty()) {
                throw OcclusionError(source + ": line " + std::to_string(line_no) +
                                     ": first frame is occluded, cannot carry forward");
            }
            data.insert(data.end(), last_complete.begin(), last_complete.end());
        } else {
            last_complete = row;
            data.insert(data.end(), row.begin(), row.end());
        }
        ++rows;
    }
    if (rows == 0) throw InsufficientDataError(source + ": no frames");
    Eigen::MatrixXd frames =
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(data.data(), rows, dim);
    return TimeSeries(std::move(frames), frame_rate_hz);
}

TimeSeries load_postures(const std::filesystem::path& path, Eigen::Index dim, double frame_rate_hz) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_postures(buf.str(), dim, frame_rate_hz, path.string());
}

std::string format_postures(const TimeSeries& ts) {
    std::string out;
    char buf[64];
    const auto& f = ts.frames();
    for (Eigen::Index r = 0; r < f.rows(); ++r) {
        for (Eigen::Index c = 0; c < f.cols(); ++c) {
            if (c) out.push_back(',');
            auto res = std::to_chars(buf, buf + sizeof buf, f(r, c));
            out.append(buf, res.ptr);
        }
        out.push_back('\n');
    }
    return out;
}

void write_postures(const std::filesystem::path& path, const TimeSeries& ts) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << format_postures(ts);
}

std::vector<Patch> make_patches(const TimeSeries& ts, Eigen::Index patch_length, Eigen::Index overlap,
                                const std::string& parent_id) {
    if (patch_length <= 0) throw ParameterError("patch length must be positive");
    if (overlap < 0 || overlap >= patch_length) {
        throw ParameterError("overlap must satisfy 0 <= overlap < patch length");
    }
    const Eigen::Index n = ts.size();
    if (patch_length > n) {
        throw InsufficientDataError("patch length " + std::to_string(patch_length) + " exceeds series length " +
                                    std::to_string(n));
    }
    const Eigen::Index step = patch_length - overlap;
    std::vector<Patch> patches;
    for (Eigen::Index s = 0; s + patch_length <= n; s += step) {
        patches.push_back(Patch{parent_id, s, ts.frames().middleRows(s, patch_length)});
    }
    return patches;
}

TimeSeries project_postures(const TimeSeries& ts, Eigen::Index k) {
    if (k <= 0) throw ParameterError("projection dimension must be positive");
    if (k > ts.dim()) {
        throw ParameterError("projection dimension " + std::to_string(k) + " exceeds posture dimension " +
                             std::to_string(ts.dim()));
    }
    if (ts.size() < 2) throw InsufficientDataError("projection needs at least two frames");
    const Eigen::RowVectorXd mean = ts.frames().colwise().mean();
    const Eigen::MatrixXd centered = ts.frames().rowwise() - mean;
    const bool full = k > std::min(centered.rows(), centered.cols());
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, full ? Eigen::ComputeFullV : Eigen::ComputeThinV);
    Eigen::MatrixXd basis = svd.matrixV().leftCols(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::Index arg;
        basis.col(j).cwiseAbs().maxCoeff(&arg);
        if (basis(arg, j) < 0) basis.col(j) *= -1.0;
    }
    return TimeSeries(centered * basis, ts.frame_rate_hz(), ts.label());
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) throw ParameterError("line " + std::to_string(line_no) + ": expected key=value");
        const auto key = trim(view.substr(0, eq));
        if (key.empty()) throw ParameterError("line " + std::to_string(line_no) + ": empty key");
        kv[std::string(key)] = std::string(trim(view.substr(eq + 1)));
    }
    return kv;
}

std::map<std::string, std::string> load_key_values(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_key_values(buf.str());
}

}  // namespace wormtopo
