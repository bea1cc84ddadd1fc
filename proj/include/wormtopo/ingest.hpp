#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wormtopo {

/// A sequence of fixed-dimension posture vectors, one row per frame.
///
/// The constructor enforces the invariants: at least one frame, at least one
/// column, every entry finite, positive frame rate.
class TimeSeries {
public:
    explicit TimeSeries(Eigen::MatrixXd frames, double frame_rate_hz = 30.0,
                        std::optional<std::string> label = std::nullopt);

    const Eigen::MatrixXd& frames() const noexcept { return frames_; }
    Eigen::Index size() const noexcept { return frames_.rows(); }
    Eigen::Index dim() const noexcept { return frames_.cols(); }
    double frame_rate_hz() const noexcept { return frame_rate_hz_; }
    const std::optional<std::string>& label() const noexcept { return label_; }

    TimeSeries with_label(std::optional<std::string> label) const;

private:
    Eigen::MatrixXd frames_;
    double frame_rate_hz_;
    std::optional<std::string> label_;
};

/// A contiguous, fixed-length slice of a parent series.
struct Patch {
    std::string parent_id;
    Eigen::Index start = 0;
    Eigen::MatrixXd frames;
};

/// Reads a posture CSV: one frame per row, `dim` columns, optional header,
/// `#` comment lines ignored. NaN tokens or blank fields mark an occluded
/// frame, which is replaced by the most recent complete frame.
TimeSeries load_postures(const std::filesystem::path& path, Eigen::Index dim,
                         double frame_rate_hz = 30.0);

/// Same parser over an in-memory buffer; `source` only labels error messages.
TimeSeries parse_postures(const std::string& text, Eigen::Index dim, double frame_rate_hz = 30.0,
                          const std::string& source = "<input>");

/// Canonical CSV writer; round-trips through load_postures bit-exactly.
void write_postures(const std::filesystem::path& path, const TimeSeries& ts);
std::string format_postures(const TimeSeries& ts);

/// Cuts the series into patches starting every (patch_length - overlap)
/// frames. A trailing remainder shorter than patch_length is dropped.
std::vector<Patch> make_patches(const TimeSeries& ts, Eigen::Index patch_length,
                                Eigen::Index overlap, const std::string& parent_id = "");

/// Coordinates of each frame in the top-k principal directions of the
/// mean-centred frame set.
TimeSeries project_postures(const TimeSeries& ts, Eigen::Index k);

/// Sidecar metadata: `key=value` per line, `#` comments.
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::map<std::string, std::string> load_key_values(const std::filesystem::path& path);

}  // namespace wormtopo
