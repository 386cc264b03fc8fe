#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "activestereo/image.hpp"
#include "activestereo/laser_sim.hpp"
#include "activestereo/pipeline.hpp"

namespace activestereo {

/// Binary (P5) or ASCII (P2) PGM, maxval up to 65535. 16-bit P5 samples are
/// big-endian. Anything off-grammar is a ParseError.
GrayImage parse_pgm(std::string_view bytes);
GrayImage read_pgm(const std::filesystem::path& path);

/// Always writes P5; 16-bit when maxval > 255.
std::string encode_pgm(const GrayImage& image);
void write_pgm(const GrayImage& image, const std::filesystem::path& path);

/// Sample s is occluded when s == sentinel, else disparity round(s / divisor).
GroundTruth ground_truth_from_image(const GrayImage& image, double divisor, int sentinel);
GroundTruth read_gt(const std::filesystem::path& path, double divisor, int sentinel);

enum class MapMode { Disparity, Entropy };

/// [0, d - 1] scaled linearly onto [0, 255]; occluded pixels are 0.
GrayImage render_disparity(const DisparityMap& map, int levels);
/// [0, max observed] scaled onto [0, 255].
GrayImage render_entropy(const EntropyMap& map);

void write_map_pgm(const DisparityMap& map, int levels, const std::filesystem::path& path);
void write_map_pgm(const EntropyMap& map, const std::filesystem::path& path);

inline constexpr std::string_view kMetricsHeader = "aim,column,total_entropy_nats,pixels_err_gt1";
inline constexpr std::string_view kConflictHeader = "row,aim_index,existing_q,existing_g,new_q,new_g";

std::string format_metrics_csv(const RunMetrics& metrics);
void write_metrics_csv(const RunMetrics& metrics, const std::filesystem::path& path);
RunMetrics parse_metrics_csv(std::string_view text);
RunMetrics read_metrics_csv(const std::filesystem::path& path);

std::string format_conflict_log(const std::vector<ConflictEvent>& events);
void write_conflict_log(const std::vector<ConflictEvent>& events,
                        const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace activestereo
