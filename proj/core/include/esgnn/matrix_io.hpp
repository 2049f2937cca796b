#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>

namespace esgnn {

// Row-major CSV with 9 significant digits, one matrix row per line.
void write_matrix_csv(const std::filesystem::path& path,
                      const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& content);

// FNV-1a 64-bit over file bytes, hex encoded; used to stamp input files
// into reports so a report pins down exactly what it was computed from.
std::string file_content_hash(const std::filesystem::path& path);
std::string content_hash(std::string_view bytes);

// Shortest round-trip decimal form (what the JSON layer also produces).
std::string format_double(double v);

}  // namespace esgnn
