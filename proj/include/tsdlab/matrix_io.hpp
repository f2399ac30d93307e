#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "tsdlab/matrix.hpp"

namespace tsdlab {

// TSDW binary matrix format: magic "TSDW", then rows and cols as u32
// little-endian, then rows*cols IEEE-754 binary64 little-endian, row-major.
void save_tsdw(const Matrix& m, const std::filesystem::path& path);
Matrix load_tsdw(const std::filesystem::path& path);

// CSV variant for human inspection: first line "<rows>,<cols>", then one
// comma-separated row per line, 17 significant digits (round-trips bit-exactly
// for finite values).
void save_matrix_csv(const Matrix& m, const std::filesystem::path& path);
Matrix load_matrix_csv(const std::filesystem::path& path);

// Dispatches on content: TSDW magic -> binary, otherwise CSV.
Matrix load_matrix(const std::filesystem::path& path);
// Dispatches on extension: ".csv" -> CSV, otherwise TSDW.
void save_matrix(const Matrix& m, const std::filesystem::path& path);

// Shortest-round-trip decimal formatting used by every CSV writer.
std::string format_double(double x);

}  // namespace tsdlab
