#pragma once

#include "romes/closure.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace romes {

/// Writes a matrix as comma-delimited CSV with a header row and
/// 17-significant-digit decimals (lossless double round-trip).
void write_csv_matrix(const std::filesystem::path& path, const Matrix& values,
                      const std::vector<std::string>& column_names = {});

/// Reads a CSV written by write_csv_matrix (header row skipped).
Matrix read_csv_matrix(const std::filesystem::path& path);

/// Formats one double with 17 significant digits.
std::string format_double(double value);

/// Serializes a trained package into a directory: a JSON manifest, CSV
/// matrices for bases/reference/singular values/provenance, and one JSON
/// file per GP coordinate model.  Identical inputs produce byte-identical
/// files.
void save_package(const OfflinePackage& package, const std::filesystem::path& dir);

/// Restores a package saved by save_package.  The problem supplies the
/// metric reconstruction and dimension checks.
OfflinePackage load_package(const FomProblem& problem, const std::filesystem::path& dir);

}  // namespace romes
