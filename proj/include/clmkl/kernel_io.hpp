#pragma once

#include "clmkl/kernel.hpp"

#include <filesystem>
#include <string_view>

namespace clmkl {

/// KMX1 layout: the four bytes "KMX1", rows and cols as little-endian
/// uint64, then rows*cols little-endian IEEE-754 doubles in row-major order.
Matrix readKmx(const std::filesystem::path& path);
void writeKmx(const Matrix& values, const std::filesystem::path& path);

/// Headerless comma-separated numbers, one matrix row per line.
Matrix readCsvMatrix(const std::filesystem::path& path);

/// Loads a KMX1 file, or CSV when the file does not start with the KMX1
/// magic and has a .csv extension.
GramMatrix loadKernelMatrix(const std::filesystem::path& path);
void storeKernelMatrix(const GramMatrix& kernel, const std::filesystem::path& path);

/// Loads an n_test x n_train cross matrix plus the n_test x 1 (or 1 x n_test)
/// self-evaluation file.
CrossKernelMatrix loadCrossKernel(const std::filesystem::path& crossPath,
                                  const std::filesystem::path& diagPath);
void storeCrossKernel(const CrossKernelMatrix& cross, const std::filesystem::path& crossPath,
                      const std::filesystem::path& diagPath);

/// Writes to a sibling temporary file and renames it over `path`.
void writeFileAtomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace clmkl
