#include "clmkl/kernel_io.hpp"

#include "clmkl/error.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace clmkl {

namespace {

constexpr char kMagic[4] = {'K', 'M', 'X', '1'};
constexpr std::size_t kHeaderBytes = 4 + 8 + 8;

std::string readAll(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return bytes;
}

std::uint64_t readLe64(const char* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | static_cast<unsigned char>(p[b]);
  return v;
}

void appendLe64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

bool hasMagic(const std::string& bytes) {
  return bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0;
}

Matrix parseKmx(const std::string& bytes, const std::string& origin) {
  if (!hasMagic(bytes)) throw FormatError("bad format: '" + origin + "' lacks the KMX1 magic");
  if (bytes.size() < kHeaderBytes)
    throw FormatError("bad format: '" + origin + "' has a truncated header");
  const std::uint64_t rows = readLe64(bytes.data() + 4);
  const std::uint64_t cols = readLe64(bytes.data() + 12);
  const std::uint64_t maxIndex = static_cast<std::uint64_t>(std::numeric_limits<Index>::max());
  if (rows > maxIndex || cols > maxIndex || (cols != 0 && rows > maxIndex / cols) ||
      rows * cols > (std::numeric_limits<std::uint64_t>::max() - kHeaderBytes) / 8)
    throw FormatError("bad format: '" + origin + "' declares dimensions that overflow");
  const std::uint64_t expected = kHeaderBytes + rows * cols * 8;
  if (bytes.size() < expected)
    throw FormatError("bad format: '" + origin + "' has a truncated payload");
  if (bytes.size() > expected)
    throw FormatError("bad format: '" + origin + "' has trailing bytes after the payload");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  const char* p = bytes.data() + kHeaderBytes;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j, p += 8) {
      const double v = std::bit_cast<double>(readLe64(p));
      if (std::isnan(v))
        throw FormatError("bad format: '" + origin + "' contains NaN at (" + std::to_string(i) +
                          ", " + std::to_string(j) + ")");
      m(i, j) = v;
    }
  }
  return m;
}

Matrix parseCsv(const std::string& text, const std::string& origin) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(lines, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &used);
      } catch (const std::exception&) {
        throw FormatError("bad format: '" + origin + "' line " + std::to_string(lineNo) +
                          " has a non-numeric field");
      }
      if (field.find_first_not_of(" \t", used) != std::string::npos)
        throw FormatError("bad format: '" + origin + "' line " + std::to_string(lineNo) +
                          " has a non-numeric field");
      if (std::isnan(v))
        throw FormatError("bad format: '" + origin + "' line " + std::to_string(lineNo) +
                          " contains NaN");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError("bad format: '" + origin + "' line " + std::to_string(lineNo) +
                        " has a different column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("bad format: '" + origin + "' is empty");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

}  // namespace

void writeFileAtomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("error writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

Matrix readKmx(const std::filesystem::path& path) { return parseKmx(readAll(path), path.string()); }

void writeKmx(const Matrix& values, const std::filesystem::path& path) {
  if (values.hasNaN()) throw InvalidArgument("refusing to store a matrix containing NaN");
  std::string out(kMagic, 4);
  out.reserve(kHeaderBytes + static_cast<std::size_t>(values.size()) * 8);
  appendLe64(out, static_cast<std::uint64_t>(values.rows()));
  appendLe64(out, static_cast<std::uint64_t>(values.cols()));
  for (Index i = 0; i < values.rows(); ++i)
    for (Index j = 0; j < values.cols(); ++j) appendLe64(out, std::bit_cast<std::uint64_t>(values(i, j)));
  writeFileAtomic(path, out);
}

Matrix readCsvMatrix(const std::filesystem::path& path) {
  return parseCsv(readAll(path), path.string());
}

GramMatrix loadKernelMatrix(const std::filesystem::path& path) {
  const std::string bytes = readAll(path);
  Matrix m;
  if (!hasMagic(bytes) && path.extension() == ".csv")
    m = parseCsv(bytes, path.string());
  else
    m = parseKmx(bytes, path.string());
  try {
    return GramMatrix(std::move(m));
  } catch (const Error& e) {
    throw FormatError("bad format: '" + path.string() + "': " + e.what());
  }
}

void storeKernelMatrix(const GramMatrix& kernel, const std::filesystem::path& path) {
  writeKmx(kernel.values(), path);
}

CrossKernelMatrix loadCrossKernel(const std::filesystem::path& crossPath,
                                  const std::filesystem::path& diagPath) {
  auto load = [](const std::filesystem::path& p) {
    const std::string bytes = readAll(p);
    if (!hasMagic(bytes) && p.extension() == ".csv") return parseCsv(bytes, p.string());
    return parseKmx(bytes, p.string());
  };
  Matrix values = load(crossPath);
  Matrix diag = load(diagPath);
  if (diag.cols() != 1 && diag.rows() == 1) diag.transposeInPlace();
  if (diag.cols() != 1)
    throw FormatError("bad format: '" + diagPath.string() + "' must hold a single column");
  return CrossKernelMatrix(std::move(values), diag.col(0));
}

void storeCrossKernel(const CrossKernelMatrix& cross, const std::filesystem::path& crossPath,
                      const std::filesystem::path& diagPath) {
  writeKmx(cross.values, crossPath);
  writeKmx(Matrix(cross.diagTest), diagPath);
}

}  // namespace clmkl
