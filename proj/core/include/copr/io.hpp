#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "copr/copr.hpp"
#include "copr/types.hpp"

namespace copr::io {

enum class Kind : std::uint32_t { real = 1, complex = 2 };

/// A real or complex column-major array with a scale factor, as stored in
/// the binary container.
struct Array {
  Kind kind = Kind::real;
  std::uint64_t rows = 0;
  std::uint64_t cols = 1;
  double scale = 1.0;
  RMat re;
  RMat im;  // empty for real arrays
};

/// Layout: "COPRARR\0", u32 version (1), u32 kind, u64 rows, u64 cols,
/// f64 scale, then rows*cols doubles (interleaved re, im for complex).
/// All fields little endian.
void write_array(std::ostream& os, const Array& a);
Array read_array(std::istream& is);

Array from_measurements(const Measurements& m);
Measurements to_measurements(const Array& a);
Array from_coefficients(const CVec& a);
CVec to_coefficients(const Array& a);

void save(const std::filesystem::path& p, const Array& a);
/// Binary container, or CSV with one value per line (optionally re,im)
/// when the extension is .csv.
Array load(const std::filesystem::path& p);

void write_matrix_csv(std::ostream& os, const RMat& m);

/// {"a": [[re, im], ...], "converged": ..., "outer": [...], ...}
std::string copr_result_json(const CoprResult& r, int indent = 2);

void write_text(const std::filesystem::path& p, const std::string& s);

}  // namespace copr::io
