#include "copr/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace copr::io {

namespace {

constexpr char kMagic[8] = {'C', 'O', 'P', 'R', 'A', 'R', 'R', '\0'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "binary container assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, std::size_t& offset, const char* field) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (is.gcount() != static_cast<std::streamsize>(sizeof(T)))
    throw ParseError(std::string("truncated input reading ") + field, offset);
  offset += sizeof(T);
  return v;
}

}  // namespace

void write_array(std::ostream& os, const Array& a) {
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(a.kind));
  put<std::uint64_t>(os, a.rows);
  put<std::uint64_t>(os, a.cols);
  put<double>(os, a.scale);
  const auto n = static_cast<Eigen::Index>(a.rows * a.cols);
  for (Eigen::Index k = 0; k < n; ++k) {
    put<double>(os, a.re.data()[k]);
    if (a.kind == Kind::complex) put<double>(os, a.im.data()[k]);
  }
  if (!os) throw IoError("write failed");
}

Array read_array(std::istream& is) {
  std::size_t off = 0;
  char magic[8];
  is.read(magic, sizeof magic);
  if (is.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
    throw ParseError("bad magic, not a coefficient/measurement container", 0);
  off = 8;
  const auto version = get<std::uint32_t>(is, off, "version");
  if (version != kVersion)
    throw ParseError("unsupported container version " + std::to_string(version), off - 4);
  const auto kind = get<std::uint32_t>(is, off, "kind");
  if (kind != 1 && kind != 2)
    throw ParseError("unknown array kind " + std::to_string(kind), off - 4);
  Array a;
  a.kind = static_cast<Kind>(kind);
  a.rows = get<std::uint64_t>(is, off, "rows");
  a.cols = get<std::uint64_t>(is, off, "cols");
  if (a.rows > (1u << 28) || a.cols > (1u << 28) || a.rows * a.cols > (1ull << 30))
    throw ParseError("array dimensions too large", off - 16);
  a.scale = get<double>(is, off, "scale");
  a.re.resize(static_cast<Eigen::Index>(a.rows), static_cast<Eigen::Index>(a.cols));
  if (a.kind == Kind::complex) a.im.resizeLike(a.re);
  const auto n = a.re.size();
  for (Eigen::Index k = 0; k < n; ++k) {
    a.re.data()[k] = get<double>(is, off, "payload");
    if (a.kind == Kind::complex) a.im.data()[k] = get<double>(is, off, "payload");
  }
  if (is.peek() != std::char_traits<char>::eof())
    throw ParseError("trailing bytes after payload", off);
  return a;
}

Array from_measurements(const Measurements& m) {
  Array a;
  a.rows = static_cast<std::uint64_t>(m.y.size());
  a.scale = m.normalization;
  a.re = m.y;
  return a;
}

Measurements to_measurements(const Array& a) {
  if (a.kind != Kind::real || a.cols != 1)
    throw InvalidArgument("measurements must be a real column vector");
  return {a.re.col(0), a.scale};
}

Array from_coefficients(const CVec& v) {
  Array a;
  a.kind = Kind::complex;
  a.rows = static_cast<std::uint64_t>(v.size());
  a.re = v.real();
  a.im = v.imag();
  return a;
}

CVec to_coefficients(const Array& a) {
  if (a.cols != 1) throw InvalidArgument("coefficients must be a column vector");
  CVec v(a.re.rows());
  v.real() = a.re.col(0);
  v.imag() = a.kind == Kind::complex ? RVec(a.im.col(0)) : RVec::Zero(v.size());
  return v;
}

void save(const std::filesystem::path& p, const Array& a) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot open " + p.string() + " for writing");
  write_array(os, a);
}

namespace {

Array load_csv(std::istream& is) {
  std::vector<double> re, im;
  bool complex = false;
  std::string line;
  std::size_t off = 0;
  while (std::getline(is, line)) {
    const std::size_t start = off;
    off += line.size() + 1;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double r = 0.0, i = 0.0;
    if (!(ls >> r)) {
      if (re.empty()) continue;  // header line
      throw ParseError("expected a number", start);
    }
    char comma = 0;
    if (ls >> comma) {
      if (comma != ',' || !(ls >> i)) throw ParseError("expected re,im", start);
      complex = true;
    }
    re.push_back(r);
    im.push_back(i);
  }
  Array a;
  a.kind = complex ? Kind::complex : Kind::real;
  a.rows = re.size();
  a.re = Eigen::Map<RVec>(re.data(), static_cast<Eigen::Index>(re.size()));
  if (complex) a.im = Eigen::Map<RVec>(im.data(), static_cast<Eigen::Index>(im.size()));
  return a;
}

}  // namespace

Array load(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw IoError("cannot open " + p.string());
  if (p.extension() == ".csv") return load_csv(is);
  return read_array(is);
}

void write_matrix_csv(std::ostream& os, const RMat& m) {
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
    os << '\n';
  }
}

std::string copr_result_json(const CoprResult& r, int indent) {
  nlohmann::json j;
  j["a"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < r.a.size(); ++i)
    j["a"].push_back({r.a(i).real(), r.a(i).imag()});
  j["converged"] = r.converged;
  j["total_inner"] = r.total_inner;
  j["inner_stalls"] = r.inner_stalls;
  auto& o = j["outer"] = nlohmann::json::object();
  o["misfit"] = nlohmann::json::array();
  o["nuclear_norm"] = nlohmann::json::array();
  o["inner_iters"] = nlohmann::json::array();
  for (const auto& row : r.outer_trace) {
    o["misfit"].push_back(row.misfit);
    o["nuclear_norm"].push_back(row.nuclear_norm);
    o["inner_iters"].push_back(row.inner_iters);
  }
  return j.dump(indent);
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot open " + p.string() + " for writing");
  os << s;
  if (!os) throw IoError("write failed: " + p.string());
}

}  // namespace copr::io
