#include "gapkit/npy.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gapkit/error.hpp"

namespace gapkit::npy {
namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;

static_assert(std::endian::native == std::endian::little,
              "NPY reader assumes a little-endian host");

std::string dict_value(const std::string& header, const std::string& key) {
  const std::string quoted = "'" + key + "'";
  auto pos = header.find(quoted);
  if (pos == std::string::npos) throw IoError("malformed header: missing key " + key);
  pos = header.find(':', pos + quoted.size());
  if (pos == std::string::npos) throw IoError("malformed header: no value for " + key);
  ++pos;
  while (pos < header.size() && header[pos] == ' ') ++pos;
  if (pos >= header.size()) throw IoError("malformed header: truncated");
  std::size_t end = pos;
  if (header[pos] == '\'') {
    end = header.find('\'', pos + 1);
    if (end == std::string::npos) throw IoError("malformed header: unterminated string");
    return header.substr(pos + 1, end - pos - 1);
  }
  if (header[pos] == '(') {
    end = header.find(')', pos);
    if (end == std::string::npos) throw IoError("malformed header: unterminated shape");
    return header.substr(pos, end - pos + 1);
  }
  end = header.find_first_of(",}", pos);
  if (end == std::string::npos) throw IoError("malformed header: truncated value");
  auto v = header.substr(pos, end - pos);
  while (!v.empty() && v.back() == ' ') v.pop_back();
  return v;
}

std::vector<std::uint64_t> parse_shape(const std::string& tuple) {
  std::vector<std::uint64_t> shape;
  std::string body = tuple.substr(1, tuple.size() - 2);
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto b = item.find_first_not_of(' ');
    if (b == std::string::npos) continue;
    auto e = item.find_last_not_of(" L");
    item = item.substr(b, e - b + 1);
    if (item.empty()) continue;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      throw IoError("malformed header: bad shape entry '" + item + "'");
    }
    if (used != item.size()) throw IoError("malformed header: bad shape entry '" + item + "'");
    shape.push_back(v);
  }
  return shape;
}

}  // namespace

Array parse(const std::string& bytes) {
  if (bytes.size() < kMagicLen + 4 || std::memcmp(bytes.data(), kMagic, kMagicLen) != 0)
    throw IoError("malformed header: bad magic");
  const auto major = static_cast<unsigned char>(bytes[6]);
  std::size_t header_len = 0;
  std::size_t offset = 0;
  if (major == 1) {
    header_len = static_cast<unsigned char>(bytes[8]) |
                 (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
    offset = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) throw IoError("malformed header: truncated");
    for (int i = 0; i < 4; ++i)
      header_len |= static_cast<std::size_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
    offset = 12;
  } else {
    throw IoError("malformed header: unsupported version " + std::to_string(major));
  }
  if (bytes.size() < offset + header_len) throw IoError("malformed header: truncated");
  const std::string header = bytes.substr(offset, header_len);
  offset += header_len;

  const auto descr = dict_value(header, "descr");
  const auto fortran = dict_value(header, "fortran_order");
  const auto shape_s = dict_value(header, "shape");
  if (fortran != "False") throw IoError("unsupported layout: fortran_order must be False");
  std::size_t item = 0;
  if (descr == "<f8" || descr == "f8") {
    item = 8;
  } else if (descr == "<f4" || descr == "f4") {
    item = 4;
  } else {
    throw IoError("non-float dtype '" + descr + "' (expected <f4 or <f8)");
  }

  Array out;
  out.shape = parse_shape(shape_s);
  std::uint64_t count = 1;
  for (auto s : out.shape) count *= s;
  if (bytes.size() - offset < count * item) throw IoError("truncated data section");

  out.values.resize(count);
  const char* p = bytes.data() + offset;
  if (item == 8) {
    std::memcpy(out.values.data(), p, count * 8);
  } else {
    for (std::uint64_t i = 0; i < count; ++i) {
      float f;
      std::memcpy(&f, p + 4 * i, 4);
      out.values[i] = static_cast<double>(f);
    }
  }
  return out;
}

Array read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string encode(const double* data, const std::vector<std::uint64_t>& shape) {
  std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (";
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    dict += std::to_string(shape[i]);
    if (shape.size() == 1 || i + 1 < shape.size()) dict += ",";
    if (i + 1 < shape.size()) dict += " ";
    count *= shape[i];
  }
  dict += "), }";
  // Pad so that magic + version + length + header is a multiple of 64 and ends in '\n'.
  const std::size_t preamble = kMagicLen + 2 + 2;
  std::size_t total = preamble + dict.size() + 1;
  const std::size_t pad = (64 - total % 64) % 64;
  dict.append(pad, ' ');
  dict.push_back('\n');
  if (dict.size() > 0xFFFF) throw IoError("header too large for NPY v1.0");

  std::string out;
  out.reserve(preamble + dict.size() + count * 8);
  out.append(kMagic, kMagicLen);
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(dict.size() & 0xFF));
  out.push_back(static_cast<char>((dict.size() >> 8) & 0xFF));
  out += dict;
  if (count > 0) out.append(reinterpret_cast<const char*>(data), count * 8);
  return out;
}

void write(const std::filesystem::path& path, const double* data,
           const std::vector<std::uint64_t>& shape) {
  const auto bytes = encode(data, shape);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

RowMatrix to_matrix(const Array& a) {
  if (a.shape.size() != 2)
    throw IoError("non-2D array (ndim=" + std::to_string(a.shape.size()) + ")");
  RowMatrix m(static_cast<Index>(a.shape[0]), static_cast<Index>(a.shape[1]));
  if (!a.values.empty()) std::memcpy(m.data(), a.values.data(), a.values.size() * sizeof(double));
  return m;
}

std::string encode_matrix(const Eigen::Ref<const RowMatrix>& m) {
  const RowMatrix dense = m;
  return encode(dense.data(), {static_cast<std::uint64_t>(m.rows()),
                               static_cast<std::uint64_t>(m.cols())});
}

std::string encode_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const Eigen::VectorXd dense = v;
  return encode(dense.data(), {static_cast<std::uint64_t>(v.size())});
}

}  // namespace gapkit::npy
