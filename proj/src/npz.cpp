#include "gapkit/npz.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "gapkit/error.hpp"

namespace gapkit::npz {
namespace {

void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get(const std::string& s, std::size_t pos, int width) {
  if (pos + static_cast<std::size_t>(width) > s.size()) throw IoError("truncated zip archive");
  std::uint32_t v = 0;
  for (int i = 0; i < width; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
  return v;
}

}  // namespace

void write(const std::filesystem::path& path, const Members& members) {
  std::string out;
  std::string central;
  std::uint16_t count = 0;
  for (const auto& [name, data] : members) {
    if (data.size() > 0xFFFFFFFFull) throw IoError("zip member too large: " + name);
    const auto crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
    const auto size = static_cast<std::uint32_t>(data.size());
    const auto offset = static_cast<std::uint32_t>(out.size());

    put32(out, 0x04034b50);
    put16(out, 20);  // version needed
    put16(out, 0);   // flags
    put16(out, 0);   // method: stored
    put16(out, 0);   // mod time
    put16(out, 0x21);  // mod date 1980-01-01
    put32(out, crc);
    put32(out, size);
    put32(out, size);
    put16(out, static_cast<std::uint16_t>(name.size()));
    put16(out, 0);
    out += name;
    out += data;

    put32(central, 0x02014b50);
    put16(central, 20);
    put16(central, 20);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0x21);
    put32(central, crc);
    put32(central, size);
    put32(central, size);
    put16(central, static_cast<std::uint16_t>(name.size()));
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, 0);
    put32(central, offset);
    central += name;
    ++count;
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, 0x06054b50);
  put16(out, 0);
  put16(out, 0);
  put16(out, count);
  put16(out, count);
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

Members read(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  const std::string s = buf.str();

  if (s.size() < 22) throw IoError(path.string() + ": not a zip archive");
  std::size_t eocd = std::string::npos;
  for (std::size_t i = s.size() - 22 + 1; i-- > 0;) {
    if (get(s, i, 4) == 0x06054b50) {
      eocd = i;
      break;
    }
  }
  if (eocd == std::string::npos) throw IoError(path.string() + ": missing end of central directory");
  const auto entries = get(s, eocd + 10, 2);
  std::size_t pos = get(s, eocd + 16, 4);

  Members members;
  for (std::uint32_t e = 0; e < entries; ++e) {
    if (get(s, pos, 4) != 0x02014b50) throw IoError(path.string() + ": bad central directory");
    const auto method = get(s, pos + 10, 2);
    const auto crc = get(s, pos + 16, 4);
    const auto csize = get(s, pos + 20, 4);
    const auto name_len = get(s, pos + 28, 2);
    const auto extra_len = get(s, pos + 30, 2);
    const auto comment_len = get(s, pos + 32, 2);
    const auto local = get(s, pos + 42, 4);
    std::string name = s.substr(pos + 46, name_len);
    pos += 46 + name_len + extra_len + comment_len;
    if (method != 0) throw IoError(path.string() + ": member " + name + " is compressed");
    if (get(s, local, 4) != 0x04034b50) throw IoError(path.string() + ": bad local header");
    const auto data_start = local + 30 + get(s, local + 26, 2) + get(s, local + 28, 2);
    if (data_start + csize > s.size()) throw IoError("truncated zip archive");
    std::string data = s.substr(data_start, csize);
    const auto actual = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
    if (actual != crc) throw IoError(path.string() + ": CRC mismatch in " + name);
    members.emplace(std::move(name), std::move(data));
  }
  return members;
}

}  // namespace gapkit::npz
