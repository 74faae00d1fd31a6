#include "perp/io.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <istream>
#include <ostream>
#include <system_error>

#include "perp/error.hpp"

namespace perp {

std::string format_double(double v) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string format_double_17(double v) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ConfigError(what + ": '" + text + "' is not a number");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  std::uint64_t v = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ConfigError(what + ": '" + text + "' is not a nonnegative integer");
  }
  return v;
}

void write_csv(std::ostream& os, const std::vector<Record>& rows) {
  os << "value,replica,block\n";
  for (const auto& r : rows) {
    os << format_double_17(r.value) << ',' << r.replica << ',' << r.block
       << '\n';
  }
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::vector<Record> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "value,replica,block") {
    throw ConfigError("CSV: expected header 'value,replica,block'");
  }
  std::vector<Record> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto parts = split_line(line);
    if (parts.size() != 3) {
      throw ConfigError("CSV line " + std::to_string(lineno) +
                        ": expected 3 fields, got " +
                        std::to_string(parts.size()));
    }
    Record r;
    const std::string where = "CSV line " + std::to_string(lineno);
    r.value = parse_double(parts[0], where + " value");
    r.replica = static_cast<std::uint32_t>(parse_u64(parts[1], where + " replica"));
    r.block = static_cast<std::uint32_t>(parse_u64(parts[2], where + " block"));
    rows.push_back(r);
  }
  return rows;
}

namespace {

constexpr char kMagic[8] = {'P', 'E', 'R', 'P', 'B', 'I', 'N', '1'};

void put_u64le(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

void put_u32le(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

std::uint64_t get_u64le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw ConfigError("binary input truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

std::uint32_t get_u32le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw ConfigError("binary input truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_binary(std::ostream& os, const std::vector<Record>& rows) {
  os.write(kMagic, 8);
  put_u64le(os, rows.size());
  for (const auto& r : rows) {
    std::uint64_t bits = 0;
    static_assert(sizeof(bits) == sizeof(r.value));
    std::memcpy(&bits, &r.value, 8);
    put_u64le(os, bits);
    put_u32le(os, r.replica);
    put_u32le(os, r.block);
  }
}

std::vector<Record> read_binary(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) {
    throw ConfigError("binary input: bad magic (want PERPBIN1)");
  }
  const std::uint64_t count = get_u64le(is);
  std::vector<Record> rows;
  rows.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Record r;
    const std::uint64_t bits = get_u64le(is);
    std::memcpy(&r.value, &bits, 8);
    r.replica = get_u32le(is);
    r.block = get_u32le(is);
    rows.push_back(r);
  }
  return rows;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::map<std::string, std::string> parse_config(std::istream& is) {
  std::map<std::string, std::string> out;
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": malformed section header '" + line + "'");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": empty section name");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key");
    }
    out[section.empty() ? key : section + "." + key] = value;
  }
  return out;
}

}  // namespace perp
