#ifndef PERP_IO_HPP
#define PERP_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace perp {

/// One simulated value tagged with the replica that produced it and the
/// block it belongs to (0 when blocks do not apply).
struct Record {
  double value = 0.0;
  std::uint32_t replica = 0;
  std::uint32_t block = 0;

  friend bool operator==(const Record&, const Record&) = default;
};

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

/// Fixed 17-significant-digit form used by the CSV writer; always enough
/// for exact round-trip and stable column widths across platforms.
std::string format_double_17(double v);

/// Strict double parser; `what` names the field in error messages.
double parse_double(const std::string& text, const std::string& what);

/// Strict unsigned integer parser.
std::uint64_t parse_u64(const std::string& text, const std::string& what);

// CSV: header `value,replica,block`, '.' decimal separator, '\n' line
// endings, values with 17 significant digits.
void write_csv(std::ostream& os, const std::vector<Record>& rows);
std::vector<Record> read_csv(std::istream& is);

// Binary: magic "PERPBIN1", then a little-endian u64 record count, then
// per record a little-endian IEEE-754 double followed by two little-endian
// u32 fields (replica, block). 16 bytes per record, no padding.
void write_binary(std::ostream& os, const std::vector<Record>& rows);
std::vector<Record> read_binary(std::istream& is);

/// Parses key=value configuration text with INI-style `[section]` headers.
/// Keys inside a section are returned as "section.key"; `#` starts a
/// comment; later assignments to the same key win.
std::map<std::string, std::string> parse_config(std::istream& is);

}  // namespace perp

#endif  // PERP_IO_HPP
