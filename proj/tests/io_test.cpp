#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "perp/error.hpp"
#include "perp/io.hpp"
#include "perp/rng.hpp"

using namespace perp;

TEST_SUITE_BEGIN("io");

TEST_CASE("format_double emits the shortest exact representation") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e300) == "1e+300");
  // Shortest form still round-trips bit-exactly.
  auto rng = replica_rng(1, 0, Stream::path);
  for (int i = 0; i < 2000; ++i) {
    const double v = (rng.next_double() - 0.5) * std::pow(10.0, i % 60 - 30);
    CHECK(parse_double(format_double(v), "probe") == v);
  }
}

TEST_CASE("format_double_17 carries 17 significant digits and round-trips") {
  CHECK(format_double_17(0.5) == "0.5");
  CHECK(format_double_17(1.0 / 3.0) == "0.33333333333333331");
  auto rng = replica_rng(2, 0, Stream::path);
  for (int i = 0; i < 2000; ++i) {
    const double v = rng.next_double() * 1e6;
    CHECK(parse_double(format_double_17(v), "probe") == v);
  }
}

TEST_CASE("strict parsers reject anything but a full clean token") {
  CHECK(parse_double("2.5e-3", "x") == 2.5e-3);
  CHECK(parse_u64("18446744073709551615", "x") ==
        std::numeric_limits<std::uint64_t>::max());

  CHECK_THROWS_WITH_AS(parse_double("1.5x", "rate"),
                       "rate: '1.5x' is not a number", ConfigError);
  CHECK_THROWS_AS(parse_double("", "rate"), ConfigError);
  CHECK_THROWS_AS(parse_double(" 1.5", "rate"), ConfigError);
  CHECK_THROWS_AS(parse_u64("-3", "count"), ConfigError);
  CHECK_THROWS_AS(parse_u64("1.5", "count"), ConfigError);
  CHECK_THROWS_AS(parse_u64("18446744073709551616", "count"), ConfigError);
}

TEST_CASE("csv round-trips records exactly") {
  std::vector<Record> rows;
  auto rng = replica_rng(3, 0, Stream::path);
  for (std::uint32_t i = 0; i < 500; ++i) {
    rows.push_back({rng.next_double() * 1e4, i % 7, i});
  }
  std::stringstream ss;
  write_csv(ss, rows);
  CHECK(read_csv(ss) == rows);
}

TEST_CASE("csv golden format") {
  std::stringstream ss;
  write_csv(ss, {{0.5, 1, 2}, {1.25, 0, 3}});
  CHECK(ss.str() ==
        "value,replica,block\n"
        "0.5,1,2\n"
        "1.25,0,3\n");
}

TEST_CASE("csv reader names the offending line") {
  {
    std::stringstream ss("wrong,header,here\n0.5,0,0\n");
    CHECK_THROWS_WITH_AS(read_csv(ss),
                         "CSV: expected header 'value,replica,block'",
                         ConfigError);
  }
  {
    std::stringstream ss("value,replica,block\n0.5,0\n");
    try {
      read_csv(ss);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
      CHECK(std::string(e.what()).find("expected 3 fields, got 2") !=
            std::string::npos);
    }
  }
  {
    std::stringstream ss("value,replica,block\n0.5,0,0\nzap,1,1\n");
    try {
      read_csv(ss);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
      CHECK(std::string(e.what()).find("zap") != std::string::npos);
    }
  }
}

TEST_CASE("binary round-trips records exactly including edge doubles") {
  std::vector<Record> rows = {
      {0.0, 0, 0},
      {-0.0, 1, 2},
      {std::numeric_limits<double>::denorm_min(), 3, 4},
      {std::numeric_limits<double>::max(), 5, 6},
      {-1.5e-300, 0xFFFFFFFFu, 0xFFFFFFFFu},
  };
  auto rng = replica_rng(4, 0, Stream::path);
  for (std::uint32_t i = 0; i < 500; ++i) {
    rows.push_back({rng.next_double(), i, i * 2});
  }
  std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
  write_binary(ss, rows);
  const auto back = read_binary(ss);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    // operator== on Record compares doubles; compare bits for the -0.0 row.
    CHECK(std::signbit(back[i].value) == std::signbit(rows[i].value));
    CHECK(back[i] == rows[i]);
  }
  // 8 magic + 8 count + 16 per record.
  CHECK(ss.str().size() == 16 + 16 * rows.size());
}

TEST_CASE("binary reader rejects foreign or truncated input") {
  {
    std::stringstream ss("NOTMAGIC\x01\x02");
    CHECK_THROWS_WITH_AS(read_binary(ss),
                         "binary input: bad magic (want PERPBIN1)",
                         ConfigError);
  }
  {
    std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
    write_binary(ss, {{1.5, 0, 0}, {2.5, 1, 1}});
    std::string bytes = ss.str();
    bytes.resize(bytes.size() - 5);  // cut into the final record
    std::stringstream cut(bytes,
                          std::ios::in | std::ios::out | std::ios::binary);
    CHECK_THROWS_AS(read_binary(cut), ConfigError);
  }
}

TEST_CASE("config parser handles sections, comments, and overrides") {
  const std::string text =
      "# top comment\n"
      "seed = 42\n"
      "dist = family=beta alpha=1 beta=1   # inline comment\n"
      "\n"
      "[simulate]\n"
      "n = 1000\n"
      "seed = 7\n"
      "seed = 8\n"
      "\n"
      "[maxima-gof]\n"
      "block_len = 100,1000\n";
  std::stringstream ss(text);
  const auto kv = parse_config(ss);

  CHECK(kv.at("seed") == "42");
  // Only the first '=' splits: the value itself may contain more.
  CHECK(kv.at("dist") == "family=beta alpha=1 beta=1");
  CHECK(kv.at("simulate.n") == "1000");
  CHECK(kv.at("simulate.seed") == "8");  // later assignment wins
  CHECK(kv.at("maxima-gof.block_len") == "100,1000");
  CHECK(kv.size() == 5);
}

TEST_CASE("config parser reports malformed lines by number") {
  {
    std::stringstream ss("ok = 1\n[broken\nx = 2\n");
    try {
      parse_config(ss);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  {
    std::stringstream ss("just a bare line\n");
    CHECK_THROWS_AS(parse_config(ss), ConfigError);
  }
  {
    std::stringstream ss("[]\n");
    CHECK_THROWS_AS(parse_config(ss), ConfigError);
  }
}

TEST_SUITE_END();
