#include <random>
#include <string>

#include "doctest.h"
#include "vlcbreak/bitio.hpp"
#include "vlcbreak/container.hpp"

using namespace vlcbreak;

TEST_SUITE("bitio") {

TEST_CASE("write then read recovers every field") {
  std::mt19937 rng(7);
  std::vector<std::pair<std::uint32_t, unsigned>> fields;
  std::string expect;  // reference: one char per bit
  BitString b;
  for (int i = 0; i < 2000; ++i) {
    unsigned n = 1 + rng() % 32;
    std::uint32_t v = n == 32 ? static_cast<std::uint32_t>(rng()) : static_cast<std::uint32_t>(rng() & ((1u << n) - 1));
    fields.emplace_back(v, n);
    b.write_bits(v, n);
    for (unsigned k = n; k-- > 0;) expect.push_back(((v >> k) & 1u) ? '1' : '0');
  }
  CHECK(b.to_text() == expect);
  CHECK(b.size() == expect.size());
  BitCursor c(b);
  for (auto [v, n] : fields) CHECK(c.read_bits(n) == v);
  CHECK(c.remaining() == 0);
}

TEST_CASE("padding bits in the last byte stay zero") {
  BitString b = BitString::from_text("101");
  REQUIRE(b.bytes().size() == 1);
  CHECK(b.bytes()[0] == 0xA0);
  CHECK(b == BitString::from_bytes({0xA0}, 3));
}

TEST_CASE("text form ignores spaces and rejects other characters") {
  CHECK(BitString::from_text("10 01").to_text() == "1001");
  CHECK_THROWS_AS(BitString::from_text("10x"), Error);
}

TEST_CASE("read past the end throws EndOfStream") {
  BitString b = BitString::from_text("1010");
  BitCursor c(b);
  c.read_bits(3);
  try {
    c.read_bits(2);
    FAIL("expected EndOfStream");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EndOfStream);
  }
}

TEST_CASE("too wide values are refused") {
  BitString b;
  try {
    b.write_bits(4, 2);
    FAIL("expected ValueTooWide");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ValueTooWide);
  }
  CHECK_THROWS_AS(b.write_bits(0, 33), Error);
}

TEST_CASE("peek does not consume") {
  BitString b = BitString::from_text("110010");
  BitCursor c(b);
  std::uint32_t v = 0;
  REQUIRE(c.peek_bits(4, v));
  CHECK(v == 0xC);
  CHECK(c.position() == 0);
  CHECK_FALSE(c.peek_bits(7, v));
}

TEST_CASE("slice and append") {
  BitString b = BitString::from_text("0011010111");
  CHECK(b.slice(2, 5).to_text() == "11010");
  BitString a = BitString::from_text("1");
  a.append(b);
  CHECK(a.to_text() == "10011010111");
}

TEST_CASE("zero run is tracked across reads and after seeks") {
  BitString b = BitString::from_text("1000001000");
  BitCursor c(b);
  c.read_bits(6);
  CHECK(c.zero_run() == 5);
  c.read_bits(1);
  CHECK(c.zero_run() == 0);
  BitCursor d(b, 5);
  CHECK(d.zero_run() == 4);
}

TEST_CASE("start code 0xB3 is found") {
  BitString b = BitString::from_text("1101");
  write_start_code(b, 0xB3);
  CHECK(b.slice(4, 32).to_text() == std::string(23, '0') + "1" + "10110011");
  b.write_bits(5, 3);
  BitCursor c(b);
  auto id = next_start_code(c);
  REQUIRE(id);
  CHECK(*id == 0xB3);
  CHECK(c.position() == 4 + kStartCodeBits);
  CHECK_FALSE(next_start_code(c));
}

TEST_CASE("at_start_code needs the full pattern") {
  BitString b;
  write_start_code(b, 0x01);
  CHECK(BitCursor(b).at_start_code());
  BitString t = b.slice(0, 31);
  CHECK_FALSE(BitCursor(t).at_start_code());
}

TEST_CASE("scan reports every start code with its offset") {
  BitString b;
  write_start_code(b, 0xB3);
  b.write_bits(0x2F, 7);
  write_start_code(b, 0x00);
  write_start_code(b, 0xB7);
  auto s = scan_start_codes(b);
  REQUIRE(s.size() == 3);
  CHECK(s[0].offset == 0);
  CHECK(s[1].offset == 39);
  CHECK(s[1].id == 0x00);
  CHECK(s[2].offset == 71);
  CHECK(s[2].id == 0xB7);
}

TEST_CASE("zero runs outside start codes") {
  BitString b = BitString::from_text("1" + std::string(9, '0') + "1");
  write_start_code(b, 0xB3);
  CHECK(max_zero_run_outside_start_codes(b) == 9);
  // zeros glued to the front of a start code are ordinary data
  BitString c = BitString::from_text("1000");
  write_start_code(c, 0x01);
  CHECK(max_zero_run_outside_start_codes(c) == 3);
  BitString d = BitString::from_text("1" + std::string(23, '0') + "0");
  CHECK(max_zero_run_outside_start_codes(d) == 24);
}

TEST_CASE("container round trip") {
  BitString b = BitString::from_text("1011001110001");
  std::string bytes = to_container(b);
  CHECK(bytes.substr(0, 4) == "MMV1");
  CHECK(bytes.size() == 12 + 2);
  CHECK(from_container(bytes) == b);
  CHECK_THROWS_AS(from_container("MMV0xxxxxxxx"), Error);
  std::string bad = bytes;
  bad.pop_back();
  CHECK_THROWS_AS(from_container(bad), Error);
}

}  // TEST_SUITE
