#include <filesystem>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "vlcbreak/cli.hpp"
#include "vlcbreak/container.hpp"
#include "vlcbreak/generator.hpp"

using namespace vlcbreak;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run vb(std::vector<std::string> args) {
  std::ostringstream o, e;
  Run r;
  r.code = cli::run(args, o, e);
  r.out = o.str();
  r.err = e.str();
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("vlcbreak-test-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

bool has_line(const std::string& text, const std::string& line) {
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l))
    if (l == line) return true;
  return false;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("keyspace prints L and P") {
  Run r = vb({"keyspace", "--p", "0.001", "--width", "176", "--height", "144", "--lambda", "0.015625"});
  CHECK(r.code == 0);
  CHECK(has_line(r.out, "L 2376"));
  CHECK(has_line(r.out, "P 0.9072"));
  CHECK(has_line(r.out, "partial separate 507606"));
  CHECK(has_line(r.out, "partial joint 3045600"));
  CHECK(r.out.find("table B15 20922789888000") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
  CHECK(vb({}).code == 2);
  CHECK(vb({"no-such-command"}).code == 2);
  CHECK(vb({"keyspace", "--p", "2"}).code == 2);
  CHECK(vb({"attack-partial"}).code == 2);
  CHECK(vb({"decode", "--in", "/nonexistent/x.mmv"}).code == 2);
  CHECK(vb({"generate", "--seed", "12z", "--out", "x"}).code == 2);
  CHECK(vb({"keyspace", "--help"}).code == 0);
}

TEST_CASE("generate, encrypt, decode and oracle") {
  TempDir d;
  Run g = vb({"generate", "--seed", "7", "--out", d / "p.mmv"});
  REQUIRE(g.code == 0);
  CHECK(g.out.find("size 176x144") != std::string::npos);
  REQUIRE(vb({"encrypt-tables", "--seed", "9", "--out", d / "k.txt", "--tables", d / "t.txt"}).code == 0);
  CHECK(parse_key(read_text_file(d / "k.txt")) == keygen(9));
  CHECK(cli::parse_table_set(read_text_file(d / "t.txt")) == encrypt_tables(keygen(9)));
  REQUIRE(vb({"encode", "--in", d / "p.mmv", "--key", d / "k.txt", "--out", d / "c.mmv"}).code == 0);
  CHECK(read_stream_file(d / "c.mmv") == encode(generate_video(7), encrypt_tables(keygen(9))));

  Run ok = vb({"decode", "--in", d / "c.mmv", "--tables", d / "t.txt", "--pgm", d / "s.pgm"});
  CHECK(ok.code == 0);
  CHECK(ok.out.rfind("ok\n", 0) == 0);
  CHECK(read_text_file(d / "s.pgm").rfind("P5\n11 9\n255\n", 0) == 0);
  Run bad = vb({"decode", "--in", d / "c.mmv"});
  CHECK(bad.code == 1);
  CHECK(bad.out.rfind("error ", 0) == 0);

  CHECK(vb({"oracle", "--in", d / "c.mmv", "--key", d / "k.txt"}).code == 0);
  Run rej = vb({"oracle", "--in", d / "c.mmv", "--tables", "default"});
  CHECK(rej.code == 1);
  CHECK(rej.out.find("verdict Rejected") == 0);
  CHECK(vb({"oracle", "--in", d / "c.mmv", "--tables", d / "t.txt", "--key", d / "k.txt"}).code == 2);
}

TEST_CASE("table set text round trip") {
  TableSet t = encrypt_tables(keygen(3));
  CHECK(cli::parse_table_set(cli::format_table_set(t)) == t);
  CHECK_THROWS_AS(cli::parse_table_set("role B10\n1 mc:0\n"), Error);
  Run dump = vb({"dump-tables"});
  CHECK(dump.code == 0);
  CHECK(cli::parse_table_set(dump.out) == default_table_set());
}

TEST_CASE("attack-partial with joint B10 stays within the joint bound") {
  TempDir d;
  REQUIRE(vb({"encode", "--seed", "100", "--out", d / "c.mmv", "--key", (d / "k.txt")}).code == 2);  // key file missing
  REQUIRE(vb({"encrypt-tables", "--seed", "500", "--out", d / "k.txt"}).code == 0);
  REQUIRE(vb({"encode", "--seed", "100", "--key", d / "k.txt", "--out", d / "c.mmv"}).code == 0);
  Run r = vb({"attack-partial", "--in", d / "c.mmv", "--joint-b10"});
  CHECK(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  bool total = false;
  while (std::getline(in, line))
    if (line.rfind("total ", 0) == 0) {
      std::istringstream f(line.substr(6));
      unsigned long long cand = 0;
      f >> cand;
      CHECK(cand <= 3045600ull);
      total = true;
    }
  CHECK(total);
  CHECK(r.out.find("Unique") != std::string::npos);
  CHECK(vb({"attack-partial", "--in", d / "c.mmv", "--joint-b10"}).out == r.out);
}

TEST_CASE("attack-cpa and attack-kpa") {
  Run c = vb({"attack-cpa", "--seed", "31"});
  CHECK(c.code == 0);
  CHECK(has_line(c.out, "hidden_key_match yes"));

  TempDir d;
  GeneratorParams p;
  p.pictures = 1;
  write_stream_file(d / "ip.mmv", encode(generate_video(40, p), default_table_set()));
  REQUIRE(vb({"encrypt-tables", "--seed", "41", "--out", d / "k.txt"}).code == 0);
  REQUIRE(vb({"encode", "--in", d / "ip.mmv", "--key", d / "k.txt", "--out", d / "ic.mmv"}).code == 0);
  REQUIRE(vb({"encode", "--seed", "40", "--key", d / "k.txt", "--out", d / "full.mmv"}).code == 0);
  Run k = vb({"attack-kpa", "--plain", d / "ip.mmv", "--cipher", d / "ic.mmv", "--in", d / "full.mmv"});
  CHECK(k.code == 0);
  CHECK(vb({"attack-kpa", "--plain", d / "ip.mmv"}).code == 2);
}

}  // TEST_SUITE
