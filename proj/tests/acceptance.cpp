// Acceptance gate: one PASS/FAIL line per criterion. With arguments, runs
// only the listed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "vlcbreak/attacks.hpp"
#include "vlcbreak/generator.hpp"
#include "vlcbreak/oracle.hpp"

using namespace vlcbreak;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol + 1e-12; }

// Known entries of the listed roles equal the truth, and at least one is known.
bool recovered_correctly(const AttackReport& r, const TableSet& truth, std::initializer_list<TableRole> roles) {
  for (TableRole role : roles) {
    const PartialTable& p = r.recovered[role_index(role)];
    if (p.known.empty()) return false;
    for (const VlcEntry& e : p.known)
      if (truth[role_index(role)].codeword(e.symbol) != e.code) return false;
  }
  return true;
}

Count stage_bound(const std::string& name, const SchemeShape& shapes) {
  std::size_t cut = name.find(']');
  std::string body = cut == std::string::npos ? name : name.substr(cut + 1);
  Count b = 1;
  for (TableRole r : kAllRoles)
    if (body.find(role_name(r)) != std::string::npos) b *= shapes[role_index(r)].cardinality();
  return b;
}

// ---------------------------------------------------------------------------

Result keyspace_counts() {
  bool ok = true;
  const Count expect[] = {6, 322560, 184320, 720, Count{20922789888000ull}};
  for (TableRole r : kAllRoles) ok = ok && table_count(r) == expect[role_index(r)];
  KeyCount naive = naive_product();
  ok = ok && near(naive.log2, 92.1, 0.1) && near(static_cast<double>(naive.value) / 1e27, 5.37, 0.005);
  const double dac[] = {44.3, 62.5, 46.8, 65.1};
  const AttackScenario sc[] = {{true, false, true}, {true, true, true}, {false, false, true}, {false, true, true}};
  std::string logs;
  for (int i = 0; i < 4; ++i) {
    KeyCount c = dac_complexity(sc[i]);
    ok = ok && near(c.log2, dac[i], 0.1);
    logs += (i ? "," : "") + fmt(c.log2, 1);
  }
  Count sep = partial_key_complexity(true).value, joint = partial_key_complexity(false).value;
  ok = ok && sep == 507606 && joint == 3045600;
  return {ok, "naive log2 " + fmt(naive.log2, 1) + ", dac log2 {" + logs + "}, partial " + to_string(sep) + "/" +
                  to_string(joint)};
}

Result error_probability_case() {
  std::uint64_t L = syntax_element_count(176, 144, 1.0 / 64);
  double P = error_probability(0.001, L);
  return {L == 2376 && near(P, 0.9072, 0.0001), "L " + std::to_string(L) + ", P " + fmt(P, 4)};
}

Result partial_key_case() {
  int unique = 0;
  double worst = 0;
  Count most = 0;
  std::string notes;
  for (std::uint64_t i = 0; i < 10; ++i) {
    GeneratorParams p;
    p.pictures = 3;
    MiniSequence s = generate_video(100 + i, p);
    TableSet t = encrypt_tables(keygen(500 + i));
    auto t0 = Clock::now();
    AttackReport r = partial_key_attack(encode(s, t), false, CheckSet::all());
    double sec = seconds_since(t0);
    bool good = r.outcome == Outcome::Unique && r.candidates_tested <= 3045600 && sec <= 60.0 &&
                recovered_correctly(r, t, {TableRole::B10, TableRole::B12, TableRole::B13, TableRole::B14});
    unique += good;
    worst = std::max(worst, sec);
    most = std::max(most, r.candidates_tested);
    if (!good) notes += " stream " + std::to_string(i) + ": " + outcome_name(r.outcome);
  }
  return {unique >= 9, std::to_string(unique) + "/10 Unique, max candidates " + to_string(most) + ", max time " +
                           fmt(worst, 1) + " s" + notes};
}

Result restricted_dac_case() {
  SchemeShape sh = standard_shapes();
  sh[role_index(TableRole::B15)] = {TableRole::B15, {6}, 0};
  AttackOptions o;
  o.shapes = sh;
  int unique = 0;
  bool bounds = true;
  Count most = 0;
  double worst = 0;
  std::string notes;
  for (std::uint64_t i = 0; i < 10; ++i) {
    GeneratorParams p;
    p.pictures = 4;
    p.intra_vlc_ratio = 0.5;
    p.shapes = sh;
    SchemeKey k = keygen(700 + i, sh);
    BitString b = encode(generate_video(300 + i, p), encrypt_tables(k));
    auto t0 = Clock::now();
    AttackReport r = dac_attack(b, {}, CheckSet::all(), o);
    worst = std::max(worst, seconds_since(t0));
    bool good = r.outcome == Outcome::Unique && r.key && r.key->tables == k.tables;
    unique += good;
    for (const StageReport& st : r.order)
      if (st.candidates > stage_bound(st.name, sh)) {
        bounds = false;
        notes += " " + st.name + " over its shape";
      }
    most = std::max(most, r.candidates_tested);
    if (!good) notes += " stream " + std::to_string(i) + ": " + outcome_name(r.outcome);
  }
  return {unique >= 9 && bounds, std::to_string(unique) + "/10 Unique, stage counts within shapes: " +
                                     (bounds ? "yes" : "no") + ", max candidates " + to_string(most) + " (sum bound " +
                                     to_string(dac_complexity({}, sh).value) + "), max time " + fmt(worst, 1) + " s" +
                                     notes};
}

Result chosen_plaintext_case() {
  ChosenPlan plan = build_chosen_plan();
  int exact = 0;
  auto t0 = Clock::now();
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    SchemeKey k = keygen(seed);
    TableSet t = encrypt_tables(k);
    try {
      AttackReport r = cpa_attack(plan, [&](const MiniSequence& m) { return encode(m, t); });
      if (r.key && r.key->tables == k.tables) ++exact;
    } catch (const Error&) {
    }
  }
  double sec = seconds_since(t0);
  std::size_t mbs = plan.total_mbs();
  return {exact == 100 && mbs <= 40 && sec <= 10.0,
          std::to_string(exact) + "/100 exact, " + std::to_string(mbs) + " chosen MBs, " + fmt(sec, 2) + " s"};
}

Result known_plaintext_case() {
  MiniSequence s = generate_video(900);
  TableSet t = encrypt_tables(keygen(901));
  BitString target = encode(s, t);
  MiniSequence ip = s;
  ip.pictures.resize(1);
  AttackReport r = kpa_attack({{ip, encode(ip, t)}}, CheckSet::all(), {}, &target);
  bool bound = true;
  for (TableRole role : {TableRole::B12, TableRole::B13}) {
    const PartialTable& p = r.recovered[role_index(role)];
    bound = bound && p.complete() && p.to_table() == t[role_index(role)];
    for (const StageReport& st : r.order)
      if (st.name.find(role_name(role)) != std::string::npos && st.candidates != 0) bound = false;
  }
  AttackReport blind = partial_key_attack(target, true, CheckSet::all());
  bool fewer = r.candidates_tested < blind.candidates_tested;
  double ratio = r.candidates_tested ? static_cast<double>(blind.candidates_tested) / static_cast<double>(r.candidates_tested)
                                     : INFINITY;
  return {bound && fewer && r.outcome == Outcome::Unique,
          std::string("B12/B13 bound without search: ") + (bound ? "yes" : "no") + ", candidates " +
              to_string(r.candidates_tested) + " vs blind " + to_string(blind.candidates_tested) + " (ratio " +
              fmt(ratio, 0) + ")"};
}

struct Swap {
  TableRole role;
  const char* a;
  const char* b;
};

TableSet swapped_tables(const Swap& sw) {
  TableSet t = default_table_set();
  std::vector<VlcEntry> e = t[role_index(sw.role)].entries();
  VlcEntry* x = nullptr;
  VlcEntry* y = nullptr;
  for (VlcEntry& v : e) {
    if (v.code.to_text() == sw.a) x = &v;
    if (v.code.to_text() == sw.b) y = &v;
  }
  if (!x || !y) throw Error(Errc::BadParams, "swap codewords not in the table");
  std::swap(x->code, y->code);
  t[role_index(sw.role)] = HuffmanTable(sw.role, e);
  return t;
}

// First picture whose syntax uses either swapped entry.
int first_affected_picture(const MiniSequence& s, const Swap& sw, const TableSet& plain) {
  Codeword ca = Codeword::from_text(sw.a), cb = Codeword::from_text(sw.b);
  for (const SyntaxElement& e : syntax_trace(s)) {
    if (e.kind != SyntaxElement::Kind::Vlc || e.role != sw.role) continue;
    const Codeword& c = plain[role_index(e.role)].codeword(e.symbol);
    if (c == ca || c == cb) return e.picture;
  }
  return -1;
}

Result oracle_sensitivity_case() {
  const Swap swaps[] = {{TableRole::B14, "11", "011"},
                        {TableRole::B12, "00", "01"},
                        {TableRole::B15, "10", "010"},
                        {TableRole::B13, "01", "10"}};
  const TableSet plain = default_table_set();
  bool ok = true;
  int false_rejections = 0, honest_runs = 0;
  std::string detail;
  for (const Swap& sw : swaps) {
    TableSet wrong = swapped_tables(sw);
    int hit = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      GeneratorParams p;
      if (sw.role == TableRole::B15) p.intra_vlc_ratio = 1.0;
      MiniSequence s = generate_video(seed, p);
      BitString honest = encode(s, plain);
      SchemeKey k = keygen(seed + 10000);
      TableSet keyed = encrypt_tables(k);
      for (const auto& [stream, tables] : {std::pair{honest, plain}, std::pair{encode(s, keyed), keyed}}) {
        ++honest_runs;
        if (test_key(stream, tables).kind != VerdictKind::AcceptedClean) ++false_rejections;
      }
      int first = first_affected_picture(s, sw, plain);
      Verdict v = test_key(honest, wrong);
      if (first >= 0 && v.kind == VerdictKind::Rejected && v.error->picture <= first) ++hit;
    }
    ok = ok && hit >= 90;
    detail += std::string(detail.empty() ? "" : ", ") + role_name(sw.role) + " " + sw.a + "/" + sw.b + " " +
              std::to_string(hit) + "%";
  }
  ok = ok && false_rejections == 0;
  return {ok, detail + ", honest false rejections " + std::to_string(false_rejections) + "/" +
                  std::to_string(honest_runs)};
}

Result codec_soundness_case() {
  int identical = 0;
  unsigned worst_run = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    GeneratorParams p;
    p.pictures = 1 + seed % 4;
    p.chroma = static_cast<ChromaFormat>(1 + seed % 3);
    p.intra_vlc_ratio = (seed % 5) * 0.25;
    p.concealment_ratio = seed % 7 == 0 ? 0.5 : 0.0;
    p.f_code = static_cast<std::uint8_t>(1 + seed % 3);
    if (seed % 11 == 0) {
      p.d_pictures = true;
      p.pattern = "DPB";
    }
    MiniSequence s = generate_video(seed, p);
    TableSet t = encrypt_tables(keygen(seed ^ 0xABCDEFull));
    BitString b = encode(s, t);
    DecodeResult r = decode(b, t);
    if (r.ok() && r.sequence == s) ++identical;
    worst_run = std::max(worst_run, max_zero_run_outside_start_codes(b));
  }
  return {identical == 1000 && worst_run < kStartCodeZeros,
          std::to_string(identical) + "/1000 identical, longest zero run " + std::to_string(worst_run)};
}

struct Criterion {
  int number;
  const char* title;
  std::function<Result()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "key-space arithmetic", keyspace_counts},
      {2, "error probability", error_probability_case},
      {3, "partial-key attack, joint B10", partial_key_case},
      {4, "DAC with B15 restricted to [6]", restricted_dac_case},
      {5, "chosen-plaintext attack", chosen_plaintext_case},
      {6, "known-plaintext attack", known_plaintext_case},
      {7, "oracle sensitivity", oracle_sensitivity_case},
      {8, "codec soundness", codec_soundness_case},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  int failed = 0;
  for (const Criterion& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.number) == wanted.end()) continue;
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failed += !r.pass;
    std::cout << "criterion " << c.number << " " << (r.pass ? "PASS" : "FAIL") << " " << c.title << ": " << r.detail
              << std::endl;
  }
  return failed ? 1 : 0;
}
