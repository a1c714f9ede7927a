#include "vlcbreak/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "vlcbreak/attacks.hpp"
#include "vlcbreak/container.hpp"
#include "vlcbreak/generator.hpp"
#include "vlcbreak/keyspace.hpp"
#include "vlcbreak/oracle.hpp"

namespace vlcbreak::cli {

std::string format_table_set(const TableSet& tables) {
  std::string out;
  for (const HuffmanTable& t : tables) out += format_table(t);
  return out;
}

TableSet parse_table_set(const std::string& text) {
  std::vector<std::string> chunks;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("role ", 0) == 0) chunks.emplace_back();
    if (chunks.empty()) {
      if (line.empty() || line[0] == '#') continue;
      throw Error(Errc::ParseError, "table set must start with a role line");
    }
    chunks.back() += line + "\n";
  }
  TableSet set;
  std::array<bool, kRoleCount> seen{};
  for (const std::string& c : chunks) {
    HuffmanTable t = parse_table(c);
    if (seen[role_index(t.role())]) throw Error(Errc::ParseError, std::string("duplicate table ") + role_name(t.role()));
    seen[role_index(t.role())] = true;
    set[role_index(t.role())] = std::move(t);
  }
  for (TableRole r : kAllRoles)
    if (!seen[role_index(r)]) throw Error(Errc::ParseError, std::string("missing table ") + role_name(r));
  return set;
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string seed;
  std::string in, out, tables, key, pgm;
  std::vector<std::string> plain, cipher;
  bool joint_b10 = false, b12_with_b15 = false, timing = false, plausibility = false, d_pictures = false;
  std::size_t b15_group = 0;
  unsigned jobs = 1;
  double p = 0.001, lambda = 1.0 / 64, intra_vlc_ratio = 0.0, concealment_ratio = 0.0;
  std::uint16_t width = 176, height = 144;
  std::size_t pictures = 3, picture = 0;
  std::string pattern = "PBP";
};

std::uint64_t seed_of(const Flags& f) {
  if (f.seed.empty()) return kDefaultSeed;
  try {
    std::size_t used = 0;
    std::uint64_t v = std::stoull(f.seed, &used, 0);
    if (used != f.seed.size()) throw UsageError("bad --seed " + f.seed);
    return v;
  } catch (const std::logic_error&) {
    throw UsageError("bad --seed " + f.seed);
  }
}

SchemeShape shapes_of(const Flags& f) {
  SchemeShape s = standard_shapes();
  if (f.b15_group) {
    if (f.b15_group < 2 || f.b15_group > 16) throw UsageError("--b15-group must be in 2..16");
    s[role_index(TableRole::B15)] = {TableRole::B15, {f.b15_group}, 0};
  }
  return s;
}

std::string need(const std::string& v, const char* flag) {
  if (v.empty()) throw UsageError(std::string("missing ") + flag);
  return v;
}

void emit(const Flags& f, std::ostream& out, const std::string& text) {
  if (f.out.empty()) out << text;
  else write_text_file(f.out, text);
}

SchemeKey load_key(const std::string& path) { return parse_key(read_text_file(path)); }

// --tables (file or "default") or --key; defaults when neither is given.
TableSet tables_of(const Flags& f) {
  if (!f.tables.empty() && !f.key.empty()) throw UsageError("give --tables or --key, not both");
  if (!f.key.empty()) return encrypt_tables(load_key(f.key));
  if (f.tables.empty() || f.tables == "default") return default_table_set();
  return parse_table_set(read_text_file(f.tables));
}

MiniSequence plain_sequence(const std::string& path) {
  DecodeResult d = decode(read_stream_file(path), default_table_set(), CheckSet::all());
  if (!d.ok()) throw Error(Errc::ParseError, path + " is not a plaintext stream");
  return d.sequence;
}

GeneratorParams generator_params(const Flags& f) {
  GeneratorParams g;
  g.width = f.width;
  g.height = f.height;
  g.pictures = f.pictures;
  g.pattern = f.pattern;
  g.intra_vlc_ratio = f.intra_vlc_ratio;
  g.concealment_ratio = f.concealment_ratio;
  g.d_pictures = f.d_pictures;
  g.shapes = shapes_of(f);
  return g;
}

std::string sequence_summary(const MiniSequence& s, std::size_t bits) {
  std::ostringstream o;
  std::size_t mbs = 0, slices = 0;
  std::string types;
  for (const MiniPicture& p : s.pictures) {
    types += picture_type_char(p.type);
    slices += p.slices.size();
    for (const MiniSlice& sl : p.slices) mbs += sl.mbs.size();
  }
  o << "size " << s.width << "x" << s.height << "\npictures " << s.pictures.size() << " " << types << "\nslices "
    << slices << "\nmacroblocks " << mbs << "\nbits " << bits << "\n";
  return o.str();
}

int attack_exit(const AttackReport& r) { return r.outcome == Outcome::Unique ? 0 : 1; }

int cmd_generate(const Flags& f, std::ostream& out) {
  MiniSequence s = generate_video(seed_of(f), generator_params(f));
  BitString b = encode(s, default_table_set());
  write_stream_file(need(f.out, "--out"), b);
  out << sequence_summary(s, b.size());
  return 0;
}

int cmd_encode(const Flags& f, std::ostream& out) {
  MiniSequence s = f.in.empty() ? generate_video(seed_of(f), generator_params(f)) : plain_sequence(f.in);
  BitString b = encode(s, tables_of(f));
  write_stream_file(need(f.out, "--out"), b);
  out << sequence_summary(s, b.size());
  return 0;
}

int cmd_encrypt_tables(const Flags& f, std::ostream& out) {
  SchemeKey k = f.key.empty() ? keygen(seed_of(f), shapes_of(f)) : load_key(f.key);
  if (!f.tables.empty()) write_text_file(f.tables, format_table_set(encrypt_tables(k)));
  emit(f, out, format_key(k));
  return 0;
}

int cmd_decode(const Flags& f, std::ostream& out) {
  BitString b = read_stream_file(need(f.in, "--in"));
  DecodeResult d = decode(b, tables_of(f), CheckSet::all());
  std::ostringstream o;
  if (d.error) o << "error " << describe(*d.error) << "\n";
  else o << "ok\n" << sequence_summary(d.sequence, b.size());
  emit(f, out, o.str());
  if (!f.pgm.empty()) {
    StreamIndex ix = StreamIndex::build(b);
    write_text_file(f.pgm, status_pgm(d, f.picture, ix.mb_width(), ix.mb_height()));
  }
  return d.ok() ? 0 : 1;
}

int cmd_oracle(const Flags& f, std::ostream& out) {
  CheckSet checks = CheckSet::all();
  if (f.plausibility) checks.plausibility_threshold = default_plausibility_threshold();
  Verdict v = test_key(read_stream_file(need(f.in, "--in")), tables_of(f), checks);
  emit(f, out, format_verdict(v));
  return v.kind == VerdictKind::AcceptedClean ? 0 : 1;
}

int cmd_keyspace(const Flags& f, std::ostream& out) {
  SchemeShape shapes = shapes_of(f);
  std::ostringstream o;
  for (TableRole r : kAllRoles) {
    KeyCount c = make_count(table_count(shapes[role_index(r)]));
    o << "table " << role_name(r) << " " << to_string(c.value) << " log2 " << c.log2 << "\n";
  }
  KeyCount naive = naive_product(shapes);
  o << "naive " << to_string(naive.value) << " log2 " << naive.log2 << "\n";
  for (bool sep : {true, false})
    for (bool joint15 : {false, true}) {
      KeyCount c = dac_complexity({sep, joint15, true}, shapes);
      o << "dac b10_" << (sep ? "separate" : "joint") << " b12_b15_" << (joint15 ? "joint" : "separate") << " "
        << to_string(c.value) << " log2 " << c.log2 << "\n";
    }
  o << "partial separate " << to_string(partial_key_complexity(true, shapes).value) << "\n";
  o << "partial joint " << to_string(partial_key_complexity(false, shapes).value) << "\n";
  if (f.p < 0 || f.p > 1) throw UsageError("--p must be in [0, 1]");
  if (f.lambda < 1.0 / 64 || f.lambda > 1) throw UsageError("--lambda must be in [1/64, 1]");
  std::uint64_t L = syntax_element_count(f.width, f.height, f.lambda);
  o << "L " << L << "\n";
  o << "P " << std::fixed << std::setprecision(4) << error_probability(f.p, L) << "\n";
  emit(f, out, o.str());
  return 0;
}

AttackOptions attack_options(const Flags& f) {
  AttackOptions o;
  o.shapes = shapes_of(f);
  if (f.jobs == 0) throw UsageError("--jobs must be at least 1");
  o.jobs = f.jobs;
  return o;
}

int cmd_attack_dac(const Flags& f, std::ostream& out) {
  BitString b = read_stream_file(need(f.in, "--in"));
  AttackScenario sc{!f.joint_b10, f.b12_with_b15, true};
  AttackReport r = dac_attack(b, sc, CheckSet::all(), attack_options(f));
  emit(f, out, format_report(r, f.timing));
  return attack_exit(r);
}

int cmd_attack_partial(const Flags& f, std::ostream& out) {
  BitString b = read_stream_file(need(f.in, "--in"));
  AttackReport r = partial_key_attack(b, !f.joint_b10, CheckSet::all(), attack_options(f));
  emit(f, out, format_report(r, f.timing));
  return attack_exit(r);
}

int cmd_attack_cpa(const Flags& f, std::ostream& out) {
  AttackOptions opt = attack_options(f);
  SchemeKey hidden = f.key.empty() ? keygen(seed_of(f), opt.shapes) : load_key(f.key);
  TableSet tables = encrypt_tables(hidden);
  ChosenPlan plan = build_chosen_plan();
  AttackReport r = cpa_attack(plan, [&](const MiniSequence& s) { return encode(s, tables); }, opt);
  bool match = r.key && r.key->tables == hidden.tables;
  std::string text = format_report(r, f.timing) + "hidden_key_match " + (match ? "yes" : "no") + "\n";
  emit(f, out, text);
  return match ? 0 : 1;
}

int cmd_attack_kpa(const Flags& f, std::ostream& out) {
  if (f.plain.empty() || f.plain.size() != f.cipher.size())
    throw UsageError("give matching --plain and --cipher lists");
  std::vector<KnownPair> pairs;
  for (std::size_t i = 0; i < f.plain.size(); ++i) pairs.push_back({plain_sequence(f.plain[i]), read_stream_file(f.cipher[i])});
  std::optional<BitString> target;
  if (!f.in.empty()) target = read_stream_file(f.in);
  AttackReport r = kpa_attack(pairs, CheckSet::all(), attack_options(f), target ? &*target : nullptr);
  emit(f, out, format_report(r, f.timing));
  return attack_exit(r);
}

int cmd_dump_tables(const Flags& f, std::ostream& out) {
  emit(f, out, format_table_set(tables_of(f)));
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Secret-Huffman-table cipher workbench", "vlcbreak"};
  app.require_subcommand(1);
  Flags f;
  auto seed = [&](CLI::App* c) { c->add_option("--seed", f.seed, "decimal or 0x-hex seed"); };
  auto io = [&](CLI::App* c) {
    c->add_option("--in", f.in, "input stream (.mmv)");
    c->add_option("--out", f.out, "output file");
  };
  auto keyed = [&](CLI::App* c) {
    c->add_option("--tables", f.tables, "table set file or 'default'");
    c->add_option("--key", f.key, "key file");
  };
  auto shape = [&](CLI::App* c) { c->add_option("--b15-group", f.b15_group, "restrict B15 to one group of this size"); };
  auto attack = [&](CLI::App* c) {
    io(c);
    shape(c);
    c->add_option("--jobs", f.jobs, "worker threads");
    c->add_flag("--timing", f.timing, "include elapsed time in the report");
  };
  auto video = [&](CLI::App* c) {
    c->add_option("--width", f.width);
    c->add_option("--height", f.height);
    c->add_option("--pictures", f.pictures);
    c->add_option("--pattern", f.pattern, "picture types after the leading I");
    c->add_option("--intra-vlc-ratio", f.intra_vlc_ratio);
    c->add_option("--concealment-ratio", f.concealment_ratio);
    c->add_flag("--d-pictures", f.d_pictures);
  };

  std::vector<std::pair<CLI::App*, int (*)(const Flags&, std::ostream&)>> cmds;
  auto add = [&](const char* name, const char* help, int (*fn)(const Flags&, std::ostream&)) {
    CLI::App* c = app.add_subcommand(name, help);
    cmds.emplace_back(c, fn);
    return c;
  };

  CLI::App* c = add("generate", "synthetic plaintext stream", cmd_generate);
  seed(c), io(c), video(c), shape(c);
  c = add("encode", "encode a plaintext stream or a generated one under tables or a key", cmd_encode);
  seed(c), io(c), keyed(c), video(c), shape(c);
  c = add("encrypt-tables", "draw a key and write it (and its tables with --tables)", cmd_encrypt_tables);
  seed(c), shape(c);
  c->add_option("--out", f.out);
  c->add_option("--key", f.key, "existing key file");
  c->add_option("--tables", f.tables, "where to write the encrypted tables");
  c = add("decode", "decode a stream", cmd_decode);
  io(c), keyed(c);
  c->add_option("--pgm", f.pgm, "write the per-MB status map of --picture");
  c->add_option("--picture", f.picture);
  c = add("oracle", "syntax-error verdict for candidate tables", cmd_oracle);
  io(c), keyed(c);
  c->add_flag("--plausibility", f.plausibility, "also apply the plausibility threshold");
  c = add("keyspace", "key-space figures and error probability", cmd_keyspace);
  shape(c);
  c->add_option("--out", f.out);
  c->add_option("--p", f.p);
  c->add_option("--width", f.width);
  c->add_option("--height", f.height);
  c->add_option("--lambda", f.lambda);
  c = add("attack-dac", "ciphertext-only divide-and-conquer search", cmd_attack_dac);
  attack(c);
  c->add_flag("--joint-b10", f.joint_b10);
  c->add_flag("--b12-with-b15", f.b12_with_b15);
  c = add("attack-partial", "search B10, B12, B13 and B14 only", cmd_attack_partial);
  attack(c);
  c->add_flag("--joint-b10", f.joint_b10);
  c = add("attack-cpa", "chosen-plaintext attack against a hidden key", cmd_attack_cpa);
  seed(c), shape(c);
  c->add_option("--key", f.key, "hidden key file (default: drawn from --seed)");
  c->add_option("--out", f.out);
  c->add_flag("--timing", f.timing);
  c = add("attack-kpa", "known-plaintext attack", cmd_attack_kpa);
  attack(c);
  c->add_option("--plain", f.plain, "plaintext streams")->expected(1, -1);
  c->add_option("--cipher", f.cipher, "matching ciphertext streams")->expected(1, -1);
  c = add("dump-tables", "print default or keyed tables", cmd_dump_tables);
  keyed(c);
  c->add_option("--out", f.out);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return 2;
  }
  try {
    for (const auto& [sub, fn] : cmds)
      if (sub->parsed()) return fn(f, out);
  } catch (const UsageError& e) {
    err << "usage: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << e.what() << "\n";
    switch (e.code()) {
      case Errc::BadParams:
      case Errc::IoError:
      case Errc::ParseError:
      case Errc::InvalidScenario:
      case Errc::NotMpeg1Like: return 2;
      default: return 1;
    }
  }
  return 2;
}

}  // namespace vlcbreak::cli
