#include <chrono>

#include "anchor.hpp"
#include "vlcbreak/attacks.hpp"

namespace vlcbreak {

namespace {

struct PairJob {
  std::size_t pair = 0;
  std::vector<SyntaxElement> trace;
  std::vector<detail::Segment> segments;
  std::vector<char> done;
};

[[noreturn]] void inconsistent(const std::string& what) { throw Error(Errc::InconsistentPair, what); }

void bind_checked(Bindings& b, TableRole role, const Symbol& s, const Codeword& c, const std::string& where) {
  if (!b.bind(role, s, c))
    inconsistent(where + ": " + role_name(role) + " " + to_string(s) + " -> " + c.to_text() +
                 " contradicts an earlier binding");
}

bool uses_b15(const BitString& stream) {
  StreamIndex ix = StreamIndex::build(stream);
  for (const SliceInfo& s : ix.slices)
    if (s.intra_vlc_format && s.type != PictureType::D) return true;
  return false;
}

}  // namespace

AttackReport kpa_attack(const std::vector<KnownPair>& pairs, const CheckSet& checks, const AttackOptions& options,
                        const BitString* target) {
  auto t0 = std::chrono::steady_clock::now();
  if (pairs.empty()) throw Error(Errc::BadParams, "no known pairs");
  const TableSet plain = default_table_set();
  detail::CandidateSets cands;
  for (TableRole r : kAllRoles)
    cands[role_index(r)] = detail::candidate_codewords(plain[role_index(r)], options.shapes[role_index(r)]);

  std::vector<PairJob> jobs;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    PairJob j;
    j.pair = i;
    j.trace = syntax_trace(pairs[i].plain);
    if (!detail::split_segments(j.trace, pairs[i].cipher, j.segments))
      inconsistent("pair " + std::to_string(i) + ": start codes do not match the plaintext");
    j.done.assign(j.segments.size(), 0);
    jobs.push_back(std::move(j));
  }

  Bindings bound;
  detail::AlignOptions align;
  align.candidates = &cands;
  align.node_budget = 1u << 16;
  align.max_solutions = 16;
  std::array<std::optional<std::vector<Count>>, kRoleCount> keys;
  for (bool progress = true; progress;) {
    progress = false;
    for (PairJob& j : jobs) {
      for (std::size_t k = 0; k < j.segments.size(); ++k) {
        if (j.done[k]) continue;
        std::string where = "pair " + std::to_string(j.pair) + " segment " + std::to_string(k);
        detail::AlignResult r = detail::align_segment(pairs[j.pair].cipher, j.segments[k], j.trace, bound, align);
        if (r.status == detail::AlignStatus::None) inconsistent(where + ": no reading agrees with the bindings");
        if (r.status == detail::AlignStatus::Unique) j.done[k] = 1;
        for (const auto& [role, sym, code] : r.common) {
          bind_checked(bound, role, sym, code, where);
          progress = true;
        }
      }
    }
    // Entries forced by the key shape once part of a table is bound.
    for (TableRole r : kAllRoles) {
      const HuffmanTable& p = plain[role_index(r)];
      auto& m = bound.table[role_index(r)];
      keys[role_index(r)] = consistent_keys(p, options.shapes[role_index(r)], m, options.survivor_cap);
      const auto& ks = keys[role_index(r)];
      if (!ks || m.empty()) continue;
      if (ks->empty()) inconsistent(std::string("no key of ") + role_name(r) + " matches the bindings");
      std::vector<HuffmanTable> tables;
      for (Count i : *ks) tables.push_back(apply_key(p, key_from_index(options.shapes[role_index(r)], i)));
      for (std::size_t e = 0; e < p.size(); ++e) {
        const VlcEntry& first = tables.front()[e];
        if (m.count(first.symbol)) continue;
        bool forced = std::all_of(tables.begin(), tables.end(), [&](const HuffmanTable& t) { return t[e] == first; });
        if (forced) {
          bind_checked(bound, r, first.symbol, first.code, "key shape");
          progress = true;
        }
      }
    }
  }

  const BitString& stream = target ? *target : pairs.front().cipher;
  std::array<RoleCandidates, kRoleCount> lists;
  std::array<bool, kRoleCount> search{};
  bool b15 = uses_b15(stream);
  for (TableRole r : kAllRoles) {
    if (!bound.table[role_index(r)].empty()) lists[role_index(r)].list = keys[role_index(r)];
    search[role_index(r)] = r != TableRole::B15 || b15;
  }
  AttackReport rep = restricted_search(stream, lists, search, checks, options);
  rep.bindings = bound.size();
  Count blind = partial_key_complexity(true, options.shapes).value;
  if (b15) blind = dac_complexity({true, false, true}, options.shapes).value;
  std::string cmp = "blind search bound " + to_string(blind);
  if (rep.candidates_tested > 0) {
    cmp += ", ratio " + std::to_string(static_cast<double>(blind) / static_cast<double>(rep.candidates_tested));
  }
  rep.note = rep.note.empty() ? cmp : rep.note + "; " + cmp;
  rep.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace vlcbreak
