#include <algorithm>
#include <atomic>
#include <chrono>
#include <sstream>
#include <thread>

#include "anchor.hpp"
#include "vlcbreak/attacks.hpp"

namespace vlcbreak {

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Unique: return "Unique";
    case Outcome::Ambiguous: return "Ambiguous";
    case Outcome::Failed: return "Failed";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Search spaces above this are reported as infeasible instead of enumerated.
constexpr Count kMaxEnumerable = Count(1) << 34;

// Branches over the entries an unknown table may hold wherever the
// decoder meets an unresolved codeword. Paths are replayed from the slice
// start; the choice stack is advanced depth-first after each failure.
class ForkChooser final : public VlcChooser {
 public:
  using Pool = std::array<std::vector<VlcEntry>, kRoleCount>;
  explicit ForkChooser(const Pool& pool) : pool_(&pool) {}

  void reset() { path_.clear(); }
  void begin_run() {
    depth_ = 0;
    for (auto& a : assigned_) a.clear();
  }

  VlcChoice choose(TableRole role, const BitString& stream, std::size_t position) override {
    const std::vector<VlcEntry>& pool = (*pool_)[role_index(role)];
    if (pool.empty()) return {};
    auto& assigned = assigned_[role_index(role)];
    opts_.clear();
    for (const VlcEntry& e : pool) {
      const Codeword& c = e.code;
      if (position + c.length > stream.size()) continue;
      bool match = true;
      for (unsigned k = 0; k < c.length && match; ++k) match = stream.bit(position + k) == c.bit(k);
      if (!match) continue;
      bool ok = true;
      for (const VlcEntry& a : assigned) {
        if (a.symbol == e.symbol ? a.code != c : a.code.conflicts(c)) {
          ok = false;
          break;
        }
      }
      if (ok) opts_.push_back(&e);
    }
    if (depth_ == path_.size()) path_.push_back({0, opts_.size()});
    auto [choice, count] = path_[depth_++];
    if (opts_.empty() || count != opts_.size()) return {VlcChoice::Kind::NoEntry, {}};
    const VlcEntry& e = *opts_[choice];
    if (std::none_of(assigned.begin(), assigned.end(), [&](const VlcEntry& a) { return a.symbol == e.symbol; }))
      assigned.push_back(e);
    return {VlcChoice::Kind::Take, e};
  }

  /// Moves to the next untried path. False when none is left.
  bool advance() {
    path_.resize(std::min(path_.size(), depth_));
    while (!path_.empty() && path_.back().first + 1 >= path_.back().second) path_.pop_back();
    if (path_.empty()) return false;
    ++path_.back().first;
    return true;
  }

 private:
  const Pool* pool_;
  std::vector<std::pair<std::size_t, std::size_t>> path_;
  std::size_t depth_ = 0;
  std::array<std::vector<VlcEntry>, kRoleCount> assigned_;
  std::vector<const VlcEntry*> opts_;
};

struct RoleState {
  bool searched = false;  // role takes part in the search
  bool pinned = false;    // fixed to `pinned_table`
  HuffmanTable pinned_table;
  std::optional<Count> pinned_index;
  std::optional<std::vector<Count>> base;  // restricted candidate list
  std::optional<std::vector<Count>> survivors;
  bool overflow = false;
  TableDecoder decoder;
};

class Engine {
 public:
  Engine(const BitString& stream, const StreamIndex& ix, const CheckSet& checks, const AttackOptions& opt)
      : s_(&stream), ix_(&ix), ck_(&checks), opt_(&opt), plain_(default_table_set()) {
    for (TableRole r : kAllRoles) st_[role_index(r)].decoder = TableDecoder::unknown(r);
    build_evidence();
  }

  RoleState& state(TableRole r) { return st_[role_index(r)]; }
  const RoleState& state(TableRole r) const { return st_[role_index(r)]; }
  const KeySpaceShape& shape(TableRole r) const { return opt_->shapes[role_index(r)]; }

  void pin(TableRole r, const HuffmanTable& t, std::optional<Count> index) {
    RoleState& rs = state(r);
    rs.pinned = true;
    rs.pinned_table = t;
    rs.pinned_index = index;
    rs.survivors = std::vector<Count>{};
    if (index) rs.survivors->push_back(*index);
    rs.decoder = TableDecoder::full(t);
  }

  std::size_t b10_headers() const { return b10_headers_; }

  HuffmanTable table_for(TableRole r, Count index) const {
    return apply_key(plain_[role_index(r)], key_from_index(shape(r), index));
  }

  DecoderSet view() const {
    DecoderSet v{};
    for (std::size_t i = 0; i < kRoleCount; ++i) v[i] = &st_[i].decoder;
    return v;
  }

  /// Runs one oracle test: every evidence slice of `role` under `ds`.
  bool accept(TableRole role, const DecoderSet& ds) const {
    for (const SliceInfo* si : evidence_[role_index(role)]) {
      SliceResult r = decode_slice(*s_, *ix_, *si, ds, *ck_);
      if (r.outcome == SliceOutcome::Error) return false;
    }
    return true;
  }

  /// Like accept, but unresolved codewords of other roles are branched
  /// over; a slice rejects only when every branch fails. Slices that need
  /// more than `budget` replays count as passing.
  bool accept_forked(TableRole role, const DecoderSet& ds, ForkChooser& ch, std::size_t budget) const {
    for (const SliceInfo* si : evidence_[role_index(role)]) {
      ch.reset();
      for (std::size_t runs = 1;; ++runs) {
        ch.begin_run();
        SliceResult r = decode_slice(*s_, *ix_, *si, ds, *ck_, nullptr, &ch);
        if (r.outcome != SliceOutcome::Error || runs >= budget) break;
        if (!ch.advance()) return false;
      }
    }
    return true;
  }

  /// Entries each role could still hold beyond what is known of it.
  ForkChooser::Pool fork_pool(TableRole except) const {
    ForkChooser::Pool pool;
    for (TableRole r : kAllRoles) {
      if (r == except) continue;
      PartialTable p = knowledge(r);
      if (p.complete()) continue;
      const HuffmanTable& plain = plain_[role_index(r)];
      auto cands = detail::candidate_codewords(plain, shape(r));
      for (const Symbol& sym : p.undetermined) {
        const VlcEntry* pe = plain.find(sym);
        for (const Codeword& c : cands[sym]) {
          bool free = std::none_of(p.known.begin(), p.known.end(), [&](const VlcEntry& k) { return k.code.conflicts(c); });
          if (free) pool[role_index(r)].push_back({c, sym, pe->has_sign_suffix});
        }
      }
    }
    return pool;
  }

  /// Retests the survivors of `role` with branching over the other roles.
  StageReport fork_search(TableRole role, const std::string& name) {
    auto t0 = Clock::now();
    RoleState& rs = state(role);
    StageReport rep;
    rep.name = name;
    const std::vector<Count> list = *rs.survivors;
    ForkChooser::Pool pool = fork_pool(role);
    std::vector<char> alive(list.size(), 0);
    unsigned jobs = std::max(1u, opt_->jobs);
    if (list.size() < 8) jobs = 1;
    auto work = [&](unsigned t) {
      DecoderSet ds = view();
      TableDecoder scratch;
      ds[role_index(role)] = &scratch;
      ForkChooser ch(pool);
      for (std::size_t i = list.size() * t / jobs; i < list.size() * (t + 1) / jobs; ++i) {
        scratch = TableDecoder::full(table_for(role, list[i]));
        alive[i] = accept_forked(role, ds, ch, opt_->fork_budget);
      }
    };
    if (jobs == 1) {
      work(0);
    } else {
      std::vector<std::thread> threads;
      for (unsigned t = 0; t < jobs; ++t) threads.emplace_back(work, t);
      for (auto& th : threads) th.join();
    }
    std::vector<Count> keep;
    for (std::size_t i = 0; i < list.size(); ++i)
      if (alive[i]) keep.push_back(list[i]);
    rep.oracle_calls = list.size();
    rep.survivors = keep.size();
    rep.outcome = keep.empty() ? Outcome::Failed : keep.size() == 1 ? Outcome::Unique : Outcome::Ambiguous;
    rs.survivors = std::move(keep);
    refresh(role);
    rep.seconds = seconds_since(t0);
    return rep;
  }

  /// Tests candidates of `role` (full space, the restricted base list, or
  /// the current survivors) against the current knowledge of the others.
  StageReport search(TableRole role, const std::string& name, bool from_survivors) {
    auto t0 = Clock::now();
    RoleState& rs = state(role);
    StageReport rep;
    rep.name = name;
    const std::vector<Count>* list = nullptr;
    std::vector<Count> previous;
    Count total = 0;
    bool fresh_space = true;  // full space or base list rather than survivors
    if (from_survivors && rs.survivors && !rs.overflow) {
      previous = *rs.survivors;
      list = &previous;
      total = previous.size();
      fresh_space = false;
    } else if (rs.base) {
      list = &*rs.base;
      total = rs.base->size();
    } else {
      total = shape(role).cardinality();
    }
    if (total > kMaxEnumerable) {
      rep.outcome = Outcome::Failed;
      rep.survivors = 0;
      rs.survivors.reset();
      rs.overflow = true;
      rs.decoder = TableDecoder::unknown(role);
      rep.seconds = seconds_since(t0);
      infeasible_ = true;
      return rep;
    }

    unsigned jobs = std::max(1u, opt_->jobs);
    if (total < 64) jobs = 1;
    std::vector<std::vector<Count>> found(jobs);
    std::vector<Count> tested(jobs, 0);
    std::atomic<std::size_t> kept{0};
    std::atomic<bool> over{false};
    const std::size_t cap = opt_->survivor_cap;
    // Stops as soon as the survivor list overflows: an overflowed list
    // carries no knowledge, and the space is retested once others narrow.
    auto work = [&](unsigned j) {
      Count begin = total * j / jobs, end = total * (j + 1) / jobs;
      DecoderSet ds = view();
      TableDecoder scratch;
      ds[role_index(role)] = &scratch;
      const HuffmanTable& plain = plain_[role_index(role)];
      const KeySpaceShape& sh = shape(role);
      for (Count i = begin; i < end && !over.load(std::memory_order_relaxed); ++i) {
        Count index = list ? (*list)[static_cast<std::size_t>(i)] : i;
        scratch = TableDecoder::full(apply_key(plain, key_from_index(sh, index)));
        ++tested[j];
        if (!accept(role, ds)) continue;
        if (kept.fetch_add(1) >= cap) {
          over = true;
          break;
        }
        found[j].push_back(index);
      }
    };
    if (jobs == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(work, j);
      for (auto& t : pool) t.join();
    }
    std::vector<Count> all;
    Count calls = 0;
    for (unsigned j = 0; j < jobs; ++j) {
      all.insert(all.end(), found[j].begin(), found[j].end());
      calls += tested[j];
    }
    rep.oracle_calls = static_cast<std::uint64_t>(calls);
    // Candidate counts cover distinct keys of the space: a retest after an
    // early stop only adds the keys the first pass never reached.
    if (fresh_space) {
      auto& cov = explored_[role_index(role)];
      Count before = covered(cov);
      for (unsigned j = 0; j < jobs; ++j) {
        Count begin = total * j / jobs;
        cov.emplace_back(begin, begin + tested[j]);
      }
      merge(cov);
      rep.candidates = covered(cov) - before;
    }
    if (over) {
      rs.survivors.reset();
      rs.overflow = true;
      rep.survivors = cap;
      rep.outcome = Outcome::Ambiguous;
    } else {
      rep.survivors = all.size();
      rep.outcome = all.empty() ? Outcome::Failed : all.size() == 1 ? Outcome::Unique : Outcome::Ambiguous;
      rs.survivors = std::move(all);
      rs.overflow = false;
    }
    refresh(role);
    rep.seconds = seconds_since(t0);
    return rep;
  }

  /// Candidate list of a role for joint testing: its survivors, or the
  /// whole space when the survivor list overflowed.
  std::vector<Count> joint_list(TableRole r) const {
    const RoleState& rs = state(r);
    if (rs.survivors && !rs.overflow) return *rs.survivors;
    std::vector<Count> all(static_cast<std::size_t>(shape(r).cardinality()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }

  /// Tests every pair of candidate keys of two roles together, so each side
  /// decodes with the other's table complete.
  StageReport pair_search(TableRole a, TableRole b, const std::string& name) {
    auto t0 = Clock::now();
    StageReport rep;
    rep.name = name;
    std::vector<Count> la = joint_list(a), lb = joint_list(b);
    // The outer side is the longer list; decoders for the inner side are built once.
    bool swapped = la.size() < lb.size();
    if (swapped) {
      std::swap(a, b);
      std::swap(la, lb);
    }
    std::vector<TableDecoder> db;
    db.reserve(lb.size());
    for (Count j : lb) db.push_back(TableDecoder::full(table_for(b, j)));
    std::vector<char> alive_a(la.size(), 0), alive_b(lb.size(), 0);
    unsigned jobs = std::max(1u, opt_->jobs);
    if (la.size() < 8) jobs = 1;
    std::vector<std::vector<char>> local_b(jobs, std::vector<char>(lb.size(), 0));
    auto work = [&](unsigned t) {
      std::size_t begin = la.size() * t / jobs, end = la.size() * (t + 1) / jobs;
      DecoderSet ds = view();
      TableDecoder da;
      ds[role_index(a)] = &da;
      for (std::size_t i = begin; i < end; ++i) {
        da = TableDecoder::full(table_for(a, la[i]));
        for (std::size_t j = 0; j < lb.size(); ++j) {
          ds[role_index(b)] = &db[j];
          if (accept(a, ds) && accept(b, ds)) {
            alive_a[i] = 1;
            local_b[t][j] = 1;
          }
        }
      }
    };
    if (jobs == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(work, t);
      for (auto& th : pool) th.join();
    }
    for (unsigned t = 0; t < jobs; ++t)
      for (std::size_t j = 0; j < lb.size(); ++j) alive_b[j] |= local_b[t][j];
    std::vector<Count> sa, sb;
    for (std::size_t i = 0; i < la.size(); ++i)
      if (alive_a[i]) sa.push_back(la[i]);
    for (std::size_t j = 0; j < lb.size(); ++j)
      if (alive_b[j]) sb.push_back(lb[j]);
    rep.oracle_calls = static_cast<std::uint64_t>(la.size()) * lb.size();
    rep.survivors = sa.size() * sb.size();
    rep.outcome = rep.survivors == 0 ? Outcome::Failed : rep.survivors == 1 ? Outcome::Unique : Outcome::Ambiguous;
    for (auto [r, list] : {std::pair{a, &sa}, std::pair{b, &sb}}) {
      RoleState& rs = state(r);
      rs.survivors = std::move(*list);
      rs.overflow = false;
      refresh(r);
    }
    rep.seconds = seconds_since(t0);
    return rep;
  }

  /// Knowledge of a role as used while decoding the others.
  PartialTable knowledge(TableRole role) const {
    const RoleState& rs = state(role);
    PartialTable p;
    p.role = role;
    const HuffmanTable& plain = plain_[role_index(role)];
    if (rs.pinned) return PartialTable::from_table(rs.pinned_table);
    if (!rs.survivors || rs.overflow || rs.survivors->empty()) {
      for (const VlcEntry& e : plain.entries()) p.undetermined.push_back(e.symbol);
      return p;
    }
    std::vector<HuffmanTable> tables;
    tables.reserve(rs.survivors->size());
    for (Count i : *rs.survivors) tables.push_back(table_for(role, i));
    for (std::size_t k = 0; k < plain.size(); ++k) {
      const VlcEntry& e = tables.front()[k];
      bool same = std::all_of(tables.begin(), tables.end(), [&](const HuffmanTable& t) { return t[k] == e; });
      if (same) p.known.push_back(e);
      else p.undetermined.push_back(e.symbol);
    }
    return p;
  }

  void refresh(TableRole role) {
    RoleState& rs = state(role);
    if (rs.pinned) return;
    PartialTable p = knowledge(role);
    if (p.complete()) rs.decoder = TableDecoder::full(HuffmanTable(role, p.known));
    else if (p.known.empty()) rs.decoder = TableDecoder::unknown(role);
    else rs.decoder = TableDecoder::partial(role, p.known);
  }

  bool infeasible() const { return infeasible_; }
  unsigned mb_width() const { return ix_->mb_width(); }
  const StreamIndex& index() const { return *ix_; }

 private:
  void build_evidence() {
    b10_headers_ = 0;
    // Slices whose other tables are most likely known come first, so wrong
    // candidates fail early.
    auto priority = [](TableRole r, const SliceInfo& s) {
      bool intra_pic = s.type == PictureType::I || s.type == PictureType::D;
      switch (r) {
        case TableRole::B10:
        case TableRole::B14: return intra_pic ? 1 : 0;
        case TableRole::B15: return 0;
        default: return s.intra_vlc_format ? 2 : intra_pic ? 0 : 1;
      }
    };
    for (TableRole r : kAllRoles) {
      std::vector<const SliceInfo*>& ev = evidence_[role_index(r)];
      for (const SliceInfo& s : ix_->slices) {
        bool use = true;
        switch (r) {
          case TableRole::B10:
            use = s.type == PictureType::P || s.type == PictureType::B || s.concealment_motion_vectors;
            break;
          case TableRole::B14: use = s.type != PictureType::D && !(s.type == PictureType::I && s.intra_vlc_format); break;
          case TableRole::B15: use = s.intra_vlc_format && s.type != PictureType::D; break;
          default: break;
        }
        if (use) ev.push_back(&s);
      }
      std::stable_sort(ev.begin(), ev.end(),
                       [&](const SliceInfo* a, const SliceInfo* b) { return priority(r, *a) < priority(r, *b); });
    }
    // First-MB headers carrying motion: readable without any table.
    for (const SliceInfo& s : ix_->slices) {
      BitCursor c(*s_, s.begin);
      unsigned b = 0, zeros = 0;
      while (c.try_read_bit(b) && !b && zeros < kMaxAddressIncrement) ++zeros;
      std::uint32_t mode = 0;
      if (!b || !c.try_read_bits(2, mode)) continue;
      if (((s.type == PictureType::P || s.type == PictureType::B) && mode == static_cast<unsigned>(MbMode::Inter)) ||
          (s.concealment_motion_vectors && mode == static_cast<unsigned>(MbMode::Intra)))
        ++b10_headers_;
    }
  }

  const BitString* s_;
  const StreamIndex* ix_;
  const CheckSet* ck_;
  const AttackOptions* opt_;
  TableSet plain_;
  std::array<RoleState, kRoleCount> st_;
  std::array<std::vector<const SliceInfo*>, kRoleCount> evidence_;
  // Index ranges of the full space (or base list) already tested, per role.
  std::array<std::vector<std::pair<Count, Count>>, kRoleCount> explored_;

  static Count covered(const std::vector<std::pair<Count, Count>>& v) {
    Count n = 0;
    for (const auto& [a, b] : v) n += b - a;
    return n;
  }
  static void merge(std::vector<std::pair<Count, Count>>& v) {
    std::sort(v.begin(), v.end());
    std::vector<std::pair<Count, Count>> out;
    for (const auto& r : v) {
      if (!out.empty() && r.first <= out.back().second) out.back().second = std::max(out.back().second, r.second);
      else out.push_back(r);
    }
    v = std::move(out);
  }
  std::size_t b10_headers_ = 0;
  bool infeasible_ = false;
};

struct BranchResult {
  explicit BranchResult(Engine e) : engine(std::move(e)) {}
  Engine engine;
  Outcome outcome = Outcome::Failed;
  std::vector<StageReport> stages;
  PartialTableSet recovered;
  std::optional<SchemeKey> key;
  std::string note;
};

void add_stage(BranchResult& b, StageReport s) { b.stages.push_back(std::move(s)); }

/// Runs the listed stages, then refines multi-survivor roles until stable.
void run_stages(BranchResult& b, const std::vector<TableRole>& stages, const AttackOptions& opt,
                const std::string& prefix) {
  Engine& e = b.engine;
  // A role is refined again only once another role has changed since its last search.
  std::size_t gen = 0;
  std::array<std::size_t, kRoleCount> seen{};
  std::array<std::size_t, kRoleCount> forked{};
  for (TableRole r : stages) {
    StageReport rep = e.search(r, prefix + role_name(r), false);
    Outcome o = rep.outcome;
    add_stage(b, std::move(rep));
    if (o == Outcome::Failed && !e.infeasible()) return;
    seen[role_index(r)] = ++gen;
  }
  auto size_of = [&](TableRole r) -> std::size_t {
    const RoleState& rs = e.state(r);
    if (rs.overflow || !rs.survivors) return SIZE_MAX;
    return rs.survivors->size();
  };
  for (std::size_t round = 1; round <= opt.refine_rounds; ++round) {
    bool changed = false;
    for (TableRole r : stages) {
      std::size_t before = size_of(r);
      if (before <= 1 || e.shape(r).cardinality() > kMaxEnumerable) continue;
      if (seen[role_index(r)] == gen) continue;
      StageReport rep = e.search(r, prefix + role_name(r) + "/refine" + std::to_string(round), true);
      std::size_t after = size_of(r);
      add_stage(b, std::move(rep));
      if (after != before) {
        changed = true;
        ++gen;
      }
      seen[role_index(r)] = gen;
      if (after == 0) return;
    }
    for (TableRole r : stages) {
      std::size_t before = size_of(r);
      if (before <= 1 || before > opt.fork_limit || forked[role_index(r)] == gen) continue;
      bool others_open = false;
      for (TableRole q : kAllRoles)
        if (q != r && !e.knowledge(q).complete()) others_open = true;
      if (!others_open) continue;
      StageReport rep = e.fork_search(r, prefix + role_name(r) + "/fork" + std::to_string(round));
      add_stage(b, std::move(rep));
      if (size_of(r) != before) {
        changed = true;
        ++gen;
      }
      forked[role_index(r)] = seen[role_index(r)] = gen;
      if (size_of(r) == 0) return;
    }
    for (std::size_t i = 0; i < stages.size(); ++i) {
      for (std::size_t j = i + 1; j < stages.size(); ++j) {
        TableRole ra = stages[i], rb = stages[j];
        std::size_t na = size_of(ra), nb = size_of(rb);
        if (na <= 1 || nb <= 1) continue;
        double ja = na == SIZE_MAX ? static_cast<double>(e.shape(ra).cardinality()) : static_cast<double>(na);
        double jb = nb == SIZE_MAX ? static_cast<double>(e.shape(rb).cardinality()) : static_cast<double>(nb);
        if (ja * jb > static_cast<double>(opt.pair_limit)) continue;
        StageReport rep = e.pair_search(ra, rb,
                                        prefix + role_name(ra) + "x" + role_name(rb) + "/refine" + std::to_string(round));
        add_stage(b, std::move(rep));
        if (size_of(ra) != na || size_of(rb) != nb) {
          changed = true;
          ++gen;
        }
        if (size_of(ra) == 0) return;
      }
    }
    if (!changed) break;
  }
}

void finish(BranchResult& b, const BitString& stream, const CheckSet& checks) {
  Engine& e = b.engine;
  bool exact = true;
  SchemeKey key;
  for (TableRole r : kAllRoles) {
    const RoleState& rs = e.state(r);
    b.recovered[role_index(r)] = e.knowledge(r);
    if (rs.searched || rs.pinned) {
      if (rs.survivors && !rs.overflow && rs.survivors->empty()) {
        b.outcome = Outcome::Failed;
        b.note = std::string("no candidate for ") + role_name(r) + " survived";
        return;
      }
    }
    if (rs.pinned && rs.pinned_index) {
      key[r] = key_from_index(e.shape(r), *rs.pinned_index);
    } else if (rs.survivors && !rs.overflow && rs.survivors->size() == 1) {
      key[r] = key_from_index(e.shape(r), rs.survivors->front());
    } else {
      exact = false;
    }
  }
  DecodeResult d = decode_partial(stream, b.recovered, checks);
  if (d.error) {
    b.outcome = Outcome::Failed;
    b.note = "recovered tables do not decode the stream: " + describe(*d.error);
    return;
  }
  if (d.undetermined) {
    b.outcome = Outcome::Ambiguous;
    b.note = std::string("stream needs undetermined entries of ") + role_name(d.undetermined->role);
    return;
  }
  b.outcome = Outcome::Unique;
  if (exact) b.key = key;
}

AttackReport assemble(std::vector<BranchResult>& branches, std::vector<StageReport> head, Clock::time_point t0,
                      const std::string& extra_note) {
  AttackReport r;
  r.order = std::move(head);
  for (BranchResult& b : branches)
    for (StageReport& s : b.stages) r.order.push_back(s);
  for (const StageReport& s : r.order) {
    r.candidates_tested += s.candidates;
    r.oracle_calls += s.oracle_calls;
  }
  std::vector<BranchResult*> ok;
  for (BranchResult& b : branches)
    if (b.outcome != Outcome::Failed) ok.push_back(&b);
  if (ok.empty()) {
    r.outcome = Outcome::Failed;
    r.note = branches.size() == 1 ? branches.front().note : "no branch survived";
  } else if (ok.size() == 1) {
    r.outcome = ok.front()->outcome;
    r.recovered = ok.front()->recovered;
    r.key = ok.front()->key;
    r.note = ok.front()->note;
  } else {
    r.outcome = Outcome::Ambiguous;
    r.recovered = ok.front()->recovered;
    for (BranchResult* b : ok) r.ambiguity.push_back(b->note.empty() ? "surviving branch" : b->note);
    r.note = std::to_string(ok.size()) + " B10 branches survive";
  }
  for (const BranchResult* b : ok) {
    for (TableRole role : kAllRoles) {
      const RoleState& rs = b->engine.state(role);
      if (rs.survivors && !rs.overflow && rs.survivors->size() > 1)
        r.ambiguity.push_back(std::string(role_name(role)) + ": " + std::to_string(rs.survivors->size()) +
                              " survivors");
    }
  }
  if (!extra_note.empty()) r.note = r.note.empty() ? extra_note : extra_note + "; " + r.note;
  r.elapsed = seconds_since(t0);
  return r;
}

void check_reshuffle(const StreamIndex& ix, const AttackOptions& opt) {
  if (!opt.reshuffle_period) return;
  std::uint32_t bound = opt.reshuffle_bound ? opt.reshuffle_bound : static_cast<std::uint32_t>(ix.pictures);
  if (*opt.reshuffle_period < bound)
    throw Error(Errc::BadParams, "stream is reshuffled every " + std::to_string(*opt.reshuffle_period) +
                                     " pictures; the basic attacks need a period of at least " +
                                     std::to_string(bound));
}

/// The shared driver for the ciphertext-only attacks.
AttackReport run_dac(const BitString& stream, std::vector<TableRole> stages, bool b10_separate, bool b12_with_b15,
                     const CheckSet& checks, const AttackOptions& opt) {
  auto t0 = Clock::now();
  StreamIndex ix = StreamIndex::build(stream);
  Engine base(stream, ix, checks, opt);
  for (TableRole r : stages) base.state(r).searched = true;

  std::vector<StageReport> head;
  std::string note;
  std::vector<BranchResult> branches;

  auto joint_b12_b15 = [&](BranchResult& b) {
    // For each B12 key, one test with B15 unknown rejects it outright when
    // the error comes before any B15 codeword; otherwise all B15 keys run.
    Engine& e = b.engine;
    auto t1 = Clock::now();
    StageReport rep;
    rep.name = "B12xB15";
    Count n12 = e.shape(TableRole::B12).cardinality();
    Count n15 = e.shape(TableRole::B15).cardinality();
    if (n12 * n15 > kMaxEnumerable * 16) {
      rep.outcome = Outcome::Failed;
      add_stage(b, rep);
      return false;
    }
    std::vector<Count> s12, s15;
    DecoderSet ds = e.view();
    TableDecoder d12, d15;
    TableDecoder unknown15 = TableDecoder::unknown(TableRole::B15);
    ds[role_index(TableRole::B12)] = &d12;
    for (Count i = 0; i < n12; ++i) {
      d12 = TableDecoder::full(e.table_for(TableRole::B12, i));
      ds[role_index(TableRole::B15)] = &unknown15;
      ++rep.oracle_calls;
      if (!e.accept(TableRole::B15, ds) || !e.accept(TableRole::B12, ds)) {
        ++rep.candidates;
        continue;
      }
      bool any = false;
      ds[role_index(TableRole::B15)] = &d15;
      for (Count j = 0; j < n15; ++j) {
        d15 = TableDecoder::full(e.table_for(TableRole::B15, j));
        ++rep.oracle_calls;
        ++rep.candidates;
        if (!e.accept(TableRole::B15, ds)) continue;
        any = true;
        if (std::find(s15.begin(), s15.end(), j) == s15.end()) s15.push_back(j);
      }
      if (any) s12.push_back(i);
    }
    std::sort(s15.begin(), s15.end());
    e.state(TableRole::B12).survivors = s12;
    e.state(TableRole::B15).survivors = s15;
    e.refresh(TableRole::B12);
    e.refresh(TableRole::B15);
    rep.survivors = s12.size() * s15.size();
    rep.outcome = rep.survivors == 0 ? Outcome::Failed : rep.survivors == 1 ? Outcome::Unique : Outcome::Ambiguous;
    rep.seconds = seconds_since(t1);
    add_stage(b, rep);
    return rep.survivors > 0;
  };

  auto run_branch = [&](BranchResult& b, const std::string& prefix) {
    std::vector<TableRole> rest;
    for (TableRole r : stages)
      if (r != TableRole::B10 && !(b12_with_b15 && (r == TableRole::B12 || r == TableRole::B15))) rest.push_back(r);
    if (b12_with_b15) {
      // B14 first, then the joint pair, then the rest.
      std::vector<TableRole> first, after;
      for (TableRole r : rest) (r == TableRole::B14 ? first : after).push_back(r);
      run_stages(b, first, opt, prefix);
      if (!joint_b12_b15(b)) return;
      run_stages(b, after, opt, prefix);
    } else {
      run_stages(b, rest, opt, prefix);
    }
  };

  bool has_b10 = std::find(stages.begin(), stages.end(), TableRole::B10) != stages.end();
  std::vector<Count> b10_candidates;
  bool joint = has_b10 && !b10_separate;
  if (has_b10 && b10_separate) {
    if (base.b10_headers() < opt.min_b10_headers) {
      joint = true;
      note = "B10 evidence too thin (" + std::to_string(base.b10_headers()) + " first-MB headers), joint search";
    } else {
      head.push_back(base.search(TableRole::B10, "B10", false));
      RoleState& rs = base.state(TableRole::B10);
      if (rs.survivors && rs.survivors->size() > 1) {
        joint = true;
        b10_candidates = *rs.survivors;
        note = "B10 left " + std::to_string(b10_candidates.size()) + " candidates, joint over them";
      }
    }
  }

  if (joint) {
    Count n10 = base.shape(TableRole::B10).cardinality();
    if (b10_candidates.empty())
      for (Count i = 0; i < n10; ++i) b10_candidates.push_back(i);
    for (Count k : b10_candidates) {
      BranchResult b(base);
      b.engine.pin(TableRole::B10, b.engine.table_for(TableRole::B10, k), k);
      std::string prefix = "B10[" + to_string(k) + "]:";
      // One test with everything else unknown kills most wrong B10 keys.
      StageReport quick;
      quick.name = prefix + "B10";
      quick.oracle_calls = 1;
      quick.candidates = head.empty() ? 1 : 0;
      bool alive = b.engine.accept(TableRole::B10, b.engine.view());
      quick.survivors = alive ? 1 : 0;
      quick.outcome = alive ? Outcome::Unique : Outcome::Failed;
      add_stage(b, quick);
      if (alive) {
        run_branch(b, prefix);
        RoleState& b14 = b.engine.state(TableRole::B14);
        alive = !(b14.survivors && !b14.overflow && b14.survivors->empty());
      }
      if (alive) {
        finish(b, stream, checks);
        if (b.note.empty()) b.note = "B10 key index " + to_string(k);
      } else {
        b.outcome = Outcome::Failed;
        b.note = "B10 key index " + to_string(k) + " rejected";
      }
      branches.push_back(std::move(b));
    }
  } else {
    BranchResult b(base);
    run_branch(b, "");
    finish(b, stream, checks);
    branches.push_back(std::move(b));
  }
  return assemble(branches, std::move(head), t0, note);
}

}  // namespace

AttackReport dac_attack(const BitString& stream, const AttackScenario& scenario, const CheckSet& checks,
                        const AttackOptions& options) {
  if (!scenario.include_b15) throw Error(Errc::InvalidScenario, "DAC scenarios include B15; use partial_key_attack");
  StreamIndex ix = StreamIndex::build(stream);
  check_reshuffle(ix, options);
  bool any_b15 = std::find(ix.picture_intra_vlc.begin(), ix.picture_intra_vlc.end(), true) != ix.picture_intra_vlc.end();
  bool any_vlc0 = false;
  for (std::size_t p = 0; p < ix.pictures; ++p)
    if (!ix.picture_intra_vlc[p] && ix.picture_types[p] != PictureType::D) any_vlc0 = true;
  std::vector<TableRole> stages = {TableRole::B10, TableRole::B14, TableRole::B12};
  if (any_b15) stages.push_back(TableRole::B15);
  stages.push_back(TableRole::B13);
  bool joint1215 = any_b15 && (scenario.b12_with_b15 || !any_vlc0);
  AttackReport r = run_dac(stream, stages, scenario.b10_separate, joint1215, checks, options);
  if (!any_b15) r.note = r.note.empty() ? "no intra_vlc_format=1 picture, B15 unused" : r.note + "; B15 unused";
  return r;
}

AttackReport partial_key_attack(const BitString& stream, bool b10_separate, const CheckSet& checks,
                                const AttackOptions& options) {
  StreamIndex ix = StreamIndex::build(stream);
  for (std::size_t p = 0; p < ix.pictures; ++p)
    if (ix.picture_intra_vlc[p]) throw Error(Errc::NotMpeg1Like, "picture " + std::to_string(p) + " uses B15");
  check_reshuffle(ix, options);
  return run_dac(stream, {TableRole::B10, TableRole::B14, TableRole::B12, TableRole::B13}, b10_separate, false, checks,
                 options);
}

AttackReport restricted_search(const BitString& stream, const std::array<RoleCandidates, kRoleCount>& candidates,
                               const std::array<bool, kRoleCount>& search, const CheckSet& checks,
                               const AttackOptions& options) {
  auto t0 = Clock::now();
  StreamIndex ix = StreamIndex::build(stream);
  Engine e(stream, ix, checks, options);
  std::vector<TableRole> stages;
  for (TableRole r : {TableRole::B10, TableRole::B14, TableRole::B12, TableRole::B15, TableRole::B13}) {
    const auto& list = candidates[role_index(r)].list;
    if (list && list->size() == 1) {
      // A single candidate is taken as given and costs no test.
      e.pin(r, e.table_for(r, list->front()), list->front());
      continue;
    }
    if (!search[role_index(r)]) continue;
    RoleState& rs = e.state(r);
    rs.searched = true;
    rs.base = candidates[role_index(r)].list;
    stages.push_back(r);
  }
  std::vector<BranchResult> branches;
  branches.emplace_back(e);
  run_stages(branches.back(), stages, options, "");
  finish(branches.back(), stream, checks);
  return assemble(branches, {}, t0, "");
}

std::string machine_lines(const AttackReport& r) {
  std::ostringstream out;
  for (const StageReport& s : r.order)
    out << s.name << " " << to_string(s.candidates) << " " << s.oracle_calls << " " << outcome_name(s.outcome) << "\n";
  out << "total " << to_string(r.candidates_tested) << " " << r.oracle_calls << " " << outcome_name(r.outcome) << "\n";
  return out.str();
}

std::string format_report(const AttackReport& r, bool timing) {
  std::ostringstream out;
  out << "outcome " << outcome_name(r.outcome) << "\n";
  out << "candidates_tested " << to_string(r.candidates_tested) << "\n";
  out << "oracle_calls " << r.oracle_calls << "\n";
  if (timing) out << "elapsed " << r.elapsed << "\n";
  if (r.bindings) out << "bindings " << r.bindings << "\n";
  if (!r.note.empty()) out << "note " << r.note << "\n";
  for (const std::string& a : r.ambiguity) out << "ambiguous " << a << "\n";
  for (TableRole role : kAllRoles) {
    const PartialTable& p = r.recovered[role_index(role)];
    out << "recovered " << role_name(role) << " known " << p.known.size() << " undetermined " << p.undetermined.size()
        << "\n";
  }
  if (r.key) {
    out << "key\n" << format_key(*r.key);
  }
  out << "stages\n" << machine_lines(r);
  return out.str();
}

}  // namespace vlcbreak
