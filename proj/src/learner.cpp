#include "qsi/learner.hpp"

#include "qsi/equiv.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

namespace qsi {

// ---------------------------------------------------------------------------
// Modes

std::string ModeDecl::str() const {
  std::string out(to_string(kind));
  out += '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += args[i].kind == ArgMode::Kind::input ? '+' : args[i].kind == ArgMode::Kind::output ? '-' : '#';
    out += args[i].type.str();
  }
  return out + ")";
}

ModeDecl ModeDecl::parse(std::string_view text) {
  text = text::trim(text);
  if (text.starts_with("mode ")) text = text::trim(text.substr(5));
  auto open = text.find('(');
  auto close = text.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw ParseError("malformed mode declaration '" + std::string(text) + "'");
  }
  ModeDecl d;
  d.kind = parse_constraint_kind(text::trim(text.substr(0, open)));
  for (auto arg : text::split(text.substr(open + 1, close - open - 1), ',')) {
    arg = text::trim(arg);
    if (arg.size() < 2) throw ParseError("malformed mode argument '" + std::string(arg) + "'");
    ArgMode a;
    switch (arg.front()) {
      case '+': a.kind = ArgMode::Kind::input; break;
      case '-': a.kind = ArgMode::Kind::output; break;
      case '#': a.kind = ArgMode::Kind::constant; break;
      default: throw ParseError("mode argument must start with +, - or #: '" + std::string(arg) + "'");
    }
    a.type = Dimension::parse(arg.substr(1));
    d.args.push_back(a);
  }
  auto arity = fixed_arity(d.kind);
  if (arity ? d.args.size() != *arity : d.args.size() < 3) {
    throw ParseError("mode arity does not match " + std::string(to_string(d.kind)));
  }
  return d;
}

ModeFile parse_mode_text(std::string_view content) {
  ModeFile out;
  int lineno = 0;
  for (auto raw : text::lines(content)) {
    ++lineno;
    auto line = text::strip_comment(raw);
    if (line.empty()) continue;
    try {
      auto words = text::split_ws(line);
      if (words[0] == "limit") {
        if (words.size() != 3) throw ParseError("expected 'limit KIND n'");
        out.limits[parse_constraint_kind(words[1])] = std::stoul(std::string(words[2]));
      } else if (words[0] == "mode") {
        out.modes.push_back(ModeDecl::parse(line));
      } else {
        throw ParseError("expected 'mode' or 'limit'");
      }
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::logic_error&) {
      throw ParseError("line " + std::to_string(lineno) + ": bad number");
    }
  }
  return out;
}

SearchConfig parse_search_config(std::string_view content) {
  std::string model_lines;
  std::string mode_lines;
  SearchConfig cfg;
  bool have_size = false;
  int lineno = 0;
  for (auto raw : text::lines(content)) {
    ++lineno;
    auto line = text::strip_comment(raw);
    if (line.empty()) {
      model_lines += '\n';
      mode_lines += '\n';
      continue;
    }
    auto words = text::split_ws(line);
    const bool model_line = words[0] == "var" || words[0] == "fix";
    const bool mode_line = words[0] == "mode" || words[0] == "limit";
    model_lines += model_line ? std::string(line) + '\n' : "\n";
    mode_lines += mode_line ? std::string(line) + '\n' : "\n";
    if (model_line || mode_line) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string value(text::trim(line.substr(eq + 1)));
    try {
      if (key == "target_size") {
        cfg.spec.target_size = std::stoul(value);
        have_size = true;
      } else if (key == "theta") {
        cfg.spec.theta = std::stod(value);
      } else if (key == "nodes") {
        cfg.node_limit = std::stoul(value);
      } else if (key == "seed") {
        cfg.score.seed = std::stoull(value);
      } else if (key == "sample_size") {
        cfg.score.sample_size = std::stoul(value);
      } else if (key == "exact_limit") {
        cfg.score.exact_limit = std::stoul(value);
      } else if (key == "generality") {
        if (value == "automatic") {
          cfg.score.generality = ScoreParams::Generality::automatic;
        } else if (value == "exact") {
          cfg.score.generality = ScoreParams::Generality::exact;
        } else if (value == "sampled") {
          cfg.score.generality = ScoreParams::Generality::sampled;
        } else {
          throw ParseError("generality must be automatic, exact or sampled");
        }
      } else {
        throw ParseError("unknown setting '" + key + "'");
      }
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::logic_error&) {
      throw ParseError("line " + std::to_string(lineno) + ": bad value for '" + key + "'");
    }
  }
  if (!have_size) throw ParseError("search configuration needs 'target_size = n'");
  auto mf = parse_model_text(model_lines);
  auto modes = parse_mode_text(mode_lines);
  cfg.variables = mf.model.variables();
  for (const auto& v : cfg.variables) {
    if (v.hidden()) throw ParseError("search variables must be measured; '" + v.name + "' is hidden");
    cfg.spec.measured.push_back(v.name);
  }
  cfg.spec.exogenous = mf.exogenous;
  cfg.modes = std::move(modes.modes);
  cfg.spec.language_limits = std::move(modes.limits);
  cfg.spec.validate();
  return cfg;
}

std::string format_search_config(const SearchConfig& cfg) {
  std::string out = format_model_text(Model(cfg.variables, {}), cfg.spec.exogenous);
  for (const auto& m : cfg.modes) out += "mode " + m.str() + "\n";
  for (const auto& [k, n] : cfg.spec.language_limits) out += "limit " + std::string(to_string(k)) + " " + std::to_string(n) + "\n";
  out += "target_size = " + std::to_string(cfg.spec.target_size) + "\n";
  std::ostringstream theta;
  theta << cfg.spec.theta;
  out += "theta = " + theta.str() + "\n";
  out += "nodes = " + std::to_string(cfg.node_limit) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Scoring

CostScore make_score(std::size_t size, std::size_t p, double g) {
  if (!(g > 0.0 && g < 1.0)) throw ContractViolation("generality must lie strictly inside (0,1)");
  CostScore s;
  s.prior_log = -static_cast<double>(size) * std::log(2.0);
  s.p = p;
  s.g = g;
  s.q = s.prior_log + static_cast<double>(p) * std::log(1.0 / g);
  return s;
}

StateSpace measured_space(const std::vector<Variable>& variables) {
  std::vector<Variable> vars;
  for (const auto& v : variables) {
    if (!v.hidden() && !v.exogenous()) vars.push_back(v);
  }
  std::sort(vars.begin(), vars.end(), [](const Variable& a, const Variable& b) { return a.name < b.name; });
  return StateSpace(std::move(vars));
}

namespace {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  std::vector<std::size_t> out(m);
  for (auto& x : out) x = dist(rng);
  return out;
}

bool use_exact(const ScoreParams& sp, std::size_t n) {
  switch (sp.generality) {
    case ScoreParams::Generality::exact: return true;
    case ScoreParams::Generality::sampled: return false;
    case ScoreParams::Generality::automatic: return n <= sp.exact_limit;
  }
  return true;
}

}  // namespace

double generality(const Model& m, const StateSpace& space, const ExoBindings& exo, std::size_t sample_size,
                  std::uint64_t seed) {
  if (sample_size < 1) throw ContractViolation("generality needs at least one sample");
  std::size_t covered = 0;
  for (auto idx : sample_indices(space.size(), sample_size, seed)) {
    if (covers(m, space.decode(idx, exo))) ++covered;
  }
  return (static_cast<double>(covered) + 1.0) / (static_cast<double>(sample_size) + 2.0);
}

double generality_exact(const Model& m, const StateSpace& space, const ExoBindings& exo) {
  auto cov = coverage(m, space, exo);
  return (static_cast<double>(cov.count()) + 1.0) / (static_cast<double>(space.size()) + 2.0);
}

CostScore cost(const Model& m, const std::vector<QualState>& states, const SearchConfig& cfg) {
  std::size_t p = 0;
  for (const auto& s : states) {
    if (covers(m, s)) ++p;
  }
  auto space = measured_space(cfg.variables);
  double g = use_exact(cfg.score, space.size())
                 ? generality_exact(m, space, cfg.spec.exogenous)
                 : generality(m, space, cfg.spec.exogenous, cfg.score.sample_size, cfg.score.seed);
  return make_score(m.size(), p, g);
}

// ---------------------------------------------------------------------------
// SearchContext

namespace {

const CanonicalOptions kDedupCanon{false, false, false, false};

// Result sets hold one representative per equivalence class.
void add_distinct(SearchResult& result, const Model& m, const CostScore& s, std::set<std::string>& classes) {
  if (!classes.insert(canonical_form(m)).second) return;
  result.models.push_back(m);
  result.scores.push_back(s);
}

std::string context_signature(const SearchConfig& cfg) {
  std::string s;
  for (const auto& v : cfg.variables) {
    s += v.name + ":" + std::string(to_string(v.domain)) + ":" + v.dimension.str() + ":" +
         std::string(to_string(v.kind)) + ";";
  }
  for (const auto& [n, v] : cfg.spec.exogenous) s += "fix " + n + "=" + to_string(v) + ";";
  for (const auto& m : cfg.modes) s += m.str() + ";";
  for (const auto& [k, n] : cfg.spec.language_limits) s += "limit " + std::string(to_string(k)) + "=" + std::to_string(n) + ";";
  s += "size=" + std::to_string(cfg.spec.target_size);
  return s;
}

}  // namespace

SearchContext::SearchContext(const SearchConfig& cfg)
    : variables_(cfg.variables),
      exo_(cfg.spec.exogenous),
      modes_(cfg.modes),
      limits_(cfg.spec.language_limits),
      target_size_(cfg.spec.target_size),
      space_(measured_space(cfg.variables)),
      signature_(context_signature(cfg)) {
  cfg.spec.validate();
  std::size_t non_exo = 0;
  for (const auto& v : variables_) {
    if (v.hidden()) throw ContractViolation("search variables must be measured; '" + v.name + "' is hidden");
    if (!v.exogenous()) ++non_exo;
    measured_.push_back(v.name);
  }
  max_intermediates_ = target_size_ > non_exo ? target_size_ - non_exo : 0;
  max_arity_ = 2;
  for (const auto& m : modes_) max_arity_ = std::max(max_arity_, m.args.size());
}

std::size_t SearchContext::node_count() const {
  std::lock_guard lock(mu_);
  return nodes_.size();
}

const SearchContext::Node& SearchContext::node(std::size_t id) const {
  std::lock_guard lock(mu_);
  return nodes_.at(id);
}

std::size_t SearchContext::root() { return intern(Model(variables_, {})); }

std::size_t SearchContext::intern(Model m) {
  std::lock_guard lock(mu_);
  auto key = canonical_form(m, kDedupCanon);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  Node n;
  n.coverage = coverage(m, space_, exo_);
  n.full_ok = full_rules_ok(m);
  n.model = std::move(m);
  n.key = key;
  nodes_.push_back(std::move(n));
  index_.emplace(std::move(key), nodes_.size() - 1);
  return nodes_.size() - 1;
}

const std::vector<std::size_t>& SearchContext::children(std::size_t id) {
  std::lock_guard lock(mu_);
  if (nodes_[id].expanded) return nodes_[id].children;
  std::vector<std::size_t> kids;
  if (nodes_[id].model.size() < target_size_) {
    Model parent = nodes_[id].model;
    std::set<std::size_t> seen;
    for (auto& child : raw_refinements(parent)) {
      if (!static_gate(parent, child)) continue;
      auto cid = intern(std::move(child));
      if (seen.insert(cid).second) kids.push_back(cid);
    }
  }
  nodes_[id].children = std::move(kids);
  nodes_[id].expanded = true;
  return nodes_[id].children;
}

std::vector<Model> SearchContext::raw_refinements(const Model& m) const {
  std::vector<Model> out;
  std::size_t intermediates = m.hidden().size();
  const std::string fresh_name = "V" + std::to_string(intermediates + 1);
  for (const auto& mode : modes_) {
    const std::size_t k = mode.args.size();
    // Candidate variable names per slot; an empty string marks the fresh variable.
    std::vector<std::vector<std::string>> cand(k);
    for (std::size_t i = 0; i < k; ++i) {
      const auto& am = mode.args[i];
      for (const auto& v : m.variables()) {
        if (v.dimension != am.type) continue;
        if (am.kind == ArgMode::Kind::constant && !v.exogenous()) continue;
        cand[i].push_back(v.name);
      }
      if (am.kind == ArgMode::Kind::output) cand[i].emplace_back();
    }
    std::vector<std::string> pick(k);
    std::function<void(std::size_t, bool)> rec = [&](std::size_t i, bool used_fresh) {
      if (i == k) {
        Model child = m;
        Constraint c{mode.kind, {}};
        for (std::size_t j = 0; j < k; ++j) {
          if (pick[j].empty()) {
            child.add_variable(Variable{fresh_name, Domain::unrestricted, mode.args[j].type, VarKind::intermediate});
            c.args.push_back(fresh_name);
          } else {
            c.args.push_back(pick[j]);
          }
        }
        child.add_constraint(std::move(c));
        out.push_back(std::move(child));
        return;
      }
      for (const auto& name : cand[i]) {
        if (name.empty() && used_fresh) continue;
        if (!name.empty() && std::find(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(i), name) !=
                                 pick.begin() + static_cast<std::ptrdiff_t>(i)) {
          continue;
        }
        pick[i] = name;
        rec(i + 1, used_fresh || name.empty());
      }
    };
    rec(0, false);
  }
  return out;
}

bool SearchContext::implied_cached(const Constraint& a, const Constraint& b, const Model& m) const {
  std::lock_guard lock(mu_);
  auto key = a.str() + "<" + b.str();
  if (auto it = implied_cache_.find(key); it != implied_cache_.end()) return it->second;
  bool r = implied_by(a, b, m);
  implied_cache_.emplace(std::move(key), r);
  return r;
}

bool SearchContext::joint_cached(const Constraint& a, const Constraint& b, const Model& m) const {
  std::lock_guard lock(mu_);
  auto key = a.str() + "&" + b.str();
  if (auto it = joint_cache_.find(key); it != joint_cache_.end()) return it->second;
  bool r = jointly_satisfiable(a, b, m, exo_);
  joint_cache_.emplace(std::move(key), r);
  return r;
}

bool SearchContext::static_gate(const Model& parent, const Model& child) const {
  const auto& c = child.constraints().back();
  const auto& existing = parent.constraints();
  if (auto it = limits_.find(c.kind); it != limits_.end()) {
    std::size_t n = 1;
    for (const auto& e : existing) n += e.kind == c.kind ? 1 : 0;
    if (n > it->second) return false;
  }
  if (!dimensionally_consistent(c, child)) return false;
  if (child.hidden().size() > max_intermediates_) return false;
  if (c.kind == ConstraintKind::DERIV) {
    for (const auto& e : existing) {
      if (e.kind == ConstraintKind::DERIV && e.args[0] == c.args[0]) return false;
    }
  }
  // Completability: every non-exogenous variable needs two occurrences, exogenous ones one, and
  // the intermediates still to be introduced two each.
  std::map<std::string, std::size_t> occ;
  for (const auto& e : child.constraints()) {
    for (const auto& a : e.args) ++occ[a];
  }
  std::size_t deficit = 2 * (max_intermediates_ - child.hidden().size());
  for (const auto& v : child.variables()) {
    std::size_t have = occ[v.name];
    std::size_t need = v.exogenous() ? 1 : 2;
    if (have < need) deficit += need - have;
  }
  std::size_t remaining = target_size_ - child.size();
  if (deficit > max_arity_ * remaining) return false;

  if (!joint_cached(c, c, child)) return false;
  for (const auto& e : existing) {
    if (implied_cached(c, e, child) || implied_cached(e, c, child)) return false;
    if (!joint_cached(e, c, child)) return false;
  }
  return true;
}

bool SearchContext::full_rules_ok(const Model& m) const {
  if (m.size() != target_size_) return false;
  WellPosedSpec spec;
  spec.target_size = target_size_;
  spec.measured = measured_;
  spec.language_limits = limits_;
  if (!check_syntactic(m, spec).empty()) return false;
  if (!check_structure(m).empty()) return false;
  return causal_order(m).ok;
}

std::vector<Model> refine(const Model& m, const std::vector<ModeDecl>& modes, const SearchConfig& cfg) {
  if (m.size() >= cfg.spec.target_size) throw ContractViolation("refine needs a model below the target size");
  SearchConfig local = cfg;
  local.modes = modes;
  SearchContext ctx(local);
  Model base = m;
  for (const auto& v : cfg.variables) {
    if (!base.find(v.name)) base.add_variable(v);
  }
  std::vector<Model> out;
  std::set<std::string> keys;
  for (auto& child : ctx.raw_refinements(base)) {
    if (!ctx.static_gate(base, child)) continue;
    if (keys.insert(canonical_form(child, kDedupCanon)).second) out.push_back(std::move(child));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Search

namespace {

/// Training data resolved against a state space, plus the generality estimator of a run.
class RunScorer {
 public:
  RunScorer(const std::vector<QualState>& states, const SearchConfig& cfg, const StateSpace& space) {
    for (const auto& s : states) {
      bool exo_match = true;
      for (const auto& [name, v] : cfg.spec.exogenous) {
        auto got = s.get(name);
        if (got && *got != v) exo_match = false;
      }
      auto idx = space.index_of(s);
      train_.push_back(idx && exo_match ? *idx : kNone);
    }
    need_ = static_cast<std::size_t>(std::ceil(cfg.spec.theta * static_cast<double>(states.size()) - 1e-9));
    exact_ = use_exact(cfg.score, space.size());
    if (!exact_) sample_ = sample_indices(space.size(), cfg.score.sample_size, cfg.score.seed);
    denom_ = exact_ ? static_cast<double>(space.size()) + 2.0 : static_cast<double>(sample_.size()) + 2.0;
  }

  [[nodiscard]] std::size_t need() const { return need_; }

  [[nodiscard]] std::size_t covered_train(const StateSet& coverage) const {
    std::size_t p = 0;
    for (auto idx : train_) {
      if (idx != kNone && coverage.contains(idx)) ++p;
    }
    return p;
  }

  [[nodiscard]] CostScore score(const StateSet& coverage, std::size_t size, std::size_t p) const {
    std::size_t hits = 0;
    if (exact_) {
      hits = coverage.count();
    } else {
      for (auto idx : sample_) hits += coverage.contains(idx) ? 1 : 0;
    }
    auto s = make_score(size, p, (static_cast<double>(hits) + 1.0) / denom_);
    s.covered = hits;
    return s;
  }

  /// No model of `target_size` constraints covering `p` training states costs less than this.
  [[nodiscard]] double lower_bound(std::size_t target_size, std::size_t p) const {
    return static_cast<double>(target_size) * std::log(2.0) - static_cast<double>(p) * std::log(denom_);
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> train_;
  std::size_t need_ = 0;
  bool exact_ = true;
  std::vector<std::size_t> sample_;
  double denom_ = 1.0;
};

void check_search_inputs(const std::vector<QualState>& states, const SearchConfig& cfg) {
  if (cfg.node_limit < 1) throw ContractViolation("node limit must be at least 1");
  if (states.empty()) throw ContractViolation("search needs at least one training state");
}

}  // namespace

SearchResult bb_search(const std::vector<QualState>& states, const SearchConfig& cfg, SearchContext* shared) {
  check_search_inputs(states, cfg);
  std::unique_ptr<SearchContext> owned;
  SearchContext* ctx = shared;
  if (!ctx) {
    owned = std::make_unique<SearchContext>(cfg);
    ctx = owned.get();
  } else if (ctx->signature() != context_signature(cfg)) {
    throw ContractViolation("search context was built for a different configuration");
  }
  const RunScorer scorer(states, cfg, ctx->space());
  const std::size_t need = scorer.need();
  const std::size_t target = cfg.spec.target_size;

  struct Entry {
    double cost;
    std::uint64_t seq;
    std::size_t id;
    std::size_t p;
    bool operator<(const Entry& o) const { return cost != o.cost ? cost > o.cost : seq > o.seq; }
  };
  std::priority_queue<Entry> active;
  std::unordered_set<std::size_t> seen;
  std::uint64_t seq = 0;
  auto root = ctx->root();
  seen.insert(root);
  active.push({-std::numeric_limits<double>::infinity(), seq++, root, scorer.covered_train(ctx->node(root).coverage)});

  double worst = std::numeric_limits<double>::infinity();
  std::vector<std::pair<std::size_t, CostScore>> selected;
  SearchResult result;
  while (result.nodes_explored < cfg.node_limit && !active.empty()) {
    Entry e = active.top();
    active.pop();
    if (cfg.prune && scorer.lower_bound(target, e.p) > worst) continue;
    ++result.nodes_explored;
    const auto& node = ctx->node(e.id);
    if (node.full_ok && e.p >= need) {
      auto s = scorer.score(node.coverage, node.model.size(), e.p);
      if (s.cost() < worst) {
        worst = s.cost();
        selected.clear();
        selected.emplace_back(e.id, s);
      } else if (s.cost() == worst) {
        selected.emplace_back(e.id, s);
      }
    }
    if (node.model.size() >= target) continue;
    for (auto cid : ctx->children(e.id)) {
      if (seen.contains(cid)) continue;
      const auto& child = ctx->node(cid);
      auto p = scorer.covered_train(child.coverage);
      if (p < need) continue;
      if (cfg.prune && scorer.lower_bound(target, p) > worst) continue;
      seen.insert(cid);
      active.push({scorer.score(child.coverage, child.model.size(), p).cost(), seq++, cid, p});
    }
  }
  result.exhausted = !active.empty();
  std::set<std::string> classes;
  for (const auto& [id, s] : selected) add_distinct(result, ctx->node(id).model, s, classes);
  return result;
}

// ---------------------------------------------------------------------------
// HypothesisIndex

namespace {

bool symmetric_kind_prefix(ConstraintKind k, std::size_t arity, std::size_t& first, std::size_t& last) {
  switch (k) {
    case ConstraintKind::ADD:
    case ConstraintKind::MULT: first = 0; last = 2; return true;
    case ConstraintKind::SUB: first = 1; last = 3; return true;
    case ConstraintKind::MINUS:
    case ConstraintKind::M_MINUS:
    case ConstraintKind::M_PLUS: first = 0; last = 2; return true;
    case ConstraintKind::SUM:
    case ConstraintKind::PROD: first = 0; last = arity - 1; return true;
    case ConstraintKind::DERIV: return false;
  }
  return false;
}

struct Literal {
  Constraint c;
  std::vector<int> vars;        // pool indices per argument
  std::vector<char> fresh_ok;   // argument slot may introduce a hidden variable
  std::size_t mode = 0;
};

class IndexBuilder {
 public:
  IndexBuilder(const SearchConfig& cfg, const StateSpace& space) : cfg_(cfg), space_(space) {
    limits_ = cfg.spec.language_limits;
    target_ = cfg.spec.target_size;
    std::size_t non_exo = 0;
    for (const auto& v : cfg.variables) {
      if (v.hidden()) throw ContractViolation("search variables must be measured; '" + v.name + "' is hidden");
      if (!v.exogenous()) ++non_exo;
      measured_.push_back(v.name);
    }
    hidden_count_ = target_ > non_exo ? target_ - non_exo : 0;
    for (const auto& m : cfg.modes) {
      for (const auto& a : m.args) {
        if (a.kind == ArgMode::Kind::output && std::find(types_.begin(), types_.end(), a.type) == types_.end()) {
          types_.push_back(a.type);
        }
      }
    }
  }

  void run(std::vector<HypothesisIndex::Entry>& out, std::size_t& examined) {
    if (target_ == 0 || (hidden_count_ > 0 && types_.empty())) return;
    // Every multiset of hidden-variable types of the exact size the determinate rule demands.
    std::vector<std::size_t> pick(hidden_count_, 0);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t from) {
      if (i == hidden_count_) {
        std::vector<Dimension> dims;
        for (auto t : pick) dims.push_back(types_[t]);
        enumerate_pool(dims, out, examined);
        return;
      }
      for (std::size_t t = from; t < types_.size(); ++t) {
        pick[i] = t;
        rec(i + 1, t);
      }
    };
    rec(0, 0);
  }

 private:
  void enumerate_pool(const std::vector<Dimension>& hidden_dims, std::vector<HypothesisIndex::Entry>& out,
                      std::size_t& examined) {
    pool_ = Model(cfg_.variables, {});
    for (std::size_t i = 0; i < hidden_dims.size(); ++i) {
      pool_.add_variable(
          Variable{"V" + std::to_string(i + 1), Domain::unrestricted, hidden_dims[i], VarKind::intermediate});
    }
    const auto& vars = pool_.variables();
    const int nv = static_cast<int>(vars.size());
    need_.assign(vars.size(), 2);
    hidden_.assign(vars.size(), 0);
    exo_.assign(vars.size(), 0);
    for (int i = 0; i < nv; ++i) {
      if (vars[i].exogenous()) {
        need_[i] = 1;
        exo_[i] = 1;
      }
      hidden_[i] = vars[i].hidden() ? 1 : 0;
    }
    build_literals();
    const std::size_t n = literals_.size();
    compat_.assign(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto& a = literals_[i].c;
        const auto& b = literals_[j].c;
        bool ok = !implied_by(a, b, pool_) && !implied_by(b, a, pool_) &&
                  jointly_satisfiable(a, b, pool_, cfg_.spec.exogenous);
        compat_[i * n + j] = compat_[j * n + i] = ok ? 1 : 0;
      }
    }
    occ_.assign(vars.size(), 0);
    kind_used_.clear();
    integrand_.assign(vars.size(), 0);
    chosen_.clear();
    deficit_ = 0;
    for (int i = 0; i < nv; ++i) deficit_ += need_[i];
    dfs(0, out, examined);
  }

  void build_literals() {
    literals_.clear();
    const auto& vars = pool_.variables();
    std::set<std::string> seen;
    for (std::size_t mi = 0; mi < cfg_.modes.size(); ++mi) {
      const auto& mode = cfg_.modes[mi];
      const std::size_t k = mode.args.size();
      std::vector<std::vector<int>> cand(k);
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t v = 0; v < vars.size(); ++v) {
          if (vars[v].dimension != mode.args[i].type) continue;
          if (mode.args[i].kind == ArgMode::Kind::constant && !vars[v].exogenous()) continue;
          cand[i].push_back(static_cast<int>(v));
        }
      }
      std::vector<int> pick(k);
      std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == k) {
          Literal lit;
          lit.mode = mi;
          lit.c.kind = mode.kind;
          lit.vars = pick;
          for (std::size_t j = 0; j < k; ++j) {
            lit.fresh_ok.push_back(mode.args[j].kind == ArgMode::Kind::output ? 1 : 0);
          }
          std::size_t first = 0, last = 0;
          if (symmetric_kind_prefix(mode.kind, k, first, last)) {
            // Sort the interchangeable arguments together with their slot permissions.
            std::vector<std::pair<int, char>> part;
            for (std::size_t j = first; j < last; ++j) part.emplace_back(lit.vars[j], lit.fresh_ok[j]);
            std::sort(part.begin(), part.end());
            for (std::size_t j = first; j < last; ++j) {
              lit.vars[j] = part[j - first].first;
              lit.fresh_ok[j] = part[j - first].second;
            }
          }
          for (auto v : lit.vars) lit.c.args.push_back(vars[v].name);
          std::string key = lit.c.str();
          for (auto f : lit.fresh_ok) key += f ? '-' : '+';
          if (!seen.insert(key).second) return;
          if (!dimensionally_consistent(lit.c, pool_)) return;
          if (!jointly_satisfiable(lit.c, lit.c, pool_, cfg_.spec.exogenous)) return;
          literals_.push_back(std::move(lit));
          return;
        }
        for (int v : cand[i]) {
          if (std::find(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(i), v) !=
              pick.begin() + static_cast<std::ptrdiff_t>(i)) {
            continue;
          }
          pick[i] = v;
          rec(i + 1);
        }
      };
      rec(0);
    }
    // DERIV literals first so that the integrands are settled before any algebraic literal.
    std::stable_sort(literals_.begin(), literals_.end(), [](const Literal& a, const Literal& b) {
      auto rank = [](const Literal& l) { return l.c.kind == ConstraintKind::DERIV ? 0 : 1 + static_cast<int>(l.c.kind); };
      return rank(a) < rank(b);
    });
    // Upper bound on the argument slots the literals from position i onwards can still supply.
    suffix_kinds_.assign(literals_.size() + 1, {});
    for (std::size_t i = literals_.size(); i-- > 0;) {
      suffix_kinds_[i] = suffix_kinds_[i + 1];
      auto& [count, arity] = suffix_kinds_[i][literals_[i].c.kind];
      ++count;
      arity = std::max(arity, literals_[i].vars.size());
    }
  }

  std::size_t kind_used(ConstraintKind k) const {
    auto it = kind_used_.find(k);
    return it == kind_used_.end() ? 0 : it->second;
  }

  /// Largest number of argument slots `r` more literals from position `from` can fill, or nullopt
  /// when fewer than `r` literals remain available.
  std::optional<std::size_t> capacity(std::size_t from, std::size_t r) const {
    std::vector<std::pair<std::size_t, std::size_t>> avail;  // (arity, count)
    for (const auto& [kind, ca] : suffix_kinds_[from]) {
      std::size_t count = ca.first;
      if (auto it = limits_.find(kind); it != limits_.end()) {
        std::size_t used = kind_used(kind);
        count = std::min(count, it->second > used ? it->second - used : 0);
      }
      if (count) avail.emplace_back(ca.second, count);
    }
    std::sort(avail.rbegin(), avail.rend());
    std::size_t slots = 0;
    for (const auto& [arity, count] : avail) {
      std::size_t take = std::min(count, r);
      slots += take * arity;
      r -= take;
      if (r == 0) return slots;
    }
    return r == 0 ? std::optional<std::size_t>(slots) : std::nullopt;
  }

  bool admissible(const Literal& lit) const {
    if (auto it = limits_.find(lit.c.kind); it != limits_.end() && kind_used(lit.c.kind) >= it->second) return false;
    if (lit.c.kind == ConstraintKind::DERIV) {
      if (integrand_[lit.vars[0]]) return false;
    } else {
      // Settled integrands and exogenous variables are known; an algebraic literal over known
      // variables only can never be scheduled.
      bool any_unknown = false;
      for (auto v : lit.vars) {
        if (!exo_[v] && !integrand_[v]) any_unknown = true;
      }
      if (!any_unknown) return false;
    }
    return true;
  }

  void dfs(std::size_t from, std::vector<HypothesisIndex::Entry>& out, std::size_t& examined) {
    if (chosen_.size() == target_) {
      if (deficit_ == 0) finish(out, examined);
      return;
    }
    const std::size_t n = literals_.size();
    for (std::size_t i = from; i < n; ++i) {
      const auto& lit = literals_[i];
      if (!admissible(lit)) continue;
      bool ok = true;
      for (auto j : chosen_) {
        if (!compat_[j * n + i]) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      // Apply.
      std::size_t gained = 0;
      for (auto v : lit.vars) {
        if (occ_[v] < need_[v]) ++gained;
        ++occ_[v];
      }
      const std::size_t old_deficit = deficit_;
      deficit_ -= gained;
      ++kind_used_[lit.c.kind];
      if (lit.c.kind == ConstraintKind::DERIV) integrand_[lit.vars[0]] = 1;
      chosen_.push_back(i);

      const std::size_t r = target_ - chosen_.size();
      bool viable = true;
      if (r > 0) {
        auto cap = capacity(i + 1, r);
        viable = cap && *cap >= deficit_;
      } else {
        viable = deficit_ == 0;
      }
      if (viable) dfs(i + 1, out, examined);

      chosen_.pop_back();
      if (lit.c.kind == ConstraintKind::DERIV) integrand_[lit.vars[0]] = 0;
      --kind_used_[lit.c.kind];
      deficit_ = old_deficit;
      for (auto v : lit.vars) --occ_[v];
    }
  }

  /// True iff the literals can be added one at a time, each introducing at most one new hidden
  /// variable, in a slot that allows a fresh variable.
  bool orderable() const {
    std::vector<char> known(pool_.variables().size(), 0);
    for (std::size_t v = 0; v < known.size(); ++v) known[v] = hidden_[v] ? 0 : 1;
    std::vector<char> placed(chosen_.size(), 0);
    std::size_t left = chosen_.size();
    bool progress = true;
    while (left && progress) {
      progress = false;
      for (std::size_t k = 0; k < chosen_.size(); ++k) {
        if (placed[k]) continue;
        const auto& lit = literals_[chosen_[k]];
        int fresh = -1;
        bool ok = true;
        for (std::size_t j = 0; j < lit.vars.size() && ok; ++j) {
          int v = lit.vars[j];
          if (known[v]) continue;
          if (!lit.fresh_ok[j] || fresh >= 0) ok = false;
          fresh = v;
        }
        if (!ok) continue;
        if (fresh >= 0) known[fresh] = 1;
        placed[k] = 1;
        --left;
        progress = true;
      }
    }
    return left == 0;
  }

  void finish(std::vector<HypothesisIndex::Entry>& out, std::size_t& examined) {
    ++examined;
    if (!orderable()) return;
    std::vector<Constraint> cs;
    for (auto i : chosen_) cs.push_back(literals_[i].c);
    Model m(pool_.variables(), std::move(cs));
    WellPosedSpec spec;
    spec.target_size = target_;
    spec.measured = measured_;
    spec.language_limits = limits_;
    if (!check_syntactic(m, spec).empty()) return;
    if (!check_structure(m).empty()) return;
    if (!causal_order(m).ok) return;
    auto key = canonical_form(m, kDedupCanon);
    if (!keys_.insert(std::move(key)).second) return;
    auto cov = coverage(m, space_, cfg_.spec.exogenous);
    out.push_back({std::move(m), std::move(cov)});
  }

  const SearchConfig& cfg_;
  const StateSpace& space_;
  std::map<ConstraintKind, std::size_t> limits_;
  std::size_t target_ = 0;
  std::size_t hidden_count_ = 0;
  std::vector<std::string> measured_;
  std::vector<Dimension> types_;

  Model pool_;
  std::vector<std::size_t> need_;
  std::vector<char> hidden_;
  std::vector<char> exo_;
  std::vector<Literal> literals_;
  std::vector<char> compat_;
  std::vector<std::map<ConstraintKind, std::pair<std::size_t, std::size_t>>> suffix_kinds_;

  std::vector<std::size_t> occ_;
  std::map<ConstraintKind, std::size_t> kind_used_;
  std::vector<char> integrand_;
  std::vector<std::size_t> chosen_;
  std::size_t deficit_ = 0;
  std::unordered_set<std::string> keys_;
};

}  // namespace

HypothesisIndex::HypothesisIndex(const SearchConfig& cfg)
    : space_(measured_space(cfg.variables)), signature_(context_signature(cfg)) {
  cfg.spec.validate();
  IndexBuilder builder(cfg, space_);
  builder.run(entries_, examined_);
}

std::string HypothesisIndex::signature_of(const SearchConfig& cfg) { return context_signature(cfg); }

SearchResult HypothesisIndex::search(const std::vector<QualState>& states, const SearchConfig& cfg) const {
  check_search_inputs(states, cfg);
  if (context_signature(cfg) != signature_) {
    throw ContractViolation("hypothesis index was built for a different configuration");
  }
  const RunScorer scorer(states, cfg, space_);
  double worst = std::numeric_limits<double>::infinity();
  std::vector<std::pair<std::size_t, CostScore>> selected;
  SearchResult result;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    auto p = scorer.covered_train(e.coverage);
    ++result.nodes_explored;
    if (p < scorer.need()) continue;
    auto s = scorer.score(e.coverage, e.model.size(), p);
    if (s.cost() < worst) {
      worst = s.cost();
      selected.clear();
      selected.emplace_back(i, s);
    } else if (s.cost() == worst) {
      selected.emplace_back(i, s);
    }
  }
  std::set<std::string> classes;
  for (const auto& [i, s] : selected) add_distinct(result, entries_[i].model, s, classes);
  return result;
}

double precision(const std::vector<Model>& result, const Model& target) {
  if (result.empty()) return 0.0;
  auto key = canonical_form(target);
  std::size_t hit = 0;
  for (const auto& m : result) {
    if (canonical_form(m) == key) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(result.size());
}

}  // namespace qsi
