// Acceptance run: one PASS/FAIL line per criterion, details indented below it.

#include "support.hpp"

#include "qsi/envision.hpp"
#include "qsi/experiments.hpp"
#include "qsi/metabolic.hpp"
#include "qsi/wellposed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

using namespace qsi;
using namespace qsi::test;

namespace {

// Pinned tolerances.
constexpr double kEnvisionSeconds = 1.0;
constexpr double kIsoclineRelative = 1e-3;
constexpr double kUtubeGap = 1e-3;
constexpr std::size_t kOraclePairs = 500;
constexpr std::size_t kOracleMaxVars = 8;
constexpr std::uint64_t kNoisySeeds = 5;
constexpr std::size_t kCoupledPairsExpected = 5;
constexpr int kTpSlack = 1;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string show(const std::vector<int>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

std::vector<int> sorted(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  return v;
}

std::map<std::vector<int>, double> by_subset(const std::vector<SweepRecord>& records) {
  std::map<std::vector<int>, double> out;
  for (const auto& r : records) out[r.subset] = r.precision;
  return out;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "  failed: " << what << "\n";
    }
  }
};

Outcome envisionment_exactness() {
  Outcome o;
  for (auto id : {SystemId::utube, SystemId::coupled, SystemId::cascaded}) {
    const auto& def = builtin(id);
    auto t0 = Clock::now();
    auto env = enumerate_states(def.target, def.exogenous);
    const double secs = since(t0);
    auto truth = def.truth_states();
    const bool exact = std::set(env.states.begin(), env.states.end()) == std::set(truth.begin(), truth.end()) &&
                       env.states.size() == truth.size();
    o.detail << "  " << to_string(id) << ": " << env.states.size() << " states (table " << truth.size() << "), " << secs
             << " s\n";
    o.require(exact, std::string(to_string(id)) + " state set differs from the table");
    o.require(secs < kEnvisionSeconds, std::string(to_string(id)) + " took longer than 1 s");
  }
  return o;
}

Outcome utube_kernels() {
  Outcome o;
  SweepConfig cfg;
  auto t0 = Clock::now();
  auto records = sweep_noise_free(cfg);
  const auto p = by_subset(records);
  const auto& want = builtin(SystemId::utube).kernel_sets;
  std::set<std::vector<int>> perfect_pairs;
  for (const auto& [s, prec] : p) {
    if (s.size() == 1) o.require(prec < 1.0, "singleton " + show(s) + " reached precision 1");
    if (s.size() == 2 && prec == 1.0) perfect_pairs.insert(s);
    for (const auto& k : want) {
      auto ks = sorted(k);
      if (std::includes(s.begin(), s.end(), ks.begin(), ks.end())) {
        o.require(prec == 1.0, "superset " + show(s) + " of " + show(ks) + " has precision " + std::to_string(prec));
      }
    }
  }
  std::set<std::vector<int>> expected;
  for (const auto& k : want) expected.insert(sorted(k));
  o.require(perfect_pairs == expected, "perfect pairs differ from the published eight");
  o.detail << "  " << records.size() << " runs, " << perfect_pairs.size() << " perfect pairs, " << since(t0) << " s\n";
  return o;
}

Outcome coupled_kernels() {
  Outcome o;
  SweepConfig cfg;
  cfg.system = SystemId::coupled;
  auto t0 = Clock::now();
  auto records = sweep_noise_free(cfg);
  const auto p = by_subset(records);
  for (const auto& k : builtin(SystemId::coupled).kernel_sets) {
    auto ks = sorted(k);
    o.require(p.at(ks) == 1.0, show(ks) + " has precision " + std::to_string(p.at(ks)));
  }
  std::vector<std::vector<int>> pairs;
  std::size_t total_pairs = 0;
  for (const auto& [s, prec] : p) {
    if (s.size() != 2) continue;
    ++total_pairs;
    if (prec == 1.0) pairs.push_back(s);
  }
  o.detail << "  perfect pairs " << pairs.size() << "/" << total_pairs << ":";
  for (const auto& s : pairs) o.detail << " " << show(s);
  o.detail << "\n  " << records.size() << " runs, " << since(t0) << " s\n";
  o.require(pairs.size() == kCoupledPairsExpected,
            "pair count " + std::to_string(pairs.size()) + "/45, expected " + std::to_string(kCoupledPairsExpected) + "/45");
  return o;
}

Outcome cascaded_kernels() {
  Outcome o;
  SweepConfig cfg;
  cfg.system = SystemId::cascaded;
  cfg.max_subset_size = 3;
  auto t0 = Clock::now();
  auto records = sweep_noise_free(cfg);
  const auto p = by_subset(records);
  for (const auto& [s, prec] : p) {
    if (s.size() < 3) o.require(prec < 1.0, show(s) + " reached precision 1");
  }
  for (const auto& k : builtin(SystemId::cascaded).kernel_sets) {
    auto ks = sorted(k);
    o.require(p.at(ks) == 1.0, show(ks) + " has precision " + std::to_string(p.at(ks)));
  }
  std::size_t triples = 0;
  for (const auto& [s, prec] : p) triples += s.size() == 3 && prec == 1.0 ? 1 : 0;
  o.detail << "  " << records.size() << " runs, " << triples << " perfect triples, " << since(t0) << " s\n";
  return o;
}

Outcome curve_shape() {
  Outcome o;
  for (auto id : {SystemId::utube, SystemId::coupled}) {
    const std::size_t n = builtin(id).envisionment_truth.size();
    SweepConfig cfg;
    cfg.system = id;
    auto clean = size_averages(sweep_noise_free(cfg), n);
    std::map<std::size_t, double> clean_at;
    for (std::size_t i = 0; i < clean.size(); ++i) {
      clean_at[clean[i].size] = clean[i].avg_precision;
      if (i > 0) {
        o.require(clean[i].avg_precision >= clean[i - 1].avg_precision,
                  std::string(to_string(id)) + " clean curve drops at size " + std::to_string(clean[i].size));
      }
    }
    std::map<std::size_t, double> noisy_sum;
    std::map<std::size_t, std::size_t> noisy_count;
    cfg.mode = SweepMode::noisy;
    for (std::uint64_t seed = 0; seed < kNoisySeeds; ++seed) {
      cfg.seed = seed;
      for (const auto& pt : size_averages(sweep_noisy(cfg), n)) {
        noisy_sum[pt.size] += pt.avg_precision;
        ++noisy_count[pt.size];
      }
    }
    o.detail << "  " << to_string(id) << " size: clean / noisy (" << kNoisySeeds << " seeds)\n";
    for (const auto& [size, sum] : noisy_sum) {
      const double noisy = sum / static_cast<double>(noisy_count[size]);
      auto it = clean_at.find(size);
      if (it == clean_at.end()) continue;
      o.detail << "    " << size << ": " << it->second << " / " << noisy << "\n";
      o.require(noisy <= it->second, std::string(to_string(id)) + " noisy average above clean at size " + std::to_string(size));
    }
  }
  return o;
}

Outcome quantitative_pipeline() {
  Outcome o;
  auto t0 = Clock::now();
  const std::vector<std::size_t> published_tp{4, 4, 3};
  QuantConfig cfg;
  cfg.noise_levels = {0.0};
  auto u = quantitative_experiment(cfg);
  for (std::size_t i = 0; i < u.rows.size(); ++i) {
    const auto& r = u.rows[i];
    o.detail << "  u-tube init (" << r.init[0] << "," << r.init[1] << "): " << r.true_states << "/" << r.states
             << " true (published " << published_tp[i] << ")\n";
    o.require(static_cast<int>(r.true_states) >= static_cast<int>(published_tp[i]) - kTpSlack,
              "true positives below published - 1");
  }
  o.detail << "  u-tube pooled precision " << u.levels[0].precision << "\n";
  o.require(u.levels[0].precision > 0.0, "u-tube pooled clean precision is 0");

  cfg.system = SystemId::spring;
  auto s = quantitative_experiment(cfg);
  o.detail << "  spring pooled precision " << s.levels[0].precision << "\n";
  o.require(s.levels[0].precision == 1.0, "spring pooled clean precision is not 1");

  cfg.system = SystemId::cascaded;
  auto c = quantitative_experiment(cfg);
  o.detail << "  cascaded pooled precision " << c.levels[0].precision << "\n";
  o.require(c.levels[0].precision == 0.0, "cascaded pooled clean precision is not 0");
  o.detail << "  " << since(t0) << " s\n";
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  Gen g(500);
  std::size_t agree = 0, covered = 0;
  for (std::size_t i = 0; i < kOraclePairs; ++i) {
    auto m = g.model(kOracleMaxVars, 4);
    auto st = g.state(m);
    const bool got = covers(m, st);
    const bool want = oracle_covers(m, st);
    agree += got == want ? 1 : 0;
    covered += want ? 1 : 0;
    if (got != want) o.detail << "  disagreement on:\n" << format_model_text(m) << "\n";
  }
  o.detail << "  " << agree << "/" << kOraclePairs << " agree, " << covered << " covered\n";
  o.require(agree == kOraclePairs, "covers disagrees with the oracle");
  return o;
}

bool within(double got, double want) { return std::abs(got - want) <= kIsoclineRelative * std::max(std::abs(want), 1e-12); }

Outcome isocline_math() {
  Outcome o;
  {
    OdeParams op;
    op.initial = {{"h1", 2.0}, {"h2", 0.0}};
    op.duration = 40;
    auto t = simulate(SystemId::utube, op);
    const double gap = std::abs(t.series.at("h1").back() - t.series.at("h2").back());
    o.detail << "  u-tube |h1-h2| = " << gap << "\n";
    o.require(gap < kUtubeGap, "u-tube levels did not equalise");
  }
  {
    const double qi = 1, k1 = 2, k2 = 1;
    OdeParams op;
    op.coefficients = {{"qi", qi}, {"k1", k1}, {"k2", k2}};
    op.duration = 60;
    auto t = simulate(SystemId::cascaded, op);
    const double h1 = t.series.at("h1").back(), h2 = t.series.at("h2").back();
    o.detail << "  cascaded h1 = " << h1 << " (qi/k1 = " << qi / k1 << "), h2 = " << h2 << " ((k1/k2) h1 = " << k1 / k2 * h1
             << ")\n";
    o.require(within(h1, qi / k1), "cascaded h1 off qi/k1");
    o.require(within(h2, k1 / k2 * h1), "cascaded h2 off (k1/k2) h1");
  }
  {
    const double qi = 1, k1 = 2, k2 = 1;
    OdeParams op;
    op.coefficients = {{"qi", qi}, {"k1", k1}, {"k2", k2}};
    op.duration = 60;
    auto t = simulate(SystemId::coupled, op);
    const double h1 = t.series.at("h1").back(), h2 = t.series.at("h2").back();
    const double predicted = k1 / (k1 - k2) * h1;
    o.detail << "  coupled h1 = " << h1 << ", h2 = " << h2 << ", k1/(k1-k2) h1 = " << predicted
             << ", qi/k2 = " << qi / k2 << "\n";
    o.require(within(h2, predicted), "coupled h2 off k1/(k1-k2) h1");
  }
  return o;
}

Outcome metabolic_round_trip() {
  Outcome o;
  auto m = glycolysis_model();
  auto structure = check_structure(m);
  auto order = causal_order(m);
  o.detail << "  glycolysis: " << m.size() << " constraints, structure violations " << structure.size()
           << ", causal order " << (order.ok ? "ok" : "broken") << "\n";
  o.require(structure.empty(), "glycolysis structure violations");
  o.require(order.ok, "glycolysis has no causal order");
  const bool cov = covers(m, glycolysis_state());
  o.detail << "  glycolysis covers the observed state: " << (cov ? "yes" : "no") << "\n";
  o.require(cov, "glycolysis model does not cover the observed state");

  std::vector<Reaction> chain{{{"A"}, {"B"}}, {{"B"}, {"C"}}, {{"C"}, {"D"}}};
  const Reaction decoy{{"A"}, {"C"}};
  auto observed = enumerate_states(pathway_model(chain), {}).states;
  auto all = chain;
  all.push_back(decoy);
  auto survivors = pathway_search(all, {"A", "B", "C", "D"}, observed, all.size());
  bool has_chain = false, has_decoy = false;
  for (const auto& s : survivors) {
    has_chain = has_chain || s.reactions == chain;
    for (const auto& r : s.reactions) has_decoy = has_decoy || r == decoy;
  }
  o.detail << "  toy pathway: " << survivors.size() << " survivors, chain " << (has_chain ? "kept" : "lost") << ", decoy "
           << (has_decoy ? "kept" : "eliminated") << "\n";
  o.require(has_chain, "true chain not among survivors");
  o.require(!has_decoy, "decoy survived");

  const auto reactions = balanced_reactions(without(glycolysis_formulas(), kUbiquitousMetabolites));
  o.detail << "  balanced glycolysis reactions (reported, not asserted): " << reactions.size() << " (published 172)\n";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"1 envisionment exactness", envisionment_exactness},
      {"2 u-tube kernels", utube_kernels},
      {"3 coupled-tank kernels", coupled_kernels},
      {"4 cascaded-tank kernels", cascaded_kernels},
      {"5 curve shape", curve_shape},
      {"6 quantitative pipeline", quantitative_pipeline},
      {"7 covers oracle equivalence", oracle_equivalence},
      {"8 isocline math", isocline_math},
      {"9 metabolic round trip", metabolic_round_trip},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "  exception: " << e.what() << "\n";
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << " (" << since(t0) << " s)\n" << o.detail.str() << std::flush;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (9 - failed) << "/9 criteria pass\n";
  return failed == 0 ? 0 : 1;
}
