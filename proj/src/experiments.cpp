#include "qsi/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

namespace qsi {

double SweepConfig::effective_theta() const {
  if (theta) return *theta;
  return mode == SweepMode::noisy ? 0.7 : 1.0;
}

std::size_t SweepRecord::curve_size(std::size_t envisionment_size) const {
  return k == 0 ? subset.size() : envisionment_size - k;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 over the pair.
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

const HypothesisIndex& shared_index(const SearchConfig& cfg) {
  static std::mutex mu;
  static std::map<std::string, std::unique_ptr<HypothesisIndex>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[HypothesisIndex::signature_of(cfg)];
  if (!slot) slot = std::make_unique<HypothesisIndex>(cfg);
  return *slot;
}

std::vector<std::uint64_t> sweep_subsets(std::size_t n, const SweepConfig& cfg) {
  if (n == 0 || n > 63) throw ContractViolation("sweeps need between 1 and 63 envisionment states");
  const std::size_t max_size = cfg.max_subset_size == 0 ? n : std::min(cfg.max_subset_size, n);
  // Binomial counts; saturate to avoid overflow.
  std::vector<double> choose(n + 1, 1.0);
  for (std::size_t s = 1; s <= n; ++s) choose[s] = choose[s - 1] * static_cast<double>(n - s + 1) / static_cast<double>(s);

  std::vector<std::uint64_t> out;
  if (!cfg.sample_per_size) {
    double total = 0;
    for (std::size_t s = 1; s <= max_size; ++s) total += choose[s];
    if (total > static_cast<double>(kExhaustiveLimit)) {
      throw GuardError("exhaustive sweep over " + std::to_string(n) + " states needs " +
                       std::to_string(static_cast<std::uint64_t>(total)) + " runs (limit " +
                       std::to_string(kExhaustiveLimit) + "); use a sampled sweep");
    }
  }
  std::mt19937_64 rng(derive_seed(cfg.seed, 0xA11CE));
  for (std::size_t s = 1; s <= max_size; ++s) {
    const bool all = !cfg.sample_per_size || choose[s] <= static_cast<double>(*cfg.sample_per_size);
    std::vector<std::uint64_t> bucket;
    if (all) {
      // Gosper's hack over all s-subsets.
      std::uint64_t m = (std::uint64_t{1} << s) - 1;
      const std::uint64_t limit = std::uint64_t{1} << n;
      while (m < limit) {
        bucket.push_back(m);
        std::uint64_t c = m & (~m + 1);
        std::uint64_t r = m + c;
        m = (((r ^ m) >> 2) / c) | r;
      }
    } else {
      std::set<std::uint64_t> drawn;
      std::vector<std::size_t> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
      while (drawn.size() < *cfg.sample_per_size) {
        std::shuffle(idx.begin(), idx.end(), rng);
        std::uint64_t m = 0;
        for (std::size_t i = 0; i < s; ++i) m |= std::uint64_t{1} << idx[i];
        drawn.insert(m);
      }
      bucket.assign(drawn.begin(), drawn.end());
    }
    std::sort(bucket.begin(), bucket.end(), [](std::uint64_t a, std::uint64_t b) {
      // Lexicographic on the ascending index lists.
      while (a && b) {
        auto ia = std::countr_zero(a);
        auto ib = std::countr_zero(b);
        if (ia != ib) return ia < ib;
        a &= a - 1;
        b &= b - 1;
      }
      return a == 0 && b != 0;
    });
    out.insert(out.end(), bucket.begin(), bucket.end());
  }
  return out;
}

namespace {

std::vector<int> numbers_of(std::uint64_t mask, const SystemDefinition& def) {
  std::vector<int> out;
  for (std::size_t i = 0; i < def.envisionment_truth.size(); ++i) {
    if (mask >> i & 1) out.push_back(def.envisionment_truth[i].number);
  }
  return out;
}

std::vector<SweepRecord> run_sweep(const SweepConfig& cfg, bool noisy) {
  const auto& def = builtin(cfg.system);
  const std::size_t n = def.envisionment_truth.size();
  auto subsets = sweep_subsets(n, cfg);
  SearchConfig scfg = def.search_config(cfg.effective_theta());
  scfg.node_limit = cfg.node_limit;
  const auto& index = shared_index(scfg);
  const auto vars = def.measured_variables();

  std::vector<SweepRecord> records(subsets.size());
  std::atomic<std::size_t> done{0};
  std::mutex progress_mu;
  parallel_for(subsets.size(), cfg.jobs, [&](std::size_t i) {
    const std::uint64_t mask = subsets[i];
    SearchConfig run_cfg = scfg;
    run_cfg.score.seed = derive_seed(cfg.seed, i);
    std::vector<QualState> training;
    SweepRecord rec;
    rec.subset = numbers_of(mask, def);
    if (noisy) {
      std::mt19937_64 rng(derive_seed(cfg.seed ^ 0x5EED, i));
      for (std::size_t j = 0; j < n; ++j) {
        if (!(mask >> j & 1)) training.push_back(def.envisionment_truth[j].state);
      }
      rec.k = static_cast<std::size_t>(std::popcount(mask));
      for (std::size_t j = 0; j < rec.k; ++j) training.push_back(random_state(vars, def.exogenous, rng));
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        if (mask >> j & 1) training.push_back(def.envisionment_truth[j].state);
      }
    }
    auto result = index.search(training, run_cfg);
    rec.precision = precision(result.models, def.target);
    rec.result_size = result.models.size();
    rec.nodes_explored = result.nodes_explored;
    rec.exhausted = result.exhausted;
    records[i] = std::move(rec);
    auto d = ++done;
    if (cfg.progress) {
      std::lock_guard lock(progress_mu);
      cfg.progress(d, subsets.size());
    }
  });
  return records;
}

}  // namespace

std::vector<SweepRecord> sweep_noise_free(const SweepConfig& cfg) { return run_sweep(cfg, false); }

std::vector<SweepRecord> sweep_noisy(const SweepConfig& cfg) { return run_sweep(cfg, true); }

std::vector<SweepRecord> sweep(const SweepConfig& cfg) {
  return cfg.mode == SweepMode::noisy ? sweep_noisy(cfg) : sweep_noise_free(cfg);
}

QualState random_state(const std::vector<Variable>& variables, const ExoBindings& exo, std::mt19937_64& rng) {
  QualState s;
  for (const auto& v : variables) {
    if (v.exogenous()) {
      auto it = exo.find(v.name);
      if (it == exo.end()) throw ContractViolation("exogenous variable '" + v.name + "' has no fixed value");
      s.bindings[v.name] = it->second;
      continue;
    }
    auto values = domain_values(v.domain);
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    s.bindings[v.name] = values[pick(rng)];
  }
  return s;
}

std::vector<CurvePoint> size_averages(const std::vector<SweepRecord>& records, std::size_t envisionment_size) {
  std::map<std::size_t, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    auto& [sum, count] = acc[r.curve_size(envisionment_size)];
    sum += r.precision;
    ++count;
  }
  std::vector<CurvePoint> out;
  for (const auto& [size, v] : acc) out.push_back({size, v.first / static_cast<double>(v.second), v.second});
  return out;
}

std::vector<std::vector<int>> minimal_perfect_subsets(const std::vector<SweepRecord>& records) {
  std::vector<std::vector<int>> perfect;
  for (const auto& r : records) {
    if (r.k == 0 && r.precision == 1.0) perfect.push_back(r.subset);
  }
  std::sort(perfect.begin(), perfect.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  std::vector<std::vector<int>> out;
  for (const auto& p : perfect) {
    bool minimal = true;
    for (const auto& q : out) {
      if (q.size() < p.size() && std::includes(p.begin(), p.end(), q.begin(), q.end())) {
        minimal = false;
        break;
      }
    }
    if (minimal) out.push_back(p);
  }
  return out;
}

std::vector<std::vector<int>> find_kernels(SystemId system, std::size_t max_size, std::size_t jobs) {
  SweepConfig cfg;
  cfg.system = system;
  cfg.mode = SweepMode::noise_free;
  cfg.theta = 1.0;
  cfg.max_subset_size = max_size;
  cfg.jobs = jobs;
  return minimal_perfect_subsets(sweep_noise_free(cfg));
}

QuantReport quantitative_experiment(const QuantConfig& cfg) {
  const auto& def = builtin(cfg.system);
  QuantReport report;
  auto truth = def.truth_states();
  for (std::size_t level = 0; level < cfg.noise_levels.size(); ++level) {
    const double noise = cfg.noise_levels[level];
    std::vector<QualState> pooled;
    std::set<QualState> seen;
    for (std::size_t i = 0; i < cfg.inits.size(); ++i) {
      const auto& init = cfg.inits[i];
      if (init.size() != def.ode_state.size()) throw ContractViolation("initial condition needs one value per state variable");
      OdeParams op;
      for (std::size_t j = 0; j < init.size(); ++j) op.initial[def.ode_state[j]] = init[j];
      op.noise_sigma_scale = noise;
      op.seed = derive_seed(cfg.seed, level * 1000 + i);
      auto trace = simulate(cfg.system, op);
      ConversionParams cp = cfg.conversion;
      for (const auto& v : def.target.variables()) cp.domains.emplace(v.name, v.domain);
      for (const auto& [name, v] : def.exogenous) cp.fixed.emplace(name, v);
      cp.reference = truth;
      for (const auto& c : def.target.constraints()) {
        if (c.kind == ConstraintKind::DERIV && trace.series.contains(c.args[0]) && trace.series.contains(c.args[1])) {
          cp.derivative_of.emplace(c.args[1], c.args[0]);
        }
      }
      auto conv = trace_to_states(trace, cp);
      report.rows.push_back({noise, init, conv.states.size(), conv.true_positive, conv.false_positive});
      for (const auto& s : conv.states) {
        if (seen.insert(s).second) pooled.push_back(s);
      }
    }
    QuantLevel lv;
    lv.noise = noise;
    lv.pooled_states = pooled.size();
    ConversionReport pooled_report{pooled, 0, 0, 0};
    score_against(pooled_report, truth);
    lv.pooled_true = pooled_report.true_positive;
    if (cfg.learn) {
      SearchConfig scfg = def.search_config(noise == 0.0 ? cfg.clean_theta : cfg.noisy_theta);
      scfg.node_limit = cfg.node_limit;
      scfg.score.seed = derive_seed(cfg.seed, level);
      auto result = shared_index(scfg).search(pooled, scfg);
      lv.precision = precision(result.models, def.target);
      lv.result_size = result.models.size();
      lv.exhausted = result.exhausted;
    }
    report.levels.push_back(lv);
  }
  return report;
}

}  // namespace qsi
