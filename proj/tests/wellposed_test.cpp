#include "support.hpp"

#include "qsi/experiments.hpp"
#include "qsi/wellposed.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace qsi;
using namespace qsi::test;

namespace {

std::vector<Rule> rules(const std::vector<Violation>& vs) {
  std::vector<Rule> out;
  for (const auto& v : vs) {
    if (std::find(out.begin(), out.end(), v.rule) == out.end()) out.push_back(v.rule);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Model without_constraint(const Model& m, const std::string& text) {
  auto drop = Constraint::parse(text);
  std::vector<Constraint> cs;
  for (const auto& c : m.constraints()) {
    if (c != drop) cs.push_back(c);
  }
  Model out(m.variables(), cs);
  return out;
}

std::string kinds_of(const Model& m, const CausalOrder& order) {
  std::string out;
  for (const auto& step : order.schedule) out += std::string(to_string(m.constraints()[step.constraint].kind)) + " ";
  return out;
}

}  // namespace

TEST_SUITE("wellposed") {

TEST_CASE("syntactic rules") {
  const auto& u = builtin(SystemId::utube);
  CHECK(check_syntactic(u.target, u.spec).empty());

  const auto& c = builtin(SystemId::coupled);
  auto short_model = without_constraint(c.target, "M+(h2, qo)");
  CHECK(rules(check_syntactic(short_model, c.spec)) == std::vector{Rule::size, Rule::determinate});

  auto spec = c.spec;
  auto text = format_model_text(c.target, c.exogenous);
  auto m = parse_model_text(text).model;
  std::vector<Variable> vars;
  for (const auto& v : m.variables()) {
    if (v.name != "qo") vars.push_back(v);
  }
  std::vector<Constraint> cs;
  for (auto con : m.constraints()) {
    for (auto& a : con.args) {
      if (a == "qo") a = "qz";
    }
    cs.push_back(con);
  }
  vars.push_back({"qz", Domain::nonnegative, Dimension::parse("L*T^-1"), VarKind::intermediate});
  CHECK(rules(check_syntactic(Model(vars, cs), spec)) == std::vector{Rule::complete});
}

TEST_CASE("language limits") {
  const auto& u = builtin(SystemId::utube);
  auto spec = u.spec;
  spec.language_limits[ConstraintKind::DERIV] = 1;
  CHECK(rules(check_syntactic(u.target, spec)) == std::vector{Rule::language});
}

TEST_CASE("semantic rules") {
  auto m = model_of(R"(
var inflow nonnegative L^3*T^-1 measured-algebraic
var outflow nonnegative L^3*T^-1 measured-algebraic
var x1 unrestricted L^3*T^-1 measured-algebraic
var amount nonnegative L^3 measured-algebraic
ADD(inflow, outflow, x1)
ADD(outflow, inflow, x1)
)");
  WellPosedSpec spec;
  spec.target_size = 2;
  spec.measured = m.measured();
  CHECK(rules(check_semantic(m, {}, spec)) == std::vector{Rule::redundant});

  auto d = model_of(R"(
var inflow nonnegative L^3*T^-1 measured-algebraic
var outflow nonnegative L^3*T^-1 measured-algebraic
var amount nonnegative L^3 measured-algebraic
ADD(inflow, outflow, amount)
)");
  spec.target_size = 1;
  spec.measured = d.measured();
  CHECK(rules(check_semantic(d, {}, spec)) == std::vector{Rule::dimensional});

  const auto& u = builtin(SystemId::utube);
  CHECK(check_semantic(u.target, u.truth_states(), u.spec).empty());
}

TEST_CASE("contradictory pairs") {
  auto m = model_of(R"(
var x unrestricted 1 measured-algebraic
var y unrestricted 1 measured-algebraic
M+(x, y)
MINUS(x, y)
)");
  WellPosedSpec spec;
  spec.target_size = 2;
  spec.measured = m.measured();
  // Both hold only at x = y = zero/std, so the pair is satisfiable.
  CHECK(rules(check_semantic(m, {}, spec)).empty());
  auto e = parse_model_text(R"(
var q nonnegative 1 exogenous
var y unrestricted 1 measured-algebraic
fix q pos/std
M+(q, y)
MINUS(q, y)
)");
  spec.measured = e.model.measured();
  spec.exogenous = e.exogenous;
  CHECK(rules(check_semantic(e.model, {}, spec)) == std::vector{Rule::contradictory});
}

TEST_CASE("causal ordering") {
  const auto& u = builtin(SystemId::utube);
  auto order = causal_order(u.target);
  REQUIRE(order.ok);
  CHECK(kinds_of(u.target, order) == "ADD M+ MINUS DERIV DERIV ");
  CHECK(order.schedule[0].output == "Delta_h");
  CHECK(order.schedule[1].output == "qx");
  CHECK(order.schedule[2].output == "mqx");

  auto loop = parse_model_text(R"(
var b unrestricted 1 exogenous
var d unrestricted 1 exogenous
var a unrestricted 1 measured-algebraic
var c unrestricted 1 measured-algebraic
fix b pos/std
fix d pos/std
ADD(a, b, c)
ADD(c, d, a)
)");
  auto lo = causal_order(loop.model);
  CHECK_FALSE(lo.ok);
  CHECK(std::set(lo.loop_variables.begin(), lo.loop_variables.end()) == std::set<std::string>{"a", "c"});
  CHECK(lo.loop_constraints.size() == 2);

  const auto& c = builtin(SystemId::cascaded);
  auto co = causal_order(c.target);
  REQUIRE(co.ok);
  auto pos = [&](const std::string& out) {
    for (std::size_t i = 0; i < co.schedule.size(); ++i) {
      if (co.schedule[i].output == out) return i;
    }
    return co.schedule.size();
  };
  CHECK(pos("qx") < pos("h1_dot"));
}

TEST_CASE("causal order holds for every target") {
  for (auto id : kAllSystems) CHECK(causal_order(builtin(id).target).ok);
}

TEST_CASE("tank models lose their causal order when a level stops being integrated") {
  for (auto id : {SystemId::utube, SystemId::coupled, SystemId::cascaded}) {
    const auto& def = builtin(id);
    for (std::size_t i = 0; i < def.target.size(); ++i) {
      const auto& c = def.target.constraints()[i];
      if (c.kind != ConstraintKind::DERIV) continue;
      auto cs = def.target.constraints();
      cs[i].kind = ConstraintKind::M_PLUS;
      INFO(to_string(id), " ", c.str());
      CHECK_FALSE(causal_order(Model(def.target.variables(), cs)).ok);
    }
  }
  // The spring keeps an order: velocity is still integrated and fixes the displacement.
  const auto& s = builtin(SystemId::spring);
  auto cs = s.target.constraints();
  for (auto& c : cs) {
    if (c == Constraint::parse("DERIV(disp, vel)")) c.kind = ConstraintKind::M_PLUS;
  }
  CHECK(causal_order(Model(s.target.variables(), cs)).ok);
}

TEST_CASE("structure rules") {
  const auto& u = builtin(SystemId::utube);
  auto m = u.target;
  m.add_variable({"a", Domain::unrestricted, Dimension::parse("L"), VarKind::measured_algebraic});
  m.add_variable({"b", Domain::unrestricted, Dimension::parse("L"), VarKind::measured_algebraic});
  m.add_constraint(Constraint::parse("M+(a, b)"));
  CHECK(rules(check_structure(m)) == std::vector{Rule::single, Rule::connected});

  auto once = model_of(R"(
var h1 nonnegative L state
var h2 nonnegative L state
var Delta_h unrestricted L intermediate
var qx unrestricted L*T^-1 measured-algebraic
DERIV(h2, qx)
ADD(h2, Delta_h, h1)
M+(h1, qx)
)");
  auto found = check_structure(once);
  REQUIRE(found.size() >= 1);
  CHECK(rules(found) == std::vector{Rule::connected});
  bool names_delta = false;
  for (const auto& v : found) names_delta = names_delta || v.detail.find("Delta_h") != std::string::npos;
  CHECK(names_delta);

  CHECK(check_structure(builtin(SystemId::spring).target).empty());
}

TEST_CASE("acceptability under noise and thresholds") {
  const auto& u = builtin(SystemId::utube);
  auto states = u.truth_states();
  CHECK(acceptable(u.target, u.spec, states));

  std::mt19937_64 rng(4);
  QualState noise;
  do {
    noise = random_state(u.measured_variables(), u.exogenous, rng);
  } while (covers(u.target, noise));
  states[2] = noise;
  auto spec = u.spec;
  spec.theta = 1.0;
  CHECK_FALSE(acceptable(u.target, spec, states));
  spec.theta = 0.8;
  CHECK(acceptable(u.target, spec, states));
}

TEST_CASE("acceptability is anti-monotone in theta") {
  Gen g(8);
  for (auto id : {SystemId::utube, SystemId::coupled, SystemId::cascaded}) {
    const auto& def = builtin(id);
    for (int trial = 0; trial < 20; ++trial) {
      auto states = def.truth_states();
      std::size_t replace = g.below(states.size());
      for (std::size_t i = 0; i < replace; ++i) {
        states[g.below(states.size())] = random_state(def.measured_variables(), def.exogenous, g.rng);
      }
      bool previous = true;
      for (double theta = 0.0; theta <= 1.0001; theta += 0.05) {
        auto spec = def.spec;
        spec.theta = std::min(theta, 1.0);
        bool now = acceptable(def.target, spec, states);
        if (!previous) CHECK_FALSE(now);
        previous = now;
      }
    }
  }
}

TEST_CASE("targets are dimensionally consistent and fully acceptable") {
  for (auto id : kAllSystems) {
    const auto& def = builtin(id);
    for (const auto& c : def.target.constraints()) CHECK(dimensionally_consistent(c, def.target));
    INFO(to_string(id));
    auto vs = all_violations(def.target, def.spec, def.truth_states());
    for (const auto& v : vs) INFO(to_string(v.rule), ": ", v.detail);
    CHECK(vs.empty());
  }
}

TEST_CASE("spec validation") {
  WellPosedSpec spec;
  spec.theta = 1.5;
  CHECK_THROWS_AS(spec.validate(), ContractViolation);
  spec.theta = 0.5;
  spec.target_size = 0;
  CHECK_THROWS_AS(spec.validate(), ContractViolation);
}

}  // TEST_SUITE
