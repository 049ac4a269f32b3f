#include "support.hpp"

#include "qsi/cover.hpp"
#include "qsi/equiv.hpp"
#include "qsi/systems.hpp"

#include <doctest.h>

using namespace qsi;
using namespace qsi::test;

namespace {

std::vector<QualValue> vals(std::initializer_list<std::string_view> tokens) {
  std::vector<QualValue> out;
  for (auto t : tokens) out.push_back(qv(t));
  return out;
}

}  // namespace

TEST_SUITE("qual") {

TEST_CASE("sign addition and multiplication tables") {
  CHECK(sign_add(Sign::zero, Sign::zero) == SignSet{Sign::zero});
  CHECK(sign_add(Sign::pos, Sign::pos) == SignSet{Sign::pos});
  CHECK(sign_add(Sign::pos, Sign::neg) == SignSet::all());
  CHECK(sign_mul(Sign::pos, Sign::neg) == Sign::neg);
  CHECK(sign_mul(Sign::zero, Sign::pos) == Sign::zero);
  CHECK(sign_mul(Sign::neg, Sign::neg) == Sign::pos);
}

TEST_CASE("qualitative value tokens round-trip") {
  for (int c = 0; c < kQualValueCount; ++c) {
    auto v = QualValue::from_code(c);
    CHECK(parse_qual_value(to_string(v)) == v);
  }
  CHECK_THROWS_AS(parse_qual_value("pos/up"), ParseError);
  CHECK_THROWS_AS(parse_qual_value("pos"), ParseError);
}

TEST_CASE("constraint checks on worked states") {
  CHECK(check_constraint(ConstraintKind::DERIV, vals({"pos/dec", "neg/inc"})));
  CHECK_FALSE(check_constraint(ConstraintKind::M_PLUS, vals({"pos/dec", "neg/dec"})));
  CHECK(check_constraint(ConstraintKind::ADD, vals({"pos/inc", "pos/dec", "pos/dec"})));
}

TEST_CASE("check_constraint is sound against real triples") {
  Gen g(11);
  std::uniform_real_distribution<double> u(-3, 3);
  auto sv = [](double x, double dx) { return QualValue{static_cast<Sign>(sgn(x)), static_cast<Dir>(sgn(dx))}; };
  for (int i = 0; i < 10000; ++i) {
    double x = u(g.rng), y = u(g.rng), dx = u(g.rng), dy = u(g.rng);
    if (g.coin(0.2)) x = 0;
    if (g.coin(0.2)) dy = 0;
    std::vector<QualValue> add{sv(x, dx), sv(y, dy), sv(x + y, dx + dy)};
    std::vector<QualValue> mult{sv(x, dx), sv(y, dy), sv(x * y, dx * y + x * dy)};
    REQUIRE(check_constraint(ConstraintKind::ADD, add));
    REQUIRE(check_constraint(ConstraintKind::MULT, mult));
  }
}

TEST_CASE("every passing sign triple has a real witness") {
  for (auto kind : {ConstraintKind::ADD, ConstraintKind::SUB, ConstraintKind::MULT}) {
    for (int a = 0; a < 9; ++a) {
      for (int b = 0; b < 9; ++b) {
        for (int c = 0; c < 9; ++c) {
          std::vector<QualValue> args{QualValue::from_code(a), QualValue::from_code(b), QualValue::from_code(c)};
          INFO(to_string(kind), " ", to_string(args[0]), " ", to_string(args[1]), " ", to_string(args[2]));
          CHECK(check_constraint(kind, args) == oracle_constraint(kind, args));
        }
      }
    }
  }
}

TEST_CASE("four-term sums and products agree with the witness oracle") {
  Gen g(5);
  for (int i = 0; i < 3000; ++i) {
    std::vector<QualValue> args{g.value(), g.value(), g.value(), g.value()};
    CHECK(check_constraint(ConstraintKind::SUM, args) == oracle_constraint(ConstraintKind::SUM, args));
    CHECK(check_constraint(ConstraintKind::PROD, args) == oracle_constraint(ConstraintKind::PROD, args));
  }
}

TEST_CASE("MINUS composed with itself is the identity; M- is M+ then MINUS") {
  for (int a = 0; a < 9; ++a) {
    auto x = QualValue::from_code(a);
    for (int b = 0; b < 9; ++b) {
      auto y = QualValue::from_code(b);
      std::vector<QualValue> xy{x, y};
      CHECK(check_constraint(ConstraintKind::MINUS, xy) == (y == QualValue{negate(x.mag), negate(x.dir)}));
      bool via = false;
      for (int c = 0; c < 9; ++c) {
        auto z = QualValue::from_code(c);
        std::vector<QualValue> xz{x, z}, zy{z, y};
        via = via || (check_constraint(ConstraintKind::M_PLUS, xz) && check_constraint(ConstraintKind::MINUS, zy));
      }
      CHECK(check_constraint(ConstraintKind::M_MINUS, xy) == via);
      bool twice = false;
      for (int c = 0; c < 9; ++c) {
        auto z = QualValue::from_code(c);
        std::vector<QualValue> xz{x, z}, zy{z, y};
        twice = twice || (check_constraint(ConstraintKind::MINUS, xz) && check_constraint(ConstraintKind::MINUS, zy));
      }
      CHECK(twice == (x == y));
    }
  }
}

TEST_CASE("covers on the u-tube") {
  const auto& u = builtin(SystemId::utube);
  CHECK(covers(u.target, u.state(5)));
  CHECK_FALSE(covers(u.target, state_of({{"h1", "pos/inc"}, {"h2", "pos/inc"}, {"qx", "pos/inc"}, {"mqx", "neg/dec"}})));
  CHECK_FALSE(oracle_covers(u.target, state_of({{"h1", "pos/inc"}, {"h2", "pos/inc"}, {"qx", "pos/inc"}, {"mqx", "neg/dec"}})));
  CHECK(covers(Model{}, u.state(3)));
}

TEST_CASE("covers rejects states missing a measured variable") {
  const auto& u = builtin(SystemId::utube);
  auto s = u.state(5);
  s.bindings.erase("qx");
  CHECK_THROWS(covers(u.target, s));
}

TEST_CASE("covers matches the brute-force oracle on random models") {
  Gen g(2024);
  int positive = 0;
  for (int i = 0; i < 300; ++i) {
    auto m = g.model(8, 4);
    auto s = g.state(m);
    bool got = covers(m, s);
    INFO(format_model_text(m));
    CHECK(got == oracle_covers(m, s));
    positive += got ? 1 : 0;
  }
  CHECK(positive > 20);
}

TEST_CASE("model equivalence examples") {
  const auto& u = builtin(SystemId::utube);
  Gen g(3);
  CHECK(model_equivalent(u.target, g.renamed(u.target)));
  CHECK(model_equivalent(model_of("var x unrestricted 1 measured-algebraic\nvar y unrestricted 1 measured-algebraic\n"
                                  "var z unrestricted 1 measured-algebraic\nADD(x, y, z)\n"),
                         model_of("var x unrestricted 1 measured-algebraic\nvar y unrestricted 1 measured-algebraic\n"
                                  "var z unrestricted 1 measured-algebraic\nADD(y, x, z)\n")));
  CHECK_FALSE(model_equivalent(u.target, builtin(SystemId::coupled).target));
}

TEST_CASE("model equivalence is an equivalence relation on random models") {
  Gen g(77);
  std::vector<Model> corpus;
  for (int i = 0; i < 50; ++i) {
    auto m = g.model(6, 3);
    corpus.push_back(m);
    corpus.push_back(g.renamed(m));
  }
  const std::size_t n = corpus.size();
  std::vector<std::vector<bool>> eq(n, std::vector<bool>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) eq[i][j] = model_equivalent(corpus[i], corpus[j]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(eq[i][i]);
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(eq[i][j] == eq[j][i]);
      if (!eq[i][j]) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (eq[j][k]) CHECK(eq[i][k]);
      }
    }
  }
  for (std::size_t i = 0; i < n; i += 2) CHECK(eq[i][i + 1]);
}

TEST_CASE("model text round-trips") {
  for (auto id : kAllSystems) {
    const auto& def = builtin(id);
    auto text = format_model_text(def.target, def.exogenous);
    auto back = parse_model_text(text);
    CHECK(back.exogenous == def.exogenous);
    CHECK(model_equivalent(back.model, def.target));
    CHECK(format_model_text(back.model, back.exogenous) == text);
  }
  CHECK_THROWS_AS(parse_model_text("var h1 sideways L state\n"), ParseError);
  CHECK_THROWS_AS(parse_model_text("FOO(a, b)\n"), ParseError);
}

TEST_CASE("state CSV round-trips") {
  auto states = builtin(SystemId::coupled).truth_states();
  CHECK(parse_states_csv(format_states_csv(states)) == states);
  CHECK_THROWS_AS(parse_states_csv("state_id,var,qmag\n1,h1,pos\n"), ParseError);
  CHECK_THROWS_AS(parse_states_csv("state_id,var,qmag,qdir\n1,h1,pos,up\n"), ParseError);
}

}  // TEST_SUITE
