#include "qsi/qual.hpp"

namespace qsi {

std::string_view to_string(Sign s) {
  switch (s) {
    case Sign::neg: return "neg";
    case Sign::zero: return "zero";
    case Sign::pos: return "pos";
  }
  return "?";
}

std::string_view to_string(Dir d) {
  switch (d) {
    case Dir::dec: return "dec";
    case Dir::std: return "std";
    case Dir::inc: return "inc";
  }
  return "?";
}

std::string to_string(QualValue v) {
  std::string out(to_string(v.mag));
  out += '/';
  out += to_string(v.dir);
  return out;
}

Sign parse_sign(std::string_view text) {
  if (text == "neg") return Sign::neg;
  if (text == "zero") return Sign::zero;
  if (text == "pos") return Sign::pos;
  throw ParseError("unknown qmag '" + std::string(text) + "'");
}

Dir parse_dir(std::string_view text) {
  if (text == "dec") return Dir::dec;
  if (text == "std") return Dir::std;
  if (text == "inc") return Dir::inc;
  throw ParseError("unknown qdir '" + std::string(text) + "'");
}

QualValue parse_qual_value(std::string_view token) {
  auto slash = token.find('/');
  if (slash == std::string_view::npos) throw ParseError("qualitative value needs qmag/qdir: '" + std::string(token) + "'");
  return QualValue{parse_sign(token.substr(0, slash)), parse_dir(token.substr(slash + 1))};
}

}  // namespace qsi
