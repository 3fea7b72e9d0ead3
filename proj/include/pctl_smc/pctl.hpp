#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pctl_smc/mdp.hpp"

namespace pctl_smc {

enum class Quantifier { Max, Min };
enum class Relation { Less, Greater, LessEqual, GreaterEqual };
enum class PathOp { Next, Until, Release };

inline constexpr std::string_view kTrueAtom = "true";
inline constexpr std::string_view kFalseAtom = "false";

/// Atom or negated atom. `true`/`false` are built in and never stored negated.
struct AtomLiteral {
  std::string atom;
  bool negated = false;

  static AtomLiteral truth() { return {std::string(kTrueAtom), false}; }
  static AtomLiteral falsity() { return {std::string(kFalseAtom), false}; }

  [[nodiscard]] bool is_builtin() const { return atom == kTrueAtom || atom == kFalseAtom; }
  [[nodiscard]] bool is_true() const { return atom == kTrueAtom && !negated; }
  [[nodiscard]] bool is_false() const { return atom == kFalseAtom && !negated; }

  [[nodiscard]] AtomLiteral canonical() const {
    if (is_builtin() && negated) return atom == kTrueAtom ? falsity() : truth();
    return *this;
  }

  [[nodiscard]] AtomLiteral negation() const {
    if (is_builtin()) return atom == kTrueAtom ? falsity() : truth();
    return {atom, !negated};
  }

  friend bool operator==(const AtomLiteral&, const AtomLiteral&) = default;
};

/**
 * Path formula of the non-nested fragment.
 *
 * Until/Release carry a horizon (nullopt = unbounded). Next has no horizon
 * and only uses `right`. F and G are stored desugared:
 *   F<=T a  ==  true U<=T a
 *   G<=T a  ==  false R<=T a
 */
struct PathTemplate {
  PathOp op = PathOp::Until;
  AtomLiteral left = AtomLiteral::truth();
  AtomLiteral right;
  std::optional<std::uint32_t> horizon;

  [[nodiscard]] bool unbounded() const { return op != PathOp::Next && !horizon; }
  /// Number of steps a finite-horizon check must look ahead.
  [[nodiscard]] std::uint32_t steps() const { return op == PathOp::Next ? 1 : horizon.value_or(0); }

  friend bool operator==(const PathTemplate&, const PathTemplate&) = default;
};

struct Formula {
  Quantifier quantifier = Quantifier::Max;
  Relation relation = Relation::Greater;
  double threshold = 0.0;
  PathTemplate path;
  /// Relation as the user wrote it; kept for reports only.
  Relation written = Relation::Greater;

  /// True for the "> p" family after normalization.
  [[nodiscard]] bool lower_bounded() const {
    return relation == Relation::Greater || relation == Relation::GreaterEqual;
  }

  friend bool operator==(const Formula& x, const Formula& y) {
    return x.quantifier == y.quantifier && x.relation == y.relation && x.threshold == y.threshold &&
           x.path == y.path;
  }
};

/// Syntax error at a byte offset of the input.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}
  [[nodiscard]] std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Under the indifference assumption <= and < (>= and >) are the same query.
inline Relation normalize(Relation r) {
  switch (r) {
    case Relation::LessEqual: return Relation::Less;
    case Relation::GreaterEqual: return Relation::Greater;
    default: return r;
  }
}

inline Formula normalize(Formula f) {
  f.relation = normalize(f.relation);
  f.path.left = f.path.left.canonical();
  f.path.right = f.path.right.canonical();
  if (f.path.op == PathOp::Next) {
    f.path.left = AtomLiteral::truth();
    f.path.horizon.reset();
  }
  return f;
}

namespace detail {

inline constexpr std::array<std::string_view, 8> kReserved = {"Pmax", "Pmin", "P", "X", "F", "G", "U", "R"};

inline bool is_reserved(std::string_view word) {
  for (const auto r : kReserved) {
    if (r == word) return true;
  }
  return false;
}

class FormulaParser {
 public:
  explicit FormulaParser(std::string_view text) : text_(text) {}

  Formula parse() {
    Formula f;
    const auto quant_at = skip();
    const auto quant = ident();
    if (quant == "Pmax") {
      f.quantifier = Quantifier::Max;
    } else if (quant == "Pmin") {
      f.quantifier = Quantifier::Min;
    } else {
      throw ParseError("expected 'Pmax' or 'Pmin'", quant_at);
    }
    f.written = relation();
    f.relation = normalize(f.written);
    const auto p_at = skip();
    f.threshold = number();
    if (!(f.threshold >= 0.0 && f.threshold <= 1.0)) {
      throw ParseError("threshold outside [0,1]", p_at);
    }
    expect('(');
    f.path = path();
    expect(')');
    if (skip() != text_.size()) throw ParseError("unexpected trailing input", pos_);
    return normalize(f);
  }

 private:
  std::size_t skip() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                                   text_[pos_] == '\r')) {
      ++pos_;
    }
    return pos_;
  }

  [[nodiscard]] bool at(char c) {
    skip();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    if (!at(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  static bool ident_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
  static bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

  std::string_view peek_ident() {
    skip();
    auto end = pos_;
    if (end < text_.size() && ident_start(text_[end])) {
      while (end < text_.size() && ident_char(text_[end])) ++end;
    }
    return text_.substr(pos_, end - pos_);
  }

  std::string_view ident() {
    const auto word = peek_ident();
    if (word.empty()) throw ParseError("expected identifier", pos_);
    pos_ += word.size();
    return word;
  }

  Relation relation() {
    skip();
    if (pos_ >= text_.size()) throw ParseError("expected relation", pos_);
    const char c = text_[pos_];
    if (c != '<' && c != '>') throw ParseError("expected one of <, >, <=, >=", pos_);
    ++pos_;
    const bool eq = pos_ < text_.size() && text_[pos_] == '=';
    if (eq) ++pos_;
    if (c == '<') return eq ? Relation::LessEqual : Relation::Less;
    return eq ? Relation::GreaterEqual : Relation::Greater;
  }

  double number() {
    skip();
    const auto start = pos_;
    auto end = pos_;
    while (end < text_.size()) {
      const char c = text_[end];
      const bool exp_sign = (c == '+' || c == '-') && end > start && (text_[end - 1] == 'e' || text_[end - 1] == 'E');
      if ((c >= '0' && c <= '9') || c == '.' || c == 'e' || c == 'E' || exp_sign) {
        ++end;
      } else {
        break;
      }
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + end, value);
    if (end == start || ec != std::errc() || ptr != text_.data() + end) {
      throw ParseError("expected number", start);
    }
    pos_ = end;
    return value;
  }

  std::optional<std::uint32_t> bound() {
    skip();
    if (!(pos_ + 1 < text_.size() && text_[pos_] == '<' && text_[pos_ + 1] == '=')) return std::nullopt;
    pos_ += 2;
    skip();
    const auto start = pos_;
    auto end = pos_;
    while (end < text_.size() && text_[end] >= '0' && text_[end] <= '9') ++end;
    std::uint32_t value = 0;
    const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + end, value);
    if (end == start || ec != std::errc()) throw ParseError("expected integer horizon", start);
    if (value == 0) throw ParseError("horizon must be positive", start);
    pos_ = end;
    return value;
  }

  AtomLiteral literal() {
    AtomLiteral lit;
    if (at('!')) {
      ++pos_;
      lit.negated = true;
    }
    const auto where = skip();
    if (at('(')) throw ParseError("expected atom (non-nested fragment only)", where);
    const auto word = ident();
    if (word == "Pmax" || word == "Pmin" || word == "P") {
      throw ParseError("nested probability operator: non-nested fragment only", where);
    }
    if (is_reserved(word)) throw ParseError("reserved word '" + std::string(word) + "' used as atom", where);
    lit.atom = std::string(word);
    return lit.canonical();
  }

  PathTemplate path() {
    PathTemplate p;
    const auto word = peek_ident();
    if (word == "X") {
      pos_ += 1;
      p.op = PathOp::Next;
      p.right = literal();
      return p;
    }
    if (word == "F" || word == "G") {
      pos_ += 1;
      p.op = word == "F" ? PathOp::Until : PathOp::Release;
      p.left = word == "F" ? AtomLiteral::truth() : AtomLiteral::falsity();
      p.horizon = bound();
      p.right = literal();
      return p;
    }
    p.left = literal();
    const auto op_at = skip();
    const auto op = ident();
    if (op == "U") {
      p.op = PathOp::Until;
    } else if (op == "R") {
      p.op = PathOp::Release;
    } else {
      throw ParseError("expected 'U' or 'R'", op_at);
    }
    p.horizon = bound();
    p.right = literal();
    return p;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline std::string relation_text(Relation r) {
  switch (r) {
    case Relation::Less: return "<";
    case Relation::Greater: return ">";
    case Relation::LessEqual: return "<=";
    case Relation::GreaterEqual: return ">=";
  }
  return "?";
}

inline std::string literal_text(const AtomLiteral& l) { return (l.negated ? "!" : "") + l.atom; }

inline std::string bound_text(const PathTemplate& p) {
  return p.horizon ? "<=" + std::to_string(*p.horizon) : "";
}

}  // namespace detail

/// Parses `("Pmax"|"Pmin") REL NUMBER "(" PATH ")"`; the result is normalized.
inline Formula parse_formula(std::string_view text) { return detail::FormulaParser(text).parse(); }

inline std::string to_string(const PathTemplate& p) {
  using detail::bound_text;
  using detail::literal_text;
  switch (p.op) {
    case PathOp::Next: return "X " + literal_text(p.right);
    case PathOp::Until:
      if (p.left.is_true()) return "F" + bound_text(p) + " " + literal_text(p.right);
      return literal_text(p.left) + " U" + bound_text(p) + " " + literal_text(p.right);
    case PathOp::Release:
      if (p.left.is_false()) return "G" + bound_text(p) + " " + literal_text(p.right);
      return literal_text(p.left) + " R" + bound_text(p) + " " + literal_text(p.right);
  }
  return {};
}

/// Canonical text. With `as_written`, the relation is the one the user typed.
inline std::string to_string(const Formula& f, bool as_written = false) {
  return std::string(f.quantifier == Quantifier::Max ? "Pmax" : "Pmin") + " " +
         detail::relation_text(as_written ? f.written : f.relation) + " " +
         detail::format_number(f.threshold) + " (" + to_string(f.path) + ")";
}

/**
 * The complementary query used by the unbounded-horizon check:
 *   Pmax ~p (l1 U l2)  ->  Pmin ~1-p (!l1 R !l2)
 *   Pmax ~p (l1 R l2)  ->  Pmin ~1-p (!l1 U !l2)
 * and symmetrically for Pmin. The dual's value is 1 minus the original's,
 * so keeping the relation makes exactly one of the pair true.
 */
inline Formula negate_for_dual_check(const Formula& f) {
  if (f.path.op == PathOp::Next || f.path.horizon) {
    throw Error("dual check requires an unbounded Until or Release formula");
  }
  Formula g = f;
  g.quantifier = f.quantifier == Quantifier::Max ? Quantifier::Min : Quantifier::Max;
  g.threshold = 1.0 - f.threshold;
  g.path.op = f.path.op == PathOp::Until ? PathOp::Release : PathOp::Until;
  g.path.left = f.path.left.negation();
  g.path.right = f.path.right.negation();
  return normalize(g);
}

/// Atom names a formula refers to, builtins excluded.
inline std::vector<std::string> atoms_of(const Formula& f) {
  std::vector<std::string> out;
  for (const auto* l : {&f.path.left, &f.path.right}) {
    if (!l->is_builtin()) out.push_back(l->atom);
  }
  return out;
}

}  // namespace pctl_smc
