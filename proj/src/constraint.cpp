#include "belief_tuner/constraint.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace belief_tuner {
namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Recursive-descent reader over the constraint grammar.  Each reader method
// skips leading whitespace and reports the offset of what it found.
class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ == text_.size();
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  void expect(std::string_view token) {
    skip_ws();
    if (text_.substr(pos_, token.size()) != token) {
      fail("expected '" + std::string(token) + "'");
    }
    pos_ += token.size();
  }

  bool accept(std::string_view token) {
    skip_ws();
    if (text_.substr(pos_, token.size()) != token) return false;
    pos_ += token.size();
    return true;
  }

  std::string ident() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    if (pos_ == start) fail("expected a name");
    return std::string(text_.substr(start, pos_ - start));
  }

  Event probability_term() {
    expect("P");
    expect("(");
    Event e;
    e.variable = ident();
    expect("=");
    e.state = ident();
    expect(")");
    return e;
  }

  double number() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) ++pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
            text_[pos_] == 'e' || text_[pos_] == 'E' ||
            ((text_[pos_] == '-' || text_[pos_] == '+') &&
             (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E')))) {
      ++pos_;
    }
    std::string_view lit = text_.substr(start, pos_ - start);
    if (!lit.empty() && lit.front() == '+') lit.remove_prefix(1);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(lit.data(), lit.data() + lit.size(), value);
    if (lit.empty() || ec != std::errc() || end != lit.data() + lit.size()) {
      pos_ = start;
      fail("expected a number");
    }
    return value;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("constraint: " + what, pos_);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Constraint parse_constraint(std::string_view text) {
  Reader in(text);
  Constraint c;
  c.y = in.probability_term();

  switch (in.peek()) {
    case '-':
      in.expect("-");
      c.kind = ConstraintKind::Difference;
      c.z = in.probability_term();
      in.expect(">=");
      break;
    case '/':
      in.expect("/");
      c.kind = ConstraintKind::Ratio;
      c.z = in.probability_term();
      in.expect(">=");
      break;
    default:
      if (in.accept(">=")) {
        c.kind = ConstraintKind::AtLeast;
      } else if (in.accept("<=")) {
        c.kind = ConstraintKind::AtMost;
      } else {
        in.fail("expected '>=', '<=', '-' or '/'");
      }
  }
  c.epsilon = in.number();
  if (!in.at_end()) in.fail("unexpected trailing input");
  return c;
}

std::string to_string(const Constraint& c) {
  std::ostringstream out;
  out.precision(17);
  out << "P(" << to_string(c.y) << ")";
  switch (c.kind) {
    case ConstraintKind::Difference: out << " - P(" << to_string(*c.z) << ") >= "; break;
    case ConstraintKind::Ratio: out << " / P(" << to_string(*c.z) << ") >= "; break;
    case ConstraintKind::AtLeast: out << " >= "; break;
    case ConstraintKind::AtMost: out << " <= "; break;
  }
  out << c.epsilon;
  return out.str();
}

void validate(const Network& n, const Evidence& e, const Constraint& c) {
  resolve(n, e);
  auto check_event = [&](const Event& ev) {
    n.state_index(n.index_of(ev.variable), ev.state);
    if (e.count(ev.variable)) {
      throw ValidationError("query variable '" + ev.variable + "' is part of the evidence");
    }
  };
  check_event(c.y);
  const bool binary_form = c.kind == ConstraintKind::Difference || c.kind == ConstraintKind::Ratio;
  if (binary_form != c.z.has_value()) {
    throw ValidationError("constraint kind and number of events disagree");
  }
  if (c.z) check_event(*c.z);
  if (!std::isfinite(c.epsilon)) throw ValidationError("constraint threshold must be finite");
  if (c.kind == ConstraintKind::Ratio && !(c.epsilon > 0.0)) {
    throw ValidationError("ratio constraint needs a positive threshold");
  }
}

Event parse_event(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw ParseError("expected VAR=STATE", 0);
  const auto var = trim(text.substr(0, eq));
  const auto state = trim(text.substr(eq + 1));
  if (var.empty()) throw ParseError("missing variable name", 0);
  if (state.empty() || state.find('=') != std::string_view::npos) {
    throw ParseError("bad state for '" + std::string(var) + "'", eq + 1);
  }
  return Event{std::string(var), std::string(state)};
}

Evidence parse_evidence(std::string_view text) {
  Evidence out;
  std::size_t start = 0;
  const bool blank = text.find_first_not_of(" \t") == std::string_view::npos;
  if (blank) return out;
  while (start <= text.size()) {
    const auto comma = std::min(text.find(',', start), text.size());
    Event ev;
    try {
      ev = parse_event(text.substr(start, comma - start));
    } catch (const ParseError& e) {
      throw ParseError("evidence: " + e.message(), start + e.position());
    }
    if (!out.emplace(ev.variable, ev.state).second) {
      throw ParseError("evidence: variable '" + ev.variable + "' given twice", start);
    }
    start = comma + 1;
  }
  return out;
}

}  // namespace belief_tuner
