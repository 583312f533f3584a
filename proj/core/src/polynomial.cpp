#include "casbench/polynomial.hpp"

#include <algorithm>
#include <charconv>

#include "casbench/error.hpp"

namespace casbench {

PolyExpr PolyExpr::variable(std::string name) {
  PolyExpr e;
  e.kind = Kind::variable;
  e.token = std::move(name);
  return e;
}

PolyExpr PolyExpr::integer(std::string digits) {
  PolyExpr e;
  e.kind = Kind::integer;
  e.token = std::move(digits);
  return e;
}

PolyExpr PolyExpr::power(PolyExpr base, std::uint64_t exponent) {
  PolyExpr e;
  e.kind = Kind::power;
  e.exponent = exponent;
  e.operands.push_back(std::move(base));
  return e;
}

namespace {

bool is_alpha(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  PolyExpr parse() {
    skip_ws();
    if (pos_ == text_.size()) fail("empty polynomial");
    PolyExpr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail(std::string("unexpected '") + text_[pos_] + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    SourcePosition p;
    p.offset = pos_;
    throw Error(ErrorKind::parse, "polynomial: " + what + " at offset " + std::to_string(pos_), p);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  PolyExpr expr() {
    PolyExpr sum;
    sum.kind = PolyExpr::Kind::sum;
    const bool leading_minus = accept('-');
    sum.operands.push_back(term());
    sum.negated.push_back(leading_minus);
    while (true) {
      if (accept('+')) {
        sum.operands.push_back(term());
        sum.negated.push_back(false);
      } else if (accept('-')) {
        sum.operands.push_back(term());
        sum.negated.push_back(true);
      } else {
        break;
      }
    }
    if (sum.operands.size() == 1 && !sum.negated.front()) return std::move(sum.operands.front());
    return sum;
  }

  PolyExpr term() {
    PolyExpr prod;
    prod.kind = PolyExpr::Kind::product;
    prod.operands.push_back(factor());
    while (accept('*')) prod.operands.push_back(factor());
    if (prod.operands.size() == 1) return std::move(prod.operands.front());
    return prod;
  }

  PolyExpr factor() {
    PolyExpr b = base();
    if (accept('^')) {
      skip_ws();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
      if (start == pos_) fail("expected exponent");
      std::uint64_t value = 0;
      const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
      if (ec != std::errc{}) {
        pos_ = start;
        fail("exponent out of range");
      }
      return PolyExpr::power(std::move(b), value);
    }
    return b;
  }

  PolyExpr base() {
    skip_ws();
    if (pos_ == text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      PolyExpr inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (is_digit(c)) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
      return PolyExpr::integer(std::string(text_.substr(start, pos_ - start)));
    }
    if (is_alpha(c)) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && (is_alpha(text_[pos_]) || is_digit(text_[pos_]))) ++pos_;
      return PolyExpr::variable(std::string(text_.substr(start, pos_ - start)));
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void collect(const PolyExpr& e, std::vector<std::string>& out) {
  if (e.kind == PolyExpr::Kind::variable) {
    if (std::find(out.begin(), out.end(), e.token) == out.end()) out.push_back(e.token);
    return;
  }
  for (const auto& o : e.operands) collect(o, out);
}

void emit(const PolyExpr& e, std::string& out);

void emit_wrapped(const PolyExpr& e, bool wrap, std::string& out) {
  if (wrap) out += '(';
  emit(e, out);
  if (wrap) out += ')';
}

void emit(const PolyExpr& e, std::string& out) {
  using K = PolyExpr::Kind;
  switch (e.kind) {
    case K::variable:
    case K::integer:
      out += e.token;
      return;
    case K::power: {
      const auto& b = e.operands.front();
      emit_wrapped(b, b.kind != K::variable && b.kind != K::integer, out);
      out += '^';
      out += std::to_string(e.exponent);
      return;
    }
    case K::product:
      for (std::size_t i = 0; i < e.operands.size(); ++i) {
        if (i > 0) out += '*';
        const auto& f = e.operands[i];
        emit_wrapped(f, f.kind == K::sum || f.kind == K::product, out);
      }
      return;
    case K::sum:
      for (std::size_t i = 0; i < e.operands.size(); ++i) {
        if (e.negated[i]) out += '-'; else if (i > 0) out += '+';
        const auto& t = e.operands[i];
        emit_wrapped(t, t.kind == K::sum, out);
      }
      return;
  }
}

void describe_into(const PolyExpr& e, std::string& out) {
  using K = PolyExpr::Kind;
  switch (e.kind) {
    case K::variable:
    case K::integer:
      out += e.token;
      return;
    case K::power:
      out += "power(";
      describe_into(e.operands.front(), out);
      out += "," + std::to_string(e.exponent) + ")";
      return;
    case K::product:
    case K::sum:
      out += e.kind == K::sum ? "sum(" : "product(";
      for (std::size_t i = 0; i < e.operands.size(); ++i) {
        if (i > 0) out += ',';
        if (e.kind == K::sum && e.negated[i]) out += '-';
        describe_into(e.operands[i], out);
      }
      out += ')';
      return;
  }
}

}  // namespace

PolyExpr parse_polynomial_unchecked(std::string_view text) { return Parser(text).parse(); }

PolyExpr parse_polynomial(std::string_view text, std::span<const std::string> variables) {
  PolyExpr e = parse_polynomial_unchecked(text);
  for (const auto& id : identifiers(e)) {
    if (std::find(variables.begin(), variables.end(), id) == variables.end()) {
      throw Error(ErrorKind::validation, "undeclared variable '" + id + "' in polynomial");
    }
  }
  return e;
}

std::string to_string(const PolyExpr& expr) {
  std::string out;
  emit(expr, out);
  return out;
}

std::string describe(const PolyExpr& expr) {
  std::string out;
  describe_into(expr, out);
  return out;
}

std::vector<std::string> identifiers(const PolyExpr& expr) {
  std::vector<std::string> out;
  collect(expr, out);
  return out;
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !is_alpha(s.front())) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return is_alpha(c) || is_digit(c); });
}

}  // namespace casbench
