#include <algorithm>
#include <cstdint>

#include "casbench/error.hpp"
#include "casbench/metastore.hpp"

namespace casbench {

namespace {

bool is_alpha(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_pn_char(char c) {
  return is_alpha(c) || is_digit(c) || c == '_' || c == '-' || c == '.' ||
         static_cast<unsigned char>(c) >= 0x80;
}

enum class Tok {
  end,
  iri,        // <...>
  pname,      // prefix:local   (text = prefix, aux = local)
  literal,    // "..."          (text = lexical form)
  number,     // bare integer/decimal (aux = datatype)
  boolean,
  keyword_a,
  prefix_at,  // @prefix
  prefix_kw,  // PREFIX
  variable,   // ?x / $x
  dot,
  semicolon,
  comma,
  datatype_mark,  // ^^
};

struct Token {
  Tok kind = Tok::end;
  std::string text;
  std::string aux;
  std::size_t offset = 0;
};

class Lexer {
 public:
  Lexer(std::string_view text, bool allow_variables)
      : text_(text), allow_variables_(allow_variables) {}

  Token next() {
    skip_space_and_comments();
    Token t;
    t.offset = pos_;
    if (pos_ >= text_.size()) return t;
    const char c = text_[pos_];
    if (c == '<') return lex_iri(t);
    if (c == '"' || c == '\'') return lex_string(t);
    if (c == '.' && !(pos_ + 1 < text_.size() && is_digit(text_[pos_ + 1]))) {
      ++pos_;
      t.kind = Tok::dot;
      return t;
    }
    if (c == ';') {
      ++pos_;
      t.kind = Tok::semicolon;
      return t;
    }
    if (c == ',') {
      ++pos_;
      t.kind = Tok::comma;
      return t;
    }
    if (c == '^') {
      if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '^') {
        pos_ += 2;
        t.kind = Tok::datatype_mark;
        return t;
      }
      fail("expected '^^'");
    }
    if (c == '@') {
      if (text_.substr(pos_, 7) == "@prefix") {
        pos_ += 7;
        t.kind = Tok::prefix_at;
        return t;
      }
      if (text_.substr(pos_, 5) == "@base") fail("@base is not supported");
      fail("language-tagged literals are not supported");
    }
    if (c == '_' && pos_ + 1 < text_.size() && text_[pos_ + 1] == ':') {
      fail("blank nodes are not supported");
    }
    if (c == '[' || c == ']') fail("blank nodes are not supported");
    if (c == '(' || c == ')') fail("collections are not supported");
    if ((c == '?' || c == '$') && allow_variables_) {
      ++pos_;
      const std::size_t start = pos_;
      while (pos_ < text_.size() && (is_alpha(text_[pos_]) || is_digit(text_[pos_]) || text_[pos_] == '_')) {
        ++pos_;
      }
      if (start == pos_) fail("empty variable name");
      t.kind = Tok::variable;
      t.text = std::string(text_.substr(start, pos_ - start));
      return t;
    }
    if (is_digit(c) || ((c == '+' || c == '-' || c == '.') && pos_ + 1 < text_.size() &&
                        (is_digit(text_[pos_ + 1]) || text_[pos_ + 1] == '.'))) {
      return lex_number(t);
    }
    if (is_alpha(c) || c == ':' || c == '_' || static_cast<unsigned char>(c) >= 0x80) {
      return lex_name(t);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  [[noreturn]] void fail(const std::string& what) const { fail_at(pos_, what); }

  [[noreturn]] void fail_at(std::size_t offset, const std::string& what,
                            ErrorKind kind = ErrorKind::parse) const {
    SourcePosition p;
    p.offset = offset;
    p.line = 1;
    std::size_t line_start = 0;
    for (std::size_t i = 0; i < offset && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++p.line;
        line_start = i + 1;
      }
    }
    p.column = offset - line_start + 1;
    throw Error(kind, "turtle: " + what, p);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  Token lex_iri(Token& t) {
    ++pos_;
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '>') {
      const char c = text_[pos_];
      if (c == ' ' || c == '\n' || c == '<' || c == '"' || c == '{' || c == '}') {
        fail("invalid character in IRI");
      }
      ++pos_;
    }
    if (pos_ >= text_.size()) fail_at(t.offset, "unterminated IRI");
    t.kind = Tok::iri;
    t.text = std::string(text_.substr(start, pos_ - start));
    ++pos_;
    return t;
  }

  static void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  Token lex_string(Token& t) {
    const char quote = text_[pos_];
    if (text_.substr(pos_, 3) == std::string(3, quote)) {
      fail("multi-line (triple-quoted) literals are not supported");
    }
    ++pos_;
    std::string value;
    while (true) {
      if (pos_ >= text_.size()) fail_at(t.offset, "unterminated string literal");
      const char c = text_[pos_];
      if (c == quote) {
        ++pos_;
        break;
      }
      if (c == '\n' || c == '\r') fail("line break inside string literal");
      if (c == '\\') {
        if (pos_ + 1 >= text_.size()) fail("dangling escape");
        const char e = text_[pos_ + 1];
        pos_ += 2;
        switch (e) {
          case 't': value += '\t'; break;
          case 'n': value += '\n'; break;
          case 'r': value += '\r'; break;
          case 'b': value += '\b'; break;
          case 'f': value += '\f'; break;
          case '"': value += '"'; break;
          case '\'': value += '\''; break;
          case '\\': value += '\\'; break;
          case 'u':
          case 'U': {
            const std::size_t n = e == 'u' ? 4 : 8;
            if (pos_ + n > text_.size()) fail("truncated unicode escape");
            std::uint32_t cp = 0;
            for (std::size_t i = 0; i < n; ++i) {
              const char h = text_[pos_ + i];
              cp <<= 4;
              if (is_digit(h)) cp |= static_cast<std::uint32_t>(h - '0');
              else if (h >= 'a' && h <= 'f') cp |= static_cast<std::uint32_t>(h - 'a' + 10);
              else if (h >= 'A' && h <= 'F') cp |= static_cast<std::uint32_t>(h - 'A' + 10);
              else fail("invalid unicode escape");
            }
            pos_ += n;
            append_utf8(value, cp);
            break;
          }
          default:
            fail(std::string("unknown escape '\\") + e + "'");
        }
        continue;
      }
      value += c;
      ++pos_;
    }
    t.kind = Tok::literal;
    t.text = std::move(value);
    return t;
  }

  Token lex_number(Token& t) {
    const std::size_t start = pos_;
    if (text_[pos_] == '+' || text_[pos_] == '-') ++pos_;
    bool dot = false;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (is_digit(c)) {
        ++pos_;
      } else if (c == '.' && !dot && pos_ + 1 < text_.size() && is_digit(text_[pos_ + 1])) {
        dot = true;
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      fail("exponent notation is not supported");
    }
    t.kind = Tok::number;
    t.text = std::string(text_.substr(start, pos_ - start));
    t.aux = std::string(dot ? kXsdDecimal : kXsdInteger);
    return t;
  }

  Token lex_name(Token& t) {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ':' && is_pn_char(text_[pos_])) ++pos_;
    if (pos_ >= text_.size() || text_[pos_] != ':') {
      while (pos_ > start && text_[pos_ - 1] == '.') --pos_;
    }
    std::string prefix(text_.substr(start, pos_ - start));
    if (pos_ >= text_.size() || text_[pos_] != ':') {
      if (prefix == "a") {
        t.kind = Tok::keyword_a;
        return t;
      }
      if (prefix == "true" || prefix == "false") {
        t.kind = Tok::boolean;
        t.text = prefix;
        return t;
      }
      if (prefix == "PREFIX" || prefix == "prefix") {
        t.kind = Tok::prefix_kw;
        return t;
      }
      fail_at(start, "unexpected name '" + prefix + "'");
    }
    if (!prefix.empty() && prefix.back() == '.') fail_at(start, "prefix may not end with '.'");
    ++pos_;  // ':'
    const std::size_t local_start = pos_;
    while (pos_ < text_.size() && (is_pn_char(text_[pos_]) || text_[pos_] == ':' || text_[pos_] == '%')) {
      ++pos_;
    }
    while (pos_ > local_start && text_[pos_ - 1] == '.') --pos_;
    t.kind = Tok::pname;
    t.text = std::move(prefix);
    t.aux = std::string(text_.substr(local_start, pos_ - local_start));
    return t;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  bool allow_variables_;
};

bool is_absolute_iri(std::string_view iri) {
  if (iri.empty() || !is_alpha(iri.front())) return false;
  for (char c : iri) {
    if (c == ':') return true;
    if (!(is_alpha(c) || is_digit(c) || c == '+' || c == '-' || c == '.')) return false;
  }
  return false;
}

/// Shared term grammar for documents and query patterns.
class TermReader {
 public:
  TermReader(Lexer& lex, const std::map<std::string, std::string>& prefixes)
      : lex_(lex), prefixes_(prefixes) {}

  Term iri_from(const Token& t) const {
    if (t.kind == Tok::iri) {
      if (!is_absolute_iri(t.text)) lex_.fail_at(t.offset, "relative IRI <" + t.text + "> (no @base support)");
      return Term::iri(t.text);
    }
    if (t.kind == Tok::pname) {
      const auto it = prefixes_.find(t.text);
      if (it == prefixes_.end()) {
        lex_.fail_at(t.offset, "undeclared prefix '" + t.text + ":'", ErrorKind::resolution);
      }
      return Term::iri(it->second + t.aux);
    }
    if (t.kind == Tok::keyword_a) return Term::iri(std::string(kRdfType));
    lex_.fail_at(t.offset, "expected an IRI");
  }

  /// Reads a literal whose first token is `t`; may consume a ^^ suffix.
  Term literal_from(const Token& t, Token& lookahead) {
    if (t.kind == Tok::number) return Term::typed(t.text, t.aux);
    if (t.kind == Tok::boolean) return Term::typed(t.text, std::string(kXsdBoolean));
    lookahead = lex_.next();
    if (lookahead.kind == Tok::datatype_mark) {
      const Token dt = lex_.next();
      if (dt.kind == Tok::keyword_a) lex_.fail_at(dt.offset, "expected datatype IRI");
      Term type = iri_from(dt);
      lookahead = lex_.next();
      return Term::typed(t.text, type.value);
    }
    return Term::literal(t.text);
  }

 private:
  Lexer& lex_;
  const std::map<std::string, std::string>& prefixes_;
};

class TurtleParser {
 public:
  explicit TurtleParser(std::string_view text) : lex_(text, false), reader_(lex_, prefixes_) {}

  TripleStore parse() {
    advance();
    while (tok_.kind != Tok::end) {
      if (tok_.kind == Tok::prefix_at || tok_.kind == Tok::prefix_kw) {
        directive();
      } else {
        triples();
      }
    }
    for (const auto& [p, base] : prefixes_) store_.add_prefix(p, base);
    return std::move(store_);
  }

 private:
  void advance() { tok_ = lex_.next(); }

  void expect(Tok kind, const char* what) {
    if (tok_.kind != kind) lex_.fail_at(tok_.offset, std::string("expected ") + what);
    advance();
  }

  void directive() {
    const bool sparql_style = tok_.kind == Tok::prefix_kw;
    advance();
    if (tok_.kind != Tok::pname || !tok_.aux.empty()) lex_.fail_at(tok_.offset, "expected prefix name 'p:'");
    std::string name = tok_.text;
    advance();
    if (tok_.kind != Tok::iri) lex_.fail_at(tok_.offset, "expected <iri> after prefix name");
    if (!is_absolute_iri(tok_.text)) lex_.fail_at(tok_.offset, "prefix IRI must be absolute");
    prefixes_[name] = tok_.text;
    advance();
    if (!sparql_style) expect(Tok::dot, "'.' after @prefix");
  }

  void triples() {
    if (tok_.kind != Tok::iri && tok_.kind != Tok::pname) lex_.fail_at(tok_.offset, "expected subject IRI");
    const Term subject = reader_.iri_from(tok_);
    advance();
    while (true) {
      if (tok_.kind != Tok::iri && tok_.kind != Tok::pname && tok_.kind != Tok::keyword_a) {
        lex_.fail_at(tok_.offset, "expected predicate");
      }
      const Term predicate = reader_.iri_from(tok_);
      advance();
      while (true) {
        Term object = read_object();
        store_.insert(Triple{subject, predicate, std::move(object)});
        if (tok_.kind != Tok::comma) break;
        advance();
      }
      if (tok_.kind == Tok::semicolon) {
        while (tok_.kind == Tok::semicolon) advance();
        if (tok_.kind == Tok::dot) break;
        continue;
      }
      break;
    }
    expect(Tok::dot, "'.' or ';' after object");
  }

  Term read_object() {
    const Token t = tok_;
    switch (t.kind) {
      case Tok::iri:
      case Tok::pname: {
        Term term = reader_.iri_from(t);
        advance();
        return term;
      }
      case Tok::literal:
        return reader_.literal_from(t, tok_);
      case Tok::number:
      case Tok::boolean: {
        Term term = reader_.literal_from(t, tok_);
        advance();
        return term;
      }
      case Tok::end:
        lex_.fail_at(t.offset, "unexpected end of input, expected object");
      default:
        lex_.fail_at(t.offset, "expected object");
    }
  }

  Lexer lex_;
  std::map<std::string, std::string> prefixes_;
  TermReader reader_;
  TripleStore store_;
  Token tok_;
};

std::string escape_literal(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string to_turtle(const Term& term) {
  switch (term.kind) {
    case Term::Kind::iri: return "<" + term.value + ">";
    case Term::Kind::plain_literal: return "\"" + escape_literal(term.value) + "\"";
    case Term::Kind::typed_literal:
      return "\"" + escape_literal(term.value) + "\"^^<" + term.datatype + ">";
  }
  return {};
}

TripleStore parse_turtle(std::string_view text) { return TurtleParser(text).parse(); }

std::string serialize_turtle(const TripleStore& store) {
  std::string out;
  for (const auto& [prefix, base] : store.prefixes()) {
    out += "@prefix " + prefix + ": <" + base + "> .\n";
  }
  if (!store.prefixes().empty() && !store.empty()) out += '\n';
  std::vector<Triple> sorted = store.triples();
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const Triple& t = sorted[i];
    const bool first = i == 0 || sorted[i - 1].subject != t.subject;
    const bool last = i + 1 == sorted.size() || sorted[i + 1].subject != t.subject;
    if (first) out += to_turtle(t.subject) + "\n";
    out += "    " + to_turtle(t.predicate) + " " + to_turtle(t.object) + (last ? " .\n" : " ;\n");
  }
  return out;
}

TriplePattern parse_pattern(std::string_view text, const std::map<std::string, std::string>& prefixes) {
  Lexer lex(text, true);
  TermReader reader(lex, prefixes);
  std::vector<PatternSlot> slots;
  Token t = lex.next();
  while (t.kind != Tok::end && t.kind != Tok::dot) {
    if (slots.size() == 3) lex.fail_at(t.offset, "pattern has more than three terms");
    switch (t.kind) {
      case Tok::variable:
        slots.emplace_back(Variable{t.text});
        t = lex.next();
        break;
      case Tok::iri:
      case Tok::pname:
      case Tok::keyword_a:
        slots.emplace_back(reader.iri_from(t));
        t = lex.next();
        break;
      case Tok::literal: {
        Token lookahead;
        slots.emplace_back(reader.literal_from(t, lookahead));
        t = lookahead;
        break;
      }
      case Tok::number:
      case Tok::boolean: {
        Token unused;
        slots.emplace_back(reader.literal_from(t, unused));
        t = lex.next();
        break;
      }
      default:
        lex.fail_at(t.offset, "unexpected token in pattern");
    }
  }
  if (t.kind == Tok::dot && lex.next().kind != Tok::end) lex.fail_at(t.offset, "trailing input after '.'");
  if (slots.size() != 3) {
    throw Error(ErrorKind::query, "pattern '" + std::string(text) + "' must have exactly three terms");
  }
  const auto check_iri_slot = [&](const PatternSlot& s, const char* which) {
    if (const auto* term = std::get_if<Term>(&s); term && !term->is_iri()) {
      throw Error(ErrorKind::query, std::string("pattern ") + which + " must be an IRI or variable");
    }
  };
  check_iri_slot(slots[0], "subject");
  check_iri_slot(slots[1], "predicate");
  return TriplePattern{slots[0], slots[1], slots[2]};
}

}  // namespace casbench
