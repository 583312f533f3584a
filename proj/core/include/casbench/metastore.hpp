#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace casbench {

inline constexpr std::string_view kRdfType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
inline constexpr std::string_view kXsdInteger = "http://www.w3.org/2001/XMLSchema#integer";
inline constexpr std::string_view kXsdDecimal = "http://www.w3.org/2001/XMLSchema#decimal";
inline constexpr std::string_view kXsdBoolean = "http://www.w3.org/2001/XMLSchema#boolean";

/// An RDF term. `datatype` is non-empty exactly for typed literals.
struct Term {
  enum class Kind { iri, plain_literal, typed_literal };

  Kind kind = Kind::iri;
  std::string value;
  std::string datatype;

  static Term iri(std::string value);
  static Term literal(std::string value);
  static Term typed(std::string value, std::string datatype);

  bool is_iri() const noexcept { return kind == Kind::iri; }
  bool is_literal() const noexcept { return kind != Kind::iri; }

  auto operator<=>(const Term&) const = default;
};

/// Turtle/N-Triples style rendering: <iri>, "lit", "lit"^^<type>.
std::string to_turtle(const Term& term);

/// Text after the last '#' or '/' of an IRI.
std::string_view local_name(std::string_view iri);

struct Triple {
  Term subject;
  Term predicate;
  Term object;

  auto operator<=>(const Triple&) const = default;
};

/// In-memory triplestore with set semantics and subject/predicate/object
/// indexes. Immutable once built; concurrent const access is safe.
class TripleStore {
 public:
  /// Adds a triple; returns false for a duplicate. Subject and predicate
  /// must be IRIs (Error{validation} otherwise).
  bool insert(Triple triple);

  void add_prefix(std::string prefix, std::string base);
  const std::map<std::string, std::string>& prefixes() const noexcept { return prefixes_; }

  std::size_t size() const noexcept { return triples_.size(); }
  bool empty() const noexcept { return triples_.empty(); }
  bool contains(const Triple& t) const { return positions_.contains(t); }

  /// Insertion order.
  const std::vector<Triple>& triples() const noexcept { return triples_; }

  /// Triples matching the bound slots (nullptr = wildcard), insertion order.
  std::vector<const Triple*> match(const Term* subject, const Term* predicate,
                                   const Term* object) const;

  /// Equal triple sets and equal prefix maps.
  bool operator==(const TripleStore& other) const;

 private:
  using Index = std::map<Term, std::vector<std::size_t>>;

  std::vector<Triple> triples_;
  std::map<Triple, std::size_t> positions_;
  Index by_subject_;
  Index by_predicate_;
  Index by_object_;
  std::map<std::string, std::string> prefixes_;
};

/// Parses the supported Turtle subset: @prefix/PREFIX, <iri>, prefix:name,
/// `a`, plain and ^^-typed string literals, bare integers/decimals/booleans,
/// `;` and `,` continuations. Blank nodes, collections, language tags and
/// long (triple-quoted) literals are rejected with Error{parse}. Undeclared
/// prefixes raise Error{resolution}.
TripleStore parse_turtle(std::string_view text);

/// Emits @prefix lines then every triple with full IRIs, grouped by subject.
/// parse_turtle(serialize_turtle(s)) == s.
std::string serialize_turtle(const TripleStore& store);

struct Variable {
  std::string name;
  auto operator<=>(const Variable&) const = default;
};

using PatternSlot = std::variant<Term, Variable>;

struct TriplePattern {
  PatternSlot subject;
  PatternSlot predicate;
  PatternSlot object;
};

enum class CompareOp { less, less_equal, equal, greater_equal, greater };

std::string_view to_string(CompareOp op);

/// `variable OP constant`, evaluated on literals whose lexical form is an
/// integer. Bindings whose value is not such a literal are dropped.
struct NumericFilter {
  std::string variable;
  CompareOp op = CompareOp::equal;
  std::int64_t constant = 0;
};

using Binding = std::map<std::string, Term>;

/// Conjunctive join of all patterns, then filters. Results are sorted by
/// binding values (variables in name order). Throws Error{query} for an
/// empty pattern list or a filter over a variable no pattern mentions.
std::vector<Binding> query(const TripleStore& store, const std::vector<TriplePattern>& patterns,
                           const std::vector<NumericFilter>& filters = {});

/// Subjects typed `cls` that have no triple with `predicate`; sorted.
std::vector<Term> missing_predicate(const TripleStore& store, const Term& cls, const Term& predicate);

/// Subjects typed `c1` and not typed `c2`; sorted.
std::vector<Term> class_difference(const TripleStore& store, const Term& c1, const Term& c2);

/// Parses "?s sd:hasDegree ?d" (optional trailing '.') against the
/// store's prefixes. Variables are written ?name or $name.
TriplePattern parse_pattern(std::string_view text, const std::map<std::string, std::string>& prefixes);

/// Parses "?d <= 36" (the leading '?' is optional).
NumericFilter parse_filter(std::string_view text);

/// Variables in order of first appearance across the patterns.
std::vector<std::string> pattern_variables(const std::vector<TriplePattern>& patterns);

/// Parses an integer lexical form (optional sign, digits only).
std::optional<std::int64_t> parse_integer_literal(std::string_view text);

}  // namespace casbench
