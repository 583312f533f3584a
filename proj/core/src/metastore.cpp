#include "casbench/metastore.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include "casbench/error.hpp"

namespace casbench {

Term Term::iri(std::string value) { return Term{Kind::iri, std::move(value), {}}; }
Term Term::literal(std::string value) { return Term{Kind::plain_literal, std::move(value), {}}; }
Term Term::typed(std::string value, std::string datatype) {
  return Term{Kind::typed_literal, std::move(value), std::move(datatype)};
}

std::string_view local_name(std::string_view iri) {
  const auto cut = iri.find_last_of("#/");
  return cut == std::string_view::npos ? iri : iri.substr(cut + 1);
}

bool TripleStore::insert(Triple triple) {
  if (!triple.subject.is_iri() || !triple.predicate.is_iri()) {
    throw Error(ErrorKind::validation, "triple subject and predicate must be IRIs");
  }
  if (positions_.contains(triple)) return false;
  const std::size_t index = triples_.size();
  by_subject_[triple.subject].push_back(index);
  by_predicate_[triple.predicate].push_back(index);
  by_object_[triple.object].push_back(index);
  positions_.emplace(triple, index);
  triples_.push_back(std::move(triple));
  return true;
}

void TripleStore::add_prefix(std::string prefix, std::string base) {
  prefixes_[std::move(prefix)] = std::move(base);
}

std::vector<const Triple*> TripleStore::match(const Term* subject, const Term* predicate,
                                              const Term* object) const {
  static const std::vector<std::size_t> kNone;
  const std::vector<std::size_t>* candidates = nullptr;
  const auto narrow = [&](const Index& index, const Term* key) {
    if (key == nullptr) return;
    const auto it = index.find(*key);
    const auto* list = it == index.end() ? &kNone : &it->second;
    if (candidates == nullptr || list->size() < candidates->size()) candidates = list;
  };
  narrow(by_subject_, subject);
  narrow(by_predicate_, predicate);
  narrow(by_object_, object);

  std::vector<const Triple*> out;
  const auto consider = [&](const Triple& t) {
    if ((subject == nullptr || t.subject == *subject) &&
        (predicate == nullptr || t.predicate == *predicate) &&
        (object == nullptr || t.object == *object)) {
      out.push_back(&t);
    }
  };
  if (candidates == nullptr) {
    for (const auto& t : triples_) consider(t);
  } else {
    for (std::size_t i : *candidates) consider(triples_[i]);
  }
  return out;
}

bool TripleStore::operator==(const TripleStore& other) const {
  if (size() != other.size() || prefixes_ != other.prefixes_) return false;
  return std::all_of(triples_.begin(), triples_.end(),
                     [&](const Triple& t) { return other.contains(t); });
}

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::less: return "<";
    case CompareOp::less_equal: return "<=";
    case CompareOp::equal: return "=";
    case CompareOp::greater_equal: return ">=";
    case CompareOp::greater: return ">";
  }
  return "?";
}

std::optional<std::int64_t> parse_integer_literal(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

namespace {

bool passes(const NumericFilter& f, const Term& value) {
  if (!value.is_literal()) return false;
  const auto n = parse_integer_literal(value.value);
  if (!n) return false;
  switch (f.op) {
    case CompareOp::less: return *n < f.constant;
    case CompareOp::less_equal: return *n <= f.constant;
    case CompareOp::equal: return *n == f.constant;
    case CompareOp::greater_equal: return *n >= f.constant;
    case CompareOp::greater: return *n > f.constant;
  }
  return false;
}

/// Resolves a slot against a partial binding: bound term or nullptr.
const Term* resolve(const PatternSlot& slot, const Binding& b) {
  if (const auto* t = std::get_if<Term>(&slot)) return t;
  const auto it = b.find(std::get<Variable>(slot).name);
  return it == b.end() ? nullptr : &it->second;
}

bool bind(const PatternSlot& slot, const Term& value, Binding& b) {
  const auto* var = std::get_if<Variable>(&slot);
  if (var == nullptr) return true;
  const auto [it, inserted] = b.emplace(var->name, value);
  return inserted || it->second == value;
}

}  // namespace

std::vector<std::string> pattern_variables(const std::vector<TriplePattern>& patterns) {
  std::vector<std::string> out;
  const auto note = [&](const PatternSlot& s) {
    if (const auto* v = std::get_if<Variable>(&s)) {
      if (std::find(out.begin(), out.end(), v->name) == out.end()) out.push_back(v->name);
    }
  };
  for (const auto& p : patterns) {
    note(p.subject);
    note(p.predicate);
    note(p.object);
  }
  return out;
}

std::vector<Binding> query(const TripleStore& store, const std::vector<TriplePattern>& patterns,
                           const std::vector<NumericFilter>& filters) {
  if (patterns.empty()) throw Error(ErrorKind::query, "query needs at least one pattern");
  const auto vars = pattern_variables(patterns);
  for (const auto& f : filters) {
    if (std::find(vars.begin(), vars.end(), f.variable) == vars.end()) {
      throw Error(ErrorKind::query, "filter references unknown variable ?" + f.variable);
    }
  }

  std::vector<Binding> bindings{Binding{}};
  for (const auto& pattern : patterns) {
    std::vector<Binding> next;
    for (const auto& b : bindings) {
      const auto matches = store.match(resolve(pattern.subject, b), resolve(pattern.predicate, b),
                                       resolve(pattern.object, b));
      for (const Triple* t : matches) {
        Binding extended = b;
        if (bind(pattern.subject, t->subject, extended) &&
            bind(pattern.predicate, t->predicate, extended) &&
            bind(pattern.object, t->object, extended)) {
          next.push_back(std::move(extended));
        }
      }
    }
    bindings = std::move(next);
    if (bindings.empty()) break;
  }

  std::erase_if(bindings, [&](const Binding& b) {
    return !std::all_of(filters.begin(), filters.end(),
                        [&](const NumericFilter& f) { return passes(f, b.at(f.variable)); });
  });
  std::sort(bindings.begin(), bindings.end());
  return bindings;
}

namespace {

std::set<Term> subjects_typed(const TripleStore& store, const Term& cls) {
  const Term type = Term::iri(std::string(kRdfType));
  std::set<Term> out;
  for (const Triple* t : store.match(nullptr, &type, &cls)) out.insert(t->subject);
  return out;
}

}  // namespace

std::vector<Term> missing_predicate(const TripleStore& store, const Term& cls, const Term& predicate) {
  std::vector<Term> out;
  for (const auto& s : subjects_typed(store, cls)) {
    if (store.match(&s, &predicate, nullptr).empty()) out.push_back(s);
  }
  return out;
}

std::vector<Term> class_difference(const TripleStore& store, const Term& c1, const Term& c2) {
  const auto second = subjects_typed(store, c2);
  std::vector<Term> out;
  for (const auto& s : subjects_typed(store, c1)) {
    if (!second.contains(s)) out.push_back(s);
  }
  return out;
}

NumericFilter parse_filter(std::string_view text) {
  const auto fail = [&](const std::string& why) -> NumericFilter {
    throw Error(ErrorKind::query, "filter '" + std::string(text) + "': " + why);
  };
  std::size_t i = 0;
  const auto skip = [&] {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  };
  skip();
  if (i < text.size() && (text[i] == '?' || text[i] == '$')) ++i;
  const std::size_t start = i;
  while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) ++i;
  if (start == i) return fail("expected variable name");
  NumericFilter f;
  f.variable = std::string(text.substr(start, i - start));
  skip();
  const auto rest = text.substr(i);
  const auto take = [&](std::string_view op, CompareOp value) {
    if (rest.substr(0, op.size()) == op) {
      f.op = value;
      i += op.size();
      return true;
    }
    return false;
  };
  if (!(take("<=", CompareOp::less_equal) || take(">=", CompareOp::greater_equal) ||
        take("==", CompareOp::equal) || take("<", CompareOp::less) ||
        take(">", CompareOp::greater) || take("=", CompareOp::equal))) {
    return fail("expected one of < <= = >= >");
  }
  skip();
  std::size_t end = text.size();
  while (end > i && (text[end - 1] == ' ' || text[end - 1] == '\t')) --end;
  const auto n = parse_integer_literal(text.substr(i, end - i));
  if (!n) return fail("expected integer constant");
  f.constant = *n;
  return f;
}

}  // namespace casbench
