// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference evaluator for the SPARQL subset. It shares nothing
// with the executor beyond the AST and the literal comparison primitives:
// every variable ranges over every term that occurs anywhere in the graph,
// and a full assignment is kept iff each pattern is literally a member of the
// triple set and every filter holds.
#pragma once

#include <algorithm>
#include <array>
#include <tuple>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kgqa/graph.hpp"
#include "kgqa/sparql.hpp"

namespace kgqa::oracle {

class BgpOracle {
 public:
  explicit BgpOracle(const KnowledgeGraph& graph) {
    for (const auto& t : graph.triples()) {
      Value s = t.subject, p = EntityId{t.predicate};
      facts_.insert({key(s), key(p), key(t.object)});
      for (const Value* v : std::array<const Value*, 3>{&s, &p, &t.object}) domain_.emplace(key(*v), *v);
    }
  }

  /// Multiset of result rows, in the order the query semantics prescribe.
  sparql::ResultTable run(const sparql::Query& q) const {
    std::vector<std::string> vars;
    for (const auto& tp : q.patterns) {
      for (const auto* pt : {&tp.subject, &tp.predicate, &tp.object}) {
        if (const auto* v = std::get_if<sparql::Variable>(pt)) {
          if (std::find(vars.begin(), vars.end(), v->name) == vars.end()) vars.push_back(v->name);
        }
      }
    }
    std::vector<std::map<std::string, Value>> solutions;
    std::map<std::string, Value> assignment;
    enumerate(q, vars, 0, assignment, solutions);
    return shape(q, solutions);
  }

 private:
  using Key = std::pair<int, std::string>;

  static Key key(const Value& v) {
    if (const auto* e = std::get_if<EntityId>(&v)) return {0, e->id};
    const auto& l = std::get<Literal>(v);
    return {1 + static_cast<int>(l.kind), l.value};
  }

  const Value* resolve(const sparql::PatternTerm& t, const std::map<std::string, Value>& a) const {
    if (const auto* v = std::get_if<sparql::Variable>(&t)) {
      auto it = a.find(v->name);
      return it == a.end() ? nullptr : &it->second;
    }
    return &std::get<Value>(t);
  }

  bool pattern_holds(const sparql::TriplePattern& tp, const std::map<std::string, Value>& a,
                     bool& complete) const {
    const Value* s = resolve(tp.subject, a);
    const Value* p = resolve(tp.predicate, a);
    const Value* o = resolve(tp.object, a);
    complete = s && p && o;
    if (!complete) return true;
    return facts_.contains({key(*s), key(*p), key(*o)});
  }

  void enumerate(const sparql::Query& q, const std::vector<std::string>& vars, std::size_t depth,
                 std::map<std::string, Value>& a, std::vector<std::map<std::string, Value>>& out) const {
    // Prune as soon as a fully assigned pattern fails; this never drops an
    // assignment that the exhaustive product would keep.
    for (const auto& tp : q.patterns) {
      bool complete = false;
      if (!pattern_holds(tp, a, complete)) return;
    }
    if (depth == vars.size()) {
      for (const auto& f : q.filters) {
        const Value& lhs = a.at(f.var.name);
        const Value& rhs = std::holds_alternative<sparql::Variable>(f.operand)
                               ? a.at(std::get<sparql::Variable>(f.operand).name)
                               : std::get<Value>(f.operand);
        if (!compare_values(lhs, f.op, rhs)) return;
      }
      out.push_back(a);
      return;
    }
    for (const auto& [k, value] : domain_) {
      a[vars[depth]] = value;
      enumerate(q, vars, depth + 1, a, out);
    }
    a.erase(vars[depth]);
  }

  static std::vector<Key> row_key(const std::vector<Value>& row) {
    std::vector<Key> out;
    for (const auto& v : row) {
      Key k = key(v);
      out.emplace_back(k.first, k.second);
    }
    return out;
  }

  // Lexicographic over (string, kind) per column.
  static bool row_less(const std::vector<Value>& a, const std::vector<Value>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      auto ka = key(a[i]), kb = key(b[i]);
      if (ka.second != kb.second) return ka.second < kb.second;
      if (ka.first != kb.first) return ka.first < kb.first;
    }
    return false;
  }

  static sparql::ResultTable shape(const sparql::Query& q,
                                   const std::vector<std::map<std::string, Value>>& solutions) {
    sparql::ResultTable t;
    if (q.form == sparql::QueryForm::count) {
      std::set<Key> distinct_values;
      for (const auto& s : solutions) distinct_values.insert(key(s.at(q.projection[0].name)));
      auto n = q.distinct ? distinct_values.size() : solutions.size();
      t.columns = {"count"};
      t.rows.push_back({Literal::integer(static_cast<long long>(n))});
      return t;
    }
    for (const auto& v : q.projection) t.columns.push_back(v.name);
    struct Row {
      std::vector<Value> values;
      const Value* order_key;
    };
    std::vector<Row> rows;
    for (const auto& s : solutions) {
      Row r;
      for (const auto& v : q.projection) r.values.push_back(s.at(v.name));
      r.order_key = q.order ? &s.at(q.order->var.name) : nullptr;
      rows.push_back(std::move(r));
    }
    std::sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
      if (q.order) {
        auto c = order_values(*a.order_key, *b.order_key);
        if (c != 0) return q.order->descending ? c > 0 : c < 0;
      }
      return row_less(a.values, b.values);
    });
    std::set<std::vector<Key>> seen;
    for (const auto& r : rows) {
      if (q.limit && t.rows.size() == *q.limit) break;
      if (q.distinct && !seen.insert(row_key(r.values)).second) continue;
      t.rows.push_back(r.values);
    }
    return t;
  }

  std::set<std::tuple<Key, Key, Key>> facts_;
  std::map<Key, Value> domain_;
};

/// Row multiset comparison helper: sorts rows by their string form.
inline std::vector<std::vector<std::string>> row_strings(const sparql::ResultTable& t, bool sorted) {
  std::vector<std::vector<std::string>> out;
  for (const auto& r : t.rows) {
    std::vector<std::string> s;
    for (const auto& v : r) {
      s.push_back((is_entity(v) ? "E:" : std::string(to_string(std::get<Literal>(v).kind)) + ":") +
                  value_string(v));
    }
    out.push_back(std::move(s));
  }
  if (sorted) std::sort(out.begin(), out.end());
  return out;
}

}  // namespace kgqa::oracle
