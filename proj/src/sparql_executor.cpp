// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <omp.h>

#include "kgqa/sparql.hpp"

namespace kgqa::sparql {

namespace {

using TermId = KnowledgeGraph::TermId;
constexpr TermId kUnbound = std::numeric_limits<TermId>::max();

// A compiled pattern position: a binding slot, or a constant term id.
struct Slot {
  bool is_var = false;
  std::size_t var = 0;
  TermId constant = kUnbound;
};

struct CompiledPattern {
  Slot s, p, o;
};

class Bindings {
 public:
  explicit Bindings(std::size_t width) : width_(width) {}

  std::size_t size() const { return count_; }
  std::span<const TermId> row(std::size_t i) const { return {data_.data() + i * width_, width_}; }
  void push(std::span<const TermId> r) {
    data_.insert(data_.end(), r.begin(), r.end());
    ++count_;
  }
  void append(const Bindings& other) {
    data_.insert(data_.end(), other.data_.begin(), other.data_.end());
    count_ += other.count_;
  }

 private:
  std::size_t width_;
  std::size_t count_ = 0;
  std::vector<TermId> data_;
};

// Extends one partial solution with every triple matching the pattern.
void extend_row(const KnowledgeGraph& graph, const CompiledPattern& cp, std::span<const TermId> row,
                std::vector<TermId>& scratch, Bindings& out) {
  auto resolve = [&](const Slot& s) -> std::optional<TermId> {
    if (!s.is_var) return s.constant;
    TermId v = row[s.var];
    return v == kUnbound ? std::nullopt : std::optional<TermId>(v);
  };
  auto s = resolve(cp.s), p = resolve(cp.p), o = resolve(cp.o);
  for (const auto& t : graph.match(s, p, o)) {
    scratch.assign(row.begin(), row.end());
    bool ok = true;
    auto bind = [&](const Slot& slot, TermId value) {
      if (!slot.is_var) return;
      TermId& cur = scratch[slot.var];
      if (cur == kUnbound) {
        cur = value;
      } else if (cur != value) {
        ok = false;
      }
    };
    bind(cp.s, t.s);
    bind(cp.p, t.p);
    bind(cp.o, t.o);
    if (ok) out.push(scratch);
  }
}

Bindings join_pattern(const KnowledgeGraph& graph, const CompiledPattern& cp, const Bindings& in,
                      std::size_t width, ExecutionPolicy policy) {
  const auto n = static_cast<long long>(in.size());
  if (policy == ExecutionPolicy::serial || n < 2) {
    Bindings out(width);
    std::vector<TermId> scratch;
    for (long long i = 0; i < n; ++i) extend_row(graph, cp, in.row(static_cast<std::size_t>(i)), scratch, out);
    return out;
  }
  // Static contiguous chunks per thread, concatenated in thread order, so the
  // output order equals the serial order.
  int threads = omp_get_max_threads();
  std::vector<Bindings> parts(static_cast<std::size_t>(threads), Bindings(width));
#pragma omp parallel num_threads(threads)
  {
    int tid = omp_get_thread_num();
    int nt = omp_get_num_threads();
    long long lo = n * tid / nt, hi = n * (tid + 1) / nt;
    std::vector<TermId> scratch;
    for (long long i = lo; i < hi; ++i) {
      extend_row(graph, cp, in.row(static_cast<std::size_t>(i)), scratch, parts[static_cast<std::size_t>(tid)]);
    }
  }
  Bindings out(width);
  for (const auto& part : parts) out.append(part);
  return out;
}

int kind_index(const Value& v) {
  if (is_entity(v)) return 0;
  return 1 + static_cast<int>(std::get<Literal>(v).kind);
}

bool tuple_less(const std::vector<Value>& a, const std::vector<Value>& b) {
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    const auto& sa = value_string(a[i]);
    const auto& sb = value_string(b[i]);
    if (sa != sb) return sa < sb;
    int ka = kind_index(a[i]), kb = kind_index(b[i]);
    if (ka != kb) return ka < kb;
  }
  return a.size() < b.size();
}

struct ProjectedRow {
  std::vector<Value> values;
  std::optional<Value> key;
};

ResultTable finalize(const Query& q, std::vector<ProjectedRow> rows) {
  ResultTable table;
  if (q.form == QueryForm::count) {
    std::size_t n = rows.size();
    if (q.distinct) {
      std::sort(rows.begin(), rows.end(),
                [](const ProjectedRow& a, const ProjectedRow& b) { return tuple_less(a.values, b.values); });
      n = static_cast<std::size_t>(
          std::unique(rows.begin(), rows.end(),
                      [](const ProjectedRow& a, const ProjectedRow& b) { return a.values == b.values; }) -
          rows.begin());
    }
    table.columns = {"count"};
    table.rows.push_back({Literal::integer(static_cast<long long>(n))});
    return table;
  }
  for (const auto& v : q.projection) table.columns.push_back(v.name);
  if (q.order) {
    bool desc = q.order->descending;
    std::stable_sort(rows.begin(), rows.end(), [desc](const ProjectedRow& a, const ProjectedRow& b) {
      auto c = order_values(*a.key, *b.key);
      if (c != 0) return desc ? c > 0 : c < 0;
      return tuple_less(a.values, b.values);
    });
  } else {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ProjectedRow& a, const ProjectedRow& b) { return tuple_less(a.values, b.values); });
  }
  std::set<std::vector<std::pair<std::string, int>>> seen;
  for (auto& r : rows) {
    if (q.distinct) {
      std::vector<std::pair<std::string, int>> sig;
      for (const auto& v : r.values) sig.emplace_back(value_string(v), kind_index(v));
      if (!seen.insert(std::move(sig)).second) continue;
    }
    table.rows.push_back(std::move(r.values));
    if (q.limit && table.rows.size() >= *q.limit) break;
  }
  return table;
}

}  // namespace

ResultTable execute(const Query& query, const KnowledgeGraph& graph, ExecutionPolicy policy) {
  std::map<std::string, std::size_t> slots;
  for (const auto& name : query.pattern_variables()) {
    slots.emplace(name, slots.size());
  }
  const std::size_t width = slots.size();

  bool missing_constant = false;
  auto compile = [&](const PatternTerm& t) {
    Slot s;
    if (const auto* v = std::get_if<Variable>(&t)) {
      s.is_var = true;
      s.var = slots.at(v->name);
    } else if (auto id = graph.lookup(std::get<Value>(t))) {
      s.constant = *id;
    } else {
      missing_constant = true;
    }
    return s;
  };
  std::vector<CompiledPattern> compiled;
  for (const auto& p : query.patterns) {
    compiled.push_back({compile(p.subject), compile(p.predicate), compile(p.object)});
  }

  // Unknown constants match nothing.
  Bindings current(width);
  if (!missing_constant) {
    std::vector<TermId> empty(width, kUnbound);
    current.push(empty);
    for (const auto& cp : compiled) {
      current = join_pattern(graph, cp, current, width, policy);
      if (current.size() == 0) break;
    }
  }

  std::vector<ProjectedRow> rows;
  rows.reserve(current.size());
  for (std::size_t i = 0; i < current.size(); ++i) {
    auto row = current.row(i);
    auto value_of = [&](const Variable& v) -> const Value& { return graph.term(row[slots.at(v.name)]); };
    bool keep = true;
    for (const auto& f : query.filters) {
      const Value& lhs = value_of(f.var);
      const Value& rhs = std::holds_alternative<Variable>(f.operand) ? value_of(std::get<Variable>(f.operand))
                                                                      : std::get<Value>(f.operand);
      if (!compare_values(lhs, f.op, rhs)) {
        keep = false;
        break;
      }
    }
    if (!keep) continue;
    ProjectedRow pr;
    for (const auto& v : query.projection) pr.values.push_back(value_of(v));
    if (query.order) pr.key = value_of(query.order->var);
    rows.push_back(std::move(pr));
  }
  return finalize(query, std::move(rows));
}

std::string format_table(const ResultTable& table, const KnowledgeGraph* graph, std::size_t max_rows) {
  std::ostringstream out;
  if (table.columns.size() == 1 && table.columns[0] == "count" && table.rows.size() == 1) {
    out << "count: " << value_string(table.rows[0][0]);
    return out.str();
  }
  out << "columns:";
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? " | " : " ") << "?" << table.columns[i];
  out << "\n";
  std::size_t shown = std::min(max_rows, table.rows.size());
  for (std::size_t r = 0; r < shown; ++r) {
    for (std::size_t c = 0; c < table.rows[r].size(); ++c) {
      const Value& v = table.rows[r][c];
      if (c) out << " | ";
      out << value_string(v);
      if (graph && is_entity(v)) {
        if (const auto* rec = graph->entity(std::get<EntityId>(v).id);
            rec && !rec->canonical_name.empty() && rec->canonical_name != rec->id.id) {
          out << " (" << rec->canonical_name << ")";
        }
      }
    }
    out << "\n";
  }
  if (shown < table.rows.size()) {
    out << "Total rows: " << table.rows.size() << " (showing first " << shown << ")";
  } else {
    out << "Total rows: " << table.rows.size();
  }
  return out.str();
}

}  // namespace kgqa::sparql
