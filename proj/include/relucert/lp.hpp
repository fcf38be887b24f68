#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "relucert/bound.hpp"
#include "relucert/scalar.hpp"

namespace relucert {

using VarId = std::uint32_t;

enum class Side { lower, upper };

inline Side opposite(Side s) { return s == Side::lower ? Side::upper : Side::lower; }
inline const char* side_name(Side s) { return s == Side::lower ? "lower" : "upper"; }

struct PivotOnZero : std::logic_error {
  PivotOnZero() : std::logic_error("pivot on zero coefficient") {}
};

/// One input equation sum(coeff * var) = rhs, kept sparse.
template <typename S>
struct Equation {
  std::vector<std::pair<VarId, S>> terms;
  S rhs{};

  /// Terms sorted by variable with zero coefficients dropped.
  Equation normalized() const {
    Equation out;
    out.rhs = rhs;
    out.terms = terms;
    std::sort(out.terms.begin(), out.terms.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<VarId, S>> merged;
    for (auto& [v, c] : out.terms) {
      if (!merged.empty() && merged.back().first == v)
        merged.back().second += c;
      else
        merged.emplace_back(v, c);
    }
    std::erase_if(merged, [](const auto& t) { return t.second.is_zero(); });
    out.terms = std::move(merged);
    return out;
  }
};

template <typename S>
bool same_equation(const Equation<S>& a, const Equation<S>& b) {
  auto na = a.normalized(), nb = b.normalized();
  if (!(na.rhs == nb.rhs) || na.terms.size() != nb.terms.size()) return false;
  for (std::size_t i = 0; i < na.terms.size(); ++i)
    if (na.terms[i].first != nb.terms[i].first || !(na.terms[i].second == nb.terms[i].second))
      return false;
  return true;
}

struct ReluPair {
  VarId b = 0;
  VarId f = 0;
};

/// The LP-plus-ReLU encoding of a verification query.
template <typename S>
struct Query {
  std::size_t num_vars = 0;
  std::vector<std::string> names;
  std::vector<Equation<S>> equations;
  std::vector<Bound<S>> lower, upper;
  std::vector<ReluPair> relus;
};

template <typename S>
Query<Rational> query_to_rational(const Query<S>& q) {
  Query<Rational> out;
  out.num_vars = q.num_vars;
  out.names = q.names;
  for (const auto& eq : q.equations) {
    Equation<Rational> e;
    e.rhs = to_rational(eq.rhs);
    for (const auto& [v, c] : eq.terms) e.terms.emplace_back(v, to_rational(c));
    out.equations.push_back(std::move(e));
  }
  for (const auto& b : q.lower) out.lower.push_back(bound_to_rational(b));
  for (const auto& b : q.upper) out.upper.push_back(bound_to_rational(b));
  out.relus = q.relus;
  return out;
}

template <typename S>
Query<S> query_from_rational(const Query<Rational>& q) {
  Query<S> out;
  out.num_vars = q.num_vars;
  out.names = q.names;
  for (const auto& eq : q.equations) {
    Equation<S> e;
    e.rhs = from_rational<S>(eq.rhs);
    for (const auto& [v, c] : eq.terms) e.terms.emplace_back(v, from_rational<S>(c));
    out.equations.push_back(std::move(e));
  }
  for (const auto& b : q.lower) out.lower.push_back(bound_from_rational<S>(b));
  for (const auto& b : q.upper) out.upper.push_back(bound_from_rational<S>(b));
  out.relus = q.relus;
  return out;
}

/// Farkas explanation vector over the tableau rows; empty means zero.
template <typename S>
using FarkasVec = std::vector<S>;

template <typename S>
bool fv_is_zero(const FarkasVec<S>& v) {
  return std::all_of(v.begin(), v.end(), [](const S& s) { return s.is_zero(); });
}

// Vectors may be shorter than the node's m; the missing tail is zero. That
// makes inheriting explanations into a node with appended rows free.
template <typename S>
void fv_add_scaled(FarkasVec<S>& dst, const S& coeff, const FarkasVec<S>& src, std::size_t m) {
  if (coeff.is_zero() || src.empty()) return;
  assert(src.size() <= m);
  if (dst.size() < m) dst.resize(m, S(0));
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] += coeff * src[i];
}

template <typename S>
FarkasVec<S> fv_materialize(const FarkasVec<S>& v, std::size_t m) {
  FarkasVec<S> out(m, S(0));
  assert(v.size() <= m);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

template <typename S>
FarkasVec<Rational> fv_to_rational(const FarkasVec<S>& v) {
  FarkasVec<Rational> out;
  out.reserve(v.size());
  for (const S& s : v) out.push_back(to_rational(s));
  return out;
}

/// Per-variable ground and dynamic bounds together with the Farkas vectors
/// that explain the dynamic ones in terms of the ground ones. A zero
/// (empty) vector explains exactly the ground bound.
template <typename S>
class BoundProfile {
 public:
  struct Entry {
    Bound<S> ground_lower = Bound<S>::neg_inf();
    Bound<S> ground_upper = Bound<S>::pos_inf();
    Bound<S> dyn_lower = Bound<S>::neg_inf();
    Bound<S> dyn_upper = Bound<S>::pos_inf();
    FarkasVec<S> expl_lower;
    FarkasVec<S> expl_upper;
  };

  BoundProfile() = default;

  std::size_t size() const { return vars_.size(); }

  VarId add_var(Bound<S> lower, Bound<S> upper) {
    Entry e;
    e.ground_lower = lower;
    e.ground_upper = upper;
    e.dyn_lower = std::move(lower);
    e.dyn_upper = std::move(upper);
    vars_.push_back(std::move(e));
    return static_cast<VarId>(vars_.size() - 1);
  }

  const Entry& entry(VarId v) const { return vars_[v]; }

  const Bound<S>& ground(VarId v, Side s) const {
    return s == Side::lower ? vars_[v].ground_lower : vars_[v].ground_upper;
  }
  const Bound<S>& dyn(VarId v, Side s) const {
    return s == Side::lower ? vars_[v].dyn_lower : vars_[v].dyn_upper;
  }
  const FarkasVec<S>& explanation(VarId v, Side s) const {
    return s == Side::lower ? vars_[v].expl_lower : vars_[v].expl_upper;
  }

  /// True when the dynamic bounds of v contradict each other.
  bool dyn_clash(VarId v) const { return cmp(vars_[v].dyn_lower, vars_[v].dyn_upper) > 0; }
  bool ground_clash(VarId v) const {
    return cmp(vars_[v].ground_lower, vars_[v].ground_upper) > 0;
  }

  /// Installs a ground bound for a split or a ReLU lemma: tighten-only,
  /// and the matching dynamic bound is re-anchored to the ground with a
  /// zero explanation.
  void reset_ground(VarId v, Side s, const Bound<S>& value) {
    Entry& e = vars_[v];
    if (s == Side::lower) {
      if (cmp(value, e.ground_lower) > 0) e.ground_lower = value;
      e.dyn_lower = e.ground_lower;
      e.expl_lower.clear();
    } else {
      if (cmp(value, e.ground_upper) < 0) e.ground_upper = value;
      e.dyn_upper = e.ground_upper;
      e.expl_upper.clear();
    }
  }

  /// Records a dynamically tightened bound and its explanation. The caller
  /// has already checked strict improvement.
  void tighten_dyn(VarId v, Side s, S value, FarkasVec<S> explanation) {
    Entry& e = vars_[v];
    if (s == Side::lower) {
      e.dyn_lower = Bound<S>(std::move(value));
      e.expl_lower = std::move(explanation);
    } else {
      e.dyn_upper = Bound<S>(std::move(value));
      e.expl_upper = std::move(explanation);
    }
  }

 private:
  std::vector<Entry> vars_;
};

/// The tableau of A*V = 0 rows. Each row has exactly one basic variable;
/// its coefficient is +1 for never-pivoted slack rows and -1 after any
/// pivot, so the equation view "basic = sum of the rest" needs no division.
template <typename S>
class Tableau {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  Tableau() = default;

  std::size_t rows() const { return rows_.size(); }
  std::size_t cols() const { return n_; }

  const std::vector<S>& row(std::size_t i) const { return rows_[i]; }
  VarId basic(std::size_t i) const { return basic_[i]; }
  std::size_t basic_row(VarId v) const {
    return v < row_of_.size() ? row_of_[v] : npos;
  }
  bool is_basic(VarId v) const { return basic_row(v) != npos; }

  /// Coefficient of x_j in the equation basic(i) = sum c_j x_j.
  S eq_coeff(std::size_t i, VarId j) const {
    assert(j != basic_[i]);
    // basic coefficient is +/-1, so dividing by it equals multiplying.
    return -(rows_[i][j] * rows_[i][basic_[i]]);
  }

  void add_row(std::vector<S> coeffs, VarId basic_var) {
    assert(coeffs.size() == n_);
    rows_.push_back(std::move(coeffs));
    basic_.push_back(basic_var);
    if (row_of_.size() < n_) row_of_.resize(n_, npos);
    row_of_[basic_var] = rows_.size() - 1;
  }

  void set_cols(std::size_t n) {
    n_ = n;
    row_of_.resize(n_, npos);
  }

  /// Swaps basic(i) out for the entering variable: the row is rescaled so
  /// the entering coefficient becomes exactly -1, then the entering
  /// variable is substituted out of every other row. Row space is
  /// preserved.
  void pivot(std::size_t i, VarId entering) {
    assert(i < rows_.size() && entering < n_ && !is_basic(entering));
    std::vector<S>& r = rows_[i];
    if (!usable_pivot(r[entering])) throw PivotOnZero();
    S scale = S(-1) / r[entering];
    for (S& c : r) c *= scale;
    r[entering] = S(-1);  // exact even in float mode
    row_of_[basic_[i]] = npos;
    basic_[i] = entering;
    row_of_[entering] = i;
    for (std::size_t q = 0; q < rows_.size(); ++q) {
      if (q == i) continue;
      S factor = rows_[q][entering];
      if (factor.is_zero()) continue;
      for (std::size_t j = 0; j < n_; ++j) rows_[q][j] += factor * r[j];
      rows_[q][entering] = S(0);
    }
  }

  /// Row-space coordinates of row i with respect to the initial tableau:
  /// under identity-tail augmentation these are just the last m entries.
  FarkasVec<S> extract_coef(std::size_t i) const {
    const std::vector<S>& r = rows_[i];
    std::size_t m = rows_.size();
    return FarkasVec<S>(r.end() - static_cast<std::ptrdiff_t>(m), r.end());
  }

  /// Dense n-vector w^T * A.
  std::vector<S> combine(const FarkasVec<S>& w) const {
    std::vector<S> out(n_, S(0));
    assert(w.size() <= rows_.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i].is_zero()) continue;
      for (std::size_t j = 0; j < n_; ++j) out[j] += w[i] * rows_[i][j];
    }
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::vector<S>> rows_;
  std::vector<VarId> basic_;
  std::vector<std::size_t> row_of_;
};

/// Builds the augmented tableau for the given equations: each equation
/// gets a fresh slack variable with fixed bounds l = u = -rhs, so the
/// system reads A*V = 0 and the last m columns start out as the identity.
/// The slack variables are appended to `bounds`.
template <typename S>
Tableau<S> build_tableau(const std::vector<Equation<S>>& equations, std::size_t n_query,
                         BoundProfile<S>& bounds) {
  assert(bounds.size() == n_query);
  std::size_t m = equations.size();
  Tableau<S> t;
  t.set_cols(n_query + m);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<S> row(n_query + m, S(0));
    for (const auto& [v, c] : equations[i].terms) {
      assert(v < n_query);
      row[v] += c;
    }
    row[n_query + i] = S(1);
    VarId slack = bounds.add_var(Bound<S>(-equations[i].rhs), Bound<S>(-equations[i].rhs));
    assert(slack == n_query + i);
    t.add_row(std::move(row), slack);
  }
  return t;
}

/// alpha(x_j) += delta for a non-basic j, with every basic variable
/// following along so all tableau equations keep holding.
template <typename S>
void update_assignment(const Tableau<S>& t, std::vector<S>& alpha, VarId j, const S& delta) {
  assert(!t.is_basic(j));
  if (delta.is_zero()) return;
  alpha[j] += delta;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    if (t.row(i)[j].is_zero()) continue;
    alpha[t.basic(i)] += delta * t.eq_coeff(i, j);
  }
}

/// slack+/slack- of a basic variable: non-basic variables with room to
/// push the row value up (respectively down), judged by dynamic bounds.
template <typename S>
std::pair<std::vector<VarId>, std::vector<VarId>> slack_sets(const Tableau<S>& t,
                                                             const BoundProfile<S>& bounds,
                                                             const std::vector<S>& alpha,
                                                             std::size_t i) {
  std::vector<VarId> plus, minus;
  VarId b = t.basic(i);
  for (VarId j = 0; j < t.cols(); ++j) {
    if (j == b || t.row(i)[j].is_zero() || t.is_basic(j)) continue;
    S c = t.eq_coeff(i, j);
    if (c.is_zero()) continue;
    bool below_upper = cmp(alpha[j], bounds.dyn(j, Side::upper)) < 0;
    bool above_lower = cmp(alpha[j], bounds.dyn(j, Side::lower)) > 0;
    if ((c.sign() > 0 && below_upper) || (c.sign() < 0 && above_lower)) plus.push_back(j);
    if ((c.sign() < 0 && below_upper) || (c.sign() > 0 && above_lower)) minus.push_back(j);
  }
  return {plus, minus};
}

/// Interval extreme of a row sum(coeffs * vars): for the upper extreme,
/// positive coefficients take upper bounds and negative ones take lower
/// bounds; infinities absorb. `use_ground` selects ground over dynamic
/// bounds.
template <typename S>
Bound<S> row_extreme(std::span<const S> coeffs, const BoundProfile<S>& bounds, Side which,
                     bool use_ground) {
  Bound<S> acc{S(0)};
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    const S& c = coeffs[j];
    if (c.is_zero()) continue;
    bool take_upper = (c.sign() > 0) == (which == Side::upper);
    Side pick = take_upper ? Side::upper : Side::lower;
    const Bound<S>& b =
        use_ground ? bounds.ground(static_cast<VarId>(j), pick) : bounds.dyn(static_cast<VarId>(j), pick);
    acc.add_scaled(c, b);
  }
  return acc;
}

template <typename S>
Bound<S> row_extreme(const std::vector<S>& coeffs, const BoundProfile<S>& bounds, Side which,
                     bool use_ground) {
  return row_extreme(std::span<const S>(coeffs.data(), coeffs.size()), bounds, which, use_ground);
}

}  // namespace relucert
