#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgcweak/errors.hpp"
#include "sgcweak/hermite_quadrature.hpp"
#include "sgcweak/parallel.hpp"

namespace sgcweak {

inline constexpr std::size_t kDefaultNodeCap = 2'000'000;

/// Absolute tolerance used to identify coincident one-dimensional abscissae.
inline constexpr double kNodeMergeTolerance = 1e-12;

/// One term Q_{i_1} x ... x Q_{i_d} of the Smolyak combination formula.
struct MultiIndexTerm {
  std::vector<int> index;
  long long coefficient = 0;

  int order_sum() const {
    int s = 0;
    for (int i : index) s += i;
    return s;
  }
};

struct GridOptions {
  std::size_t node_cap = kDefaultNodeCap;
};

struct IntegrationOptions {
  int workers = 1;
};

inline long long binomial(long long n, long long k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long r = 1;
  for (long long j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

/// (-1)^{L+d-1-s} binom(d-1, s-L) for L <= s <= L+d-1, zero otherwise.
inline long long smolyak_coefficient(int level, int dim, int order_sum) {
  if (order_sum < level || order_sum > level + dim - 1) return 0;
  const long long c = binomial(dim - 1, order_sum - level);
  return ((level + dim - 1 - order_sum) % 2 == 0) ? c : -c;
}

/// Terms of A(L,d) ordered by |i| ascending, then lexicographically.
inline std::vector<MultiIndexTerm> smolyak_terms(int level, int dim) {
  if (level < 1 || dim < 1) throw InvalidArgument("smolyak_terms: level and dimension must be >= 1");
  std::vector<MultiIndexTerm> terms;
  std::vector<int> index(dim, 1);
  // Enumerates compositions of `remaining` extra units over axes [axis, dim).
  std::function<void(int, int, long long)> emit = [&](int axis, int remaining, long long coef) {
    if (axis == dim - 1) {
      index[axis] = 1 + remaining;
      terms.push_back({index, coef});
      return;
    }
    for (int extra = 0; extra <= remaining; ++extra) {
      index[axis] = 1 + extra;
      emit(axis + 1, remaining - extra, coef);
    }
  };
  for (int s = std::max(level, dim); s <= level + dim - 1; ++s) {
    emit(0, s - dim, smolyak_coefficient(level, dim, s));
  }
  return terms;
}

/**
 * Closed-form node counts of the Gauss-Hermite Smolyak grid for L <= 5 and
 * L <= d, evaluated in integer arithmetic.
 */
inline long long sparse_node_count(int level, long long dim) {
  if (level < 1 || dim < level) {
    throw InvalidArgument("sparse_node_count: requires 1 <= L <= d");
  }
  const long long d = dim;
  switch (level) {
    case 1: return 1;
    case 2: return 2 * d + 1;
    case 3: return 2 * d * d + 2 * d + 1;
    case 4: return (4 * d * d * d + 6 * d * d + 14 * d + 3) / 3;
    case 5: return (2 * d * d * d * d + 4 * d * d * d + 22 * d * d + 8 * d + 3) / 3;
    default:
      throw InvalidArgument("sparse_node_count: closed form unsupported for level " +
                            std::to_string(level));
  }
}

/**
 * Upper bound on the number of distinct Smolyak nodes: a node is a choice
 * of nonzero abscissae on a subset of axes whose orders satisfy
 * sum (n_a - 1) <= L - 1. Exact whenever nonzero abscissae of different
 * orders never coincide, which holds for the Gauss-Hermite family.
 */
inline double projected_sparse_node_count(int level, int dim) {
  const int budget = level - 1;
  const int kmax = std::min(dim, budget);
  // ways[k][b]: ordered choices on k fixed axes using budget b.
  std::vector<std::vector<double>> ways(kmax + 1, std::vector<double>(budget + 1, 0.0));
  ways[0][0] = 1.0;
  for (int k = 0; k < kmax; ++k) {
    for (int b = 0; b <= budget; ++b) {
      if (ways[k][b] == 0.0) continue;
      for (int n = 2; b + n - 1 <= budget; ++n) ways[k + 1][b + n - 1] += ways[k][b] * (n - n % 2);
    }
  }
  double total = 0.0;
  for (int k = 0; k <= kmax; ++k) {
    double s = 0.0;
    for (double w : ways[k]) s += w;
    total += static_cast<double>(binomial(dim, k)) * s;
  }
  return total;
}

/// A node coordinate that is not zero: axis plus index into the abscissa table.
struct SparseCoordinate {
  std::uint16_t axis;
  std::uint16_t value;
};

/**
 * Flattened, deduplicated quadrature rule in d dimensions. Nodes are stored
 * by their nonzero coordinates (Smolyak nodes are mostly zero) and kept in
 * lexicographic order of their dense coordinates; weights are signed.
 */
template <typename Scalar>
class SparseGridRule {
 public:
  enum class Kind { smolyak, tensor };

  SparseGridRule() = default;

  Kind kind() const { return kind_; }
  int dimension() const { return dim_; }
  /// Smolyak level L, or the per-axis order n of a tensor rule.
  int parameter() const { return parameter_; }
  int level() const { return kind_ == Kind::smolyak ? parameter_ : 0; }
  Eigen::Index size() const { return weights_.size(); }

  const Vector<Scalar>& weights() const { return weights_; }
  const std::vector<Scalar>& abscissae() const { return abscissae_; }

  std::span<const SparseCoordinate> nonzeros(Eigen::Index p) const {
    return {coords_.data() + offsets_[p], coords_.data() + offsets_[p + 1]};
  }

  void node(Eigen::Index p, Eigen::Ref<Vector<Scalar>> out) const {
    out.setZero();
    for (const auto& c : nonzeros(p)) out(c.axis) = abscissae_[c.value];
  }

  Vector<Scalar> node(Eigen::Index p) const {
    Vector<Scalar> y(dim_);
    node(p, y);
    return y;
  }

  /// All nodes as columns of a d x size matrix; intended for small grids.
  Matrix<Scalar> dense_nodes() const {
    Matrix<Scalar> out(dim_, size());
    for (Eigen::Index p = 0; p < size(); ++p) node(p, out.col(p));
    return out;
  }

  // Construction interface used by the builders.
  struct Builder;

 private:
  Kind kind_ = Kind::smolyak;
  int dim_ = 0;
  int parameter_ = 0;
  std::vector<Scalar> abscissae_;
  std::vector<std::size_t> offsets_{0};
  std::vector<SparseCoordinate> coords_;
  Vector<Scalar> weights_;
};

template <typename Scalar>
struct SparseGridRule<Scalar>::Builder {
  SparseGridRule rule;
  std::vector<Scalar> weights;

  Builder(Kind kind, int dim, int parameter, std::vector<Scalar> abscissae) {
    rule.kind_ = kind;
    rule.dim_ = dim;
    rule.parameter_ = parameter;
    rule.abscissae_ = std::move(abscissae);
  }

  void push(std::span<const SparseCoordinate> coords, Scalar weight) {
    rule.coords_.insert(rule.coords_.end(), coords.begin(), coords.end());
    rule.offsets_.push_back(rule.coords_.size());
    weights.push_back(weight);
  }

  SparseGridRule finish() && {
    rule.weights_ = Eigen::Map<const Vector<Scalar>>(weights.data(), static_cast<Eigen::Index>(weights.size()));
    return std::move(rule);
  }
};

namespace detail {

// Distinct nonzero abscissae of Q_1..Q_maxorder, sorted ascending, with a
// map (order, node index) -> table id, or -1 for the zero node.
template <typename Scalar>
struct AbscissaTable {
  std::vector<QuadratureRule1D<Scalar>> rules;  // rules[n] is Q_n; rules[0] unused
  std::vector<Scalar> values;
  std::vector<std::vector<int>> id;              // id[n][k]
  bool coincident = false;                       // nonzero nodes of different orders merged
  std::vector<int> order_of;                     // order owning each id (valid if !coincident)
  std::vector<Scalar> weight_of;                 // matching 1-D weight (valid if !coincident)
};

template <typename Scalar>
AbscissaTable<Scalar> make_abscissa_table(int max_order) {
  using std::abs;
  if (max_order > kMaxHermiteOrder) {
    throw InvalidArgument("sparse grid: one-dimensional order " + std::to_string(max_order) +
                          " exceeds " + std::to_string(kMaxHermiteOrder));
  }
  AbscissaTable<Scalar> t;
  t.rules.resize(max_order + 1);
  t.id.resize(max_order + 1);
  std::map<long long, int> by_key;  // quantized value -> provisional id
  std::vector<Scalar> raw;
  std::vector<int> raw_order;
  std::vector<Scalar> raw_weight;
  for (int n = 1; n <= max_order; ++n) {
    t.rules[n] = gauss_hermite_rule<Scalar>(n);
    t.id[n].assign(n, -1);
    for (int k = 0; k < n; ++k) {
      const Scalar v = t.rules[n].nodes(k);
      const long long key = std::llround(static_cast<double>(v) / kNodeMergeTolerance);
      if (key == 0) continue;
      auto [it, inserted] = by_key.emplace(key, static_cast<int>(raw.size()));
      if (inserted) {
        raw.push_back(v);
        raw_order.push_back(n);
        raw_weight.push_back(t.rules[n].weights(k));
      } else if (raw_order[it->second] != n) {
        t.coincident = true;
      }
      t.id[n][k] = it->second;
    }
  }
  // Renumber so that ids ascend with value; then id order is value order.
  std::vector<int> perm(raw.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  std::sort(perm.begin(), perm.end(), [&](int a, int b) { return raw[a] < raw[b]; });
  std::vector<int> rank(raw.size());
  for (std::size_t r = 0; r < perm.size(); ++r) rank[perm[r]] = static_cast<int>(r);
  t.values.resize(raw.size());
  t.order_of.resize(raw.size());
  t.weight_of.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    t.values[rank[i]] = raw[i];
    t.order_of[rank[i]] = raw_order[i];
    t.weight_of[rank[i]] = raw_weight[i];
  }
  for (auto& row : t.id) {
    for (int& v : row) {
      if (v >= 0) v = rank[v];
    }
  }
  if (t.values.size() > 0xFFFF) throw InvalidArgument("sparse grid: abscissa table too large");
  return t;
}

// Dense lexicographic comparison of two sparse nodes whose value ids are
// ordered like their values (negative ids < zero < positive ids).
template <typename Scalar>
bool sparse_less(std::span<const SparseCoordinate> a, std::span<const SparseCoordinate> b,
                 const std::vector<Scalar>& values) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() || j < b.size()) {
    const unsigned ax = std::min<unsigned>(i < a.size() ? a[i].axis : 0xFFFFu + 1u,
                                           j < b.size() ? b[j].axis : 0xFFFFu + 1u);
    const Scalar va = (i < a.size() && a[i].axis == ax) ? values[a[i++].value] : Scalar(0);
    const Scalar vb = (j < b.size() && b[j].axis == ax) ? values[b[j++].value] : Scalar(0);
    if (va != vb) return va < vb;
  }
  return false;
}

inline void check_cap(double projected, std::size_t cap, const std::string& what) {
  if (projected > static_cast<double>(cap)) {
    throw ResourceLimitError(what + ": projected node count " + std::to_string(static_cast<long double>(projected)) +
                                 " exceeds cap " + std::to_string(cap),
                             projected);
  }
}

inline void check_dimension(int dim) {
  if (dim < 1 || dim > 0xFFFF) throw InvalidArgument("sparse grid: dimension must be in [1, 65535]");
}

}  // namespace detail

/// Bookkeeping from the expand-and-merge construction.
struct ExpansionStats {
  std::size_t pre_merge_nodes = 0;
  double pre_merge_weight_sum = 0.0;
  double merged_weight_sum = 0.0;
};

/**
 * Literal Smolyak construction: expand every term as a tensor of
 * Gauss-Hermite rules, scale by its coefficient and merge coincident nodes
 * (abscissae identified within kNodeMergeTolerance) by summing weights.
 */
template <typename Scalar = double>
SparseGridRule<Scalar> build_sparse_grid_by_expansion(int level, int dim, const GridOptions& opts = {},
                                                       ExpansionStats* stats = nullptr) {
  detail::check_dimension(dim);
  if (level < 1) throw InvalidArgument("build_sparse_grid: level must be >= 1");
  detail::check_cap(projected_sparse_node_count(level, dim), opts.node_cap, "build_sparse_grid");
  const auto table = detail::make_abscissa_table<Scalar>(level);

  std::map<std::vector<std::uint32_t>, Scalar> merged;
  ExpansionStats local;
  std::vector<int> pos(dim);
  std::vector<std::uint32_t> key;
  for (const auto& term : smolyak_terms(level, dim)) {
    std::fill(pos.begin(), pos.end(), 0);
    while (true) {
      Scalar w = static_cast<Scalar>(term.coefficient);
      key.clear();
      for (int a = 0; a < dim; ++a) {
        const int n = term.index[a];
        w *= table.rules[n].weights(pos[a]);
        const int id = table.id[n][pos[a]];
        if (id >= 0) key.push_back((static_cast<std::uint32_t>(a) << 16) | static_cast<std::uint32_t>(id));
      }
      merged[key] += w;
      ++local.pre_merge_nodes;
      local.pre_merge_weight_sum += static_cast<double>(w);
      int a = dim - 1;
      while (a >= 0 && ++pos[a] == term.index[a]) pos[a--] = 0;
      if (a < 0) break;
    }
  }

  std::vector<std::vector<SparseCoordinate>> nodes;
  std::vector<Scalar> weights;
  nodes.reserve(merged.size());
  for (const auto& [k, w] : merged) {
    std::vector<SparseCoordinate> coords;
    for (auto packed : k) {
      coords.push_back({static_cast<std::uint16_t>(packed >> 16), static_cast<std::uint16_t>(packed & 0xFFFFu)});
    }
    nodes.push_back(std::move(coords));
    weights.push_back(w);
  }
  std::vector<std::size_t> order(nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detail::sparse_less<Scalar>(nodes[a], nodes[b], table.values);
  });

  typename SparseGridRule<Scalar>::Builder builder(SparseGridRule<Scalar>::Kind::smolyak, dim, level, table.values);
  for (std::size_t i : order) {
    builder.push(nodes[i], weights[i]);
    local.merged_weight_sum += static_cast<double>(weights[i]);
  }
  if (stats) *stats = local;
  return std::move(builder).finish();
}

/**
 * Smolyak rule A(L,d) over the Gaussian measure.
 *
 * Produces the same node set and merged weights as the expand-and-merge
 * construction without materialising the pre-merge expansion: when no two
 * orders share a nonzero abscissa, a node with nonzero coordinates of orders
 * n_a on axes A receives weight prod_a w(v_a) * G(d-|A|, sum_a n_a), where G
 * sums coefficient(|i|) times the zero-node weights of the odd orders placed
 * on the remaining axes. Nodes are emitted directly in lexicographic order.
 */
template <typename Scalar = double>
SparseGridRule<Scalar> build_sparse_grid(int level, int dim, const GridOptions& opts = {}) {
  detail::check_dimension(dim);
  if (level < 1) throw InvalidArgument("build_sparse_grid: level must be >= 1");
  detail::check_cap(projected_sparse_node_count(level, dim), opts.node_cap, "build_sparse_grid");
  const auto table = detail::make_abscissa_table<Scalar>(level);
  if (table.coincident) return build_sparse_grid_by_expansion<Scalar>(level, dim, opts);

  const int smax = level + dim - 1;
  // zero_poly[z][t]: sum over odd orders (j_1..j_z), sum j = t, of prod w_j(0).
  std::vector<Scalar> zero_weight(level + 1, Scalar(0));
  for (int j = 1; j <= level; j += 2) zero_weight[j] = table.rules[j].weights(j / 2);
  std::vector<std::vector<Scalar>> zero_poly(dim + 1, std::vector<Scalar>(smax + 1, Scalar(0)));
  zero_poly[0][0] = Scalar(1);
  for (int z = 0; z < dim; ++z) {
    for (int t = 0; t <= smax; ++t) {
      if (zero_poly[z][t] == Scalar(0)) continue;
      for (int j = 1; j <= level && t + j <= smax; j += 2) zero_poly[z + 1][t + j] += zero_poly[z][t] * zero_weight[j];
    }
  }
  // tail[z][s]: total weight factor from z zero axes given nonzero orders sum s.
  std::vector<std::vector<Scalar>> tail(dim + 1, std::vector<Scalar>(smax + 1, Scalar(0)));
  std::vector<std::vector<char>> reach(dim + 1, std::vector<char>(smax + 1, 0));
  for (int z = 0; z <= dim; ++z) {
    for (int s = 0; s <= smax; ++s) {
      Scalar acc(0);
      for (int t = 0; s + t <= smax; ++t) {
        const long long c = smolyak_coefficient(level, dim, s + t);
        if (c == 0 || zero_poly[z][t] == Scalar(0)) continue;
        acc += static_cast<Scalar>(c) * zero_poly[z][t];
        reach[z][s] = 1;
      }
      tail[z][s] = acc;
    }
  }

  // Candidate nonzero ids for a given remaining budget, in value order.
  const int nvalues = static_cast<int>(table.values.size());
  int first_positive = 0;
  while (first_positive < nvalues && table.values[first_positive] < Scalar(0)) ++first_positive;

  typename SparseGridRule<Scalar>::Builder builder(SparseGridRule<Scalar>::Kind::smolyak, dim, level, table.values);
  std::vector<SparseCoordinate> coords;
  coords.reserve(level);

  std::function<void(int, int, int, Scalar)> walk = [&](int axis, int budget, int order_sum, Scalar weight) {
    const int nonzero = static_cast<int>(coords.size());
    if (axis == dim || budget == 0) {
      const int zeros = dim - nonzero;
      if (reach[zeros][order_sum]) builder.push(coords, weight * tail[zeros][order_sum]);
      return;
    }
    auto try_id = [&](int id) {
      const int n = table.order_of[id];
      if (n - 1 > budget) return;
      coords.push_back({static_cast<std::uint16_t>(axis), static_cast<std::uint16_t>(id)});
      walk(axis + 1, budget - (n - 1), order_sum + n, weight * table.weight_of[id]);
      coords.pop_back();
    };
    for (int id = 0; id < first_positive; ++id) try_id(id);
    walk(axis + 1, budget, order_sum, weight);
    for (int id = first_positive; id < nvalues; ++id) try_id(id);
  };
  walk(0, level - 1, 0, Scalar(1));
  return std::move(builder).finish();
}

/// Full tensor rule Q_n^{(x)d}, nodes in lexicographic order.
template <typename Scalar = double>
SparseGridRule<Scalar> tensor_rule(int n, int dim, const GridOptions& opts = {}) {
  detail::check_dimension(dim);
  detail::check_cap(std::pow(static_cast<double>(n), dim), opts.node_cap, "tensor_rule");
  const auto rule = gauss_hermite_rule<Scalar>(n);
  // Abscissa table: nonzero nodes of Q_n in ascending order.
  std::vector<Scalar> values;
  std::vector<int> id(n, -1);
  for (int k = 0; k < n; ++k) {
    if (rule.nodes(k) != Scalar(0)) {
      id[k] = static_cast<int>(values.size());
      values.push_back(rule.nodes(k));
    }
  }
  typename SparseGridRule<Scalar>::Builder builder(SparseGridRule<Scalar>::Kind::tensor, dim, n, values);
  std::vector<int> pos(dim, 0);
  std::vector<SparseCoordinate> coords;
  coords.reserve(dim);
  while (true) {
    coords.clear();
    Scalar w(1);
    for (int a = 0; a < dim; ++a) {
      w *= rule.weights(pos[a]);
      if (id[pos[a]] >= 0) coords.push_back({static_cast<std::uint16_t>(a), static_cast<std::uint16_t>(id[pos[a]])});
    }
    builder.push(coords, w);
    int a = dim - 1;
    while (a >= 0 && ++pos[a] == n) pos[a--] = 0;
    if (a < 0) break;
  }
  return std::move(builder).finish();
}

/**
 * Vector-valued quadrature: phi(y, out) writes `width` values for node y.
 * Weighted node values are reduced by pairwise summation in node order, so
 * the result does not depend on the worker count.
 */
template <typename Scalar, typename Fn>
Vector<Scalar> sg_integrate_many(const SparseGridRule<Scalar>& rule, Eigen::Index width, Fn&& phi,
                                 const IntegrationOptions& opts = {}) {
  const Eigen::Index count = rule.size();
  Matrix<Scalar> values(width, count);
  parallel_for(static_cast<std::size_t>(count), opts.workers, [&](std::size_t begin, std::size_t end) {
    Vector<Scalar> y = Vector<Scalar>::Zero(rule.dimension());
    Vector<Scalar> out(width);
    for (std::size_t p = begin; p < end; ++p) {
      const auto idx = static_cast<Eigen::Index>(p);
      rule.node(idx, y);
      phi(static_cast<const Vector<Scalar>&>(y), out);
      if (!out.allFinite()) {
        throw EvaluationError("sg_integrate: non-finite integrand value at node " + std::to_string(p), p);
      }
      values.col(idx) = rule.weights()(idx) * out;
    }
  });
  return pairwise_sum_columns(values);
}

/// Sum_p W_p phi(y_p) for a scalar integrand phi(const Vector&).
template <typename Scalar, typename Fn>
Scalar sg_integrate(const SparseGridRule<Scalar>& rule, Fn&& phi, const IntegrationOptions& opts = {}) {
  const Eigen::Index count = rule.size();
  std::vector<Scalar> values(static_cast<std::size_t>(count));
  parallel_for(static_cast<std::size_t>(count), opts.workers, [&](std::size_t begin, std::size_t end) {
    Vector<Scalar> y = Vector<Scalar>::Zero(rule.dimension());
    for (std::size_t p = begin; p < end; ++p) {
      const auto idx = static_cast<Eigen::Index>(p);
      rule.node(idx, y);
      const Scalar v = phi(static_cast<const Vector<Scalar>&>(y));
      if (!std::isfinite(static_cast<double>(v))) {
        throw EvaluationError("sg_integrate: non-finite integrand value at node " + std::to_string(p), p);
      }
      values[p] = rule.weights()(idx) * v;
    }
  });
  return pairwise_sum(values.data(), values.size());
}

/**
 * Level-2 Smolyak rule written as an expectation over one-axis two-point
 * perturbations: sum_i E phi(zeta e_i) - (d-1) phi(0), with P(zeta = +-1) = 1/2.
 * Uses exactly 2d+1 evaluations of phi.
 */
template <typename Scalar = double, typename Fn>
Scalar level2_probabilistic_form(Fn&& phi, int dim) {
  if (dim < 1) throw InvalidArgument("level2_probabilistic_form: dimension must be >= 1");
  Vector<Scalar> y = Vector<Scalar>::Zero(dim);
  auto eval = [&](std::size_t index) {
    const Scalar v = phi(static_cast<const Vector<Scalar>&>(y));
    if (!std::isfinite(static_cast<double>(v))) {
      throw EvaluationError("level2_probabilistic_form: non-finite integrand value", index);
    }
    return v;
  };
  const Scalar center = eval(0);
  Scalar acc(0);
  for (int i = 0; i < dim; ++i) {
    y(i) = Scalar(1);
    const Scalar plus = eval(2 * i + 1);
    y(i) = Scalar(-1);
    const Scalar minus = eval(2 * i + 2);
    y(i) = Scalar(0);
    acc += (plus + minus) / Scalar(2);
  }
  return acc - Scalar(dim - 1) * center;
}

}  // namespace sgcweak
