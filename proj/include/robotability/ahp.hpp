#pragma once

// Pairwise-preference weighting: contingency matrices built from binary
// "which feature matters more" votes, principal-eigenvector weights, subset
// recomputation and transitivity auditing.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "robotability/error.hpp"

namespace robotability {

using FeatureId = std::string;

struct PairwiseVote {
  std::string rater_id;
  FeatureId feature_a;
  FeatureId feature_b;
  FeatureId chosen;
};

/// What to do with a pair that received no votes in either direction.
enum class UncomparedPolicy { NeutralFill, Error };

struct MatrixOptions {
  double smoothing = 1.0;
  UncomparedPolicy uncompared = UncomparedPolicy::NeutralFill;
};

/// Positive reciprocal n x n matrix of preference ratios, row-major.
class ContingencyMatrix {
public:
  ContingencyMatrix() = default;

  /// Takes ownership of a row-major n x n matrix. Validates positivity,
  /// unit diagonal and reciprocity (relative 1e-12).
  ContingencyMatrix(std::vector<FeatureId> features, std::vector<double> entries,
                    double smoothing = 0.0)
      : features_(std::move(features)), entries_(std::move(entries)), smoothing_(smoothing) {
    const std::size_t n = features_.size();
    if (entries_.size() != n * n)
      throw ValidationError("contingency matrix: expected " + std::to_string(n * n) +
                            " entries, got " + std::to_string(entries_.size()));
    check_unique(features_);
    for (std::size_t i = 0; i < n; ++i) {
      if (at(i, i) != 1.0)
        throw ValidationError("contingency matrix: diagonal entry for '" + features_[i] +
                              "' is not 1");
      for (std::size_t j = 0; j < n; ++j) {
        const double v = at(i, j);
        if (!(v > 0.0) || !std::isfinite(v))
          throw ValidationError("contingency matrix: entry (" + features_[i] + "," +
                                features_[j] + ") is not strictly positive and finite");
        if (std::abs(v * at(j, i) - 1.0) > 1e-12)
          throw ValidationError("contingency matrix: entries (" + features_[i] + "," +
                                features_[j] + ") are not reciprocal");
      }
    }
  }

  /// Builds M_ij = w_i / w_j, the perfectly consistent matrix for a weight vector.
  static ContingencyMatrix consistent(std::vector<FeatureId> features,
                                      std::span<const double> weights) {
    const std::size_t n = features.size();
    if (weights.size() != n)
      throw ValidationError("consistent matrix: weight count does not match feature count");
    std::vector<double> e(n * n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        e[i * n + j] = weights[i] / weights[j];
        e[j * n + i] = 1.0 / e[i * n + j];
      }
    return ContingencyMatrix(std::move(features), std::move(e));
  }

  std::size_t size() const noexcept { return features_.size(); }
  const std::vector<FeatureId>& features() const noexcept { return features_; }
  const std::vector<double>& entries() const noexcept { return entries_; }
  double smoothing() const noexcept { return smoothing_; }
  double at(std::size_t i, std::size_t j) const { return entries_[i * size() + j]; }

  std::optional<std::size_t> index_of(const FeatureId& id) const {
    auto it = std::find(features_.begin(), features_.end(), id);
    if (it == features_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - features_.begin());
  }

  /// Row/column restriction to `keep`, in the order given by `keep`.
  ContingencyMatrix restrict_to(std::span<const FeatureId> keep) const {
    std::vector<std::size_t> idx;
    idx.reserve(keep.size());
    for (const auto& id : keep) {
      auto i = index_of(id);
      if (!i) throw ValidationError("unknown feature id '" + id + "'");
      idx.push_back(*i);
    }
    const std::size_t m = idx.size();
    std::vector<double> e(m * m);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) e[a * m + b] = at(idx[a], idx[b]);
    return ContingencyMatrix(std::vector<FeatureId>(keep.begin(), keep.end()), std::move(e),
                             smoothing_);
  }

  static void check_unique(const std::vector<FeatureId>& ids) {
    std::vector<FeatureId> sorted(ids);
    std::sort(sorted.begin(), sorted.end());
    auto dup = std::adjacent_find(sorted.begin(), sorted.end());
    if (dup != sorted.end()) throw ValidationError("duplicate feature id '" + *dup + "'");
  }

private:
  std::vector<FeatureId> features_;
  std::vector<double> entries_;
  double smoothing_ = 0.0;
};

/// Normalized importance weights, kept in feature order.
class WeightSet {
public:
  WeightSet() = default;

  WeightSet(std::vector<std::pair<FeatureId, double>> weights, std::string source)
      : weights_(std::move(weights)), source_(std::move(source)) {
    double sum = 0.0;
    for (const auto& [id, w] : weights_) {
      if (!(w > 0.0) || !std::isfinite(w))
        throw ValidationError("weight for '" + id + "' must be strictly positive");
      sum += w;
    }
    if (weights_.empty() || std::abs(sum - 1.0) > 1e-12)
      throw ValidationError("weights must sum to 1 (got " + std::to_string(sum) + ")");
  }

  /// Scales arbitrary positive values to sum to one.
  static WeightSet normalized(const std::vector<FeatureId>& ids, std::span<const double> raw,
                              std::string source) {
    double sum = 0.0;
    for (double v : raw) sum += v;
    std::vector<std::pair<FeatureId, double>> w;
    w.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) w.emplace_back(ids[i], raw[i] / sum);
    return WeightSet(std::move(w), std::move(source));
  }

  const std::vector<std::pair<FeatureId, double>>& entries() const noexcept { return weights_; }
  const std::string& source() const noexcept { return source_; }
  std::size_t size() const noexcept { return weights_.size(); }

  std::optional<double> find(const FeatureId& id) const {
    for (const auto& [k, w] : weights_)
      if (k == id) return w;
    return std::nullopt;
  }
  double at(const FeatureId& id) const {
    auto w = find(id);
    if (!w) throw ValidationError("no weight for feature '" + id + "'");
    return *w;
  }

  std::vector<FeatureId> ids() const {
    std::vector<FeatureId> out;
    for (const auto& [k, w] : weights_) out.push_back(k);
    return out;
  }

  /// Simple rescaling w_i / sum_{j in keep} w_j, in this set's order.
  WeightSet renormalized(std::span<const FeatureId> keep, std::string source) const {
    std::vector<FeatureId> ids;
    std::vector<double> raw;
    for (const auto& [k, w] : weights_)
      if (std::find(keep.begin(), keep.end(), k) != keep.end()) {
        ids.push_back(k);
        raw.push_back(w);
      }
    for (const auto& k : keep)
      if (!find(k)) throw ValidationError("unknown feature id '" + k + "'");
    if (ids.empty()) throw ValidationError("renormalization over an empty feature set");
    return normalized(ids, raw, std::move(source));
  }

private:
  std::vector<std::pair<FeatureId, double>> weights_;
  std::string source_;
};

struct TransitivityReport {
  std::map<std::string, std::size_t> intra_rater;
  std::size_t inter_rater_violations = 0;
  std::size_t triples_evaluated = 0;
  double violation_fraction = 0.0;
};

struct PowerIterationOptions {
  double tolerance = 1e-12;
  std::size_t max_iterations = 10'000;
};

/// All unordered pairs (f_i, f_j), i < j, in catalog order.
inline std::vector<std::pair<FeatureId, FeatureId>> enumerate_pairs(
    const std::vector<FeatureId>& features) {
  if (features.empty()) throw ValidationError("feature list is empty");
  ContingencyMatrix::check_unique(features);
  std::vector<std::pair<FeatureId, FeatureId>> pairs;
  pairs.reserve(features.size() * (features.size() - 1) / 2);
  for (std::size_t i = 0; i < features.size(); ++i)
    for (std::size_t j = i + 1; j < features.size(); ++j)
      pairs.emplace_back(features[i], features[j]);
  return pairs;
}

namespace detail {

inline std::unordered_map<FeatureId, std::size_t> index_features(
    const std::vector<FeatureId>& features) {
  ContingencyMatrix::check_unique(features);
  std::unordered_map<FeatureId, std::size_t> idx;
  for (std::size_t i = 0; i < features.size(); ++i) idx.emplace(features[i], i);
  return idx;
}

/// Resolves a vote to (winner, loser) indices, validating it.
inline std::pair<std::size_t, std::size_t> resolve_vote(
    const PairwiseVote& v, const std::unordered_map<FeatureId, std::size_t>& idx) {
  auto find = [&](const FeatureId& id) {
    auto it = idx.find(id);
    if (it == idx.end())
      throw ValidationError("vote by '" + v.rater_id + "' references unknown feature '" + id +
                            "'");
    return it->second;
  };
  const std::size_t a = find(v.feature_a);
  const std::size_t b = find(v.feature_b);
  if (a == b)
    throw ValidationError("vote by '" + v.rater_id + "' compares '" + v.feature_a +
                          "' with itself");
  if (v.chosen == v.feature_a) return {a, b};
  if (v.chosen == v.feature_b) return {b, a};
  throw ValidationError("vote by '" + v.rater_id + "' chooses '" + v.chosen +
                        "', which is not one of the compared features");
}

/// wins[i*n+j] = times i was chosen over j.
inline std::vector<double> tally(std::span<const PairwiseVote> votes,
                                 const std::unordered_map<FeatureId, std::size_t>& idx,
                                 std::size_t n) {
  std::vector<double> wins(n * n, 0.0);
  for (const auto& v : votes) {
    auto [w, l] = resolve_vote(v, idx);
    wins[w * n + l] += 1.0;
  }
  return wins;
}

}  // namespace detail

inline ContingencyMatrix build_contingency_matrix(std::span<const PairwiseVote> votes,
                                                  const std::vector<FeatureId>& features,
                                                  const MatrixOptions& opts = {}) {
  if (!(opts.smoothing >= 0.0) || !std::isfinite(opts.smoothing))
    throw ValidationError("smoothing must be a non-negative count");
  const std::size_t n = features.size();
  const auto idx = detail::index_features(features);
  const auto wins = detail::tally(votes, idx, n);

  std::vector<double> e(n * n, 1.0);
  std::vector<std::string> uncompared;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double wij = wins[i * n + j];
      const double wji = wins[j * n + i];
      if (wij == 0.0 && wji == 0.0) {
        if (opts.uncompared == UncomparedPolicy::Error)
          uncompared.push_back("(" + features[i] + "," + features[j] + ")");
        continue;  // indifference
      }
      const double num = wij + opts.smoothing;
      const double den = wji + opts.smoothing;
      if (num == 0.0 || den == 0.0)
        throw ValidationError("pair (" + features[i] + "," + features[j] +
                              ") has a zero tally; use smoothing > 0");
      e[i * n + j] = num / den;
      e[j * n + i] = 1.0 / e[i * n + j];
    }
  if (!uncompared.empty()) {
    std::string msg = "uncomparable pair(s):";
    for (const auto& p : uncompared) msg += " " + p;
    throw ValidationError(msg);
  }
  return ContingencyMatrix(features, std::move(e), opts.smoothing);
}

/// Principal (Perron) eigenvector by power iteration from the uniform vector,
/// scaled to sum to one.
inline WeightSet principal_weights(const ContingencyMatrix& m,
                                   const PowerIterationOptions& opts = {},
                                   std::string source = "full") {
  const std::size_t n = m.size();
  if (n == 0) throw ValidationError("empty contingency matrix");
  const auto& a = m.entries();
  std::vector<double> v(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += a[i * n + j] * v[j];
      next[i] = acc;
      sum += acc;
    }
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] /= sum;
      delta = std::max(delta, std::abs(next[i] - v[i]));
    }
    v.swap(next);
    if (delta < opts.tolerance) return WeightSet::normalized(m.features(), v, std::move(source));
  }
  // Rayleigh-style residual ||Mv - lambda v||_inf with lambda = sum(Mv) (v sums to 1).
  std::vector<double> mv(n, 0.0);
  double lambda = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) mv[i] += a[i * n + j] * v[j];
    lambda += mv[i];
  }
  double residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::abs(mv[i] - lambda * v[i]));
  throw NumericalError("power iteration did not converge after " +
                       std::to_string(opts.max_iterations) +
                       " iterations (residual " + std::to_string(residual) + ")");
}

inline WeightSet subset_weights(const ContingencyMatrix& m, const std::vector<FeatureId>& keep,
                                const PowerIterationOptions& opts = {},
                                const std::string& parent = "full") {
  if (keep.size() < 2) throw ValidationError("subset must keep at least 2 features");
  ContingencyMatrix::check_unique(keep);
  // Keep the parent's order so subsets are independent of how `keep` is listed.
  std::vector<FeatureId> ordered;
  for (const auto& f : m.features())
    if (std::find(keep.begin(), keep.end(), f) != keep.end()) ordered.push_back(f);
  for (const auto& k : keep)
    if (!m.index_of(k)) throw ValidationError("unknown feature id '" + k + "'");
  return principal_weights(m.restrict_to(ordered), opts, "subset-of:" + parent);
}

namespace detail {

/// +1 if i beats j on majority, -1 if j beats i, 0 for a tie or no votes.
inline int majority(const std::vector<double>& wins, std::size_t n, std::size_t i,
                    std::size_t j) {
  const double a = wins[i * n + j];
  const double b = wins[j * n + i];
  return a > b ? 1 : (a < b ? -1 : 0);
}

struct TripleCount {
  std::size_t violations = 0;
  std::size_t evaluated = 0;
};

inline TripleCount count_cycles(const std::vector<double>& wins, std::size_t n) {
  TripleCount c;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const int ij = majority(wins, n, i, j);
      if (ij == 0) continue;
      for (std::size_t k = j + 1; k < n; ++k) {
        const int jk = majority(wins, n, j, k);
        const int ki = majority(wins, n, k, i);
        if (jk == 0 || ki == 0) continue;
        ++c.evaluated;
        if (ij == jk && jk == ki) ++c.violations;
      }
    }
  return c;
}

}  // namespace detail

/// Counts preference 3-cycles per rater and on the pooled majority relation.
/// Each unordered triple with all three pairs strictly decided is evaluated once.
inline TransitivityReport transitivity_report(std::span<const PairwiseVote> votes,
                                              const std::vector<FeatureId>& features) {
  const std::size_t n = features.size();
  const auto idx = detail::index_features(features);

  std::map<std::string, std::vector<PairwiseVote>> by_rater;
  for (const auto& v : votes) by_rater[v.rater_id].push_back(v);

  TransitivityReport r;
  for (const auto& [rater, rv] : by_rater)
    r.intra_rater[rater] = detail::count_cycles(detail::tally(rv, idx, n), n).violations;

  const auto pooled = detail::count_cycles(detail::tally(votes, idx, n), n);
  r.inter_rater_violations = pooled.violations;
  r.triples_evaluated = pooled.evaluated;
  r.violation_fraction = pooled.evaluated > 0
                             ? static_cast<double>(pooled.violations) /
                                   static_cast<double>(pooled.evaluated)
                             : 0.0;
  return r;
}

}  // namespace robotability
