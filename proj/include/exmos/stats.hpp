// Copyright 2026 The exmos Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Descriptive statistics over Eigen vectors and column expressions.
//
// All functions accept any dense Eigen expression (a column block, a
// mapped std::vector, an Eigen::VectorXd) and evaluate it once.

#ifndef EXMOS_STATS_HPP_
#define EXMOS_STATS_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace exmos::stats {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Ascending copy of the values.
template <typename Derived>
Vector<typename Derived::Scalar> sorted(const Eigen::DenseBase<Derived>& x) {
  Vector<typename Derived::Scalar> v = x.derived();
  std::sort(v.data(), v.data() + v.size());
  return v;
}

/// Quantile of already-sorted data by linear interpolation between closest
/// ranks (Hyndman-Fan type 7). p in [0, 1]; sorted must be nonempty.
template <typename Derived>
typename Derived::Scalar quantile_sorted(const Eigen::DenseBase<Derived>& sorted,
                                         double p) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = sorted.size();
  const double h = static_cast<double>(n - 1) * p;
  const auto lo = static_cast<Eigen::Index>(std::floor(h));
  const Eigen::Index hi = std::min<Eigen::Index>(lo + 1, n - 1);
  const Scalar frac = static_cast<Scalar>(h - static_cast<double>(lo));
  return sorted(lo) + frac * (sorted(hi) - sorted(lo));
}

template <typename Derived>
typename Derived::Scalar quantile(const Eigen::DenseBase<Derived>& x, double p) {
  return quantile_sorted(sorted(x), p);
}

template <typename Scalar>
struct Quartiles {
  Scalar q1;
  Scalar q2;
  Scalar q3;
};

template <typename Derived>
Quartiles<typename Derived::Scalar> quartiles(const Eigen::DenseBase<Derived>& x) {
  const auto s = sorted(x);
  return {quantile_sorted(s, 0.25), quantile_sorted(s, 0.5),
          quantile_sorted(s, 0.75)};
}

/// Tukey fences [q1 - k*iqr, q3 + k*iqr].
template <typename Scalar>
struct Fences {
  Scalar lower;
  Scalar upper;

  bool outside(Scalar v) const { return v < lower || v > upper; }
};

template <typename Derived>
Fences<typename Derived::Scalar> tukey_fences(const Eigen::DenseBase<Derived>& x,
                                              double multiplier = 1.5) {
  const auto q = quartiles(x);
  const auto iqr = q.q3 - q.q1;
  return {q.q1 - multiplier * iqr, q.q3 + multiplier * iqr};
}

template <typename Derived>
bool is_constant(const Eigen::DenseBase<Derived>& x) {
  return x.size() == 0 || x.minCoeff() == x.maxCoeff();
}

/// Population central moment of the given order.
template <typename Derived>
typename Derived::Scalar central_moment(const Eigen::DenseBase<Derived>& x,
                                        int order) {
  const auto centered = (x.derived().array() - x.derived().mean()).eval();
  return centered.pow(order).mean();
}

/// Fisher moment skewness g1 = m3 / m2^(3/2). Empty for constant data.
template <typename Derived>
std::optional<typename Derived::Scalar> skewness(const Eigen::DenseBase<Derived>& x) {
  if (x.size() < 2 || is_constant(x)) return std::nullopt;
  const auto centered = (x.derived().array() - x.derived().mean()).eval();
  const auto m2 = centered.square().mean();
  const auto m3 = centered.cube().mean();
  return m3 / std::pow(m2, typename Derived::Scalar(1.5));
}

/// Pearson correlation. Empty when either side is constant.
template <typename DerivedA, typename DerivedB>
std::optional<typename DerivedA::Scalar> pearson(const Eigen::DenseBase<DerivedA>& a,
                                                 const Eigen::DenseBase<DerivedB>& b) {
  if (a.size() != b.size() || a.size() < 2 || is_constant(a) || is_constant(b)) {
    return std::nullopt;
  }
  const auto ca = (a.derived().array() - a.derived().mean()).eval();
  const auto cb = (b.derived().array() - b.derived().mean()).eval();
  const auto sab = (ca * cb).sum();
  const auto saa = ca.square().sum();
  const auto sbb = cb.square().sum();
  auto r = sab / std::sqrt(saa * sbb);
  return std::clamp(r, decltype(r)(-1), decltype(r)(1));
}

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
///
/// Evaluated on integer count differences |c_a * n_b - c_b * n_a| so the
/// only rounding is the final division.
template <typename DerivedA, typename DerivedB>
double ks_statistic(const Eigen::DenseBase<DerivedA>& a,
                    const Eigen::DenseBase<DerivedB>& b) {
  const auto sa = sorted(a);
  const auto sb = sorted(b);
  const auto na = static_cast<std::int64_t>(sa.size());
  const auto nb = static_cast<std::int64_t>(sb.size());
  if (na == 0 || nb == 0) return 0.0;
  std::int64_t i = 0, j = 0, best = 0;
  while (i < na && j < nb) {
    const auto v = std::min(sa(i), sb(j));
    while (i < na && sa(i) == v) ++i;
    while (j < nb && sb(j) == v) ++j;
    best = std::max(best, std::abs(i * nb - j * na));
  }
  return static_cast<double>(best) / static_cast<double>(na * nb);
}

}  // namespace exmos::stats

#endif  // EXMOS_STATS_HPP_
