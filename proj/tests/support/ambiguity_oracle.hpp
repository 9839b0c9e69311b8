// SPDX-License-Identifier: Apache-2.0
//
// Straight-line reference for the ambiguity score, written without the
// library: extended precision, no shared helpers.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace kgqa::oracle {

inline std::vector<long double> softmax_ld(const std::vector<long double>& x) {
  long double hi = x[0];
  for (auto v : x) hi = v > hi ? v : hi;
  std::vector<long double> out;
  long double z = 0;
  for (auto v : x) {
    out.push_back(std::exp(v - hi));
    z += out.back();
  }
  for (auto& v : out) v /= z;
  return out;
}

inline std::vector<double> posterior(const std::vector<double>& weights, const std::vector<double>& ppl) {
  const std::size_t n = weights.size();
  long double total = 0;
  for (double w : weights) total += w;
  std::vector<long double> raw(n), prior(n);
  for (std::size_t i = 0; i < n; ++i) {
    prior[i] = total > 0 ? weights[i] / total : 1.0L / n;
    raw[i] = 1.0L / ppl[i];
  }
  auto likelihood = softmax_ld(raw);
  std::vector<long double> joint(n);
  for (std::size_t i = 0; i < n; ++i) joint[i] = likelihood[i] * prior[i];
  auto post = softmax_ld(joint);
  return {post.begin(), post.end()};
}

inline double entropy_score(const std::vector<double>& p) {
  if (p.size() < 2) return 0.0;
  long double h = 0;
  for (double v : p) {
    if (v > 0) h -= static_cast<long double>(v) * std::log(static_cast<long double>(v));
  }
  return static_cast<double>(h / std::log(static_cast<long double>(p.size())));
}

inline double ambiguity(const std::vector<double>& weights, const std::vector<double>& ppl) {
  return weights.size() < 2 ? 0.0 : entropy_score(posterior(weights, ppl));
}

}  // namespace kgqa::oracle
