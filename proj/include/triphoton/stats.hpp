#pragma once

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <vector>

#include "triphoton/error.hpp"

namespace triphoton {

struct ChiSquare {
  double chi2 = 0;
  std::size_t dof = 0;
  double p_value = 1;
};

inline double chi2_survival(double chi2, std::size_t dof) {
  if (dof == 0 || chi2 <= 0) return 1.0;
  return boost::math::gamma_q(0.5 * double(dof), 0.5 * chi2);
}

/// Two independent Poisson histograms of equal exposure: sum (a-b)^2/(a+b).
template <class A, class B>
ChiSquare compare_poisson(const std::vector<A>& a, const std::vector<B>& b) {
  if (a.size() != b.size()) throw InvalidParameter("histograms differ in size");
  ChiSquare r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double s = double(a[i]) + double(b[i]);
    if (s <= 0) continue;
    const double d = double(a[i]) - double(b[i]);
    r.chi2 += d * d / s;
    ++r.dof;
  }
  r.p_value = chi2_survival(r.chi2, r.dof);
  return r;
}

/// Pearson goodness of fit of counts against expectations. Bins are pooled in
/// order until each pooled expectation reaches `min_expected`.
template <class A>
ChiSquare goodness_of_fit(const std::vector<A>& observed, const std::vector<double>& expected,
                          double min_expected = 5.0) {
  if (observed.size() != expected.size()) throw InvalidParameter("observed and expected differ in size");
  ChiSquare r;
  double o = 0, e = 0;
  std::size_t groups = 0;
  auto flush = [&] {
    if (e > 0) {
      r.chi2 += (o - e) * (o - e) / e;
      ++groups;
    }
    o = e = 0;
  };
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o += double(observed[i]);
    e += expected[i];
    if (e >= min_expected) flush();
  }
  flush();
  r.dof = groups > 0 ? groups - 1 : 0;
  r.p_value = chi2_survival(r.chi2, r.dof);
  return r;
}

template <class A, class B>
double pearson(const std::vector<A>& a, const std::vector<B>& b) {
  if (a.size() != b.size() || a.empty()) throw InvalidParameter("pearson needs equal non-empty inputs");
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += double(a[i]);
    mb += double(b[i]);
  }
  ma /= double(a.size());
  mb /= double(b.size());
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = double(a[i]) - ma, y = double(b[i]) - mb;
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  if (saa <= 0 || sbb <= 0) return 0;
  return sab / std::sqrt(saa * sbb);
}

/// Signed Gaussian-equivalent deviation of a Poisson count from mean mu, from
/// the exact tail probability.
inline double poisson_deviation_sigma(double count, double mu) {
  if (mu <= 0) return count > 0 ? 40.0 : 0.0;
  boost::math::normal n;
  if (count > mu) {
    const double tail = boost::math::gamma_p(count, mu);  // P(X >= count)
    if (tail <= 0) return 40.0;
    return std::min(40.0, boost::math::quantile(boost::math::complement(n, tail)));
  }
  if (count < mu) {
    const double tail = boost::math::gamma_q(count + 1.0, mu);  // P(X <= count)
    if (tail >= 0.5) return 0.0;
    if (tail <= 0) return -40.0;
    return std::max(-40.0, boost::math::quantile(n, tail));
  }
  return 0.0;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0;
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + std::ptrdiff_t(m), v.end());
  const double hi = v[m];
  if (v.size() % 2) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + std::ptrdiff_t(m)));
}

}  // namespace triphoton
