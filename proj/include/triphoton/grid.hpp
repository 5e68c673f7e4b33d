#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "triphoton/error.hpp"

namespace triphoton {

struct Axis {
  std::string name;
  std::string unit;
  double start = 0;
  double step = 1;
  std::size_t size = 0;

  static Axis linspace(std::string name, std::string unit, double lo, double hi, std::size_t n) {
    if (n == 0) throw InvalidParameter("axis needs at least one sample");
    if (n > 1 && !(hi > lo)) throw InvalidParameter("axis must be strictly increasing");
    return {std::move(name), std::move(unit), lo, n > 1 ? (hi - lo) / double(n - 1) : 1.0, n};
  }

  double operator[](std::size_t i) const { return start + step * double(i); }
  double back() const { return (*this)[size - 1]; }
  bool contains(double x) const { return x >= start && x <= back(); }
  std::vector<double> values() const {
    std::vector<double> v(size);
    for (std::size_t i = 0; i < size; ++i) v[i] = (*this)[i];
    return v;
  }
};

template <class T>
struct Grid2D {
  Axis axis1, axis2;  // axis1 indexes rows
  std::vector<T> values;
  std::string provenance;

  Grid2D() = default;
  Grid2D(Axis a1, Axis a2) : axis1(std::move(a1)), axis2(std::move(a2)), values(axis1.size * axis2.size) {}

  std::size_t rows() const { return axis1.size; }
  std::size_t cols() const { return axis2.size; }
  T& operator()(std::size_t i, std::size_t j) { return values[i * axis2.size + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return values[i * axis2.size + j]; }
};

using ComplexGrid2D = Grid2D<std::complex<double>>;
using RealGrid2D = Grid2D<double>;

inline unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs body(i) for i in [0, n) on interleaved threads. Each index is touched by
/// exactly one thread, so results written per index are independent of the split.
template <class F>
void parallel_for(std::size_t n, F&& body, unsigned threads = 0) {
  if (threads == 0) threads = worker_count();
  threads = unsigned(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(threads);
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) body(i);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace triphoton
