// Copyright 2026 The qpflow Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QPFLOW_COMMON_HPP
#define QPFLOW_COMMON_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace qpflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed instance file (carries the offending line number in the message).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Demands that cannot be routed (column sums, cross-component demand).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Parameter or argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Compensated (Kahan) accumulator. Keeps long sums accurate when terms
/// span many orders of magnitude.
class KahanSum {
 public:
  void add(double v) {
    const double y = v - compensation_;
    const double t = sum_ + y;
    compensation_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// |x|^r with fast paths for the exponents that dominate the hot loops.
inline double pow_abs(double x, double r) {
  const double a = std::abs(x);
  if (r == 2.0) return a * a;
  if (r == 1.0) return a;
  if (r == 3.0) return a * a * a;
  if (r == 4.0) {
    const double s = a * a;
    return s * s;
  }
  if (a == 0.0) {
    if (r == 0.0) return 1.0;
    return r > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return std::pow(a, r);
}

/// |x|^r * sign(x); 0 at x = 0.
inline double signed_pow(double x, double r) {
  if (x == 0.0) return 0.0;
  const double m = pow_abs(x, r);
  return x > 0.0 ? m : -m;
}

/// Runs fn(begin, end) over disjoint chunks of [0, n). The chunk layout
/// depends only on n and chunk_size, never on the thread count, so any
/// chunk-indexed computation stays deterministic under --threads.
inline void parallel_chunks(std::int64_t n, std::int64_t chunk_size, int threads,
                            const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  if (chunk_size <= 0) chunk_size = 1;
  const std::int64_t num_chunks = (n + chunk_size - 1) / chunk_size;
  if (threads <= 1 || num_chunks == 1) {
    for (std::int64_t c = 0; c < num_chunks; ++c) {
      fn(c * chunk_size, std::min(n, (c + 1) * chunk_size));
    }
    return;
  }
  std::vector<std::thread> pool;
  const int workers = static_cast<int>(std::min<std::int64_t>(threads, num_chunks));
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::int64_t c = w; c < num_chunks; c += workers) {
        fn(c * chunk_size, std::min(n, (c + 1) * chunk_size));
      }
    });
  }
  for (auto& t : pool) t.join();
}

inline int default_thread_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// splitmix64; used to derive independent RNG streams from one seed.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace qpflow

#endif  // QPFLOW_COMMON_HPP
