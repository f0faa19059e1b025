#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace conreader {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Seeded random stream. Named sub-streams keep parallelizable stages
// reproducible regardless of evaluation order.
class Rng {
 public:
  explicit Rng(uint64_t seed)
      : engine_(splitmix64(seed)), seed_hashable_(splitmix64(seed)) {}

  Rng derive(std::string_view name) const {
    return Rng::from_mixed(splitmix64(seed_hashable_ ^ fnv1a(name)));
  }

  uint64_t next_u64() { return engine_(); }

  int uniform_int(int lo, int hi) {  // inclusive
    std::uniform_int_distribution<int> d(lo, hi);
    return d(engine_);
  }
  double uniform_real(double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(engine_);
  }
  double normal(double mean = 0.0, double sd = 1.0) {
    std::normal_distribution<double> d(mean, sd);
    return d(engine_);
  }
  bool bernoulli(double p) {
    std::bernoulli_distribution d(p);
    return d(engine_);
  }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    std::shuffle(v.begin(), v.end(), engine_);
  }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<size_t>(uniform_int(0, static_cast<int>(v.size()) - 1))];
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  explicit Rng(uint64_t mixed, bool) : engine_(mixed), seed_hashable_(mixed) {}
  std::mt19937_64 engine_;
  uint64_t seed_hashable_ = 0;

 public:
  // keep the mixing seed so derive() composes
  static Rng from_mixed(uint64_t mixed) { return Rng(mixed, true); }
};

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Lowercased alphanumeric runs; the unit used by Jaccard and Soft-F1.
inline std::vector<std::string> split_alnum_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

// Shortest round-trippable decimal form, stable across runs.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace conreader
