#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace playerform {

inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Errors. Every failure mode callers are expected to handle gets its own type
// so tests can assert on it; all derive from Error for blanket catches.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PF_ERROR_TYPE(Name)                \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

PF_ERROR_TYPE(IllegalDelta);        // delta not reachable from the given state
PF_ERROR_TYPE(InconsistentStates);  // before/after snapshots cannot be bridged
PF_ERROR_TYPE(SchemaMismatch);      // CSV header missing or misordered columns
PF_ERROR_TYPE(DuplicateKey);        // repeated (game, ab, pitch) key
PF_ERROR_TYPE(IllegalTransition);   // replay hit a transition the rules forbid
PF_ERROR_TYPE(UnknownPlayer);       // id not present in the corpus
PF_ERROR_TYPE(InsufficientHistory); // not enough at-bats to build a window
PF_ERROR_TYPE(SequenceOverflow);    // view longer than the model's max_len
PF_ERROR_TYPE(IdOutOfRange);        // embedding id outside its table
PF_ERROR_TYPE(ShapeMismatch);       // tensor dimensions disagree
PF_ERROR_TYPE(BadPairing);          // contrastive batch rows not paired 2i/2i+1
PF_ERROR_TYPE(NoMaskedPositions);   // MGM loss over an empty mask set
PF_ERROR_TYPE(NonFiniteGradient);   // NaN/inf gradient during training
PF_ERROR_TYPE(CheckpointMismatch);  // checkpoint config/shape disagrees
PF_ERROR_TYPE(RankDeficient);       // PCA asked for more components than rank
PF_ERROR_TYPE(EmptyInput);          // operation on an empty collection
PF_ERROR_TYPE(StaleManifest);       // stage inputs changed since manifest write
PF_ERROR_TYPE(MissingStage);        // required pipeline stage has not run
PF_ERROR_TYPE(ParseError);          // malformed file content

#undef PF_ERROR_TYPE

// ---------------------------------------------------------------------------
// Deterministic RNG. SplitMix64 core; uniform doubles use the top 53 bits so
// every platform with IEEE doubles produces identical streams. std::
// distributions are implementation-defined and must not appear anywhere in
// pipeline code.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // [0, n), unbiased via rejection
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw Error("Rng::below called with n == 0");
    std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  int uniform_int(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

  bool bernoulli(double p) { return uniform() < p; }

  // standard normal, Box-Muller (trig form), one value cached
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // index into unnormalized non-negative weights
  int categorical(const double* w, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += w[i];
    if (total <= 0.0) throw Error("categorical: weights sum to zero");
    double x = uniform() * total;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += w[i];
      if (x < acc) return i;
    }
    return n - 1;
  }

  template <std::size_t N>
  int categorical(const std::array<double, N>& w) {
    return categorical(w.data(), static_cast<int>(N));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // derives an independent stream, e.g. per game or per training step
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// ---------------------------------------------------------------------------
// FNV-1a 64-bit content hashes, used for manifest input/output fingerprints.
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

std::uint64_t hash_file(const std::filesystem::path& path);  // throws Error if unreadable

std::string to_hex(std::uint64_t v);

// ---------------------------------------------------------------------------
// Number formatting. std::to_chars shortest round-trip form keeps artifact
// files byte-stable across runs; never stream raw doubles into output files.
// ---------------------------------------------------------------------------

inline std::string fmt_double(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

inline std::string fmt_float(float v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

inline std::string fmt_fixed(double v, int precision) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view s);       // throws ParseError
long long parse_int(std::string_view s);       // throws ParseError

// ---------------------------------------------------------------------------
// Small file helpers.
// ---------------------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path);
// write to <path>.tmp then rename, so partially written artifacts never exist
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);
void write_binary_file_atomic(const std::filesystem::path& path, const void* data, std::size_t n);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, char sep);

}  // namespace playerform
