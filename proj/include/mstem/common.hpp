#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mstem {

using Scalar = double;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Error categories. The CLI maps these onto exit codes:
// usage/parameter/contract -> 1, data -> 2, numeric -> 3.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline std::string shape_str(Index rows, Index cols) {
  std::ostringstream os;
  os << rows << "x" << cols;
  return os.str();
}

inline std::string shape_str(const Matrix& m) { return shape_str(m.rows(), m.cols()); }

inline DimensionError dimension_mismatch(std::string_view op, const Matrix& a, const Matrix& b) {
  std::ostringstream os;
  os << op << ": incompatible shapes " << shape_str(a) << " and " << shape_str(b);
  return DimensionError(os.str());
}

// Uniform in [0,1) from the top 53 bits of the generator output. Pinned here
// instead of std::uniform_real_distribution so streams are identical across
// standard-library implementations.
inline Scalar uniform01(std::mt19937_64& gen) {
  return static_cast<Scalar>(gen() >> 11) * 0x1.0p-53;
}

inline Scalar uniform_symmetric(std::mt19937_64& gen, Scalar limit) {
  return (Scalar(2) * uniform01(gen) - Scalar(1)) * limit;
}

// splitmix64 finalizer; used to derive independent seed streams from
// (seed, salt) pairs, e.g. the per-epoch shuffle.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Fisher-Yates with an explicit bounded draw; std::shuffle leaves the
// algorithm unspecified, this one is fixed.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::mt19937_64& gen) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform01(gen) * static_cast<Scalar>(i));
    if (j >= i) j = i - 1;
    std::swap(items[i - 1], items[j]);
  }
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t value);

// ISO-8601 UTC timestamps ("2023-01-31T17:00:00Z"); a space separator and a
// missing Z suffix are accepted on input. Epoch seconds throughout.
std::int64_t parse_iso8601_utc(std::string_view text);
std::string format_iso8601_utc(std::int64_t epoch_seconds);

constexpr std::int64_t kSecondsPerHour = 3600;

}  // namespace mstem
