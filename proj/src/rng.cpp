#include "gate/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace gate {

Rng Rng::derive(std::uint64_t seed, std::string_view tag, std::uint64_t a,
                std::uint64_t b) {
  std::uint64_t s = splitmix64(seed ^ fnv1a64(tag));
  s = splitmix64(s ^ (a + 1) * 0x9E3779B97F4A7C15ULL);
  s = splitmix64(s ^ (b + 1) * 0xC2B2AE3D27D4EB4FULL);
  return Rng(s);
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) fail(ErrorCode::invalid, "Rng::index: n must be positive");
  const std::uint64_t span = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return static_cast<std::size_t>(x % span);
}

std::string Rng::save_state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::restore_state(const std::string& text) {
  std::istringstream is(text);
  is >> engine_;
  if (is.fail()) fail(ErrorCode::corrupt, "Rng: unreadable engine state");
}

}  // namespace gate
