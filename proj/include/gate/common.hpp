#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gate {

enum class ErrorCode {
  invalid,     // bad arguments, broken invariants
  shape,       // tensor shape mismatch
  config,      // unusable run configuration
  io,          // file system / parse failures
  corrupt,     // damaged checkpoint payload
  divergence,  // training loss blew up
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

// Summation over a fixed binary reduction tree.
double pairwise_sum(std::span<const double> xs);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);
std::uint64_t fnv1a64(const void* data, std::size_t n,
                      std::uint64_t state = 14695981039346656037ULL);

}  // namespace gate
