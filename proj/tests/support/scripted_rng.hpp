#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace recloop::testing {

/// Replays a fixed list of engine outputs; throws when exhausted.
class ScriptedRng {
 public:
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  explicit ScriptedRng(std::vector<result_type> outputs) : outputs_(std::move(outputs)) {}

  result_type operator()() {
    if (next_ >= outputs_.size()) throw std::out_of_range("scripted rng exhausted");
    return outputs_[next_++];
  }

  std::size_t consumed() const { return next_; }

  /// Engine output that uniform01 maps to u rounded down to a multiple of 2^-53.
  static result_type for_uniform(double u) {
    return static_cast<result_type>(u * 0x1.0p53) << 11;
  }

 private:
  std::vector<result_type> outputs_;
  std::size_t next_ = 0;
};

}  // namespace recloop::testing
