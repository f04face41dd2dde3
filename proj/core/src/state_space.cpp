#include "tandem/state_space.hpp"

#include <algorithm>
#include <functional>
#include <limits>

#include <fmt/format.h>

#include "tandem/error.hpp"

namespace tandem {

StateSpace::StateSpace(std::span<const int> buffers) {
  if (buffers.empty()) throw ConfigError("state space needs at least one station");
  constexpr std::size_t kLimit = static_cast<std::size_t>(std::numeric_limits<int>::max());
  dims_.reserve(buffers.size());
  for (int b : buffers) {
    if (b < 0) throw ConfigError(fmt::format("buffer sizes must be non-negative, got {}", b));
    if (b > std::numeric_limits<int>::max() - 2) throw CapacityError("buffer size too large");
    auto dim = static_cast<std::size_t>(b) + 2;
    if (size_ > kLimit / dim) {
      throw CapacityError("state space size exceeds the supported index range");
    }
    size_ *= dim;
    dims_.push_back(b + 2);
  }
  strides_.assign(dims_.size(), 1);
  for (std::size_t j = dims_.size() - 1; j > 0; --j) {
    strides_[j - 1] = strides_[j] * static_cast<std::size_t>(dims_[j]);
  }
}

std::size_t StateSpace::index(std::span<const int> state) const {
  if (state.size() != dims_.size()) throw DomainError("state has the wrong number of stations");
  std::size_t i = 0;
  for (std::size_t j = 0; j < dims_.size(); ++j) {
    if (state[j] < 0 || state[j] >= dims_[j]) {
      throw DomainError(fmt::format("station {} occupancy {} out of range", j + 1, state[j]));
    }
    i += static_cast<std::size_t>(state[j]) * strides_[j];
  }
  return i;
}

std::vector<int> StateSpace::state(std::size_t index) const {
  if (index >= size_) throw DomainError("state index out of range");
  std::vector<int> s(dims_.size());
  for (std::size_t j = 0; j < dims_.size(); ++j) s[j] = occupancy(index, j);
  return s;
}

StateSpace enumerate_states(std::span<const int> buffers) { return StateSpace(buffers); }

PricingPolicy PricingPolicy::constant(std::size_t states, std::size_t price_index) {
  return PricingPolicy(std::vector<std::size_t>(states, price_index));
}

PricingPolicy PricingPolicy::from_indices(std::vector<std::size_t> indices,
                                          std::size_t price_count) {
  for (std::size_t a : indices) {
    if (a >= price_count) {
      throw DomainError(fmt::format("policy price index {} outside price set of size {}", a,
                                    price_count));
    }
  }
  return PricingPolicy(std::move(indices));
}

bool PricingPolicy::is_static() const noexcept {
  return std::adjacent_find(table_.begin(), table_.end(), std::not_equal_to<>()) == table_.end();
}

}  // namespace tandem
