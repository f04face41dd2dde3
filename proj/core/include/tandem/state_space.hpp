#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tandem/market.hpp"

namespace tandem {

/// Product state space [B_1+1] x ... x [B_J+1] of station occupancies.
///
/// States are encoded mixed-radix with station 1 as the most significant
/// digit, so index 0 is the empty system and neighbours are one stride away.
class StateSpace {
 public:
  // Throws CapacityError if the product of (B_j + 2) exceeds the solver's
  // index range (int).
  explicit StateSpace(std::span<const int> buffers);

  std::size_t size() const noexcept { return size_; }
  std::size_t stations() const noexcept { return dims_.size(); }
  std::span<const int> dims() const noexcept { return dims_; }
  std::size_t stride(std::size_t j) const { return strides_.at(j); }

  // Capacity of station j, i.e. B_j + 1.
  int capacity(std::size_t j) const { return dims_.at(j) - 1; }

  std::size_t index(std::span<const int> state) const;
  std::vector<int> state(std::size_t index) const;
  int occupancy(std::size_t index, std::size_t j) const {
    return static_cast<int>((index / strides_[j]) % static_cast<std::size_t>(dims_[j]));
  }

 private:
  std::vector<int> dims_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 1;
};

StateSpace enumerate_states(std::span<const int> buffers);

/// Markovian deterministic stationary pricing policy, stored as a dense table
/// of indices into the market's price set. Storing indices means every
/// assigned price is a member of the set by construction.
class PricingPolicy {
 public:
  static PricingPolicy constant(std::size_t states, std::size_t price_index);
  // Each entry must be < price_count; DomainError otherwise.
  static PricingPolicy from_indices(std::vector<std::size_t> indices, std::size_t price_count);

  std::size_t size() const noexcept { return table_.size(); }
  std::size_t operator[](std::size_t state) const { return table_[state]; }
  std::size_t& operator[](std::size_t state) { return table_[state]; }
  std::span<const std::size_t> table() const noexcept { return table_; }

  bool is_static() const noexcept;

  bool operator==(const PricingPolicy&) const = default;

 private:
  explicit PricingPolicy(std::vector<std::size_t> table) : table_(std::move(table)) {}
  std::vector<std::size_t> table_;
};

}  // namespace tandem
