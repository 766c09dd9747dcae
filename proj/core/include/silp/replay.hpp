#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "silp/env.hpp"
#include "silp/rng.hpp"

namespace silp {

// Fixed-capacity ring buffer of transitions with uniform batch sampling.
// Used both for the policy's replay memory and for the demonstration store.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 1000000);

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t total_pushed() const { return pushed_; }
  bool empty() const { return data_.empty(); }

  const Transition& operator[](std::size_t i) const { return data_[i]; }

  // n i.i.d. uniform indices over the current fill. Throws when n exceeds
  // the fill (batches never oversample an underfilled buffer).
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;

  // Column layout: s (flattened), a, s_next (flattened), r, done, collision.
  void dump_csv(std::ostream& out) const;
  static ReplayBuffer load_csv(std::istream& in, int n_joints,
                               std::size_t capacity = 1000000);

 private:
  std::vector<Transition> data_;
  std::size_t capacity_;
  std::size_t next_ = 0;      // overwrite cursor once full
  std::uint64_t pushed_ = 0;
};

}  // namespace silp
