#pragma once

#include <cstdint>
#include <stdexcept>

namespace netlab {

// Two time scales: slot t and super slot tau = floor(t / T).
struct SlotClock {
  std::int64_t t = 0;
  std::int64_t tau = 0;
  std::int64_t T = 1;

  SlotClock() = default;
  explicit SlotClock(std::int64_t slots_per_super, std::int64_t start = 0) : t(start), T(slots_per_super) {
    if (T < 1) throw std::invalid_argument("super slot length must be >= 1");
    if (t < 0) throw std::invalid_argument("negative start slot");
    tau = t / T;
  }

  bool at_super_boundary() const { return t % T == 0; }
  std::int64_t slot_in_super() const { return t % T; }
};

inline SlotClock advance(SlotClock c) {
  ++c.t;
  c.tau = c.t / c.T;
  return c;
}

}  // namespace netlab
