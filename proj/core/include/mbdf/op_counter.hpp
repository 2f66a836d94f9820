#pragma once

#include <cstdint>

namespace mbdf {

// Tally of complex multiplications and additions. Every instrumented routine
// accepts an optional OpCounter* and leaves it untouched when null.
struct OpCounter {
  std::uint64_t mults = 0;
  std::uint64_t adds = 0;

  void reset() { mults = adds = 0; }

  OpCounter& operator+=(const OpCounter& o) {
    mults += o.mults;
    adds += o.adds;
    return *this;
  }

  friend bool operator==(const OpCounter&, const OpCounter&) = default;
};

namespace ops {

inline void mul(OpCounter* c, std::uint64_t n = 1) {
  if (c) c->mults += n;
}

inline void add(OpCounter* c, std::uint64_t n = 1) {
  if (c) c->adds += n;
}

// rows x cols matrix times a vector.
inline void matvec(OpCounter* c, std::uint64_t rows, std::uint64_t cols) {
  mul(c, rows * cols);
  if (cols > 0) add(c, rows * (cols - 1));
}

// Inner product of two length-n vectors.
inline void dot(OpCounter* c, std::uint64_t n) {
  mul(c, n);
  if (n > 0) add(c, n - 1);
}

}  // namespace ops
}  // namespace mbdf
