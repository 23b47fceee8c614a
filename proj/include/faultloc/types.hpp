#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <string>

namespace faultloc {

using Complex = std::complex<double>;

/// External 1-based bus label as written in a case file.
using BusLabel = int;

/// Symmetrical-component sequence. The numeric value is the conventional
/// superscript (0 zero, 1 positive, 2 negative) and doubles as an array index.
enum class Sequence : int { zero = 0, positive = 1, negative = 2 };

inline constexpr std::array<Sequence, 3> kAllSequences{Sequence::zero, Sequence::positive,
                                                       Sequence::negative};

inline constexpr std::size_t index_of(Sequence s) { return static_cast<std::size_t>(s); }

/// Per-sequence values indexed by index_of(Sequence).
using SequenceTriple = std::array<Complex, 3>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace faultloc
