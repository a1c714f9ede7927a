#pragma once

#include <cstdint>

#include "vlcbreak/cipher.hpp"
#include "vlcbreak/count.hpp"

namespace vlcbreak {

/// Which tables a ciphertext-only search can break on their own.
struct AttackScenario {
  bool b10_separate = true;
  bool b12_with_b15 = false;
  bool include_b15 = true;
};

struct KeyCount {
  Count value = 0;
  double log2 = 0.0;  // rounded to one decimal
};

double round_tenth(double v);
KeyCount make_count(Count v);

Count table_count(TableRole role);
Count table_count(const KeySpaceShape& shape);

KeyCount naive_product(const SchemeShape& shapes = standard_shapes());

/// Sum of per-table searches for one of the four ciphertext-only cases.
/// Throws Error(InvalidScenario) when include_b15 is false.
KeyCount dac_complexity(const AttackScenario& s, const SchemeShape& shapes = standard_shapes());

/// Search size when B15 never occurs in the target.
KeyCount partial_key_complexity(bool b10_separate, const SchemeShape& shapes = standard_shapes());

/// 1 - (1 - p)^L. Throws Error(DomainError) when p is outside [0, 1].
double error_probability(double p, std::uint64_t length);

/// round(6 * M * N * lambda), lambda in [1/64, 1].
std::uint64_t syntax_element_count(std::uint64_t width, std::uint64_t height, double lambda);

}  // namespace vlcbreak
