#include "vlcbreak/keyspace.hpp"

#include <cmath>

namespace vlcbreak {

double round_tenth(double v) { return std::round(v * 10.0) / 10.0; }

KeyCount make_count(Count v) { return {v, round_tenth(log2_count(v))}; }

Count table_count(const KeySpaceShape& shape) { return shape.cardinality(); }
Count table_count(TableRole role) { return standard_shape(role).cardinality(); }

KeyCount naive_product(const SchemeShape& shapes) {
  Count p = 1;
  for (const auto& s : shapes) p *= s.cardinality();
  return make_count(p);
}

KeyCount dac_complexity(const AttackScenario& s, const SchemeShape& shapes) {
  if (!s.include_b15) throw Error(Errc::InvalidScenario, "use partial_key_complexity when B15 is excluded");
  auto c = [&](TableRole r) { return shapes[role_index(r)].cardinality(); };
  Count rest = s.b12_with_b15 ? c(TableRole::B12) * c(TableRole::B15) + c(TableRole::B13) + c(TableRole::B14)
                              : c(TableRole::B12) + c(TableRole::B13) + c(TableRole::B14) + c(TableRole::B15);
  Count total = s.b10_separate ? c(TableRole::B10) + rest : c(TableRole::B10) * rest;
  return make_count(total);
}

KeyCount partial_key_complexity(bool b10_separate, const SchemeShape& shapes) {
  auto c = [&](TableRole r) { return shapes[role_index(r)].cardinality(); };
  Count rest = c(TableRole::B12) + c(TableRole::B13) + c(TableRole::B14);
  return make_count(b10_separate ? c(TableRole::B10) + rest : c(TableRole::B10) * rest);
}

double error_probability(double p, std::uint64_t length) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::DomainError, "probability outside [0, 1]");
  return 1.0 - std::pow(1.0 - p, static_cast<double>(length));
}

std::uint64_t syntax_element_count(std::uint64_t width, std::uint64_t height, double lambda) {
  if (!(lambda >= 1.0 / 64.0 && lambda <= 1.0)) throw Error(Errc::DomainError, "lambda outside [1/64, 1]");
  return static_cast<std::uint64_t>(std::llround(6.0 * static_cast<double>(width) * static_cast<double>(height) * lambda));
}

}  // namespace vlcbreak
