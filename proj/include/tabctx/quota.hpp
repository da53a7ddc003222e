#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tabctx {

// Splits `total` into integer shares proportional to `weights` using the
// largest-remainder (Hamilton) rule. Remainders are compared exactly; ties go
// to the larger weight, then to the lower index.
std::vector<std::size_t> largest_remainder(std::size_t total, std::span<const std::size_t> weights);

}  // namespace tabctx
