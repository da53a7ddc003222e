#include "tabctx/quota.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace tabctx {

std::vector<std::size_t> largest_remainder(std::size_t total, std::span<const std::size_t> weights) {
    using u128 = unsigned __int128;
    const u128 sum = std::accumulate(weights.begin(), weights.end(), u128{0});
    std::vector<std::size_t> out(weights.size(), 0);
    if (sum == 0) {
        if (total != 0) throw std::invalid_argument("largest_remainder: all weights are zero");
        return out;
    }
    std::vector<u128> rem(weights.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const u128 prod = u128{total} * weights[i];
        out[i] = static_cast<std::size_t>(prod / sum);
        rem[i] = prod % sum;
        assigned += out[i];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (rem[a] != rem[b]) return rem[a] > rem[b];
        return weights[a] > weights[b];
    });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[order[k % order.size()]];
    return out;
}

}  // namespace tabctx
