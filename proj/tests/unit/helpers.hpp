#pragma once

#include <string>
#include <vector>

#include <tabctx/random.hpp>
#include <tabctx/table.hpp>

namespace testutil {

inline tabctx::Table labeled(std::vector<double> x, std::vector<int> y) {
    std::vector<double> yd(y.begin(), y.end());
    return tabctx::Table({tabctx::Column::numeric("x", std::move(x)), tabctx::Column::numeric("y", std::move(yd))},
                         {}, std::string("y"));
}

// n0 class-0 rows then n1 class-1 rows, `dims` numeric features; class 1 is
// shifted by `shift` in every dimension.
inline tabctx::Table gaussian_pool(std::size_t n0, std::size_t n1, std::size_t dims, double shift,
                                   std::uint64_t seed) {
    tabctx::Rng rng(seed);
    std::vector<std::vector<double>> cols(dims);
    std::vector<double> y;
    for (std::size_t i = 0; i < n0 + n1; ++i) {
        const int label = i >= n0;
        for (std::size_t d = 0; d < dims; ++d) cols[d].push_back(rng.normal() + label * shift);
        y.push_back(label);
    }
    std::vector<tabctx::Column> columns;
    for (std::size_t d = 0; d < dims; ++d) columns.push_back(tabctx::Column::numeric("f" + std::to_string(d), cols[d]));
    columns.push_back(tabctx::Column::numeric("y", y));
    return tabctx::Table(std::move(columns), {}, std::string("y"));
}

}  // namespace testutil
