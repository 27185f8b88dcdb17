#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "panelcast/matrix.hpp"
#include "panelcast/random.hpp"

namespace testutil {

inline panelcast::Matrix random_matrix(panelcast::Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                                       double hi = 1.0) {
    panelcast::Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.uniform(lo, hi);
    return m;
}

inline panelcast::Vector random_vector(panelcast::Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    panelcast::Vector v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

inline double sse(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

}  // namespace testutil
