#pragma once

// Dense linear-algebra reference for the TextRank stationary scores: solve
// (I - d * P^T) x = (1 - d) / n * 1 by Gaussian elimination, where P is the
// row-normalised transition matrix (dangling rows uniform, diagonal zero,
// negatives clamped). An algebraic route entirely separate from power
// iteration.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracles {

inline std::vector<double> pagerank_reference(std::vector<std::vector<double>> sim, double damping) {
    const std::size_t n = sim.size();
    if (n == 0) throw std::runtime_error("pagerank_reference: empty matrix");
    if (n == 1) return {1.0};
    for (std::size_t i = 0; i < n; ++i) {
        sim[i][i] = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (sim[i][j] < 0.0) sim[i][j] = 0.0;
        }
    }
    std::vector<std::vector<double>> trans(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += sim[i][j];
        for (std::size_t j = 0; j < n; ++j) {
            trans[i][j] = row > 0.0 ? sim[i][j] / row : 1.0 / static_cast<double>(n);
        }
    }
    // A = I - d * P^T, rhs = (1 - d)/n.
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            a[i][j] = (i == j ? 1.0 : 0.0) - damping * trans[j][i];
        }
        a[i][n] = (1.0 - damping) / static_cast<double>(n);
    }
    // Gaussian elimination with partial pivoting.
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        std::swap(a[col], a[pivot]);
        if (std::abs(a[col][col]) < 1e-14) throw std::runtime_error("pagerank_reference: singular system");
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double factor = a[r][col] / a[col][col];
            for (std::size_t c = col; c <= n; ++c) a[r][c] -= factor * a[col][c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = a[i][n] / a[i][i];
    return x;
}

}  // namespace oracles
