#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace sitent {

// Dense row-major matrix of doubles. The whole toolkit runs in double
// precision; gradient-check tolerances depend on it.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double* data() { return a.data(); }
    const double* data() const { return a.data(); }
    std::size_t size() const { return a.size(); }

    double* row(std::size_t i) { return a.data() + i * cols; }
    const double* row(std::size_t i) const { return a.data() + i * cols; }

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    void fill(double v) { a.assign(a.size(), v); }

    bool finite() const {
        for (double v : a) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }
};

inline bool finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

// Half-open token index range of one clause inside a paragraph.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t length() const { return end - begin; }
};

}  // namespace sitent
