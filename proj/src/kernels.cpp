#include "sitent/kernels.hpp"

#include <atomic>
#include <cstdint>

namespace sitent::kernels {

namespace {
std::atomic<bool> g_force_serial{false};

// Below this many multiply-adds the OpenMP fork/join overhead dominates.
constexpr std::int64_t kParallelCutoff = 1 << 15;
}  // namespace

void force_serial(bool on) { g_force_serial.store(on, std::memory_order_relaxed); }
bool serial_forced() { return g_force_serial.load(std::memory_order_relaxed); }

namespace ref {

void matvec_acc(const Matrix& w, const double* x, double* y) {
    const std::size_t r = w.rows, c = w.cols;
    for (std::size_t i = 0; i < r; ++i) {
        const double* wi = w.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += wi[j] * x[j];
        y[i] += s;
    }
}

void matvec_t_acc(const Matrix& w, const double* dy, double* dx) {
    const std::size_t r = w.rows, c = w.cols;
    for (std::size_t j = 0; j < c; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < r; ++i) s += w(i, j) * dy[i];
        dx[j] += s;
    }
}

void outer_acc(const double* dy, const double* x, Matrix& dw) {
    const std::size_t r = dw.rows, c = dw.cols;
    for (std::size_t i = 0; i < r; ++i) {
        double* di = dw.row(i);
        const double g = dy[i];
        for (std::size_t j = 0; j < c; ++j) di[j] += g * x[j];
    }
}

}  // namespace ref

void matvec_acc(const Matrix& w, const double* x, double* y) {
    if (serial_forced()) {
        ref::matvec_acc(w, x, y);
        return;
    }
    const std::int64_t r = static_cast<std::int64_t>(w.rows);
    const std::int64_t c = static_cast<std::int64_t>(w.cols);
#pragma omp parallel for schedule(static) if (r * c >= kParallelCutoff)
    for (std::int64_t i = 0; i < r; ++i) {
        const double* wi = w.row(static_cast<std::size_t>(i));
        double s = 0.0;
        for (std::int64_t j = 0; j < c; ++j) s += wi[j] * x[j];
        y[i] += s;
    }
}

void matvec_t_acc(const Matrix& w, const double* dy, double* dx) {
    if (serial_forced()) {
        ref::matvec_t_acc(w, dy, dx);
        return;
    }
    const std::int64_t r = static_cast<std::int64_t>(w.rows);
    const std::int64_t c = static_cast<std::int64_t>(w.cols);
#pragma omp parallel for schedule(static) if (r * c >= kParallelCutoff)
    for (std::int64_t j = 0; j < c; ++j) {
        double s = 0.0;
        for (std::int64_t i = 0; i < r; ++i) s += w(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) * dy[i];
        dx[j] += s;
    }
}

void outer_acc(const double* dy, const double* x, Matrix& dw) {
    if (serial_forced()) {
        ref::outer_acc(dy, x, dw);
        return;
    }
    const std::int64_t r = static_cast<std::int64_t>(dw.rows);
    const std::int64_t c = static_cast<std::int64_t>(dw.cols);
#pragma omp parallel for schedule(static) if (r * c >= kParallelCutoff)
    for (std::int64_t i = 0; i < r; ++i) {
        double* di = dw.row(static_cast<std::size_t>(i));
        const double g = dy[i];
        for (std::int64_t j = 0; j < c; ++j) di[j] += g * x[j];
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace sitent::kernels
