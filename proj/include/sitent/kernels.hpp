#pragma once

#include <cstddef>

#include "sitent/tensor.hpp"

namespace sitent::kernels {

// The dense kernels below carry the bulk of the arithmetic (LSTM gate
// products and their backward passes). The default implementations
// parallelize over independent output elements with OpenMP; every output
// element is still accumulated serially by a single thread, so results are
// bitwise identical to the serial reference implementations in
// kernels::ref regardless of thread count.

// Route all kernels through the serial reference path (benchmark / test knob).
void force_serial(bool on);
bool serial_forced();

// y += W x           (W: r x c, x: c, y: r)
void matvec_acc(const Matrix& w, const double* x, double* y);

// dx += W^T dy       (W: r x c, dy: r, dx: c)
void matvec_t_acc(const Matrix& w, const double* dy, double* dx);

// dW += dy (outer) x (dW: r x c, dy: r, x: c)
void outer_acc(const double* dy, const double* x, Matrix& dw);

double dot(const double* a, const double* b, std::size_t n);

namespace ref {
void matvec_acc(const Matrix& w, const double* x, double* y);
void matvec_t_acc(const Matrix& w, const double* dy, double* dx);
void outer_acc(const double* dy, const double* x, Matrix& dw);
}  // namespace ref

}  // namespace sitent::kernels
