#pragma once

#include "mmhcl/matrix.hpp"

namespace mmhcl {

// Dense kernels behind the mapper forward/backward passes and the batch
// cosine classifier. Each output element is produced by exactly one thread
// with a fixed serial inner loop, so results are bit-identical to the
// serial reference regardless of thread count.

/// out = a * b^T            (a: m x k, b: n x k, out: m x n)
void matmul_nt(const Mat& a, const Mat& b, Mat& out);

/// out = a * b              (a: m x k, b: k x n, out: m x n)
void matmul_nn(const Mat& a, const Mat& b, Mat& out);

/// out = a^T * b            (a: k x m, b: k x n, out: m x n)
void matmul_tn(const Mat& a, const Mat& b, Mat& out);

/// m[r, :] += v for every row r.
void add_row_vector(Mat& m, const Vec& v);

/// Elementwise max(0, x).
void relu_inplace(Mat& m);

/// grad *= (pre > 0), the rectifier mask of the forward pass.
void relu_mask_backward(const Mat& pre, Mat& grad);

/// Per-column sums (the bias gradient of a linear layer).
Vec column_sums(const Mat& m);

// Serial reference implementations. Kept for kernel equivalence tests and
// the bench tool; never used on the hot path.
namespace reference {
void matmul_nt(const Mat& a, const Mat& b, Mat& out);
void matmul_nn(const Mat& a, const Mat& b, Mat& out);
void matmul_tn(const Mat& a, const Mat& b, Mat& out);
void add_row_vector(Mat& m, const Vec& v);
void relu_inplace(Mat& m);
void relu_mask_backward(const Mat& pre, Mat& grad);
Vec column_sums(const Mat& m);
} // namespace reference

} // namespace mmhcl
