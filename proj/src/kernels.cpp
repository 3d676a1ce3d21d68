#include "mmhcl/kernels.hpp"

#include <algorithm>

namespace mmhcl {

namespace {
void check_nt(const Mat& a, const Mat& b, Mat& out) {
    require(a.cols == b.cols, "matmul_nt: inner dims differ");
    if (out.rows != a.rows || out.cols != b.rows) out = Mat(a.rows, b.rows);
}
void check_nn(const Mat& a, const Mat& b, Mat& out) {
    require(a.cols == b.rows, "matmul_nn: inner dims differ");
    if (out.rows != a.rows || out.cols != b.cols) out = Mat(a.rows, b.cols);
}
void check_tn(const Mat& a, const Mat& b, Mat& out) {
    require(a.rows == b.rows, "matmul_tn: inner dims differ");
    if (out.rows != a.cols || out.cols != b.cols) out = Mat(a.cols, b.cols);
}
} // namespace

void matmul_nt(const Mat& a, const Mat& b, Mat& out) {
    check_nt(a, b, out);
    const int m = a.rows, n = b.rows, k = a.cols;
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * n * k > 16384)
    for (int i = 0; i < m; ++i) {
        const double* ai = a.row(i);
        double* oi = out.row(i);
        for (int j = 0; j < n; ++j) {
            const double* bj = b.row(j);
            double s = 0.0;
            for (int t = 0; t < k; ++t) s += ai[t] * bj[t];
            oi[j] = s;
        }
    }
}

void matmul_nn(const Mat& a, const Mat& b, Mat& out) {
    check_nn(a, b, out);
    const int m = a.rows, n = b.cols, k = a.cols;
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * n * k > 16384)
    for (int i = 0; i < m; ++i) {
        const double* ai = a.row(i);
        double* oi = out.row(i);
        std::fill(oi, oi + n, 0.0);
        for (int t = 0; t < k; ++t) {
            const double av = ai[t];
            const double* bt = b.row(t);
            for (int j = 0; j < n; ++j) oi[j] += av * bt[j];
        }
    }
}

void matmul_tn(const Mat& a, const Mat& b, Mat& out) {
    check_tn(a, b, out);
    const int m = a.cols, n = b.cols, k = a.rows;
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * n * k > 16384)
    for (int i = 0; i < m; ++i) {
        double* oi = out.row(i);
        std::fill(oi, oi + n, 0.0);
        for (int t = 0; t < k; ++t) {
            const double av = a(t, i);
            const double* bt = b.row(t);
            for (int j = 0; j < n; ++j) oi[j] += av * bt[j];
        }
    }
}

void add_row_vector(Mat& m, const Vec& v) {
    require(static_cast<int>(v.size()) == m.cols, "add_row_vector: dim mismatch");
#pragma omp parallel for schedule(static) if (static_cast<long>(m.rows) * m.cols > 16384)
    for (int i = 0; i < m.rows; ++i) {
        double* mi = m.row(i);
        for (int j = 0; j < m.cols; ++j) mi[j] += v[static_cast<std::size_t>(j)];
    }
}

void relu_inplace(Mat& m) {
    const std::size_t n = m.data.size();
#pragma omp parallel for schedule(static) if (n > 16384)
    for (long i = 0; i < static_cast<long>(n); ++i) {
        if (m.data[static_cast<std::size_t>(i)] < 0.0) m.data[static_cast<std::size_t>(i)] = 0.0;
    }
}

void relu_mask_backward(const Mat& pre, Mat& grad) {
    require(pre.same_shape(grad), "relu_mask_backward: shape mismatch");
    const std::size_t n = grad.data.size();
#pragma omp parallel for schedule(static) if (n > 16384)
    for (long i = 0; i < static_cast<long>(n); ++i) {
        if (pre.data[static_cast<std::size_t>(i)] <= 0.0) grad.data[static_cast<std::size_t>(i)] = 0.0;
    }
}

Vec column_sums(const Mat& m) {
    Vec out(static_cast<std::size_t>(m.cols), 0.0);
#pragma omp parallel for schedule(static) if (static_cast<long>(m.rows) * m.cols > 16384)
    for (int j = 0; j < m.cols; ++j) {
        double s = 0.0;
        for (int i = 0; i < m.rows; ++i) s += m(i, j);
        out[static_cast<std::size_t>(j)] = s;
    }
    return out;
}

namespace reference {

void matmul_nt(const Mat& a, const Mat& b, Mat& out) {
    check_nt(a, b, out);
    for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < b.rows; ++j) {
            double s = 0.0;
            for (int t = 0; t < a.cols; ++t) s += a(i, t) * b(j, t);
            out(i, j) = s;
        }
    }
}

void matmul_nn(const Mat& a, const Mat& b, Mat& out) {
    check_nn(a, b, out);
    for (int i = 0; i < a.rows; ++i) {
        double* oi = out.row(i);
        std::fill(oi, oi + out.cols, 0.0);
        for (int t = 0; t < a.cols; ++t) {
            const double av = a(i, t);
            for (int j = 0; j < b.cols; ++j) oi[j] += av * b(t, j);
        }
    }
}

void matmul_tn(const Mat& a, const Mat& b, Mat& out) {
    check_tn(a, b, out);
    for (int i = 0; i < a.cols; ++i) {
        double* oi = out.row(i);
        std::fill(oi, oi + out.cols, 0.0);
        for (int t = 0; t < a.rows; ++t) {
            const double av = a(t, i);
            for (int j = 0; j < b.cols; ++j) oi[j] += av * b(t, j);
        }
    }
}

void add_row_vector(Mat& m, const Vec& v) {
    require(static_cast<int>(v.size()) == m.cols, "add_row_vector: dim mismatch");
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) m(i, j) += v[static_cast<std::size_t>(j)];
}

void relu_inplace(Mat& m) {
    for (double& x : m.data)
        if (x < 0.0) x = 0.0;
}

void relu_mask_backward(const Mat& pre, Mat& grad) {
    require(pre.same_shape(grad), "relu_mask_backward: shape mismatch");
    for (std::size_t i = 0; i < grad.data.size(); ++i)
        if (pre.data[i] <= 0.0) grad.data[i] = 0.0;
}

Vec column_sums(const Mat& m) {
    Vec out(static_cast<std::size_t>(m.cols), 0.0);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out[static_cast<std::size_t>(j)] += m(i, j);
    return out;
}

} // namespace reference
} // namespace mmhcl
