#pragma once

// Independent scalar-loop oracles for the tests. These deliberately avoid
// the library's kernels and batch paths: plain loops, long double where it
// buys precision, no shared helpers beyond the containers.

#include "mmhcl/matrix.hpp"
#include "mmhcl/rng.hpp"

#include <cmath>
#include <vector>

namespace oracle {

using mmhcl::Mat;
using mmhcl::Vec;

inline Vec softmax(const Vec& logits) {
    long double mx = logits[0];
    for (double x : logits)
        if (x > mx) mx = x;
    std::vector<long double> e(logits.size());
    long double sum = 0.0L;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        e[i] = std::exp(static_cast<long double>(logits[i]) - mx);
        sum += e[i];
    }
    Vec out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<double>(e[i] / sum);
    return out;
}

inline double entropy(const Vec& probs) {
    long double h = 0.0L;
    for (double p : probs)
        if (p > 0.0) h -= static_cast<long double>(p) * std::log(static_cast<long double>(p));
    return static_cast<double>(h);
}

inline double cosine(const Vec& u, const Vec& v) {
    long double d = 0.0L, nu = 0.0L, nv = 0.0L;
    for (std::size_t i = 0; i < u.size(); ++i) {
        d += static_cast<long double>(u[i]) * v[i];
        nu += static_cast<long double>(u[i]) * u[i];
        nv += static_cast<long double>(v[i]) * v[i];
    }
    return static_cast<double>(d / (std::sqrt(nu) * std::sqrt(nv)));
}

// Per-element mlp recomputation: x W^T + b per layer with relu between.
inline Vec mlp_apply(const std::vector<Mat>& weights, const std::vector<Vec>& biases,
                     const Vec& x) {
    Vec act = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const Mat& w = weights[l];
        Vec next(static_cast<std::size_t>(w.rows));
        for (int o = 0; o < w.rows; ++o) {
            double z = biases[l][static_cast<std::size_t>(o)];
            for (int i = 0; i < w.cols; ++i) z += w(o, i) * act[static_cast<std::size_t>(i)];
            next[static_cast<std::size_t>(o)] = z;
        }
        if (l + 1 < weights.size())
            for (double& v : next) v = v > 0.0 ? v : 0.0;
        act = std::move(next);
    }
    return act;
}

// Matrix-vector product for similarity reweighting.
inline Vec matvec(const Mat& m, const Vec& v) {
    Vec out(static_cast<std::size_t>(m.rows), 0.0);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out[static_cast<std::size_t>(i)] += m(i, j) * v[static_cast<std::size_t>(j)];
    return out;
}

// Scalar Adam trace, one parameter, decoupled decay.
struct ScalarAdam {
    double m = 0.0, v = 0.0;
    int t = 0;
    double step(double theta, double g, double lr, double b1, double b2, double eps, double wd) {
        ++t;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        const double mh = m / (1.0 - std::pow(b1, t));
        const double vh = v / (1.0 - std::pow(b2, t));
        theta -= lr * mh / (std::sqrt(vh) + eps);
        theta -= lr * wd * theta;
        return theta;
    }
};

inline Vec random_vec(std::size_t n, mmhcl::SeededRng& rng, double scale = 1.0) {
    Vec v(n);
    for (double& x : v) x = scale * rng.gaussian();
    return v;
}

inline Mat random_mat(int r, int c, mmhcl::SeededRng& rng, double scale = 1.0) {
    Mat m(r, c);
    for (double& x : m.data) x = scale * rng.gaussian();
    return m;
}

inline Vec random_distribution(std::size_t n, mmhcl::SeededRng& rng) {
    Vec v(n);
    double sum = 0.0;
    for (double& x : v) {
        x = rng.uniform() + 1e-6;
        sum += x;
    }
    for (double& x : v) x /= sum;
    return v;
}

} // namespace oracle
