#include "mmhcl/numerics.hpp"

#include "mmhcl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mmhcl {

Vec softmax(const Vec& logits) {
    if (logits.empty()) throw std::invalid_argument("softmax: empty input");
    const double mx = *std::max_element(logits.begin(), logits.end());
    Vec out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

double entropy(const Vec& probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw std::invalid_argument("entropy: negative probability");
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

double cosine(const Vec& u, const Vec& v) {
    require(u.size() == v.size(), "cosine: dim mismatch");
    const double nu = norm2(u);
    const double nv = norm2(v);
    if (nu == 0.0 || nv == 0.0) throw zero_norm_error("cosine: zero-norm input");
    return dot(u, v) / (nu * nv);
}

Mat softmax_rows(const Mat& logits) {
    Mat out(logits.rows, logits.cols);
#pragma omp parallel for schedule(static) if (static_cast<long>(logits.rows) * logits.cols > 16384)
    for (int i = 0; i < logits.rows; ++i) {
        const double* li = logits.row(i);
        double* oi = out.row(i);
        double mx = li[0];
        for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, li[j]);
        double sum = 0.0;
        for (int j = 0; j < logits.cols; ++j) {
            oi[j] = std::exp(li[j] - mx);
            sum += oi[j];
        }
        for (int j = 0; j < logits.cols; ++j) oi[j] /= sum;
    }
    return out;
}

std::vector<int> MlpParams::layer_dims() const {
    std::vector<int> dims;
    if (weights.empty()) return dims;
    dims.push_back(weights.front().cols);
    for (const Mat& w : weights) dims.push_back(w.rows);
    return dims;
}

MlpParams make_mlp(int input_dim, const std::vector<int>& hidden_dims, int output_dim,
                   bool has_bias) {
    require(input_dim > 0 && output_dim > 0, "make_mlp: dims must be positive");
    for (int h : hidden_dims) require(h > 0, "make_mlp: hidden dims must be positive");
    MlpParams p;
    p.has_bias = has_bias;
    int in = input_dim;
    for (int h : hidden_dims) {
        p.weights.emplace_back(h, in);
        p.biases.emplace_back(static_cast<std::size_t>(h), 0.0);
        in = h;
    }
    p.weights.emplace_back(output_dim, in);
    p.biases.emplace_back(static_cast<std::size_t>(output_dim), 0.0);
    return p;
}

void init_glorot(MlpParams& params, SeededRng& rng) {
    for (Mat& w : params.weights) {
        const double bound = std::sqrt(6.0 / (w.cols + w.rows));
        for (double& x : w.data) x = rng.uniform_in(-bound, bound);
    }
    for (Vec& b : params.biases) std::fill(b.begin(), b.end(), 0.0);
}

Mat mlp_forward(const MlpParams& params, const Mat& batch, MlpCache* cache) {
    require(params.layer_count() > 0, "mlp_forward: empty network");
    require(batch.cols == params.input_dim(), "mlp_forward: batch cols != input dim");
    if (cache) {
        cache->inputs.clear();
        cache->pre.clear();
        cache->batch = batch.rows;
    }
    Mat act = batch;
    for (int l = 0; l < params.layer_count(); ++l) {
        if (cache) cache->inputs.push_back(act);
        Mat z;
        matmul_nt(act, params.weights[static_cast<std::size_t>(l)], z);
        if (params.has_bias) add_row_vector(z, params.biases[static_cast<std::size_t>(l)]);
        if (cache) cache->pre.push_back(z);
        if (l + 1 < params.layer_count()) relu_inplace(z);
        act = std::move(z);
    }
    return act;
}

MlpGrads mlp_backward(const MlpParams& params, const MlpCache& cache, const Mat& grad_output) {
    const int layers = params.layer_count();
    if (static_cast<int>(cache.inputs.size()) != layers ||
        static_cast<int>(cache.pre.size()) != layers)
        throw invalid_state_error("mlp_backward: cache does not match network depth");
    if (grad_output.rows != cache.batch || grad_output.cols != params.output_dim())
        throw invalid_state_error("mlp_backward: grad_output shape does not match cached forward");
    for (int l = 0; l < layers; ++l) {
        if (cache.inputs[static_cast<std::size_t>(l)].cols != params.weights[static_cast<std::size_t>(l)].cols ||
            cache.pre[static_cast<std::size_t>(l)].cols != params.weights[static_cast<std::size_t>(l)].rows)
            throw invalid_state_error("mlp_backward: cache layer dims do not match params");
    }

    MlpGrads g;
    g.d_weights.resize(static_cast<std::size_t>(layers));
    g.d_biases.resize(static_cast<std::size_t>(layers));
    Mat delta = grad_output;
    for (int l = layers - 1; l >= 0; --l) {
        const std::size_t li = static_cast<std::size_t>(l);
        if (l + 1 < layers) relu_mask_backward(cache.pre[li], delta);
        matmul_tn(delta, cache.inputs[li], g.d_weights[li]); // (out x in)
        g.d_biases[li] = params.has_bias ? column_sums(delta)
                                         : Vec(params.biases[li].size(), 0.0);
        if (l > 0) {
            Mat prev;
            matmul_nn(delta, params.weights[li], prev);
            delta = std::move(prev);
        } else {
            matmul_nn(delta, params.weights[li], g.d_input);
        }
    }
    return g;
}

AdamState make_adam(const MlpParams& params, double learning_rate, double weight_decay) {
    require(learning_rate > 0.0, "make_adam: learning rate must be positive");
    require(weight_decay >= 0.0, "make_adam: weight decay must be non-negative");
    AdamState s;
    s.learning_rate = learning_rate;
    s.weight_decay = weight_decay;
    for (const Mat& w : params.weights) {
        s.m_weights.emplace_back(w.rows, w.cols);
        s.v_weights.emplace_back(w.rows, w.cols);
    }
    for (const Vec& b : params.biases) {
        s.m_biases.emplace_back(b.size(), 0.0);
        s.v_biases.emplace_back(b.size(), 0.0);
    }
    return s;
}

namespace {

void adam_update(double* theta, double* m, double* v, const double* g, std::size_t n,
                 const AdamState& s, double decay, const char* what, int layer) {
    const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(g[i]))
            throw numeric_error("adam_step: non-finite gradient in layer " +
                                std::to_string(layer) + " " + what);
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        theta[i] -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
        if (decay != 0.0) theta[i] -= s.learning_rate * decay * theta[i];
    }
}

} // namespace

void adam_step(AdamState& state, MlpParams& params, const MlpGrads& grads) {
    const std::size_t layers = params.weights.size();
    require(grads.d_weights.size() == layers && grads.d_biases.size() == layers,
            "adam_step: gradient layer count mismatch");
    require(state.m_weights.size() == layers, "adam_step: optimizer state shape mismatch");
    state.step += 1;
    for (std::size_t l = 0; l < layers; ++l) {
        require(grads.d_weights[l].same_shape(params.weights[l]) &&
                    grads.d_biases[l].size() == params.biases[l].size(),
                "adam_step: gradient shape mismatch");
        adam_update(params.weights[l].data.data(), state.m_weights[l].data.data(),
                    state.v_weights[l].data.data(), grads.d_weights[l].data.data(),
                    params.weights[l].data.size(), state, state.weight_decay, "weights",
                    static_cast<int>(l));
        adam_update(params.biases[l].data(), state.m_biases[l].data(), state.v_biases[l].data(),
                    grads.d_biases[l].data(), params.biases[l].size(), state, 0.0, "bias",
                    static_cast<int>(l));
    }
}

} // namespace mmhcl
