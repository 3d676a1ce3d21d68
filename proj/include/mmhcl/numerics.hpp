#pragma once

#include "mmhcl/kernels.hpp"
#include "mmhcl/matrix.hpp"
#include "mmhcl/rng.hpp"

#include <vector>

namespace mmhcl {

/// Numerically stable softmax (max-subtraction). Entries land in (0, 1]
/// and sum to 1 within 1e-12. Throws std::invalid_argument on empty input.
Vec softmax(const Vec& logits);

/// Shannon entropy in nats with the 0*log(0) = 0 convention.
/// Throws std::invalid_argument on negative entries.
double entropy(const Vec& probs);

/// Cosine similarity in [-1, 1]. Throws zero_norm_error when either
/// argument has zero norm; callers with a legitimate zero (padded inputs)
/// must branch before calling.
double cosine(const Vec& u, const Vec& v);

/// Row-wise softmax of a logits matrix.
Mat softmax_rows(const Mat& logits);

// ---------------------------------------------------------------------------
// Multilayer perceptron: linear layers with rectifier activations between
// them, none after the last. Weights are (out x in); a batch is (n x in)
// and layers compute x * W^T + b.
// ---------------------------------------------------------------------------

struct MlpParams {
    std::vector<Mat> weights;
    std::vector<Vec> biases;
    // Bias-free networks keep the vectors (all zero) but never add or
    // update them; they map zero inputs to exactly zero, which the padded
    // missing-modality path depends on.
    bool has_bias = true;

    int layer_count() const { return static_cast<int>(weights.size()); }
    int input_dim() const { return weights.empty() ? 0 : weights.front().cols; }
    int output_dim() const { return weights.empty() ? 0 : weights.back().rows; }
    std::vector<int> layer_dims() const;
};

/// Zero-initialized network with the given hidden widths.
MlpParams make_mlp(int input_dim, const std::vector<int>& hidden_dims, int output_dim,
                   bool has_bias = true);

/// Uniform(+-sqrt(6/(fan_in+fan_out))) weights, zero biases.
void init_glorot(MlpParams& params, SeededRng& rng);

struct MlpCache {
    std::vector<Mat> inputs; // input seen by each layer
    std::vector<Mat> pre;    // pre-activation output of each layer
    int batch = 0;
};

/// Forward pass. When cache is non-null it is filled with everything the
/// backward pass needs. Throws std::invalid_argument on dim mismatch.
Mat mlp_forward(const MlpParams& params, const Mat& batch, MlpCache* cache = nullptr);

struct MlpGrads {
    std::vector<Mat> d_weights;
    std::vector<Vec> d_biases;
    Mat d_input;
};

/// Analytic gradients for the forward map. The cache must come from a
/// forward call with these params and a batch matching grad_output's rows;
/// otherwise invalid_state_error.
MlpGrads mlp_backward(const MlpParams& params, const MlpCache& cache, const Mat& grad_output);

// ---------------------------------------------------------------------------
// Adam with decoupled weight decay. Decay applies to weight matrices only,
// never to biases.
// ---------------------------------------------------------------------------

struct AdamState {
    double learning_rate = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
    long long step = 0;
    std::vector<Mat> m_weights, v_weights;
    std::vector<Vec> m_biases, v_biases;
};

AdamState make_adam(const MlpParams& params, double learning_rate, double weight_decay);

/// One optimizer step; mutates params and state. Throws numeric_error,
/// naming the offending tensor, if any gradient entry is non-finite.
void adam_step(AdamState& state, MlpParams& params, const MlpGrads& grads);

} // namespace mmhcl
