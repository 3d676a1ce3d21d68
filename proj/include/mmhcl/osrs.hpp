#pragma once

#include "mmhcl/numerics.hpp"
#include "mmhcl/semantic_space.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mmhcl {

enum class Modality { A, B };

inline const char* modality_name(Modality m) { return m == Modality::A ? "A" : "B"; }
inline Modality other_modality(Modality m) { return m == Modality::A ? Modality::B : Modality::A; }

/// One semantic mapper plus the positive cosine scale.
struct OsrsModule {
    MlpParams mapper; // input d_modality, output d_s
    double gamma = 5.0;
};

/// K mappers of one modality sharing input and output dims. K >= 2 is
/// required: the entropy-spread uncertainty downstream is identically
/// zero for a single module.
struct ModalityEnsemble {
    Modality modality_id = Modality::A;
    std::vector<OsrsModule> modules;
    int input_dim = 0;
    int output_dim = 0;
};

/// Hidden-layer widths of the i-th default ensemble member. Four shapes
/// (linear, 256, 512, 512-256) cycled when k exceeds four.
std::vector<int> default_architecture(int module_index);

/// Seeded Glorot init; each member gets its own stream so the ensemble
/// is diverse but reproducible.
ModalityEnsemble make_ensemble(Modality modality, int input_dim, int semantic_dim,
                               int k_modules, double gamma, std::uint64_t seed);

void validate_ensemble(const ModalityEnsemble& ensemble, int semantic_dim);

/// Runs the mapper on a single feature vector.
Vec map_to_semantic(const OsrsModule& module, const Vec& x);

struct ScaledLogits {
    Vec logits;
    bool degenerate = false; // zero-norm input; logits are all zero
};

/// Per-class logits gamma^2 * cos(s_hat, c_i). A zero-norm s_hat (the
/// zero-padded-modality path) yields all-zero logits flagged degenerate
/// rather than an error.
ScaledLogits scaled_cosine_logits(const Vec& s_hat, const ClassCatalog& catalog, double gamma);

/// Per-module logits and probabilities plus the mean-logit distribution.
struct PredictionBundle {
    std::vector<Vec> logits;      // K vectors of length N
    std::vector<Vec> probs;       // softmax of each
    Vec mean_logits;              // (1/K) sum of logits
    Vec mean_probs;               // softmax of mean_logits
    std::vector<bool> degenerate; // per-module zero-norm flags
};

PredictionBundle ensemble_predict(const ModalityEnsemble& ensemble, const Vec& x,
                                  const ClassCatalog& catalog);

} // namespace mmhcl
