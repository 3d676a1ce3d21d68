#pragma once

#include "mmhcl/dmss.hpp"
#include "mmhcl/semantic_space.hpp"

#include <nlohmann/json_fwd.hpp>

namespace mmhcl {

/// Outcome of one fused prediction. lo_fused = lo_dom + lo_aux_reweighted,
/// probs = softmax(lo_fused), predicted_class = argmax(probs).
struct FusionDecision {
    Modality dominant = Modality::A;
    Vec lo_dom;
    Vec lo_aux_reweighted;
    Vec lo_fused;
    Vec probs;
    int predicted_class = 0;
    UncertaintyReport uncertainty;
};

/// Matrix-vector product through the pruned similarity matrix:
/// out_i = sum_j S_ij * lo_j.
Vec similarity_reweight(const SimilarityMatrix& s_pruned, const Vec& lo);

/// Divide each row by its L1 norm (>= 1 thanks to the retained unit
/// diagonal). Optional study switch; the default fusion leaves rows raw.
SimilarityMatrix l1_row_normalized(const SimilarityMatrix& s_pruned);

/// Fusion with an externally chosen dominant modality (the ablation and
/// missing-modality override paths go through here).
FusionDecision fuse_with_dominant(const Vec& lo_a, const Vec& lo_b,
                                  const SimilarityMatrix& s_a, const SimilarityMatrix& s_b,
                                  Modality dominant);

/// Uncertainty-driven fusion: the lower-u modality leads, the other
/// contributes its similarity-reweighted logits. Exact u ties resolve
/// toward A (same convention as select_dominant).
FusionDecision fuse(const Vec& lo_a, const Vec& lo_b, const SimilarityMatrix& s_a,
                    const SimilarityMatrix& s_b, double u_a, double u_b);

int argmax_index(const Vec& v);

nlohmann::json fusion_to_json(const FusionDecision& decision);

} // namespace mmhcl
