#include "mmhcl/csmf.hpp"

#include "mmhcl/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace mmhcl {

Vec similarity_reweight(const SimilarityMatrix& s_pruned, const Vec& lo) {
    const int n = s_pruned.values.rows;
    require(s_pruned.values.cols == n, "similarity_reweight: matrix not square");
    require(static_cast<int>(lo.size()) == n, "similarity_reweight: dim mismatch");
    Vec out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        const double* row = s_pruned.values.row(i);
        for (int j = 0; j < n; ++j) s += row[j] * lo[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = s;
    }
    return out;
}

SimilarityMatrix l1_row_normalized(const SimilarityMatrix& s_pruned) {
    SimilarityMatrix out = s_pruned;
    for (int i = 0; i < out.values.rows; ++i) {
        double l1 = 0.0;
        for (int j = 0; j < out.values.cols; ++j) l1 += std::fabs(out.values(i, j));
        if (l1 > 0.0)
            for (int j = 0; j < out.values.cols; ++j) out.values(i, j) /= l1;
    }
    return out;
}

int argmax_index(const Vec& v) {
    require(!v.empty(), "argmax_index: empty vector");
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
    return best;
}

FusionDecision fuse_with_dominant(const Vec& lo_a, const Vec& lo_b,
                                  const SimilarityMatrix& s_a, const SimilarityMatrix& s_b,
                                  Modality dominant) {
    require(lo_a.size() == lo_b.size(), "fuse: logit dim mismatch");
    FusionDecision d;
    d.dominant = dominant;
    if (dominant == Modality::A) {
        d.lo_dom = lo_a;
        d.lo_aux_reweighted = similarity_reweight(s_b, lo_b);
    } else {
        d.lo_dom = lo_b;
        d.lo_aux_reweighted = similarity_reweight(s_a, lo_a);
    }
    d.lo_fused.resize(d.lo_dom.size());
    for (std::size_t i = 0; i < d.lo_dom.size(); ++i)
        d.lo_fused[i] = d.lo_dom[i] + d.lo_aux_reweighted[i];
    d.probs = softmax(d.lo_fused);
    d.predicted_class = argmax_index(d.probs);
    return d;
}

FusionDecision fuse(const Vec& lo_a, const Vec& lo_b, const SimilarityMatrix& s_a,
                    const SimilarityMatrix& s_b, double u_a, double u_b) {
    const DominanceChoice choice = select_dominant(u_a, u_b);
    FusionDecision d = fuse_with_dominant(lo_a, lo_b, s_a, s_b, choice.dominant);
    d.uncertainty.a.u = u_a;
    d.uncertainty.b.u = u_b;
    d.uncertainty.dominant = choice.dominant;
    d.uncertainty.tie = choice.tie;
    return d;
}

nlohmann::json fusion_to_json(const FusionDecision& decision) {
    return nlohmann::json{{"dominant", modality_name(decision.dominant)},
                          {"lo_dom", decision.lo_dom},
                          {"lo_aux_reweighted", decision.lo_aux_reweighted},
                          {"lo_fused", decision.lo_fused},
                          {"probs", decision.probs},
                          {"predicted_class", decision.predicted_class},
                          {"uncertainty", uncertainty_to_json(decision.uncertainty)}};
}

} // namespace mmhcl
