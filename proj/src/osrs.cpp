#include "mmhcl/osrs.hpp"

#include "mmhcl/errors.hpp"

#include <cmath>

namespace mmhcl {

std::vector<int> default_architecture(int module_index) {
    static const std::vector<std::vector<int>> shapes = {
        {}, {256}, {512}, {512, 256}};
    return shapes[static_cast<std::size_t>(module_index) % shapes.size()];
}

ModalityEnsemble make_ensemble(Modality modality, int input_dim, int semantic_dim,
                               int k_modules, double gamma, std::uint64_t seed) {
    require(k_modules >= 2, "ensemble needs at least 2 modules (uncertainty spread is 0 for one)");
    require(input_dim > 0 && semantic_dim > 0, "ensemble dims must be positive");
    require(gamma > 0.0, "gamma must be positive");
    ModalityEnsemble e;
    e.modality_id = modality;
    e.input_dim = input_dim;
    e.output_dim = semantic_dim;
    for (int i = 0; i < k_modules; ++i) {
        OsrsModule m;
        m.gamma = gamma;
        // Mappers are bias-free so zero-padded inputs stay at the origin
        // and classify as the degenerate uniform bundle.
        m.mapper = make_mlp(input_dim, default_architecture(i), semantic_dim, false);
        SeededRng rng(mix_seed(seed, static_cast<std::uint64_t>(modality) + 1,
                               static_cast<std::uint64_t>(i)));
        init_glorot(m.mapper, rng);
        e.modules.push_back(std::move(m));
    }
    return e;
}

void validate_ensemble(const ModalityEnsemble& ensemble, int semantic_dim) {
    require(static_cast<int>(ensemble.modules.size()) >= 2,
            "ensemble needs at least 2 modules (uncertainty spread is 0 for one)");
    for (const OsrsModule& m : ensemble.modules) {
        require(m.gamma > 0.0, "gamma must be positive");
        require(m.mapper.input_dim() == ensemble.input_dim, "module input dim mismatch");
        require(m.mapper.output_dim() == semantic_dim, "module output dim != semantic dim");
    }
}

Vec map_to_semantic(const OsrsModule& module, const Vec& x) {
    require(static_cast<int>(x.size()) == module.mapper.input_dim(),
            "map_to_semantic: input dim mismatch");
    Mat batch(1, static_cast<int>(x.size()));
    set_row(batch, 0, x);
    Mat out = mlp_forward(module.mapper, batch);
    return row_copy(out, 0);
}

ScaledLogits scaled_cosine_logits(const Vec& s_hat, const ClassCatalog& catalog, double gamma) {
    require(static_cast<int>(s_hat.size()) == catalog.dim(),
            "scaled_cosine_logits: semantic dim mismatch");
    require(gamma > 0.0, "scaled_cosine_logits: gamma must be positive");
    const int n = catalog.size();
    ScaledLogits out;
    out.logits.assign(static_cast<std::size_t>(n), 0.0);
    const double ns = norm2(s_hat);
    if (ns == 0.0) {
        out.degenerate = true; // uniform posterior downstream
        return out;
    }
    const double g2 = gamma * gamma;
    for (int i = 0; i < n; ++i) {
        const Vec ci = row_copy(catalog.embeddings, i);
        out.logits[static_cast<std::size_t>(i)] = g2 * dot(s_hat, ci) / (ns * norm2(ci));
    }
    return out;
}

PredictionBundle ensemble_predict(const ModalityEnsemble& ensemble, const Vec& x,
                                  const ClassCatalog& catalog) {
    validate_ensemble(ensemble, catalog.dim());
    const int n = catalog.size();
    const int k = static_cast<int>(ensemble.modules.size());
    PredictionBundle b;
    b.mean_logits.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < k; ++i) {
        const OsrsModule& m = ensemble.modules[static_cast<std::size_t>(i)];
        ScaledLogits sl = scaled_cosine_logits(map_to_semantic(m, x), catalog, m.gamma);
        b.degenerate.push_back(sl.degenerate);
        b.probs.push_back(softmax(sl.logits));
        for (int j = 0; j < n; ++j) b.mean_logits[static_cast<std::size_t>(j)] += sl.logits[static_cast<std::size_t>(j)];
        b.logits.push_back(std::move(sl.logits));
    }
    for (double& v : b.mean_logits) v /= k;
    b.mean_probs = softmax(b.mean_logits);
    return b;
}

} // namespace mmhcl
