#pragma once

#include "mmhcl/matrix.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mmhcl {

/// Class names plus their semantic embedding matrix (one row per class).
/// Row order in the source file defines the class index order everywhere.
struct ClassCatalog {
    std::vector<std::string> names;
    Mat embeddings; // N x d_s

    int size() const { return embeddings.rows; }
    int dim() const { return embeddings.cols; }
};

void validate_catalog(const ClassCatalog& catalog);

/// CSV format: header "name,e0,e1,...,e{d-1}", one row per class.
ClassCatalog load_catalog(const std::string& path);
void save_catalog(const ClassCatalog& catalog, const std::string& path);

/// Pairwise cosine similarities between class embeddings. Unpruned
/// matrices are symmetric with unit diagonal; pruned ones keep at most
/// pruned_k nonzeros per row and always retain the diagonal.
struct SimilarityMatrix {
    Mat values; // N x N
    std::optional<int> pruned_k;
};

SimilarityMatrix class_similarity(const ClassCatalog& catalog);

/// Keep the k largest entries per row (ties: diagonal first, then lower
/// class index), zero the rest. Throws std::invalid_argument when k is
/// out of [1, N].
SimilarityMatrix prune_topk(const SimilarityMatrix& s, int k);

/// Scoped variant: rows whose class index is in seen_rows get the usual
/// top-k treatment; all other rows keep only their diagonal entry.
SimilarityMatrix prune_topk_scoped(const SimilarityMatrix& s, int k,
                                   const std::vector<int>& seen_rows);

} // namespace mmhcl
