#pragma once

#include "mmhcl/semantic_space.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mmhcl {

/// Which classes each modality saw during training. Complements are
/// derived; under the main even split the seen sets are disjoint and
/// each modality's unseen set equals the other's seen set.
struct ClassPartition {
    int n_classes = 0;
    std::vector<int> seen_a, seen_b;
    std::vector<int> unseen_a, unseen_b;

    bool is_seen_a(int label) const;
    bool is_seen_b(int label) const;
};

/// Build a partition from explicit seen sets (validates coverage).
ClassPartition make_partition(int n_classes, std::vector<int> seen_a, std::vector<int> seen_b);

/// Seeded shuffle of 0..N-1, first ceil(N/2) classes to modality A.
ClassPartition split_classes(int n_classes, std::uint64_t seed);

/// One sample; a modality's feature vector is meaningful only when the
/// matching presence flag is set. At least one modality is present.
struct MultimodalSample {
    std::string id;
    int label = 0;
    bool present_a = false;
    bool present_b = false;
    Vec feat_a, feat_b;
};

/// Materializes zero vectors for absent modalities; presence flags are
/// preserved so scenario assignment still sees the original pattern.
MultimodalSample pad_missing(const MultimodalSample& sample, int d_a, int d_b);

struct MmhclDataset {
    int d_a = 0, d_b = 0;
    ClassPartition partition;
    std::vector<MultimodalSample> train, test;
    std::uint64_t seed = 0;
};

void validate_dataset(const MmhclDataset& ds);

/// Synthetic benchmark parameters. Per-class cluster centers are
/// rho-interpolations between a fixed random linear image of the class
/// embedding and a free random vector, so semantic transfer strength is
/// a dial: rho=1 fully aligned, rho=0 carries no signal.
struct SyntheticSpec {
    int n_classes = 20;
    int d_a = 48, d_b = 64, d_s = 32;
    int train_per_class = 50;
    int test_per_class = 20; // per presence pattern (A-only, B-only, complete)
    double sigma_a = 0.3, sigma_b = 0.3;
    double rho = 0.9;
    std::uint64_t seed = 1;
};

void validate_spec(const SyntheticSpec& spec);

/// Random class embeddings, optionally grouped into clusters so the
/// similarity matrix has informative structure. cluster_weight in [0,1)
/// is the shared-center fraction of each embedding. rank > 0 confines
/// the embeddings to a rank-dimensional subspace of the semantic space
/// (text-embedding sets are strongly low-rank; a spanned subspace is
/// also what makes unseen-class transfer learnable from seen classes).
/// Rows are normalized to norm sqrt(d_s).
ClassCatalog make_synthetic_catalog(int n_classes, int d_s, std::uint64_t seed,
                                    int clusters = 0, double cluster_weight = 0.5,
                                    int rank = 0);

/// Benchmark catalog with two class populations. `families` tight sibling
/// groups of `family_size` classes sit at regular-simplex corners around
/// orthogonal family directions: within-family cosines are exactly
/// uniform, cross-family and family-to-free cosines exactly zero. The
/// remaining classes are free low-rank classes (random coordinates in a
/// free_rank-dimensional subspace) whose unseen members stay recoverable
/// from seen ones. Families drive the cross-modal fusion effects, free
/// classes drive semantic transfer.
ClassCatalog make_benchmark_catalog(int n_classes, int d_s, std::uint64_t seed, int families = 2,
                                    int family_size = 5, double family_weight = 0.6,
                                    int free_rank = 6);

/// Deterministic synthetic dataset: unimodal training samples per seen
/// class, and test samples for every presence pattern and class.
MmhclDataset synthesize(const SyntheticSpec& spec, const ClassCatalog& catalog);

/// Features CSV: header "id,label,f0,...,f{d-1}". Sample ids carry the
/// split tag as prefix ("train-..." / "test-..."); the same id in both
/// files merges into one complete sample. labels_path ("" = none) is an
/// optional id,label CSV for rows with an empty label field.
MmhclDataset load_features(const std::string& path_a, const std::string& path_b,
                           const std::string& labels_path, const ClassPartition& partition);

void save_features(const MmhclDataset& ds, const std::string& path_a, const std::string& path_b);

// Appendix-style evaluation scenarios over the test split.
inline constexpr int kScenarioCount = 8;
enum class Scenario {
    SeenA = 0,    // A-only sample, label seen by A
    SeenB,        // B-only sample, label seen by B
    UnseenA,      // A-only sample, label unseen by A
    UnseenB,      // B-only sample, label unseen by B
    SeenAUnseenB, // complete sample, label seen by A only
    UnseenASeenB, // complete sample, label seen by B only
    AllAll,       // every complete sample
    Mix           // union of the first six
};

const char* scenario_name(Scenario s);

struct EvalScenarios {
    // test-split indices per scenario, fixed order as declared above
    std::vector<std::vector<int>> members{kScenarioCount};
    std::vector<std::string> warnings; // empty scenarios get one each
};

EvalScenarios make_eval_scenarios(const MmhclDataset& ds);

} // namespace mmhcl
