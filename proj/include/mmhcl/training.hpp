#pragma once

#include "mmhcl/csmf.hpp"
#include "mmhcl/dataset.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>
#include <vector>

namespace mmhcl {

enum class PruneScope { All, SeenOnly };

const char* prune_scope_name(PruneScope s);
PruneScope prune_scope_from_name(const std::string& name);

/// Training hyperparameters and inference-time behavior switches.
/// The feature flags form a chain: similarity fusion needs dominance
/// selection, dominance selection needs the semantic classifiers.
struct TrainConfig {
    double learning_rate = 5e-4;
    double weight_decay = 1e-4;
    int epochs = 50;
    int batch_size = 256;
    int k_modules = 4;
    double gamma = 5.0; // logits scale gamma^2 = 25
    int top_k = 5;
    std::uint64_t seed = 1;
    bool use_osrs = true;
    bool use_dmss = true;
    bool use_csmf = true;
    PruneScope prune_scope = PruneScope::All;
    bool row_normalize = false;
    bool force_dominant_on_missing = false;

    void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochLoss {
    int epoch = 0;
    double loss_a = 0.0;
    double loss_b = 0.0;
    double total = 0.0;
};

/// Trained model: both modality ensembles, the class catalog they
/// classify against, and the pruned similarity matrices frozen at
/// training time.
struct ModelState {
    ModalityEnsemble ensemble_a, ensemble_b;
    ClassCatalog catalog;
    SimilarityMatrix s_pruned_a, s_pruned_b;
    // Rows eligible for top-k pruning under the seen_only scope; a copy of
    // the training partition's seen sets so checkpoints rebuild the exact
    // same pruned matrices.
    std::vector<int> seen_rows_a, seen_rows_b;
    TrainConfig config;
    std::vector<EpochLoss> training_log;
};

struct LossBreakdown {
    double total = 0.0;
    double loss_a = 0.0;
    double loss_b = 0.0;
};

/// Batch objective: per modality, the mean over samples of the average
/// per-module cross-entropy plus the mean-logit cross-entropy; the two
/// modality terms add. Labels outside [0, N) raise invalid_argument.
LossBreakdown total_loss(const std::vector<PredictionBundle>& bundles_a,
                         const std::vector<PredictionBundle>& bundles_b,
                         const std::vector<int>& labels_a, const std::vector<int>& labels_b);

/// One modality's objective value and analytic parameter gradients on a
/// mini-batch: the exact quantities a training step feeds the optimizer.
struct ObjectiveGradients {
    double loss = 0.0;
    std::vector<MlpGrads> per_module;
};

ObjectiveGradients objective_gradients(const ModalityEnsemble& ensemble,
                                       const ClassCatalog& catalog, const Mat& batch,
                                       const std::vector<int>& labels);

/// Joint training. Each epoch shuffles both unimodal streams by seed and
/// alternates A/B mini-batches; modality batches only ever update their
/// own ensemble. Throws numeric_error with epoch/batch context if the
/// loss goes non-finite.
ModelState train(const MmhclDataset& dataset, const ClassCatalog& catalog,
                 const TrainConfig& config);

/// Full inference chain: pad -> per-modality ensemble prediction ->
/// uncertainty -> fusion. Flags degrade the chain: without dominance
/// selection the fused logits are the plain mean of both modality means;
/// without similarity fusion the dominant modality's means stand alone.
FusionDecision predict(const ModelState& model, const MultimodalSample& sample);

/// Versioned container: magic, JSON header (dims, config, class names,
/// architectures), then little-endian 64-bit parameter blocks in declared
/// order. Round-trips are bit-exact.
void save_checkpoint(const ModelState& model, const std::string& path);
ModelState load_checkpoint(const std::string& path);

/// "cscf" or "fc"; peeks at the header without loading parameters.
std::string checkpoint_kind(const std::string& path);

/// Per-modality linear softmax heads over all N classes, trained on each
/// modality's (seen-class) stream; complete inputs fuse by mean logits.
struct FcBaselineState {
    MlpParams head_a, head_b; // single linear layer each
    int n_classes = 0;
    std::vector<std::string> class_names;
    TrainConfig config;
    std::vector<EpochLoss> training_log;
};

FcBaselineState train_fc_baseline(const MmhclDataset& dataset, const TrainConfig& config);

Vec fc_logits(const FcBaselineState& model, const MultimodalSample& sample);
int fc_predict_class(const FcBaselineState& model, const MultimodalSample& sample);

void save_fc_checkpoint(const FcBaselineState& model, const std::string& path);
FcBaselineState load_fc_checkpoint(const std::string& path);

/// Training log CSV: "epoch,loss_A,loss_B,loss_total".
std::string training_log_csv(const std::vector<EpochLoss>& log);

} // namespace mmhcl
