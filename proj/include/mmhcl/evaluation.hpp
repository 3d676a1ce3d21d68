#pragma once

#include "mmhcl/training.hpp"

#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <string>
#include <vector>

namespace mmhcl {

struct ScenarioMetrics {
    std::string name;
    int count = 0;
    int correct = 0;
    double accuracy_pct = 0.0;
};

/// Per-scenario top-1 accuracy over the full class space plus the pooled
/// mixed-scenario accuracy. Pure aggregation of the per-sample records.
struct MetricsReport {
    std::vector<ScenarioMetrics> scenarios;
    double acc_mix = 0.0;
    std::string model_id;
    std::string config_fingerprint;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

struct SamplePrediction {
    std::string scenario;
    std::string id;
    int label = 0;
    int predicted = 0;
    bool correct = false;
};

using ClassPredictor = std::function<int(const MultimodalSample&)>;

/// Runs the predictor over every scenario. Predictions for the test pool
/// are computed once and reused across scenarios; empty scenarios are
/// skipped with a warning. When records is non-null the flat per-sample
/// rows are appended for dumping / recounting.
MetricsReport evaluate(const ClassPredictor& predictor, const MmhclDataset& dataset,
                       const EvalScenarios& scenarios, const std::string& model_id,
                       std::uint64_t seed, std::vector<SamplePrediction>* records = nullptr);

std::string predictions_csv(const std::vector<SamplePrediction>& records);

/// Dual-model protocol: unimodal inputs go to the matching ensemble
/// verbatim; complete inputs take the prediction whose max mean-logit
/// softmax probability is larger.
struct ConfidenceMaxDecision {
    int predicted_class = 0;
    Modality chosen = Modality::A;
    double confidence = 0.0;
};
ConfidenceMaxDecision confidence_max_baseline(const ModalityEnsemble& model_a,
                                              const ModalityEnsemble& model_b,
                                              const ClassCatalog& catalog,
                                              const MultimodalSample& sample);

/// Mean of the two modality mean-logit vectors; identical to predict()
/// with dominance selection disabled.
FusionDecision average_fusion_baseline(const ModelState& model, const MultimodalSample& sample);

/// The four-step ablation: linear heads (B), semantic ensembles with
/// average fusion (B+O), plus dominance selection (B+O+D), plus
/// similarity fusion (B+O+D+C). One shared training run backs the three
/// semantic rows; only inference flags differ.
std::vector<MetricsReport> ablation_suite(const MmhclDataset& dataset, const ClassCatalog& catalog,
                                          const TrainConfig& base_config);

/// Re-prunes the similarity matrices per k and re-evaluates the frozen
/// model; k = 0 row is the no-similarity reference. Invalid k values are
/// skipped with a warning.
struct SweepEntry {
    int k = 0; // 0 = similarity fusion disabled
    MetricsReport report;
};
std::vector<SweepEntry> topk_sweep(const ModelState& model, const MmhclDataset& dataset,
                                   const std::vector<int>& k_values);
std::string sweep_csv(const std::vector<SweepEntry>& entries);

/// Seeded sample of per-sample uncertainty records.
struct UncertaintyRow {
    std::string id;
    int label = 0;
    bool present_a = false, present_b = false;
    bool seen_a = false, seen_b = false; // label w.r.t. the partition
    UncertaintyReport report;
};
std::vector<UncertaintyRow> uncertainty_dump(const ModelState& model,
                                             const std::vector<MultimodalSample>& samples,
                                             const ClassPartition& partition, int n,
                                             std::uint64_t seed);
std::string uncertainty_csv(const std::vector<UncertaintyRow>& rows);

nlohmann::json report_to_json(const MetricsReport& report);
std::string report_to_text(const MetricsReport& report);

} // namespace mmhcl
