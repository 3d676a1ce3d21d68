#include "mmhcl/evaluation.hpp"

#include "mmhcl/errors.hpp"
#include "mmhcl/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mmhcl {

MetricsReport evaluate(const ClassPredictor& predictor, const MmhclDataset& dataset,
                       const EvalScenarios& scenarios, const std::string& model_id,
                       std::uint64_t seed, std::vector<SamplePrediction>* records) {
    MetricsReport report;
    report.model_id = model_id;
    report.seed = seed;
    report.warnings = scenarios.warnings;

    // One prediction per test sample, shared by every scenario it is in.
    const int n_test = static_cast<int>(dataset.test.size());
    std::vector<int> predicted(static_cast<std::size_t>(n_test), -1);
    std::vector<bool> needed(static_cast<std::size_t>(n_test), false);
    for (const auto& members : scenarios.members)
        for (int idx : members) needed[static_cast<std::size_t>(idx)] = true;
#pragma omp parallel for schedule(dynamic, 16)
    for (int i = 0; i < n_test; ++i) {
        if (needed[static_cast<std::size_t>(i)])
            predicted[static_cast<std::size_t>(i)] = predictor(dataset.test[static_cast<std::size_t>(i)]);
    }

    for (int s = 0; s < kScenarioCount; ++s) {
        const auto& members = scenarios.members[static_cast<std::size_t>(s)];
        if (members.empty()) continue;
        ScenarioMetrics m;
        m.name = scenario_name(static_cast<Scenario>(s));
        m.count = static_cast<int>(members.size());
        for (int idx : members) {
            const MultimodalSample& sample = dataset.test[static_cast<std::size_t>(idx)];
            const int pred = predicted[static_cast<std::size_t>(idx)];
            const bool correct = pred == sample.label;
            if (correct) ++m.correct;
            if (records)
                records->push_back({m.name, sample.id, sample.label, pred, correct});
        }
        m.accuracy_pct = 100.0 * m.correct / m.count;
        if (static_cast<Scenario>(s) == Scenario::Mix) report.acc_mix = m.accuracy_pct;
        report.scenarios.push_back(std::move(m));
    }
    return report;
}

std::string predictions_csv(const std::vector<SamplePrediction>& records) {
    std::ostringstream out;
    out << "scenario,id,label,predicted,correct\n";
    for (const auto& r : records)
        out << r.scenario << "," << r.id << "," << r.label << "," << r.predicted << ","
            << (r.correct ? 1 : 0) << "\n";
    return out.str();
}

ConfidenceMaxDecision confidence_max_baseline(const ModalityEnsemble& model_a,
                                              const ModalityEnsemble& model_b,
                                              const ClassCatalog& catalog,
                                              const MultimodalSample& sample) {
    require(sample.present_a || sample.present_b, "confidence_max: no modality present");
    ConfidenceMaxDecision d;
    if (sample.present_a && !sample.present_b) {
        const PredictionBundle b = ensemble_predict(model_a, sample.feat_a, catalog);
        d.predicted_class = argmax_index(b.mean_probs);
        d.chosen = Modality::A;
        d.confidence = b.mean_probs[static_cast<std::size_t>(d.predicted_class)];
        return d;
    }
    if (sample.present_b && !sample.present_a) {
        const PredictionBundle b = ensemble_predict(model_b, sample.feat_b, catalog);
        d.predicted_class = argmax_index(b.mean_probs);
        d.chosen = Modality::B;
        d.confidence = b.mean_probs[static_cast<std::size_t>(d.predicted_class)];
        return d;
    }
    const PredictionBundle ba = ensemble_predict(model_a, sample.feat_a, catalog);
    const PredictionBundle bb = ensemble_predict(model_b, sample.feat_b, catalog);
    const int pa = argmax_index(ba.mean_probs);
    const int pb = argmax_index(bb.mean_probs);
    const double ca = ba.mean_probs[static_cast<std::size_t>(pa)];
    const double cb = bb.mean_probs[static_cast<std::size_t>(pb)];
    if (ca >= cb) {
        d.predicted_class = pa;
        d.chosen = Modality::A;
        d.confidence = ca;
    } else {
        d.predicted_class = pb;
        d.chosen = Modality::B;
        d.confidence = cb;
    }
    return d;
}

FusionDecision average_fusion_baseline(const ModelState& model, const MultimodalSample& sample) {
    ModelState view = model; // flag flip only; ensembles are shared copies
    view.config.use_dmss = false;
    view.config.use_csmf = false;
    return predict(view, sample);
}

std::vector<MetricsReport> ablation_suite(const MmhclDataset& dataset, const ClassCatalog& catalog,
                                          const TrainConfig& base_config) {
    TrainConfig full = base_config;
    full.use_osrs = true;
    full.use_dmss = true;
    full.use_csmf = true;
    full.validate();

    const EvalScenarios scenarios = make_eval_scenarios(dataset);
    std::vector<MetricsReport> reports;

    const FcBaselineState fc = train_fc_baseline(dataset, full);
    reports.push_back(evaluate([&](const MultimodalSample& s) { return fc_predict_class(fc, s); },
                               dataset, scenarios, "B", full.seed));

    // The objective never touches the fusion path, so one training run
    // serves every semantic row; only inference flags change.
    ModelState model = train(dataset, catalog, full);

    model.config.use_dmss = false;
    model.config.use_csmf = false;
    reports.push_back(evaluate([&](const MultimodalSample& s) { return predict(model, s).predicted_class; },
                               dataset, scenarios, "B+O", full.seed));

    model.config.use_dmss = true;
    model.config.use_csmf = false;
    reports.push_back(evaluate([&](const MultimodalSample& s) { return predict(model, s).predicted_class; },
                               dataset, scenarios, "B+O+D", full.seed));

    model.config.use_dmss = true;
    model.config.use_csmf = true;
    reports.push_back(evaluate([&](const MultimodalSample& s) { return predict(model, s).predicted_class; },
                               dataset, scenarios, "B+O+D+C", full.seed));
    return reports;
}

std::vector<SweepEntry> topk_sweep(const ModelState& model, const MmhclDataset& dataset,
                                   const std::vector<int>& k_values) {
    const EvalScenarios scenarios = make_eval_scenarios(dataset);
    std::vector<SweepEntry> entries;

    ModelState view = model;
    view.config.use_dmss = true;
    view.config.use_csmf = false;
    SweepEntry ref;
    ref.k = 0;
    ref.report = evaluate([&](const MultimodalSample& s) { return predict(view, s).predicted_class; },
                          dataset, scenarios, "no_similarity", model.config.seed);
    entries.push_back(std::move(ref));

    const SimilarityMatrix s = class_similarity(model.catalog);
    for (int k : k_values) {
        if (k < 1 || k > model.catalog.size()) continue; // skipped, reported by caller
        ModelState pruned = model;
        pruned.config.use_dmss = true;
        pruned.config.use_csmf = true;
        pruned.config.top_k = k;
        const bool scoped = model.config.prune_scope == PruneScope::SeenOnly;
        pruned.s_pruned_a = scoped ? prune_topk_scoped(s, k, model.seen_rows_a) : prune_topk(s, k);
        pruned.s_pruned_b = scoped ? prune_topk_scoped(s, k, model.seen_rows_b) : prune_topk(s, k);
        if (model.config.row_normalize) {
            pruned.s_pruned_a = l1_row_normalized(pruned.s_pruned_a);
            pruned.s_pruned_b = l1_row_normalized(pruned.s_pruned_b);
        }
        SweepEntry e;
        e.k = k;
        e.report =
            evaluate([&](const MultimodalSample& smp) { return predict(pruned, smp).predicted_class; },
                     dataset, scenarios, "k=" + std::to_string(k), model.config.seed);
        entries.push_back(std::move(e));
    }
    return entries;
}

std::string sweep_csv(const std::vector<SweepEntry>& entries) {
    std::ostringstream out;
    out << "k";
    if (!entries.empty())
        for (const auto& m : entries.front().report.scenarios) out << "," << m.name;
    out << "\n";
    for (const auto& e : entries) {
        out << e.k;
        for (const auto& m : e.report.scenarios) out << "," << format_double(m.accuracy_pct);
        out << "\n";
    }
    return out.str();
}

std::vector<UncertaintyRow> uncertainty_dump(const ModelState& model,
                                             const std::vector<MultimodalSample>& samples,
                                             const ClassPartition& partition, int n,
                                             std::uint64_t seed) {
    require(n >= 0 && n <= static_cast<int>(samples.size()),
            "uncertainty_dump: n exceeds sample count");
    std::vector<int> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    SeededRng rng(mix_seed(seed, 0xd0d7));
    rng.shuffle(order);
    order.resize(static_cast<std::size_t>(n));

    std::vector<UncertaintyRow> rows(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < n; ++i) {
        const MultimodalSample& s = samples[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
        UncertaintyRow row;
        row.id = s.id;
        row.label = s.label;
        row.present_a = s.present_a;
        row.present_b = s.present_b;
        row.seen_a = partition.is_seen_a(s.label);
        row.seen_b = partition.is_seen_b(s.label);
        row.report = predict(model, s).uncertainty;
        rows[static_cast<std::size_t>(i)] = std::move(row);
    }
    return rows;
}

std::string uncertainty_csv(const std::vector<UncertaintyRow>& rows) {
    std::ostringstream out;
    out << "id,label,present_a,present_b,seen_a,seen_b,h_mean_a,h_mean_b,spread_a,spread_b,"
           "inc_a,inc_b,dif_a,dif_b,u_a,u_b,dominant\n";
    for (const auto& r : rows) {
        out << r.id << "," << r.label << "," << r.present_a << "," << r.present_b << ","
            << r.seen_a << "," << r.seen_b << "," << format_double(r.report.a.h_mean) << ","
            << format_double(r.report.b.h_mean) << "," << format_double(r.report.a.spread) << ","
            << format_double(r.report.b.spread) << "," << format_double(r.report.a.inc) << ","
            << format_double(r.report.b.inc) << "," << format_double(r.report.a.dif) << ","
            << format_double(r.report.b.dif) << "," << format_double(r.report.a.u) << ","
            << format_double(r.report.b.u) << "," << modality_name(r.report.dominant) << "\n";
    }
    return out.str();
}

nlohmann::json report_to_json(const MetricsReport& report) {
    nlohmann::json scen = nlohmann::json::array();
    for (const auto& m : report.scenarios)
        scen.push_back({{"name", m.name},
                        {"count", m.count},
                        {"correct", m.correct},
                        {"accuracy_pct", m.accuracy_pct}});
    return nlohmann::json{{"model_id", report.model_id},
                          {"config_fingerprint", report.config_fingerprint},
                          {"seed", report.seed},
                          {"acc_mix", report.acc_mix},
                          {"scenarios", scen},
                          {"warnings", report.warnings}};
}

std::string report_to_text(const MetricsReport& report) {
    std::ostringstream out;
    out << "model: " << report.model_id;
    if (!report.config_fingerprint.empty()) out << "  config: " << report.config_fingerprint;
    out << "  seed: " << report.seed << "\n";
    char line[128];
    std::snprintf(line, sizeof(line), "%-14s %8s %8s %10s\n", "scenario", "count", "correct",
                  "accuracy");
    out << line;
    for (const auto& m : report.scenarios) {
        std::snprintf(line, sizeof(line), "%-14s %8d %8d %9.2f%%\n", m.name.c_str(), m.count,
                      m.correct, m.accuracy_pct);
        out << line;
    }
    for (const auto& w : report.warnings) out << "warning: " << w << "\n";
    return out.str();
}

} // namespace mmhcl
