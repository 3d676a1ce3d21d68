#include "mmhcl/training.hpp"

#include "mmhcl/errors.hpp"
#include "mmhcl/io.hpp"
#include "mmhcl/version.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mmhcl {

const char* prune_scope_name(PruneScope s) {
    return s == PruneScope::All ? "all" : "seen_only";
}

PruneScope prune_scope_from_name(const std::string& name) {
    if (name == "all") return PruneScope::All;
    if (name == "seen_only") return PruneScope::SeenOnly;
    throw config_error("prune_scope must be 'all' or 'seen_only', got '" + name + "'");
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw config_error("learning_rate must be positive");
    if (weight_decay < 0.0) throw config_error("weight_decay must be non-negative");
    if (epochs < 0) throw config_error("epochs must be non-negative");
    if (batch_size < 1) throw config_error("batch_size must be >= 1");
    if (gamma <= 0.0) throw config_error("gamma must be positive");
    if (top_k < 1) throw config_error("top_k must be >= 1");
    if (use_dmss && !use_osrs)
        throw config_error("use_dmss requires use_osrs (flag chain B -> B+O -> B+O+D -> B+O+D+C)");
    if (use_csmf && !use_dmss)
        throw config_error("use_csmf requires use_dmss (flag chain B -> B+O -> B+O+D -> B+O+D+C)");
    if (use_osrs && k_modules < 2)
        throw config_error("k_modules must be >= 2: the intra-modality spread of a single module "
                           "is identically zero and the uncertainty split would be 0/0");
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
    return nlohmann::json{{"learning_rate", c.learning_rate},
                          {"weight_decay", c.weight_decay},
                          {"epochs", c.epochs},
                          {"batch_size", c.batch_size},
                          {"k_modules", c.k_modules},
                          {"gamma", c.gamma},
                          {"top_k", c.top_k},
                          {"seed", c.seed},
                          {"use_osrs", c.use_osrs},
                          {"use_dmss", c.use_dmss},
                          {"use_csmf", c.use_csmf},
                          {"prune_scope", prune_scope_name(c.prune_scope)},
                          {"row_normalize", c.row_normalize},
                          {"force_dominant_on_missing", c.force_dominant_on_missing}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.k_modules = j.at("k_modules").get<int>();
    c.gamma = j.at("gamma").get<double>();
    c.top_k = j.at("top_k").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.use_osrs = j.at("use_osrs").get<bool>();
    c.use_dmss = j.at("use_dmss").get<bool>();
    c.use_csmf = j.at("use_csmf").get<bool>();
    c.prune_scope = prune_scope_from_name(j.at("prune_scope").get<std::string>());
    c.row_normalize = j.at("row_normalize").get<bool>();
    c.force_dominant_on_missing = j.at("force_dominant_on_missing").get<bool>();
    c.validate();
    return c;
}

namespace {

double cross_entropy(const Vec& probs, int label) {
    if (label < 0 || label >= static_cast<int>(probs.size()))
        throw std::invalid_argument("cross_entropy: label out of range");
    return -std::log(probs[static_cast<std::size_t>(label)]);
}

double modality_loss(const std::vector<PredictionBundle>& bundles, const std::vector<int>& labels) {
    require(bundles.size() == labels.size(), "total_loss: bundle/label count mismatch");
    if (bundles.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t s = 0; s < bundles.size(); ++s) {
        const PredictionBundle& b = bundles[s];
        require(!b.probs.empty(), "total_loss: empty bundle");
        double module_term = 0.0;
        for (const Vec& p : b.probs) module_term += cross_entropy(p, labels[s]);
        module_term /= static_cast<double>(b.probs.size());
        acc += module_term + cross_entropy(b.mean_probs, labels[s]);
    }
    return acc / static_cast<double>(bundles.size());
}

} // namespace

LossBreakdown total_loss(const std::vector<PredictionBundle>& bundles_a,
                         const std::vector<PredictionBundle>& bundles_b,
                         const std::vector<int>& labels_a, const std::vector<int>& labels_b) {
    LossBreakdown out;
    out.loss_a = modality_loss(bundles_a, labels_a);
    out.loss_b = modality_loss(bundles_b, labels_b);
    out.total = out.loss_a + out.loss_b;
    return out;
}

namespace {

// Normalized catalog rows: the classifier target directions.
Mat normalized_embeddings(const ClassCatalog& catalog) {
    Mat cn = catalog.embeddings;
    for (int i = 0; i < cn.rows; ++i) {
        double sq = 0.0;
        for (int j = 0; j < cn.cols; ++j) sq += cn(i, j) * cn(i, j);
        const double inv = 1.0 / std::sqrt(sq);
        for (int j = 0; j < cn.cols; ++j) cn(i, j) *= inv;
    }
    return cn;
}

struct CosineBatch {
    Mat logits;  // n x N, gamma^2 * cosine
    Mat cosines; // n x N
    Mat unit;    // n x d_s, zero rows for degenerate inputs
    Vec norms;   // n
};

CosineBatch cosine_forward(const Mat& s_hat, const Mat& cn, double gamma) {
    CosineBatch cb;
    const int n = s_hat.rows;
    cb.unit = s_hat;
    cb.norms.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double sq = 0.0;
        for (int j = 0; j < s_hat.cols; ++j) sq += s_hat(i, j) * s_hat(i, j);
        const double nr = std::sqrt(sq);
        cb.norms[static_cast<std::size_t>(i)] = nr;
        if (nr > 0.0) {
            for (int j = 0; j < s_hat.cols; ++j) cb.unit(i, j) /= nr;
        } else {
            for (int j = 0; j < s_hat.cols; ++j) cb.unit(i, j) = 0.0;
        }
    }
    matmul_nt(cb.unit, cn, cb.cosines);
    cb.logits = cb.cosines;
    const double g2 = gamma * gamma;
    for (double& x : cb.logits.data) x *= g2;
    return cb;
}

// dL/ds_hat for logits = gamma^2 * cos(s_hat, c). Degenerate rows get a
// zero (sub)gradient.
Mat cosine_backward(const CosineBatch& cb, const Mat& cn, double gamma, const Mat& grad_logits) {
    const int n = cb.unit.rows;
    const double g2 = gamma * gamma;
    Mat t; // n x d_s: grad_logits * cn
    matmul_nn(grad_logits, cn, t);
    Mat out(n, cb.unit.cols);
#pragma omp parallel for schedule(static) if (static_cast<long>(n) * cb.unit.cols > 8192)
    for (int i = 0; i < n; ++i) {
        const double nr = cb.norms[static_cast<std::size_t>(i)];
        if (nr == 0.0) {
            for (int j = 0; j < out.cols; ++j) out(i, j) = 0.0;
            continue;
        }
        double w = 0.0; // sum_c g_c * cos_c
        for (int c = 0; c < grad_logits.cols; ++c) w += grad_logits(i, c) * cb.cosines(i, c);
        const double scale = g2 / nr;
        for (int j = 0; j < out.cols; ++j)
            out(i, j) = scale * (t(i, j) - w * cb.unit(i, j));
    }
    return out;
}

struct ModuleForward {
    MlpCache cache;
    CosineBatch cosine;
    Mat probs;
};

PredictionBundle bundle_from_rows(const std::vector<ModuleForward>& mods, const Mat& mean_logits,
                                  const Mat& mean_probs, int row) {
    PredictionBundle b;
    for (const ModuleForward& mf : mods) {
        b.logits.push_back(row_copy(mf.cosine.logits, row));
        b.probs.push_back(row_copy(mf.probs, row));
        b.degenerate.push_back(mf.cosine.norms[static_cast<std::size_t>(row)] == 0.0);
    }
    b.mean_logits = row_copy(mean_logits, row);
    b.mean_probs = row_copy(mean_probs, row);
    return b;
}

} // namespace

ObjectiveGradients objective_gradients(const ModalityEnsemble& ensemble,
                                       const ClassCatalog& catalog, const Mat& batch,
                                       const std::vector<int>& labels) {
    require(batch.rows == static_cast<int>(labels.size()),
            "objective_gradients: batch/label count mismatch");
    require(batch.rows > 0, "objective_gradients: empty batch");
    const Mat cn = normalized_embeddings(catalog);
    const int n = batch.rows;
    const int n_classes = cn.rows;
    const int k = static_cast<int>(ensemble.modules.size());

    std::vector<ModuleForward> mods(static_cast<std::size_t>(k));
    Mat mean_logits(n, n_classes, 0.0);
    for (int i = 0; i < k; ++i) {
        ModuleForward& mf = mods[static_cast<std::size_t>(i)];
        const OsrsModule& m = ensemble.modules[static_cast<std::size_t>(i)];
        Mat s_hat = mlp_forward(m.mapper, batch, &mf.cache);
        mf.cosine = cosine_forward(s_hat, cn, m.gamma);
        mf.probs = softmax_rows(mf.cosine.logits);
        for (std::size_t t = 0; t < mean_logits.data.size(); ++t)
            mean_logits.data[t] += mf.cosine.logits.data[t];
    }
    for (double& x : mean_logits.data) x /= k;
    const Mat mean_probs = softmax_rows(mean_logits);

    std::vector<PredictionBundle> bundles;
    bundles.reserve(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) bundles.push_back(bundle_from_rows(mods, mean_logits, mean_probs, r));

    ObjectiveGradients out;
    out.loss = modality_loss(bundles, labels);

    // dL/dlogits_i = (P_i + P* - 2Y) / (n K): the module term contributes
    // (P_i - Y)/(n K), the mean term (P* - Y)/n through the 1/K mean.
    for (int i = 0; i < k; ++i) {
        ModuleForward& mf = mods[static_cast<std::size_t>(i)];
        Mat g(n, n_classes);
        const double inv = 1.0 / (static_cast<double>(n) * static_cast<double>(k));
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n_classes; ++c) {
                double v = mf.probs(r, c) + mean_probs(r, c);
                if (c == labels[static_cast<std::size_t>(r)]) v -= 2.0;
                g(r, c) = v * inv;
            }
        }
        const OsrsModule& m = ensemble.modules[static_cast<std::size_t>(i)];
        const Mat d_s_hat = cosine_backward(mf.cosine, cn, m.gamma, g);
        out.per_module.push_back(mlp_backward(m.mapper, mf.cache, d_s_hat));
    }
    return out;
}

namespace {

struct BatchResult {
    double loss = 0.0;
    int count = 0;
};

// One optimizer step on a single-modality mini-batch.
BatchResult train_batch(ModalityEnsemble& ensemble, std::vector<AdamState>& opt,
                        const ClassCatalog& catalog, const Mat& batch,
                        const std::vector<int>& labels) {
    ObjectiveGradients og = objective_gradients(ensemble, catalog, batch, labels);
    for (std::size_t i = 0; i < ensemble.modules.size(); ++i)
        adam_step(opt[i], ensemble.modules[i].mapper, og.per_module[i]);
    return {og.loss, batch.rows};
}

SimilarityMatrix prune_for_modality(const SimilarityMatrix& s, const TrainConfig& config,
                                    const std::vector<int>& seen_rows) {
    const int k = std::min(config.top_k, s.values.rows);
    SimilarityMatrix pruned = config.prune_scope == PruneScope::SeenOnly
                                  ? prune_topk_scoped(s, k, seen_rows)
                                  : prune_topk(s, k);
    if (config.row_normalize) pruned = l1_row_normalized(pruned);
    return pruned;
}

} // namespace

ModelState train(const MmhclDataset& dataset, const ClassCatalog& catalog,
                 const TrainConfig& config) {
    config.validate();
    if (!config.use_osrs)
        throw config_error("train: use_osrs=false is the linear-head baseline; "
                           "call train_fc_baseline instead");
    validate_dataset(dataset);
    validate_catalog(catalog);
    require(dataset.partition.n_classes == catalog.size(),
            "train: partition class count != catalog size");

    ModelState model;
    model.catalog = catalog;
    model.config = config;
    model.ensemble_a = make_ensemble(Modality::A, dataset.d_a, catalog.dim(), config.k_modules,
                                     config.gamma, config.seed);
    model.ensemble_b = make_ensemble(Modality::B, dataset.d_b, catalog.dim(), config.k_modules,
                                     config.gamma, config.seed);
    model.seen_rows_a = dataset.partition.seen_a;
    model.seen_rows_b = dataset.partition.seen_b;
    const SimilarityMatrix s = class_similarity(catalog);
    model.s_pruned_a = prune_for_modality(s, config, model.seen_rows_a);
    model.s_pruned_b = prune_for_modality(s, config, model.seen_rows_b);

    std::vector<AdamState> opt_a, opt_b;
    for (const OsrsModule& m : model.ensemble_a.modules)
        opt_a.push_back(make_adam(m.mapper, config.learning_rate, config.weight_decay));
    for (const OsrsModule& m : model.ensemble_b.modules)
        opt_b.push_back(make_adam(m.mapper, config.learning_rate, config.weight_decay));

    std::vector<int> stream_a, stream_b;
    for (int i = 0; i < static_cast<int>(dataset.train.size()); ++i) {
        const MultimodalSample& smp = dataset.train[static_cast<std::size_t>(i)];
        if (smp.present_a) stream_a.push_back(i);
        if (smp.present_b) stream_b.push_back(i);
    }

    auto make_batch = [&](const std::vector<int>& stream, std::size_t start, std::size_t end,
                          bool modality_a, Mat& batch, std::vector<int>& labels) {
        const int dim = modality_a ? dataset.d_a : dataset.d_b;
        batch = Mat(static_cast<int>(end - start), dim);
        labels.clear();
        for (std::size_t t = start; t < end; ++t) {
            const MultimodalSample& smp =
                dataset.train[static_cast<std::size_t>(stream[t])];
            set_row(batch, static_cast<int>(t - start), modality_a ? smp.feat_a : smp.feat_b);
            labels.push_back(smp.label);
        }
    };

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        SeededRng shuffle_a(mix_seed(config.seed, 0xa0000 + static_cast<std::uint64_t>(epoch), 1));
        SeededRng shuffle_b(mix_seed(config.seed, 0xa0000 + static_cast<std::uint64_t>(epoch), 2));
        shuffle_a.shuffle(stream_a);
        shuffle_b.shuffle(stream_b);

        const std::size_t bs = static_cast<std::size_t>(config.batch_size);
        std::size_t pos_a = 0, pos_b = 0;
        double sum_a = 0.0, sum_b = 0.0;
        int batch_index = 0;
        bool turn_a = true;
        while (pos_a < stream_a.size() || pos_b < stream_b.size()) {
            const bool do_a = (turn_a && pos_a < stream_a.size()) || pos_b >= stream_b.size();
            Mat batch;
            std::vector<int> labels;
            BatchResult res;
            if (do_a) {
                const std::size_t end = std::min(pos_a + bs, stream_a.size());
                make_batch(stream_a, pos_a, end, true, batch, labels);
                res = train_batch(model.ensemble_a, opt_a, catalog, batch, labels);
                sum_a += res.loss * res.count;
                pos_a = end;
            } else {
                const std::size_t end = std::min(pos_b + bs, stream_b.size());
                make_batch(stream_b, pos_b, end, false, batch, labels);
                res = train_batch(model.ensemble_b, opt_b, catalog, batch, labels);
                sum_b += res.loss * res.count;
                pos_b = end;
            }
            if (!std::isfinite(res.loss))
                throw numeric_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(batch_index) + " (modality " +
                                    (do_a ? "A" : "B") + ")");
            turn_a = !turn_a;
            ++batch_index;
        }
        EpochLoss el;
        el.epoch = epoch;
        el.loss_a = stream_a.empty() ? 0.0 : sum_a / static_cast<double>(stream_a.size());
        el.loss_b = stream_b.empty() ? 0.0 : sum_b / static_cast<double>(stream_b.size());
        el.total = el.loss_a + el.loss_b;
        model.training_log.push_back(el);
    }
    return model;
}

FusionDecision predict(const ModelState& model, const MultimodalSample& sample) {
    const MultimodalSample padded =
        pad_missing(sample, model.ensemble_a.input_dim, model.ensemble_b.input_dim);
    require(static_cast<int>(padded.feat_a.size()) == model.ensemble_a.input_dim,
            "predict: modality A dim mismatch");
    require(static_cast<int>(padded.feat_b.size()) == model.ensemble_b.input_dim,
            "predict: modality B dim mismatch");

    const PredictionBundle bundle_a = ensemble_predict(model.ensemble_a, padded.feat_a, model.catalog);
    const PredictionBundle bundle_b = ensemble_predict(model.ensemble_b, padded.feat_b, model.catalog);
    UncertaintyReport report = assess_uncertainty(bundle_a, bundle_b);

    Modality dominant = report.dominant;
    if (model.config.force_dominant_on_missing && sample.present_a != sample.present_b) {
        dominant = sample.present_a ? Modality::A : Modality::B;
        report.dominant = dominant;
    }

    FusionDecision d;
    if (!model.config.use_dmss) {
        // Plain averaging: halves keep the fused = dom + aux identity.
        const Vec& lo_dom = dominant == Modality::A ? bundle_a.mean_logits : bundle_b.mean_logits;
        const Vec& lo_aux = dominant == Modality::A ? bundle_b.mean_logits : bundle_a.mean_logits;
        d.dominant = dominant;
        d.lo_dom.resize(lo_dom.size());
        d.lo_aux_reweighted.resize(lo_dom.size());
        d.lo_fused.resize(lo_dom.size());
        for (std::size_t i = 0; i < lo_dom.size(); ++i) {
            d.lo_dom[i] = 0.5 * lo_dom[i];
            d.lo_aux_reweighted[i] = 0.5 * lo_aux[i];
            d.lo_fused[i] = 0.5 * (lo_dom[i] + lo_aux[i]);
        }
        d.probs = softmax(d.lo_fused);
        d.predicted_class = argmax_index(d.probs);
    } else if (!model.config.use_csmf) {
        const Vec& lo_dom = dominant == Modality::A ? bundle_a.mean_logits : bundle_b.mean_logits;
        d.dominant = dominant;
        d.lo_dom = lo_dom;
        d.lo_aux_reweighted.assign(lo_dom.size(), 0.0);
        d.lo_fused = lo_dom;
        d.probs = softmax(d.lo_fused);
        d.predicted_class = argmax_index(d.probs);
    } else {
        d = fuse_with_dominant(bundle_a.mean_logits, bundle_b.mean_logits, model.s_pruned_a,
                               model.s_pruned_b, dominant);
    }
    d.uncertainty = report;
    return d;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[9] = "MMHCLCKP";

std::vector<int> hidden_dims(const MlpParams& p) {
    const std::vector<int> dims = p.layer_dims();
    return std::vector<int>(dims.begin() + 1, dims.end() - 1);
}

void append_params(std::string& blob, const MlpParams& p) {
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        for (double x : p.weights[l].data) append_f64_le(blob, x);
        for (double x : p.biases[l]) append_f64_le(blob, x);
    }
}

struct BlockReader {
    const unsigned char* p;
    std::size_t remaining;
    std::string path;

    double next() {
        if (remaining < 8) throw load_error("checkpoint truncated: " + path);
        const double v = read_f64_le(p);
        p += 8;
        remaining -= 8;
        return v;
    }
    void fill(MlpParams& params) {
        for (std::size_t l = 0; l < params.weights.size(); ++l) {
            for (double& x : params.weights[l].data) x = next();
            for (double& x : params.biases[l]) x = next();
        }
    }
};

void write_container(const nlohmann::json& header, const std::string& blob,
                     const std::string& path) {
    std::string bytes(kMagic, 8);
    const std::string h = header.dump();
    const std::uint32_t len = static_cast<std::uint32_t>(h.size());
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((len >> (8 * i)) & 0xff));
    bytes += h;
    bytes += blob;
    write_text_file(path, bytes);
}

struct Container {
    nlohmann::json header;
    std::string bytes; // full file
    std::size_t body_offset = 0;
};

Container read_container(const std::string& path) {
    Container c;
    c.bytes = read_text_file(path);
    if (c.bytes.size() < 12 || c.bytes.compare(0, 8, kMagic, 8) != 0)
        throw load_error("not a checkpoint file: " + path);
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i)
        len |= static_cast<std::uint32_t>(static_cast<unsigned char>(c.bytes[8 + static_cast<std::size_t>(i)]))
               << (8 * i);
    if (c.bytes.size() < 12 + static_cast<std::size_t>(len))
        throw load_error("checkpoint truncated: " + path);
    try {
        c.header = nlohmann::json::parse(c.bytes.substr(12, len));
    } catch (const nlohmann::json::exception& e) {
        throw load_error("corrupt checkpoint header in " + path + ": " + e.what());
    }
    const int version = c.header.value("format_version", -1);
    if (version != kCheckpointFormatVersion)
        throw checkpoint_version_error(version, kCheckpointFormatVersion);
    c.body_offset = 12 + static_cast<std::size_t>(len);
    return c;
}

nlohmann::json arch_json(const ModalityEnsemble& e) {
    nlohmann::json out = nlohmann::json::array();
    for (const OsrsModule& m : e.modules) out.push_back(hidden_dims(m.mapper));
    return out;
}

} // namespace

void save_checkpoint(const ModelState& model, const std::string& path) {
    nlohmann::json header;
    header["format_version"] = kCheckpointFormatVersion;
    header["kind"] = "cscf";
    header["dims"] = {{"d_a", model.ensemble_a.input_dim},
                      {"d_b", model.ensemble_b.input_dim},
                      {"d_s", model.catalog.dim()},
                      {"n_classes", model.catalog.size()}};
    header["class_names"] = model.catalog.names;
    header["config"] = train_config_to_json(model.config);
    header["seen_rows_a"] = model.seen_rows_a;
    header["seen_rows_b"] = model.seen_rows_b;
    header["arch_a"] = arch_json(model.ensemble_a);
    header["arch_b"] = arch_json(model.ensemble_b);
    std::string blob;
    for (double x : model.catalog.embeddings.data) append_f64_le(blob, x);
    for (const OsrsModule& m : model.ensemble_a.modules) append_params(blob, m.mapper);
    for (const OsrsModule& m : model.ensemble_b.modules) append_params(blob, m.mapper);
    write_container(header, blob, path);
}

ModelState load_checkpoint(const std::string& path) {
    const Container c = read_container(path);
    if (c.header.value("kind", "") != "cscf")
        throw load_error("checkpoint kind '" + c.header.value("kind", "") +
                         "' is not a full model: " + path);
    ModelState model;
    const auto& dims = c.header.at("dims");
    const int d_a = dims.at("d_a").get<int>();
    const int d_b = dims.at("d_b").get<int>();
    const int d_s = dims.at("d_s").get<int>();
    const int n = dims.at("n_classes").get<int>();
    model.config = train_config_from_json(c.header.at("config"));
    model.catalog.names = c.header.at("class_names").get<std::vector<std::string>>();
    model.catalog.embeddings = Mat(n, d_s);

    auto build = [&](Modality mod, int input_dim, const nlohmann::json& arch) {
        ModalityEnsemble e;
        e.modality_id = mod;
        e.input_dim = input_dim;
        e.output_dim = d_s;
        for (const auto& hidden : arch) {
            OsrsModule m;
            m.gamma = model.config.gamma;
            m.mapper = make_mlp(input_dim, hidden.get<std::vector<int>>(), d_s, false);
            e.modules.push_back(std::move(m));
        }
        return e;
    };
    model.ensemble_a = build(Modality::A, d_a, c.header.at("arch_a"));
    model.ensemble_b = build(Modality::B, d_b, c.header.at("arch_b"));

    BlockReader reader{reinterpret_cast<const unsigned char*>(c.bytes.data()) + c.body_offset,
                       c.bytes.size() - c.body_offset, path};
    for (double& x : model.catalog.embeddings.data) x = reader.next();
    for (OsrsModule& m : model.ensemble_a.modules) reader.fill(m.mapper);
    for (OsrsModule& m : model.ensemble_b.modules) reader.fill(m.mapper);
    if (reader.remaining != 0) throw load_error("checkpoint has trailing bytes: " + path);

    validate_catalog(model.catalog);
    validate_ensemble(model.ensemble_a, d_s);
    validate_ensemble(model.ensemble_b, d_s);

    // Similarity matrices are derived state: rebuild from the catalog with
    // the stored config and seen rows. Deterministic, so round-trips stay
    // bit-exact.
    model.seen_rows_a = c.header.at("seen_rows_a").get<std::vector<int>>();
    model.seen_rows_b = c.header.at("seen_rows_b").get<std::vector<int>>();
    const SimilarityMatrix s = class_similarity(model.catalog);
    model.s_pruned_a = prune_for_modality(s, model.config, model.seen_rows_a);
    model.s_pruned_b = prune_for_modality(s, model.config, model.seen_rows_b);
    return model;
}

std::string checkpoint_kind(const std::string& path) {
    return read_container(path).header.value("kind", "");
}

FcBaselineState train_fc_baseline(const MmhclDataset& dataset, const TrainConfig& config) {
    config.validate();
    validate_dataset(dataset);
    FcBaselineState model;
    model.n_classes = dataset.partition.n_classes;
    model.config = config;
    model.head_a = make_mlp(dataset.d_a, {}, model.n_classes);
    model.head_b = make_mlp(dataset.d_b, {}, model.n_classes);
    SeededRng rng_a(mix_seed(config.seed, 0xfc, 0));
    SeededRng rng_b(mix_seed(config.seed, 0xfc, 1));
    init_glorot(model.head_a, rng_a);
    init_glorot(model.head_b, rng_b);
    AdamState opt_a = make_adam(model.head_a, config.learning_rate, config.weight_decay);
    AdamState opt_b = make_adam(model.head_b, config.learning_rate, config.weight_decay);

    std::vector<int> stream_a, stream_b;
    for (int i = 0; i < static_cast<int>(dataset.train.size()); ++i) {
        if (dataset.train[static_cast<std::size_t>(i)].present_a) stream_a.push_back(i);
        if (dataset.train[static_cast<std::size_t>(i)].present_b) stream_b.push_back(i);
    }

    auto run_batch = [&](MlpParams& head, AdamState& opt, const std::vector<int>& stream,
                         std::size_t start, std::size_t end, bool modality_a) {
        const int n = static_cast<int>(end - start);
        Mat batch(n, modality_a ? dataset.d_a : dataset.d_b);
        std::vector<int> labels;
        for (std::size_t t = start; t < end; ++t) {
            const MultimodalSample& smp = dataset.train[static_cast<std::size_t>(stream[t])];
            set_row(batch, static_cast<int>(t - start), modality_a ? smp.feat_a : smp.feat_b);
            labels.push_back(smp.label);
        }
        MlpCache cache;
        const Mat logits = mlp_forward(head, batch, &cache);
        const Mat probs = softmax_rows(logits);
        double loss = 0.0;
        Mat g(n, model.n_classes);
        for (int r = 0; r < n; ++r) {
            loss += cross_entropy(row_copy(probs, r), labels[static_cast<std::size_t>(r)]);
            for (int c = 0; c < model.n_classes; ++c) {
                double v = probs(r, c);
                if (c == labels[static_cast<std::size_t>(r)]) v -= 1.0;
                g(r, c) = v / static_cast<double>(n);
            }
        }
        const MlpGrads grads = mlp_backward(head, cache, g);
        adam_step(opt, head, grads);
        return loss / static_cast<double>(n);
    };

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        SeededRng shuffle_a(mix_seed(config.seed, 0xfcb00 + static_cast<std::uint64_t>(epoch), 1));
        SeededRng shuffle_b(mix_seed(config.seed, 0xfcb00 + static_cast<std::uint64_t>(epoch), 2));
        shuffle_a.shuffle(stream_a);
        shuffle_b.shuffle(stream_b);
        const std::size_t bs = static_cast<std::size_t>(config.batch_size);
        double sum_a = 0.0, sum_b = 0.0;
        for (std::size_t pos = 0; pos < stream_a.size(); pos += bs) {
            const std::size_t end = std::min(pos + bs, stream_a.size());
            sum_a += run_batch(model.head_a, opt_a, stream_a, pos, end, true) *
                     static_cast<double>(end - pos);
        }
        for (std::size_t pos = 0; pos < stream_b.size(); pos += bs) {
            const std::size_t end = std::min(pos + bs, stream_b.size());
            sum_b += run_batch(model.head_b, opt_b, stream_b, pos, end, false) *
                     static_cast<double>(end - pos);
        }
        EpochLoss el;
        el.epoch = epoch;
        el.loss_a = stream_a.empty() ? 0.0 : sum_a / static_cast<double>(stream_a.size());
        el.loss_b = stream_b.empty() ? 0.0 : sum_b / static_cast<double>(stream_b.size());
        el.total = el.loss_a + el.loss_b;
        if (!std::isfinite(el.total))
            throw numeric_error("train_fc_baseline: non-finite loss at epoch " + std::to_string(epoch));
        model.training_log.push_back(el);
    }
    return model;
}

Vec fc_logits(const FcBaselineState& model, const MultimodalSample& sample) {
    const MultimodalSample padded =
        pad_missing(sample, model.head_a.input_dim(), model.head_b.input_dim());
    Mat xa(1, model.head_a.input_dim());
    Mat xb(1, model.head_b.input_dim());
    set_row(xa, 0, padded.feat_a);
    set_row(xb, 0, padded.feat_b);
    const Mat la = mlp_forward(model.head_a, xa);
    const Mat lb = mlp_forward(model.head_b, xb);
    Vec out(static_cast<std::size_t>(model.n_classes));
    for (int c = 0; c < model.n_classes; ++c) out[static_cast<std::size_t>(c)] = 0.5 * (la(0, c) + lb(0, c));
    return out;
}

int fc_predict_class(const FcBaselineState& model, const MultimodalSample& sample) {
    return argmax_index(fc_logits(model, sample));
}

void save_fc_checkpoint(const FcBaselineState& model, const std::string& path) {
    nlohmann::json header;
    header["format_version"] = kCheckpointFormatVersion;
    header["kind"] = "fc";
    header["dims"] = {{"d_a", model.head_a.input_dim()},
                      {"d_b", model.head_b.input_dim()},
                      {"n_classes", model.n_classes}};
    header["class_names"] = model.class_names;
    header["config"] = train_config_to_json(model.config);
    std::string blob;
    append_params(blob, model.head_a);
    append_params(blob, model.head_b);
    write_container(header, blob, path);
}

FcBaselineState load_fc_checkpoint(const std::string& path) {
    const Container c = read_container(path);
    if (c.header.value("kind", "") != "fc")
        throw load_error("checkpoint kind '" + c.header.value("kind", "") +
                         "' is not a linear-head baseline: " + path);
    FcBaselineState model;
    const auto& dims = c.header.at("dims");
    model.n_classes = dims.at("n_classes").get<int>();
    model.class_names = c.header.at("class_names").get<std::vector<std::string>>();
    model.config = train_config_from_json(c.header.at("config"));
    model.head_a = make_mlp(dims.at("d_a").get<int>(), {}, model.n_classes);
    model.head_b = make_mlp(dims.at("d_b").get<int>(), {}, model.n_classes);
    BlockReader reader{reinterpret_cast<const unsigned char*>(c.bytes.data()) + c.body_offset,
                       c.bytes.size() - c.body_offset, path};
    reader.fill(model.head_a);
    reader.fill(model.head_b);
    if (reader.remaining != 0) throw load_error("checkpoint has trailing bytes: " + path);
    return model;
}

std::string training_log_csv(const std::vector<EpochLoss>& log) {
    std::ostringstream out;
    out << "epoch,loss_A,loss_B,loss_total\n";
    for (const EpochLoss& el : log) {
        out << el.epoch << "," << format_double(el.loss_a) << "," << format_double(el.loss_b)
            << "," << format_double(el.total) << "\n";
    }
    return out.str();
}

} // namespace mmhcl
