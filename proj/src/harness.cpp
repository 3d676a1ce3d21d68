#include "mmhcl/harness.hpp"

#include "mmhcl/errors.hpp"
#include "mmhcl/evaluation.hpp"
#include "mmhcl/io.hpp"
#include "mmhcl/version.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;

namespace mmhcl {

nlohmann::json default_config() {
    return nlohmann::json{
        {"data",
         {{"n_classes", 20},
          {"d_a", 48},
          {"d_b", 64},
          {"d_s", 32},
          {"train_per_class", 50},
          {"test_per_class", 20},
          {"sigma_a", 0.3},
          {"sigma_b", 0.3},
          {"rho", 0.9},
          {"embedding_families", 1},
          {"family_size", 5},
          {"family_weight", 0.6},
          {"embedding_rank", 7},
          {"seed", 1},
          {"manifest", ""}}},
        {"train",
         {{"learning_rate", 5e-4},
          {"weight_decay", 1e-4},
          {"epochs", 50},
          {"batch_size", 256},
          {"k_modules", 4},
          {"gamma", 5.0},
          {"top_k", 5},
          {"seed", 1},
          {"use_osrs", true},
          {"use_dmss", true},
          {"use_csmf", true},
          {"prune_scope", "all"},
          {"row_normalize", false},
          {"force_dominant_on_missing", false}}},
        {"eval",
         {{"checkpoint", ""},
          {"dump_predictions", true},
          {"dump_json", false},
          {"check",
           {{"enabled", false},
            {"min_acc_mix", 0.0},
            {"min_scenario_accuracy", nlohmann::json::object()}}}}},
        {"sweep", {{"checkpoint", ""}, {"k_values", {1, 2, 3, 5, 8, 12, 16, 20}}}},
        {"uncertainty", {{"checkpoint", ""}, {"n_samples", 30}, {"seed", 7}, {"dump_json", false}}}};
}

namespace {

bool same_category(const nlohmann::json& a, const nlohmann::json& b) {
    if (a.is_number() && b.is_number()) return true;
    if (a.is_string() && b.is_string()) return true;
    if (a.is_boolean() && b.is_boolean()) return true;
    if (a.is_object() && b.is_object()) return true;
    if (a.is_array() && b.is_array()) return true;
    return false;
}

void merge_into(nlohmann::json& base, const nlohmann::json& user, const std::string& prefix) {
    if (!user.is_object()) throw config_error("config section '" + prefix + "' must be an object");
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!base.contains(it.key())) throw config_error("unknown config key: " + path);
        nlohmann::json& slot = base[it.key()];
        // min_scenario_accuracy holds free-form scenario names.
        if (slot.is_object() && path != "eval.check.min_scenario_accuracy") {
            merge_into(slot, it.value(), path);
        } else {
            if (!same_category(slot, it.value()) && !slot.is_null())
                throw config_error("config key " + path + " has the wrong type");
            slot = it.value();
        }
    }
}

} // namespace

nlohmann::json merge_config(const nlohmann::json& user) {
    nlohmann::json merged = default_config();
    if (!user.is_null() && !user.empty()) merge_into(merged, user, "");
    return merged;
}

void apply_override(nlohmann::json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw config_error("--set expects key.path=value, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
        value = raw; // bare strings like prune_scope=all
    }
    nlohmann::json* slot = &config;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (key.empty()) throw config_error("--set: empty key segment in '" + path + "'");
        if (dot == std::string::npos) {
            (*slot)[key] = value;
            return;
        }
        slot = &(*slot)[key];
        start = dot + 1;
    }
}

std::string config_fingerprint(const nlohmann::json& config) {
    return hex64(fnv1a64(config.dump()));
}

DatasetBundle load_dataset_bundle(const std::string& manifest_path) {
    DatasetBundle bundle;
    try {
        bundle.manifest = nlohmann::json::parse(read_text_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw load_error("bad dataset manifest " + manifest_path + ": " + e.what());
    }
    if (bundle.manifest.value("manifest_version", -1) != kDatasetManifestVersion)
        throw load_error("dataset manifest version mismatch in " + manifest_path);
    const fs::path dir = fs::path(manifest_path).parent_path();
    const auto& files = bundle.manifest.at("files");
    bundle.catalog = load_catalog((dir / files.at("catalog").get<std::string>()).string());
    const ClassPartition partition =
        make_partition(bundle.manifest.at("dims").at("n_classes").get<int>(),
                       bundle.manifest.at("partition").at("seen_a").get<std::vector<int>>(),
                       bundle.manifest.at("partition").at("seen_b").get<std::vector<int>>());
    bundle.dataset = load_features((dir / files.at("features_a").get<std::string>()).string(),
                                   (dir / files.at("features_b").get<std::string>()).string(), "",
                                   partition);
    bundle.dataset.seed = bundle.manifest.value("seed", 0ULL);
    require(bundle.catalog.size() == partition.n_classes,
            "dataset manifest: catalog size != n_classes");
    return bundle;
}

namespace {

std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

struct RunContext {
    fs::path dir;
    nlohmann::json manifest;

    void add_output(const std::string& name) { manifest["outputs"].push_back(name); }
    void add_input(const std::string& path) {
        manifest["inputs"][path] = hex64(fnv1a64(read_text_file(path)));
    }
    void write(const std::string& status) {
        manifest["status"] = status;
        manifest["finished_at"] = status == "incomplete" ? "" : timestamp_now();
        write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    }
};

RunContext open_run_dir(const std::string& command, const nlohmann::json& config,
                        const std::string& out_root, std::uint64_t seed) {
    const std::string fp = config_fingerprint(config);
    std::string base = command + "-" + fp.substr(0, 12) + "-s" + std::to_string(seed);
    fs::path dir = fs::path(out_root) / base;
    for (int attempt = 2; fs::exists(dir); ++attempt)
        dir = fs::path(out_root) / (base + "-r" + std::to_string(attempt));
    fs::create_directories(dir);

    RunContext ctx;
    ctx.dir = dir;
    ctx.manifest = nlohmann::json{{"command", command},
                                  {"config", config},
                                  {"fingerprint", fp},
                                  {"seed", seed},
                                  {"artifact_version", kVersion},
                                  {"format_versions",
                                   {{"checkpoint", kCheckpointFormatVersion},
                                    {"dataset_manifest", kDatasetManifestVersion}}},
                                  {"inputs", nlohmann::json::object()},
                                  {"outputs", nlohmann::json::array()},
                                  {"started_at", timestamp_now()},
                                  {"finished_at", ""}};
    ctx.write("incomplete");
    return ctx;
}

TrainConfig train_config_from_section(const nlohmann::json& section) {
    TrainConfig c = train_config_from_json(section);
    return c;
}

int cmd_gen_data(const nlohmann::json& config, RunContext& ctx) {
    const auto& d = config.at("data");
    SyntheticSpec spec;
    spec.n_classes = d.at("n_classes").get<int>();
    spec.d_a = d.at("d_a").get<int>();
    spec.d_b = d.at("d_b").get<int>();
    spec.d_s = d.at("d_s").get<int>();
    spec.train_per_class = d.at("train_per_class").get<int>();
    spec.test_per_class = d.at("test_per_class").get<int>();
    spec.sigma_a = d.at("sigma_a").get<double>();
    spec.sigma_b = d.at("sigma_b").get<double>();
    spec.rho = d.at("rho").get<double>();
    spec.seed = d.at("seed").get<std::uint64_t>();
    validate_spec(spec);
    const int rank = d.at("embedding_rank").get<int>();
    if (rank < 0 || rank > spec.d_s)
        throw config_error("data.embedding_rank must be in [0, d_s]");
    const int families = d.at("embedding_families").get<int>();
    const int family_size = d.at("family_size").get<int>();
    const double family_weight = d.at("family_weight").get<double>();
    if (families < 0) throw config_error("data.embedding_families must be >= 0");

    ClassCatalog catalog;
    try {
        catalog = families > 0
                      ? make_benchmark_catalog(spec.n_classes, spec.d_s, spec.seed, families,
                                               family_size, family_weight,
                                               rank == 0 ? spec.d_s - families * family_size : rank)
                      : make_synthetic_catalog(spec.n_classes, spec.d_s, spec.seed, 0, 0.5, rank);
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("catalog construction: ") + e.what());
    }
    const MmhclDataset ds = synthesize(spec, catalog);

    save_catalog(catalog, (ctx.dir / "catalog.csv").string());
    save_features(ds, (ctx.dir / "features_a.csv").string(), (ctx.dir / "features_b.csv").string());

    nlohmann::json dataset_manifest{
        {"manifest_version", kDatasetManifestVersion},
        {"dims",
         {{"d_a", ds.d_a}, {"d_b", ds.d_b}, {"d_s", spec.d_s}, {"n_classes", spec.n_classes}}},
        {"partition", {{"seen_a", ds.partition.seen_a}, {"seen_b", ds.partition.seen_b}}},
        {"seed", spec.seed},
        {"counts",
         {{"train", ds.train.size()},
          {"test", ds.test.size()},
          {"train_per_class", spec.train_per_class},
          {"test_per_class_per_pattern", spec.test_per_class}}},
        {"generator",
         {{"rho", spec.rho},
          {"sigma_a", spec.sigma_a},
          {"sigma_b", spec.sigma_b},
          {"embedding_families", families},
          {"family_size", family_size},
          {"family_weight", family_weight},
          {"embedding_rank", rank}}},
        {"files",
         {{"catalog", "catalog.csv"},
          {"features_a", "features_a.csv"},
          {"features_b", "features_b.csv"}}}};
    write_text_file((ctx.dir / "dataset.json").string(), dataset_manifest.dump(2) + "\n");

    ctx.add_output("catalog.csv");
    ctx.add_output("features_a.csv");
    ctx.add_output("features_b.csv");
    ctx.add_output("dataset.json");
    std::cout << "gen-data: " << ds.train.size() << " train / " << ds.test.size()
              << " test samples in " << ctx.dir.string() << "\n";
    return kExitOk;
}

std::string require_manifest_path(const nlohmann::json& config) {
    const std::string path = config.at("data").at("manifest").get<std::string>();
    if (path.empty()) throw config_error("data.manifest must point to a dataset.json");
    if (!fs::exists(path)) throw config_error("data.manifest does not exist: " + path);
    return path;
}

int cmd_train(const nlohmann::json& config, RunContext& ctx) {
    const std::string manifest_path = require_manifest_path(config);
    ctx.add_input(manifest_path);
    const DatasetBundle bundle = load_dataset_bundle(manifest_path);
    const TrainConfig tc = train_config_from_section(config.at("train"));

    if (tc.use_osrs) {
        const ModelState model = train(bundle.dataset, bundle.catalog, tc);
        save_checkpoint(model, (ctx.dir / "checkpoint.bin").string());
        write_text_file((ctx.dir / "training_log.csv").string(), training_log_csv(model.training_log));
        if (!model.training_log.empty())
            std::cout << "train: final loss " << model.training_log.back().total << "\n";
    } else {
        const FcBaselineState model = train_fc_baseline(bundle.dataset, tc);
        FcBaselineState named = model;
        named.class_names = bundle.catalog.names;
        save_fc_checkpoint(named, (ctx.dir / "checkpoint.bin").string());
        write_text_file((ctx.dir / "training_log.csv").string(), training_log_csv(model.training_log));
        if (!model.training_log.empty())
            std::cout << "train: final loss " << model.training_log.back().total << "\n";
    }
    ctx.add_output("checkpoint.bin");
    ctx.add_output("training_log.csv");
    std::cout << "train: wrote " << (ctx.dir / "checkpoint.bin").string() << "\n";
    return kExitOk;
}

std::string require_checkpoint(const nlohmann::json& section, const char* key) {
    const std::string path = section.at(key).get<std::string>();
    if (path.empty()) throw config_error(std::string("missing checkpoint path in config (") + key + ")");
    if (!fs::exists(path)) throw config_error("checkpoint does not exist: " + path);
    return path;
}

int cmd_eval(const nlohmann::json& config, RunContext& ctx) {
    const std::string manifest_path = require_manifest_path(config);
    const std::string ckpt = require_checkpoint(config.at("eval"), "checkpoint");
    ctx.add_input(manifest_path);
    ctx.add_input(ckpt);
    const DatasetBundle bundle = load_dataset_bundle(manifest_path);
    const EvalScenarios scenarios = make_eval_scenarios(bundle.dataset);

    const std::string kind = checkpoint_kind(ckpt);
    std::vector<SamplePrediction> records;
    MetricsReport report;
    ModelState model;     // kept alive for the jsonl dump
    FcBaselineState fc;
    if (kind == "cscf") {
        model = load_checkpoint(ckpt);
        require(model.ensemble_a.input_dim == bundle.dataset.d_a &&
                    model.ensemble_b.input_dim == bundle.dataset.d_b,
                "eval: checkpoint dims do not match dataset dims");
        report = evaluate([&](const MultimodalSample& s) { return predict(model, s).predicted_class; },
                          bundle.dataset, scenarios, "cscf", model.config.seed, &records);
    } else {
        fc = load_fc_checkpoint(ckpt);
        report = evaluate([&](const MultimodalSample& s) { return fc_predict_class(fc, s); },
                          bundle.dataset, scenarios, "fc", fc.config.seed, &records);
    }
    report.config_fingerprint = ctx.manifest.at("fingerprint").get<std::string>();

    write_text_file((ctx.dir / "report.json").string(), report_to_json(report).dump(2) + "\n");
    write_text_file((ctx.dir / "report.txt").string(), report_to_text(report));
    ctx.add_output("report.json");
    ctx.add_output("report.txt");
    if (config.at("eval").at("dump_predictions").get<bool>()) {
        write_text_file((ctx.dir / "predictions.csv").string(), predictions_csv(records));
        ctx.add_output("predictions.csv");
    }
    if (config.at("eval").at("dump_json").get<bool>() && kind == "cscf") {
        std::string jsonl;
        for (const auto& r : records) {
            const MultimodalSample* sample = nullptr;
            for (const auto& s : bundle.dataset.test)
                if (s.id == r.id) {
                    sample = &s;
                    break;
                }
            if (!sample) continue;
            nlohmann::json line = fusion_to_json(predict(model, *sample));
            line["scenario"] = r.scenario;
            line["id"] = r.id;
            line["label"] = r.label;
            line["correct"] = r.correct;
            jsonl += line.dump() + "\n";
        }
        write_text_file((ctx.dir / "predictions.jsonl").string(), jsonl);
        ctx.add_output("predictions.jsonl");
    }
    std::cout << report_to_text(report);

    const auto& check = config.at("eval").at("check");
    if (check.at("enabled").get<bool>()) {
        std::vector<std::string> failures;
        for (const auto& m : report.scenarios)
            if (m.accuracy_pct < 0.0 || m.accuracy_pct > 100.0)
                failures.push_back("accuracy out of range for " + m.name);
        // acc_mix must be reproducible from the per-sample records
        int mix_total = 0, mix_correct = 0;
        for (const auto& r : records)
            if (r.scenario == "mix") {
                ++mix_total;
                if (r.correct) ++mix_correct;
            }
        if (mix_total > 0 &&
            std::abs(report.acc_mix - 100.0 * mix_correct / mix_total) > 1e-9)
            failures.push_back("acc_mix does not match per-sample recount");
        const double min_mix = check.at("min_acc_mix").get<double>();
        if (report.acc_mix < min_mix)
            failures.push_back("acc_mix " + std::to_string(report.acc_mix) + " below required " +
                               std::to_string(min_mix));
        for (auto it = check.at("min_scenario_accuracy").begin();
             it != check.at("min_scenario_accuracy").end(); ++it) {
            bool found = false;
            for (const auto& m : report.scenarios)
                if (m.name == it.key()) {
                    found = true;
                    if (m.accuracy_pct < it.value().get<double>())
                        failures.push_back(m.name + " accuracy below required threshold");
                }
            if (!found) failures.push_back("check references unknown scenario " + it.key());
        }
        if (!failures.empty()) {
            nlohmann::json err{{"check_failures", failures}};
            write_text_file((ctx.dir / "check_failures.json").string(), err.dump(2) + "\n");
            ctx.add_output("check_failures.json");
            for (const auto& f : failures) std::cerr << "check failed: " << f << "\n";
            return kExitCheckFailed;
        }
        std::cout << "eval --check: all checks passed\n";
    }
    return kExitOk;
}

int cmd_ablate(const nlohmann::json& config, RunContext& ctx) {
    const std::string manifest_path = require_manifest_path(config);
    ctx.add_input(manifest_path);
    const DatasetBundle bundle = load_dataset_bundle(manifest_path);
    const TrainConfig tc = train_config_from_section(config.at("train"));
    const auto reports = ablation_suite(bundle.dataset, bundle.catalog, tc);

    nlohmann::json arr = nlohmann::json::array();
    std::string text;
    for (const auto& r : reports) {
        arr.push_back(report_to_json(r));
        text += report_to_text(r) + "\n";
    }
    write_text_file((ctx.dir / "ablation.json").string(), arr.dump(2) + "\n");
    write_text_file((ctx.dir / "ablation.txt").string(), text);
    ctx.add_output("ablation.json");
    ctx.add_output("ablation.txt");
    std::cout << text;
    return kExitOk;
}

int cmd_sweep_k(const nlohmann::json& config, RunContext& ctx) {
    const std::string manifest_path = require_manifest_path(config);
    const std::string ckpt = require_checkpoint(config.at("sweep"), "checkpoint");
    ctx.add_input(manifest_path);
    ctx.add_input(ckpt);
    const DatasetBundle bundle = load_dataset_bundle(manifest_path);
    if (checkpoint_kind(ckpt) != "cscf")
        throw config_error("sweep-k needs a full model checkpoint");
    const ModelState model = load_checkpoint(ckpt);

    const auto k_values = config.at("sweep").at("k_values").get<std::vector<int>>();
    for (int k : k_values)
        if (k < 1 || k > model.catalog.size())
            std::cerr << "warning: skipping invalid k=" << k << "\n";
    const auto entries = topk_sweep(model, bundle.dataset, k_values);
    write_text_file((ctx.dir / "sweep.csv").string(), sweep_csv(entries));
    ctx.add_output("sweep.csv");
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json j = report_to_json(e.report);
        j["k"] = e.k;
        arr.push_back(j);
    }
    write_text_file((ctx.dir / "sweep.json").string(), arr.dump(2) + "\n");
    ctx.add_output("sweep.json");
    std::cout << sweep_csv(entries);
    return kExitOk;
}

int cmd_dump_uncertainty(const nlohmann::json& config, RunContext& ctx) {
    const std::string manifest_path = require_manifest_path(config);
    const std::string ckpt = require_checkpoint(config.at("uncertainty"), "checkpoint");
    ctx.add_input(manifest_path);
    ctx.add_input(ckpt);
    const DatasetBundle bundle = load_dataset_bundle(manifest_path);
    if (checkpoint_kind(ckpt) != "cscf")
        throw config_error("dump-uncertainty needs a full model checkpoint");
    const ModelState model = load_checkpoint(ckpt);

    const int n = std::min(config.at("uncertainty").at("n_samples").get<int>(),
                           static_cast<int>(bundle.dataset.test.size()));
    const auto rows = uncertainty_dump(model, bundle.dataset.test, bundle.dataset.partition, n,
                                       config.at("uncertainty").at("seed").get<std::uint64_t>());
    write_text_file((ctx.dir / "uncertainty.csv").string(), uncertainty_csv(rows));
    ctx.add_output("uncertainty.csv");
    if (config.at("uncertainty").at("dump_json").get<bool>()) {
        std::string jsonl;
        for (const auto& r : rows) {
            nlohmann::json line = uncertainty_to_json(r.report);
            line["id"] = r.id;
            line["label"] = r.label;
            jsonl += line.dump() + "\n";
        }
        write_text_file((ctx.dir / "uncertainty.jsonl").string(), jsonl);
        ctx.add_output("uncertainty.jsonl");
    }
    std::cout << "dump-uncertainty: " << rows.size() << " rows in " << ctx.dir.string() << "\n";
    return kExitOk;
}

} // namespace

int run_command(const std::string& command, const nlohmann::json& user_config,
                const std::string& out_root) {
    try {
        const nlohmann::json config = merge_config(user_config);
        const std::uint64_t seed = command == "gen-data"
                                       ? config.at("data").at("seed").get<std::uint64_t>()
                                       : config.at("train").at("seed").get<std::uint64_t>();
        RunContext ctx = open_run_dir(command, config, out_root, seed);
        int rc = kExitRuntimeError;
        try {
            if (command == "gen-data") rc = cmd_gen_data(config, ctx);
            else if (command == "train") rc = cmd_train(config, ctx);
            else if (command == "eval") rc = cmd_eval(config, ctx);
            else if (command == "ablate") rc = cmd_ablate(config, ctx);
            else if (command == "sweep-k") rc = cmd_sweep_k(config, ctx);
            else if (command == "dump-uncertainty") rc = cmd_dump_uncertainty(config, ctx);
            else throw config_error("unknown command: " + command);
        } catch (...) {
            ctx.write("incomplete");
            throw;
        }
        ctx.write(rc == kExitOk || rc == kExitCheckFailed ? "complete" : "incomplete");
        return rc;
    } catch (const config_error& e) {
        std::cerr << nlohmann::json{{"error", {{"kind", "config"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", {{"kind", "runtime"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return kExitRuntimeError;
    }
}

} // namespace mmhcl
