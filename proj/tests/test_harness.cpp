#include "doctest.h"

#include "mmhcl/harness.hpp"
#include "mmhcl/errors.hpp"
#include "mmhcl/io.hpp"
#include "mmhcl/training.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

using namespace mmhcl;
namespace fs = std::filesystem;

namespace {

// Fresh scratch root per test run.
fs::path scratch_root() {
    static int counter = 0;
    const fs::path root =
        fs::temp_directory_path() / ("mmhcl_harness_" + std::to_string(counter++));
    fs::remove_all(root);
    fs::create_directories(root);
    return root;
}

nlohmann::json tiny_data_config() {
    nlohmann::json c;
    c["data"]["n_classes"] = 4;
    c["data"]["d_a"] = 6;
    c["data"]["d_b"] = 5;
    c["data"]["d_s"] = 4;
    c["data"]["train_per_class"] = 8;
    c["data"]["test_per_class"] = 3;
    c["data"]["embedding_families"] = 0;
    c["data"]["embedding_rank"] = 0;
    c["data"]["seed"] = 5;
    return c;
}

fs::path only_run_dir(const fs::path& root, const std::string& prefix) {
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.path().filename().string().rfind(prefix, 0) == 0) return entry.path();
    FAIL("no run directory with prefix " << prefix);
    return {};
}

nlohmann::json manifest_without_timestamps(const fs::path& run_dir) {
    nlohmann::json m = nlohmann::json::parse(read_text_file((run_dir / "manifest.json").string()));
    m.erase("started_at");
    m.erase("finished_at");
    return m;
}

} // namespace

TEST_CASE("config fingerprint is stable under key reordering") {
    const nlohmann::json a = nlohmann::json::parse(R"({"train":{"epochs":3,"seed":9}})");
    const nlohmann::json b = nlohmann::json::parse(R"({"train":{"seed":9,"epochs":3}})");
    CHECK(config_fingerprint(merge_config(a)) == config_fingerprint(merge_config(b)));

    nlohmann::json c = a;
    c["train"]["epochs"] = 4;
    CHECK(config_fingerprint(merge_config(a)) != config_fingerprint(merge_config(c)));
}

TEST_CASE("merge rejects unknown keys and wrong types") {
    nlohmann::json bad;
    bad["train"]["epoochs"] = 3;
    CHECK_THROWS_WITH_AS(merge_config(bad), doctest::Contains("unknown config key"), config_error);

    nlohmann::json wrong;
    wrong["train"]["epochs"] = "three";
    CHECK_THROWS_WITH_AS(merge_config(wrong), doctest::Contains("wrong type"), config_error);
}

TEST_CASE("apply_override parses scalars and dotted paths") {
    nlohmann::json c = nlohmann::json::object();
    apply_override(c, "train.epochs=12");
    apply_override(c, "train.prune_scope=seen_only");
    apply_override(c, "train.row_normalize=true");
    CHECK(c["train"]["epochs"] == 12);
    CHECK(c["train"]["prune_scope"] == "seen_only");
    CHECK(c["train"]["row_normalize"] == true);
    CHECK_THROWS_AS(apply_override(c, "no_equals_sign"), config_error);
}

TEST_CASE("gen-data writes features, catalog and a parsable manifest") {
    const fs::path root = scratch_root();
    CHECK(run_command("gen-data", tiny_data_config(), root.string()) == kExitOk);
    const fs::path dir = only_run_dir(root, "gen-data-");
    for (const char* name : {"catalog.csv", "features_a.csv", "features_b.csv", "dataset.json",
                             "manifest.json"})
        CHECK(fs::exists(dir / name));

    const DatasetBundle bundle = load_dataset_bundle((dir / "dataset.json").string());
    CHECK(bundle.dataset.train.size() == 4 * 8);
    CHECK(bundle.dataset.test.size() == 4 * 3 * 3);
    CHECK(bundle.catalog.size() == 4);

    const nlohmann::json manifest =
        nlohmann::json::parse(read_text_file((dir / "manifest.json").string()));
    CHECK(manifest.at("status") == "complete");
    CHECK(manifest.at("command") == "gen-data");
    CHECK(manifest.at("outputs").size() == 4);
}

TEST_CASE("train then eval end to end, manifests deterministic modulo timestamps") {
    const fs::path root = scratch_root();
    REQUIRE(run_command("gen-data", tiny_data_config(), root.string()) == kExitOk);
    const fs::path data_dir = only_run_dir(root, "gen-data-");

    nlohmann::json tc;
    tc["data"]["manifest"] = (data_dir / "dataset.json").string();
    tc["train"]["epochs"] = 2;
    tc["train"]["k_modules"] = 2;
    tc["train"]["top_k"] = 2;
    tc["train"]["batch_size"] = 16;

    const fs::path troot1 = root / "t1";
    const fs::path troot2 = root / "t2";
    REQUIRE(run_command("train", tc, troot1.string()) == kExitOk);
    REQUIRE(run_command("train", tc, troot2.string()) == kExitOk);
    const fs::path run1 = only_run_dir(troot1, "train-");
    const fs::path run2 = only_run_dir(troot2, "train-");
    CHECK(fs::exists(run1 / "checkpoint.bin"));
    CHECK(fs::exists(run1 / "training_log.csv"));

    // identical command + config + seed: identical artifacts and manifests
    CHECK(read_text_file((run1 / "checkpoint.bin").string()) ==
          read_text_file((run2 / "checkpoint.bin").string()));
    CHECK(manifest_without_timestamps(run1) == manifest_without_timestamps(run2));

    nlohmann::json ec = tc;
    ec["eval"]["checkpoint"] = (run1 / "checkpoint.bin").string();
    const fs::path eroot = root / "e1";
    REQUIRE(run_command("eval", ec, eroot.string()) == kExitOk);
    const fs::path erun = only_run_dir(eroot, "eval-");
    CHECK(fs::exists(erun / "report.json"));
    CHECK(fs::exists(erun / "report.txt"));
    CHECK(fs::exists(erun / "predictions.csv"));
    const nlohmann::json report =
        nlohmann::json::parse(read_text_file((erun / "report.json").string()));
    CHECK(report.at("scenarios").size() == 8);

    // reruns into the same root allocate a fresh directory
    REQUIRE(run_command("eval", ec, eroot.string()) == kExitOk);
    int eval_dirs = 0;
    for (const auto& entry : fs::directory_iterator(eroot)) {
        (void)entry;
        ++eval_dirs;
    }
    CHECK(eval_dirs == 2);
}

TEST_CASE("eval --check enforces thresholds via exit code 3") {
    const fs::path root = scratch_root();
    REQUIRE(run_command("gen-data", tiny_data_config(), root.string()) == kExitOk);
    const fs::path data_dir = only_run_dir(root, "gen-data-");

    nlohmann::json tc;
    tc["data"]["manifest"] = (data_dir / "dataset.json").string();
    tc["train"]["epochs"] = 2;
    tc["train"]["k_modules"] = 2;
    tc["train"]["top_k"] = 2;
    REQUIRE(run_command("train", tc, (root / "t").string()) == kExitOk);
    const fs::path run = only_run_dir(root / "t", "train-");

    nlohmann::json ec = tc;
    ec["eval"]["checkpoint"] = (run / "checkpoint.bin").string();
    ec["eval"]["check"]["enabled"] = true;
    ec["eval"]["check"]["min_acc_mix"] = 101.0; // unattainable
    CHECK(run_command("eval", ec, (root / "echeck").string()) == kExitCheckFailed);

    ec["eval"]["check"]["min_acc_mix"] = 0.0;
    CHECK(run_command("eval", ec, (root / "echeck2").string()) == kExitOk);
}

TEST_CASE("invalid configs exit with code 1 and a machine-readable report") {
    const fs::path root = scratch_root();
    nlohmann::json bad;
    bad["train"]["k_modules"] = 1; // rejected at validation
    bad["data"]["manifest"] = "/nonexistent/dataset.json";
    CHECK(run_command("train", bad, root.string()) == kExitConfigError);

    nlohmann::json unknown;
    unknown["nope"] = 1;
    CHECK(run_command("gen-data", unknown, root.string()) == kExitConfigError);

    CHECK(run_command("not-a-command", nlohmann::json::object(), root.string()) ==
          kExitConfigError);
}

TEST_CASE("sweep-k and dump-uncertainty produce their artifacts") {
    const fs::path root = scratch_root();
    REQUIRE(run_command("gen-data", tiny_data_config(), root.string()) == kExitOk);
    const fs::path data_dir = only_run_dir(root, "gen-data-");

    nlohmann::json tc;
    tc["data"]["manifest"] = (data_dir / "dataset.json").string();
    tc["train"]["epochs"] = 2;
    tc["train"]["k_modules"] = 2;
    tc["train"]["top_k"] = 2;
    REQUIRE(run_command("train", tc, (root / "t").string()) == kExitOk);
    const fs::path run = only_run_dir(root / "t", "train-");

    nlohmann::json sc = tc;
    sc["sweep"]["checkpoint"] = (run / "checkpoint.bin").string();
    sc["sweep"]["k_values"] = {1, 2, 4, 99}; // 99 is skipped with a warning
    REQUIRE(run_command("sweep-k", sc, (root / "s").string()) == kExitOk);
    const fs::path srun = only_run_dir(root / "s", "sweep-k-");
    CHECK(fs::exists(srun / "sweep.csv"));
    const std::string csv = read_text_file((srun / "sweep.csv").string());
    int lines = 0;
    for (char ch : csv) lines += ch == '\n';
    CHECK(lines == 5); // header + reference + k in {1,2,4}

    nlohmann::json uc = tc;
    uc["uncertainty"]["checkpoint"] = (run / "checkpoint.bin").string();
    uc["uncertainty"]["n_samples"] = 10;
    REQUIRE(run_command("dump-uncertainty", uc, (root / "u").string()) == kExitOk);
    const fs::path urun = only_run_dir(root / "u", "dump-uncertainty-");
    CHECK(fs::exists(urun / "uncertainty.csv"));
    const std::string ucsv = read_text_file((urun / "uncertainty.csv").string());
    int urows = -1; // discount header
    for (char ch : ucsv) urows += ch == '\n';
    CHECK(urows == 10);
}
