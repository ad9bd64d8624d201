// flowlens: malware detection in encrypted traffic without decryption.
// Subcommands cover the full pipeline: extract (pcap -> feature CSV),
// train / eval (tree ensembles + metrics), explain (TreeSHAP reports),
// tune (validation curves), synth (synthetic corpus).

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "flowlens/common.hpp"
#include "flowlens/dataset.hpp"
#include "flowlens/explain.hpp"
#include "flowlens/features.hpp"
#include "flowlens/model.hpp"
#include "flowlens/pipeline.hpp"
#include "flowlens/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

using namespace flowlens;

struct CommonOptions {
    std::string config_path;
    std::string schema_path;
    std::optional<std::int64_t> window_seconds;
    std::optional<double> bin_width;
    std::optional<int> n_states;
    std::optional<std::uint64_t> seed;
    std::optional<int> folds;
    std::optional<std::string> model_name;
    std::optional<double> test_fraction;
    std::optional<bool> oversample;
    std::optional<int> adasyn_k;
    std::optional<double> adasyn_beta;
    std::optional<int> target_class;
    std::optional<int> jobs;
    std::map<std::string, double> params; // hyperparameter overrides

    json file_config; // loaded config file (may be empty)
};

// precedence: CLI flag > config file > default
template <typename T>
T resolve(const std::optional<T>& flag, const json& cfg, const char* key, T fallback) {
    if (flag) return *flag;
    if (cfg.contains(key)) return cfg.at(key).get<T>();
    return fallback;
}

void load_config_file(CommonOptions& opt) {
    std::string path = opt.config_path;
    if (path.empty()) {
        if (const char* env = std::getenv("FLOWLENS_CONFIG")) path = env;
    }
    if (path.empty()) return;
    opt.file_config = json::parse(read_file(path));
    if (opt.file_config.contains("params")) {
        for (const auto& [key, value] : opt.file_config.at("params").items())
            if (!opt.params.count(key)) opt.params[key] = value.get<double>();
    }
}

FeatureSchema resolve_schema(CommonOptions& opt) {
    std::string schema_path = opt.schema_path;
    if (schema_path.empty() && opt.file_config.contains("schema_path"))
        schema_path = opt.file_config.at("schema_path").get<std::string>();

    FeatureSchema schema = schema_path.empty() ? FeatureSchema::default_schema()
                                               : FeatureSchema::from_json_text(read_file(schema_path));
    schema.window_seconds =
        resolve<std::int64_t>(opt.window_seconds, opt.file_config, "window_seconds",
                              schema.window_seconds);
    schema.bin_width = resolve<double>(opt.bin_width, opt.file_config, "bin_width",
                                       schema.bin_width);
    schema.n_states = resolve<int>(opt.n_states, opt.file_config, "n_states", schema.n_states);
    schema.rebuild();
    return schema;
}

ordered_json resolved_config_json(const CommonOptions& opt, const FeatureSchema& schema,
                                  ModelKind kind, const HyperParams& params) {
    ordered_json j;
    j["schema_version"] = schema.schema_version;
    j["window_seconds"] = schema.window_seconds;
    j["bin_width"] = schema.bin_width;
    j["n_states"] = schema.n_states;
    j["model"] = model_kind_name(kind);
    j["hyperparams"] = ordered_json{{"n_estimators", params.n_estimators},
                                    {"max_depth", params.max_depth},
                                    {"min_samples_split", params.min_samples_split},
                                    {"min_samples_leaf", params.min_samples_leaf},
                                    {"learning_rate", params.learning_rate},
                                    {"min_child_weight", params.min_child_weight},
                                    {"gamma", params.gamma},
                                    {"colsample", params.colsample},
                                    {"subsample", params.subsample},
                                    {"lambda_l2", params.lambda_l2},
                                    {"seed", params.seed}};
    j["folds"] = resolve<int>(opt.folds, opt.file_config, "folds", 10);
    j["seed"] = resolve<std::uint64_t>(opt.seed, opt.file_config, "seed", 0);
    return j;
}

ModelKind resolve_model_kind(const CommonOptions& opt) {
    return model_kind_from_name(
        resolve<std::string>(opt.model_name, opt.file_config, "model", "xgb"));
}

HyperParams resolve_params(const CommonOptions& opt, ModelKind kind) {
    HyperParams p = default_params(kind);
    p.seed = resolve<std::uint64_t>(opt.seed, opt.file_config, "seed", 0);
    for (const auto& [name, value] : opt.params) p.set(name, value);
    p.validate();
    return p;
}

std::vector<std::uint8_t> binary_mask_for(const Dataset& ds, const FeatureSchema& schema) {
    std::vector<std::uint8_t> mask(ds.dimension(), 0);
    for (std::size_t i = 0; i < ds.feature_names.size(); ++i)
        if (schema.has(ds.feature_names[i]))
            mask[i] = schema.features[schema.index_of(ds.feature_names[i])].binary ? 1 : 0;
    return mask;
}

std::vector<std::string> provenance_comments(const ordered_json& config,
                                             const std::vector<fs::path>& inputs) {
    std::vector<std::string> out;
    out.push_back(std::string("flowlens ") + kVersion);
    out.push_back("config: " + config.dump());
    for (const fs::path& p : inputs) {
        const Bytes bytes = read_file_bytes(p);
        out.push_back("input " + p.generic_string() + " fnv1a64=" + digest_hex(bytes));
    }
    return out;
}

ordered_json provenance_json(const ordered_json& config, const std::vector<fs::path>& inputs) {
    ordered_json j;
    j["tool"] = std::string("flowlens ") + kVersion;
    j["config"] = config;
    j["inputs"] = ordered_json::array();
    for (const fs::path& p : inputs) {
        const Bytes bytes = read_file_bytes(p);
        j["inputs"].push_back(
            ordered_json{{"path", p.generic_string()}, {"fnv1a64", digest_hex(bytes)}});
    }
    return j;
}

std::optional<int> label_for_path(const fs::path& path,
                                  const std::map<std::string, int>& label_map) {
    if (!label_map.empty()) {
        auto it = label_map.find(path.generic_string());
        if (it == label_map.end()) it = label_map.find(path.filename().string());
        if (it == label_map.end()) it = label_map.find(path.stem().string());
        if (it != label_map.end()) return it->second;
        return std::nullopt;
    }
    const std::string parent = path.parent_path().filename().string();
    if (parent == "malware") return 1;
    if (parent == "normal") return 0;
    return std::nullopt;
}

// --- extract -------------------------------------------------------------------

int cmd_extract(CommonOptions& opt, const std::vector<std::string>& pcap_paths,
                const std::string& out_path, const std::string& label_map_path,
                const std::string& dump_flows_path, const std::string& log_path,
                const std::string& standardize_path) {
    const FeatureSchema schema = resolve_schema(opt);

    std::map<std::string, int> label_map;
    if (!label_map_path.empty()) {
        const std::string text = read_file(label_map_path);
        std::size_t pos = 0;
        while (pos < text.size()) {
            std::size_t eol = text.find('\n', pos);
            if (eol == std::string::npos) eol = text.size();
            std::string line = text.substr(pos, eol - pos);
            pos = eol + 1;
            if (line.empty() || line[0] == '#') continue;
            const std::size_t comma = line.rfind(',');
            if (comma == std::string::npos)
                throw Error(Errc::bad_config, "label map line without comma: " + line);
            label_map[line.substr(0, comma)] = std::stoi(line.substr(comma + 1));
        }
    }

    std::vector<fs::path> inputs(pcap_paths.begin(), pcap_paths.end());
    const int jobs = std::max(1, resolve<int>(opt.jobs, opt.file_config, "jobs", 1));

    std::vector<Dataset> partials(inputs.size());
    std::vector<ExtractLog> logs(inputs.size());
    std::vector<std::exception_ptr> errors(inputs.size());
    const bool want_debug = !dump_flows_path.empty();

    std::size_t next = 0;
    std::mutex mtx;
    auto worker = [&]() {
        while (true) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lock(mtx);
                if (next >= inputs.size()) return;
                i = next++;
            }
            try {
                const Bytes bytes = read_file_bytes(inputs[i]);
                partials[i] =
                    extract_capture(bytes, schema, label_for_path(inputs[i], label_map),
                                    inputs[i].stem().string() + "#", logs[i], want_debug);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (jobs == 1 || inputs.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < std::min<int>(jobs, static_cast<int>(inputs.size())); ++t)
            pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (errors[i]) {
            try {
                std::rethrow_exception(errors[i]);
            } catch (const Error& e) {
                throw Error(e.code, inputs[i].generic_string() + ": " + e.what());
            }
        }
    }

    Dataset merged;
    merged.schema_version = schema.schema_version;
    for (const FeatureDef& f : schema.features) merged.feature_names.push_back(f.name);
    ExtractLog total_log;
    std::vector<std::string> flow_debug;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        for (FeatureVector& row : partials[i].rows) merged.rows.push_back(std::move(row));
        total_log.decode.frames += logs[i].decode.frames;
        total_log.decode.tcp_packets += logs[i].decode.tcp_packets;
        total_log.decode.skipped += logs[i].decode.skipped;
        total_log.decode.malformed += logs[i].decode.malformed;
        total_log.decode.fragments_dropped += logs[i].decode.fragments_dropped;
        total_log.decode.truncated_tail |= logs[i].decode.truncated_tail;
        total_log.flows.input_packets += logs[i].flows.input_packets;
        total_log.flows.flows_assembled += logs[i].flows.flows_assembled;
        total_log.flows.flows_kept += logs[i].flows.flows_kept;
        total_log.flows.flows_discarded_handshake += logs[i].flows.flows_discarded_handshake;
        total_log.flows.flows_discarded_unencrypted += logs[i].flows.flows_discarded_unencrypted;
        total_log.flows.packets_discarded += logs[i].flows.packets_discarded;
        for (std::string& line : logs[i].flow_debug) flow_debug.push_back(std::move(line));
    }

    ordered_json config;
    config["schema_version"] = schema.schema_version;
    config["window_seconds"] = schema.window_seconds;
    config["bin_width"] = schema.bin_width;
    config["n_states"] = schema.n_states;

    atomic_write(out_path, write_dataset_csv(merged, provenance_comments(config, inputs)));

    if (!dump_flows_path.empty()) {
        std::string text;
        for (const std::string& line : flow_debug) text += line + "\n";
        atomic_write(dump_flows_path, text);
    }
    if (!standardize_path.empty()) {
        // per-feature mean/std of the emitted raw values; consumers decide
        // what to standardize, fitting on full data before splitting leaks
        ordered_json stats = ordered_json::array();
        for (std::size_t f = 0; f < merged.dimension(); ++f) {
            double mean = 0;
            for (const FeatureVector& row : merged.rows) mean += row.values[f];
            if (!merged.rows.empty()) mean /= static_cast<double>(merged.rows.size());
            double ss = 0;
            for (const FeatureVector& row : merged.rows)
                ss += (row.values[f] - mean) * (row.values[f] - mean);
            const double stddev =
                merged.rows.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(merged.rows.size()));
            stats.push_back(ordered_json{
                {"feature", merged.feature_names[f]}, {"mean", mean}, {"std", stddev}});
        }
        atomic_write(standardize_path, stats.dump(2) + "\n");
    }

    const std::string log_text = extract_log_to_json(total_log);
    if (!log_path.empty()) atomic_write(log_path, log_text + "\n");
    std::cerr << "extract: " << merged.rows.size() << " feature rows from " << inputs.size()
              << " capture(s)\n"
              << log_text << "\n";
    return 0;
}

// --- train / eval ----------------------------------------------------------------

struct CvSummary {
    std::map<std::string, std::pair<double, double>> metric_mean_std;
};

ordered_json metrics_json(const MetricsReport& m) {
    return ordered_json{{"tp", m.tp},         {"tn", m.tn},
                        {"fp", m.fp},         {"fn", m.fn},
                        {"accuracy", m.accuracy}, {"precision", m.precision},
                        {"recall", m.recall}, {"f1", m.f1},
                        {"mcc", m.mcc}};
}

Dataset dataset_subset(const Dataset& ds, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.feature_names = ds.feature_names;
    out.schema_version = ds.schema_version;
    out.rows.reserve(idx.size());
    for (std::size_t i : idx) out.rows.push_back(ds.rows[i]);
    return out;
}

int cmd_train(CommonOptions& opt, const std::string& dataset_path, const std::string& model_path,
              const std::string& metrics_path) {
    const FeatureSchema schema = resolve_schema(opt);
    const ModelKind kind = resolve_model_kind(opt);
    const HyperParams params = resolve_params(opt, kind);
    const int folds = resolve<int>(opt.folds, opt.file_config, "folds", 10);
    const double test_fraction =
        resolve<double>(opt.test_fraction, opt.file_config, "test_fraction", 0.2);
    const std::uint64_t seed = resolve<std::uint64_t>(opt.seed, opt.file_config, "seed", 0);
    const bool oversample = resolve<bool>(opt.oversample, opt.file_config, "oversample", false);

    const Dataset full = read_dataset_csv(read_file(dataset_path));
    if (!full.fully_labeled())
        throw Error(Errc::bad_config, "training dataset must be fully labeled");
    const std::vector<std::uint8_t> binary_mask = binary_mask_for(full, schema);

    AdasynParams adasyn_params;
    adasyn_params.k_neighbors = resolve<int>(opt.adasyn_k, opt.file_config, "adasyn_k", 5);
    adasyn_params.beta = resolve<double>(opt.adasyn_beta, opt.file_config, "adasyn_beta", 1.0);
    adasyn_params.seed = seed;
    if (opt.target_class) adasyn_params.target_class = *opt.target_class;

    std::vector<int> labels;
    labels.reserve(full.rows.size());
    for (const FeatureVector& row : full.rows) labels.push_back(*row.label);
    auto [train_idx, test_idx] = train_test_split(labels, test_fraction, seed);
    const Dataset train_ds = dataset_subset(full, train_idx);
    const Dataset test_ds = dataset_subset(full, test_idx);

    auto maybe_oversample = [&](const Dataset& ds) {
        if (!oversample) return ds;
        AdasynResult res = adasyn(ds, adasyn_params,
                                  std::span<const std::uint8_t>(binary_mask.data(), binary_mask.size()));
        if (res.degenerate)
            std::cerr << "warning: ADASYN degenerate (no minority sample borders the "
                         "majority); input unchanged\n";
        return res.data;
    };

    // 10-fold CV on the training split; oversampling is fit per fold on the
    // training side only.
    std::vector<int> train_labels;
    for (const FeatureVector& row : train_ds.rows) train_labels.push_back(*row.label);
    const auto cv_folds = kfold_split(train_ds.rows.size(), folds, seed, train_labels);

    const char* metric_names[] = {"accuracy", "precision", "recall", "f1", "mcc"};
    std::map<std::string, std::vector<double>> cv_scores;
    for (std::size_t f = 0; f < cv_folds.size(); ++f) {
        std::vector<std::size_t> fit_idx;
        for (std::size_t g = 0; g < cv_folds.size(); ++g)
            if (g != f) fit_idx.insert(fit_idx.end(), cv_folds[g].begin(), cv_folds[g].end());
        std::sort(fit_idx.begin(), fit_idx.end());

        const Dataset fit_ds = maybe_oversample(dataset_subset(train_ds, fit_idx));
        const TrainData fit = TrainData::from_dataset(fit_ds);
        const TrainData val =
            TrainData::from_dataset(dataset_subset(train_ds, cv_folds[f]));
        const TreeEnsemble model = train_model(kind, fit, params);
        const MetricsReport m = compute_metrics(val.y, predict_labels(model, val));
        cv_scores["accuracy"].push_back(m.accuracy);
        cv_scores["precision"].push_back(m.precision);
        cv_scores["recall"].push_back(m.recall);
        cv_scores["f1"].push_back(m.f1);
        cv_scores["mcc"].push_back(m.mcc);
    }

    // final model on the full training split, held-out metrics on test
    const Dataset final_ds = maybe_oversample(train_ds);
    const TrainData final_data = TrainData::from_dataset(final_ds);
    TreeEnsemble model = train_model(kind, final_data, params);
    model.schema_version = full.schema_version;
    const TrainData test_data = TrainData::from_dataset(test_ds);
    const MetricsReport test_metrics = compute_metrics(test_data.y, predict_labels(model, test_data));

    const ordered_json config = resolved_config_json(opt, schema, kind, params);
    ordered_json out;
    out["provenance"] = provenance_json(config, {dataset_path});
    out["cv"] = ordered_json::object();
    for (const char* name : metric_names) {
        const auto& scores = cv_scores[name];
        double mean = 0;
        for (double s : scores) mean += s;
        mean /= static_cast<double>(scores.size());
        double ss = 0;
        for (double s : scores) ss += (s - mean) * (s - mean);
        out["cv"][name] = ordered_json{{"mean", mean},
                                       {"std", std::sqrt(ss / static_cast<double>(scores.size()))}};
    }
    out["test"] = metrics_json(test_metrics);
    out["train_rows"] = final_data.rows;
    out["test_rows"] = test_data.rows;

    atomic_write(model_path, model_to_json(model) + "\n");
    atomic_write(metrics_path, out.dump(2) + "\n");
    std::cerr << "train: " << model_kind_name(kind) << " test mcc=" << test_metrics.mcc
              << " accuracy=" << test_metrics.accuracy << "\n";
    return 0;
}

int cmd_eval(CommonOptions& opt, const std::string& model_path, const std::string& dataset_path,
             const std::string& metrics_path) {
    const TreeEnsemble model = model_from_json(read_file(model_path));
    const Dataset ds = read_dataset_csv(read_file(dataset_path));
    if (!ds.fully_labeled()) throw Error(Errc::bad_config, "eval dataset must be labeled");
    if (!model.schema_version.empty() && model.schema_version != ds.schema_version)
        throw Error(Errc::schema_mismatch, "model schema_version " + model.schema_version +
                                               " differs from dataset " + ds.schema_version);
    const TrainData data = TrainData::from_dataset(ds);
    const MetricsReport m = compute_metrics(data.y, predict_labels(model, data));

    ordered_json config;
    config["seed"] = resolve<std::uint64_t>(opt.seed, opt.file_config, "seed", 0);
    ordered_json out;
    out["provenance"] = provenance_json(config, {model_path, dataset_path});
    out["metrics"] = metrics_json(m);
    atomic_write(metrics_path, out.dump(2) + "\n");
    std::cerr << "eval: mcc=" << m.mcc << " accuracy=" << m.accuracy << "\n";
    return 0;
}

// --- explain -----------------------------------------------------------------------

int cmd_explain(const std::string& model_path,
                const std::string& dataset_path, const std::string& global_json_path,
                const std::string& global_csv_path, const std::string& local_path,
                std::size_t top_k) {
    const TreeEnsemble model = model_from_json(read_file(model_path));
    const Dataset ds = read_dataset_csv(read_file(dataset_path));
    if (!model.schema_version.empty() && model.schema_version != ds.schema_version)
        throw Error(Errc::schema_mismatch, "model schema_version " + model.schema_version +
                                               " differs from dataset " + ds.schema_version);
    check_cover_consistency(model);

    // Every explanation must satisfy efficiency before anything is written.
    std::vector<ShapExplanation> explanations;
    explanations.reserve(ds.rows.size());
    for (const FeatureVector& row : ds.rows) {
        ShapExplanation e = tree_shap(model, row.values);
        e.flow_id = row.flow_id;
        if (!efficiency_holds(e))
            throw Error(Errc::bad_config,
                        "efficiency violated for " + row.flow_id + "; refusing to write");
        explanations.push_back(std::move(e));
    }
    if (explanations.empty()) throw Error(Errc::empty_data, "no rows to explain");

    const GlobalSummary summary = global_summary(explanations, top_k);

    ordered_json config;
    config["top_k"] = top_k;
    ordered_json global = json::parse(global_summary_to_json(summary, ds.feature_names));
    ordered_json global_out;
    global_out["provenance"] = provenance_json(config, {model_path, dataset_path});
    global_out["summary"] = global;
    // (value, phi) pairs for the top features, for beeswarm-style plots
    global_out["beeswarm"] = ordered_json::array();
    for (std::size_t f : summary.top) {
        ordered_json points = ordered_json::array();
        for (std::size_t s = 0; s < explanations.size(); ++s)
            points.push_back(
                ordered_json::array({ds.rows[s].values[f], explanations[s].phi[f]}));
        global_out["beeswarm"].push_back(
            ordered_json{{"feature", ds.feature_names[f]}, {"points", points}});
    }

    std::string local_text;
    for (std::size_t s = 0; s < explanations.size(); ++s) {
        const LocalReport report = local_report(explanations[s], ds.rows[s].values,
                                                ds.feature_names, model.kind, top_k);
        local_text += local_report_to_json(report) + "\n";
    }

    atomic_write(global_json_path, global_out.dump(2) + "\n");
    if (!global_csv_path.empty())
        atomic_write(global_csv_path, global_summary_to_csv(summary, ds.feature_names));
    atomic_write(local_path, local_text);
    std::cerr << "explain: " << explanations.size() << " samples, top feature "
              << (summary.top.empty() ? std::string("-") : ds.feature_names[summary.top[0]])
              << "\n";
    return 0;
}

// --- tune ---------------------------------------------------------------------------

int cmd_tune(CommonOptions& opt, const std::string& dataset_path, const std::string& out_path,
             const std::string& param, const std::vector<double>& values,
             const std::string& grid_path) {
    const ModelKind kind = resolve_model_kind(opt);
    const HyperParams base = resolve_params(opt, kind);
    const int folds = resolve<int>(opt.folds, opt.file_config, "folds", 10);
    const std::uint64_t seed = resolve<std::uint64_t>(opt.seed, opt.file_config, "seed", 0);

    std::map<std::string, std::vector<double>> grid;
    if (!grid_path.empty()) {
        const json g = json::parse(read_file(grid_path));
        for (const auto& [key, vals] : g.items())
            grid[key] = vals.get<std::vector<double>>();
    }
    if (!param.empty()) grid[param] = values;
    if (grid.empty())
        throw Error(Errc::bad_config, "tune needs --param/--values or --grid");

    const Dataset ds = read_dataset_csv(read_file(dataset_path));
    const TrainData data = TrainData::from_dataset(ds);

    ordered_json out;
    const FeatureSchema schema = resolve_schema(opt);
    out["provenance"] =
        provenance_json(resolved_config_json(opt, schema, kind, base), {dataset_path});
    out["curves"] = ordered_json::array();
    for (const auto& [name, vals] : grid) {
        const CurveReport report = validation_curve(data, kind, base, name, vals, folds, seed);
        ordered_json jr;
        jr["param"] = report.param;
        jr["best_value"] = report.best_value;
        jr["points"] = ordered_json::array();
        for (const CurvePoint& p : report.points)
            jr["points"].push_back(ordered_json{{"value", p.value},
                                                {"train_mean", p.train_mean},
                                                {"train_std", p.train_std},
                                                {"val_mean", p.val_mean},
                                                {"val_std", p.val_std}});
        out["curves"].push_back(std::move(jr));
        std::cerr << "tune: " << name << " best=" << report.best_value << "\n";
    }
    atomic_write(out_path, out.dump(2) + "\n");
    return 0;
}

// --- synth --------------------------------------------------------------------------

int cmd_synth(CommonOptions& opt, const std::string& out_path, std::size_t n_normal,
              std::size_t n_malware, std::uint64_t seed) {
    const FeatureSchema schema = resolve_schema(opt);
    const Dataset ds = generate_labeled_corpus(n_normal, n_malware, seed, schema);

    ordered_json config;
    config["schema_version"] = schema.schema_version;
    config["n_normal"] = n_normal;
    config["n_malware"] = n_malware;
    config["seed"] = seed;
    atomic_write(out_path, write_dataset_csv(ds, provenance_comments(config, {})));
    std::cerr << "synth: wrote " << ds.rows.size() << " rows\n";
    return 0;
}

void add_common(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--config", opt.config_path,
                    "JSON config file (default: $FLOWLENS_CONFIG)");
    cmd->add_option("--schema", opt.schema_path, "feature schema JSON");
    cmd->add_option("--window-seconds", opt.window_seconds, "flow window length (default 1800)");
    cmd->add_option("--bin-width", opt.bin_width, "state bin width (default 150)");
    cmd->add_option("--n-states", opt.n_states, "state count (default 3)");
    cmd->add_option("--seed", opt.seed, "RNG seed (default 0)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowlens: explainable malware detection in encrypted traffic"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("flowlens ") + flowlens::kVersion);

    CommonOptions opt;

    // extract
    auto* extract = app.add_subcommand("extract", "pcap files -> feature CSV");
    std::vector<std::string> pcaps;
    std::string out_path, label_map_path, dump_flows_path, log_path, standardize_path;
    extract->add_option("pcaps", pcaps, "input pcap files")->required();
    extract->add_option("-o,--out", out_path, "output CSV")->required();
    extract->add_option("--label-map", label_map_path,
                        "CSV of path,label (otherwise malware/ and normal/ directory names)");
    extract->add_option("--dump-flows", dump_flows_path, "flow debug JSONL");
    extract->add_option("--log", log_path, "extraction log JSON");
    extract->add_option("--standardize", standardize_path,
                        "write per-feature mean/std JSON next to the raw CSV");
    extract->add_option("--jobs", opt.jobs, "parallel capture files (default 1)");
    add_common(extract, opt);

    // train
    auto* train = app.add_subcommand("train", "dataset CSV -> model JSON + metrics JSON");
    std::string dataset_path, model_path = "model.json", metrics_path = "metrics.json";
    std::vector<std::string> param_overrides;
    train->add_option("dataset", dataset_path, "labeled feature CSV")->required();
    train->add_option("-o,--model-out", model_path, "output model JSON");
    train->add_option("--metrics-out", metrics_path, "output metrics JSON");
    train->add_option("--model", opt.model_name, "rf | xgb | extra (default xgb)");
    train->add_option("--folds", opt.folds, "CV folds (default 10)");
    train->add_option("--test-fraction", opt.test_fraction, "held-out fraction (default 0.2)");
    train->add_flag_callback("--oversample", [&] { opt.oversample = true; },
                             "ADASYN on training folds");
    train->add_option("--adasyn-k", opt.adasyn_k, "ADASYN neighbor count (default 5)");
    train->add_option("--adasyn-beta", opt.adasyn_beta, "ADASYN balance factor (default 1.0)");
    train->add_option("--target-class", opt.target_class,
                      "class to oversample (default: minority)");
    train->add_option("--set", param_overrides, "hyperparameter override name=value");
    add_common(train, opt);

    // eval
    auto* eval = app.add_subcommand("eval", "model + labeled CSV -> metrics JSON");
    std::string eval_model, eval_dataset, eval_metrics = "metrics.json";
    eval->add_option("model", eval_model)->required();
    eval->add_option("dataset", eval_dataset)->required();
    eval->add_option("-o,--out", eval_metrics, "output metrics JSON");
    add_common(eval, opt);

    // explain
    auto* explain = app.add_subcommand("explain", "model + CSV -> SHAP reports");
    std::string ex_model, ex_dataset, ex_global = "global.json", ex_global_csv,
                             ex_local = "local.jsonl";
    std::size_t top_k = 10;
    explain->add_option("model", ex_model)->required();
    explain->add_option("dataset", ex_dataset)->required();
    explain->add_option("--global-json", ex_global, "global summary JSON");
    explain->add_option("--global-csv", ex_global_csv, "global summary CSV");
    explain->add_option("--local", ex_local, "per-sample JSONL");
    explain->add_option("--top-k", top_k, "features listed per report (default 10)");
    add_common(explain, opt);

    // tune
    auto* tune = app.add_subcommand("tune", "validation curves over a parameter grid");
    std::string tune_dataset, tune_out = "tune.json", tune_param, tune_grid;
    std::vector<double> tune_values;
    tune->add_option("dataset", tune_dataset)->required();
    tune->add_option("-o,--out", tune_out, "report JSON");
    tune->add_option("--model", opt.model_name, "rf | xgb | extra (default xgb)");
    tune->add_option("--param", tune_param, "hyperparameter name");
    tune->add_option("--values", tune_values, "candidate values")->delimiter(',');
    tune->add_option("--grid", tune_grid, "JSON file {param: [values...]}");
    tune->add_option("--folds", opt.folds, "CV folds (default 10)");
    add_common(tune, opt);

    // synth
    auto* synth = app.add_subcommand("synth", "synthetic labeled corpus CSV");
    std::string synth_out;
    std::size_t n_normal = 0, n_malware = 0;
    synth->add_option("-o,--out", synth_out, "output CSV")->required();
    synth->add_option("--n-normal", n_normal, "normal flow count");
    synth->add_option("--n-malware", n_malware, "malware flow count");
    add_common(synth, opt);

    CLI11_PARSE(app, argc, argv);

    try {
        load_config_file(opt);
        for (const std::string& kv : param_overrides) {
            const std::size_t eq = kv.find('=');
            if (eq == std::string::npos)
                throw flowlens::Error(flowlens::Errc::bad_config,
                                      "--set expects name=value, got " + kv);
            opt.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        }

        if (extract->parsed())
            return cmd_extract(opt, pcaps, out_path, label_map_path, dump_flows_path, log_path,
                               standardize_path);
        if (train->parsed()) return cmd_train(opt, dataset_path, model_path, metrics_path);
        if (eval->parsed()) return cmd_eval(opt, eval_model, eval_dataset, eval_metrics);
        if (explain->parsed())
            return cmd_explain(ex_model, ex_dataset, ex_global, ex_global_csv, ex_local, top_k);
        if (tune->parsed())
            return cmd_tune(opt, tune_dataset, tune_out, tune_param, tune_values, tune_grid);
        if (synth->parsed())
            return cmd_synth(opt, synth_out, n_normal, n_malware,
                             resolve<std::uint64_t>(opt.seed, opt.file_config, "seed", 0));
    } catch (const flowlens::Error& e) {
        std::cerr << "error [" << flowlens::errc_name(e.code) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
