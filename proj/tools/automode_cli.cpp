// automode: batch front end for training, evaluating and running the router.
//
// Exit codes: 0 success, 1 internal error, 2 bad input or configuration.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "automode/automode.hpp"

namespace fs = std::filesystem;
using namespace automode;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> budget;
    std::optional<std::string> pivot;
};

RunConfig load_config(const GlobalOptions& g) {
    RunConfig cfg = g.config_path.empty() ? run_config_from_json(json::object(), fs::current_path())
                                          : load_run_config(g.config_path);
    if (g.seed) cfg.seed = *g.seed;
    if (g.budget) {
        cfg.hpo.enabled = true;
        cfg.hpo.budget.value = *g.budget;
    }
    if (g.pivot) cfg.pivot = *g.pivot;
    cfg.validate();
    return cfg;
}

// Flag values are relative to the working directory, config values to the
// config file; flags are stored absolute so `resolve` leaves them alone.
std::string absolute(const std::string& p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

std::string output_dir(const RunConfig& cfg, const std::string& flag) {
    const std::string dir = flag.empty() ? cfg.resolve(cfg.paths.output_dir) : flag;
    fs::create_directories(dir);
    return dir;
}

void write_report(const std::string& dir, const std::string& stem, const std::string& text, const json& j) {
    write_text_file((fs::path(dir) / (stem + ".txt")).string(), text);
    write_text_file((fs::path(dir) / (stem + ".json")).string(), j.dump(2) + "\n");
}

std::string model_path(const RunConfig& cfg, const std::string& flag, const std::string& dir) {
    if (!flag.empty()) return flag;
    if (!cfg.paths.model.empty()) return cfg.resolve(cfg.paths.model);
    return (fs::path(dir) / "router.json").string();
}

Dataset test_set(const RunConfig& cfg, const std::string& flag) {
    if (!flag.empty()) return load_configured(cfg, flag, "dataset");
    if (!cfg.paths.test.empty()) return load_configured(cfg, cfg.paths.test, "test dataset");
    return load_splits(cfg).test;
}

std::string hyperparams_line(const Hyperparams& hp) { return "hyperparameters: " + hp.to_json().dump() + "\n"; }

// ---------------------------------------------------------------------------

int cmd_synth(const GlobalOptions& g, const std::string& generator_path, std::optional<std::size_t> n,
              std::optional<double> noise, std::optional<double> noise_level, const std::string& out) {
    const RunConfig cfg = load_config(g);
    GeneratorConfig gen = benchmark_generator(noise_level.value_or(1.0));
    if (!generator_path.empty())
        gen = generator_config_from_json(parse_json_file(require_file(generator_path, "generator config")));
    else if (cfg.generator)
        gen = *cfg.generator;
    if (n) gen.n_segments = *n;
    if (noise) gen.noise = *noise;
    const Dataset ds = synthesize_dataset(gen, cfg.seed);
    save_dataset(out, ds);
    std::cerr << "wrote " << ds.size() << " segments to " << out << "\n";
    return 0;
}

int cmd_train(const GlobalOptions& g, const std::string& dataset, const std::string& model_flag,
              const std::string& out_dir, std::optional<bool> weights) {
    RunConfig cfg = load_config(g);
    if (!dataset.empty()) {
        cfg.paths.dataset = dataset;
        cfg.paths.train.clear();
    }
    if (weights) cfg.sample_weights = *weights;
    const std::string dir = output_dir(cfg, out_dir);
    const Splits s = load_splits(cfg);
    const TrainOutcome t = run_train(cfg, s.train, s.valid);
    const std::string path = model_path(cfg, model_flag, dir);
    save_router(path, t.router);

    std::string text = "Per-pair results on the validation set (" + std::to_string(s.valid.size()) + " segments)\n";
    text += t.pairs.rows.empty() ? std::string("no validation set\n") : format_pair_table(t.pairs);
    text += hyperparams_line(t.router.hyperparams());
    json j = {{"kind", "automode.train_report"},
              {"schema_version", kReportSchemaVersion},
              {"model", fs::path(path).filename().string()},
              {"schema_hash", t.router.schema().hash()},
              {"n_train", s.train.size()},
              {"n_valid", s.valid.size()},
              {"hyperparams", t.router.hyperparams().to_json()},
              {"pairs", t.pairs.rows.empty() ? json() : pair_table_to_json(t.pairs)}};
    if (t.hpo) {
        text += "hpo: " + std::to_string(t.hpo->trials.size()) + " trials, best cross-validated WER reduction " +
                detail::fmt("%.3f", t.hpo->best_objective) + " points\n";
        j["hpo"] = {{"trials", t.hpo->trials.size()},
                    {"best_objective", t.hpo->best_objective},
                    {"budget_too_small", t.hpo->budget_too_small}};
        std::ofstream log(fs::path(dir) / "hpo_trials.jsonl");
        const bool timing = cfg.hpo.budget.mode == Budget::Mode::Seconds;
        for (const auto& trial : t.hpo->trials) log << trial_to_json(trial, timing).dump() << "\n";
        if (t.hpo->budget_too_small) std::cerr << "warning: HPO budget too small; trained with initial hyperparameters\n";
    }
    write_report(dir, "train_report", text, j);
    std::cout << text << "model: " << path << "\n";
    return 0;
}

int cmd_evaluate(const GlobalOptions& g, const std::vector<std::string>& model_flags, const std::string& dataset,
                 const std::string& out_dir, const std::string& rescoring, const std::string& qe) {
    RunConfig cfg = load_config(g);
    if (!rescoring.empty()) cfg.rescoring.mode = rescore_mode_from_string(rescoring);
    if (!qe.empty()) cfg.rescoring.qe_source = qe;
    const std::string dir = output_dir(cfg, out_dir);
    std::vector<RouterModel> routers;
    if (model_flags.empty()) {
        routers.push_back(load_router(require_file(model_path(cfg, "", dir), "model")));
    } else {
        for (const auto& m : model_flags) routers.push_back(load_router(require_file(m, "model")));
    }
    const Dataset test = test_set(cfg, dataset);
    std::vector<const RouterModel*> ptrs;
    for (const auto& r : routers) ptrs.push_back(&r);
    const PolicyTable table = run_evaluate(cfg, ptrs, test);
    const std::string text = format_policy_table(table);
    write_report(dir, "evaluation_report", text, policy_table_to_json(table));
    std::cout << text;
    return 0;
}

int cmd_route(const GlobalOptions& g, const std::string& model_flag, const std::string& dataset,
              const std::string& out, std::optional<double> threshold, const std::string& rescoring,
              const std::string& qe) {
    RunConfig cfg = load_config(g);
    if (threshold) cfg.threshold = *threshold;
    if (!rescoring.empty()) cfg.rescoring.mode = rescore_mode_from_string(rescoring);
    if (!qe.empty()) cfg.rescoring.qe_source = qe;
    cfg.validate();
    const RouterModel router = load_router(require_file(model_path(cfg, model_flag, "."), "model"));
    const Dataset ds = test_set(cfg, dataset);
    check_compatible(router, ds, cfg.rescoring.mode != RescoreMode::Off);
    const RoutingResult res = route_dataset(router, ds, cfg.threshold, cfg.rescoring);
    std::ofstream file;
    if (out != "-") {
        file.open(out);
        if (!file) throw InvalidArgument("cannot write decisions file '" + out + "'");
    }
    write_decisions(out == "-" ? std::cout : file, res.decisions, router);
    if (out != "-") std::cerr << "wrote " << res.decisions.size() << " decisions to " << out << "\n";
    return 0;
}

int cmd_ablate(const GlobalOptions& g, const std::string& dataset, const std::string& out_dir) {
    RunConfig cfg = load_config(g);
    if (!dataset.empty()) {
        cfg.paths.dataset = dataset;
        cfg.paths.train.clear();
    }
    const std::string dir = output_dir(cfg, out_dir);
    const Splits s = load_splits(cfg);
    const Dataset& eval = s.test.empty() ? s.valid : s.test;
    const AblationOutcome a = run_ablate(cfg, s.train, eval);
    for (std::size_t i = 0; i < a.routers.size(); ++i) {
        std::string slug = "ablation_" + std::to_string(i + 1) + ".json";
        save_router((fs::path(dir) / slug).string(), a.routers[i]);
    }
    const std::string text = format_ablation_table(a.rows);
    write_report(dir, "ablation_report", text, ablation_to_json(a.rows));
    std::cout << text;
    return 0;
}

int cmd_importance(const GlobalOptions& g, const std::string& model_flag, const std::string& out_dir,
                   std::size_t top) {
    const RunConfig cfg = load_config(g);
    const std::string dir = output_dir(cfg, out_dir);
    const RouterModel router = load_router(require_file(model_path(cfg, model_flag, dir), "model"));
    const ImportanceReport rep = importance_report(router);
    const std::string text = format_importance(rep, top);
    write_report(dir, "importance", text, importance_to_json(rep));
    write_text_file((fs::path(dir) / "importance.csv").string(), importance_csv(rep));
    std::cout << text;
    return 0;
}

int cmd_add_system(const GlobalOptions& g, const std::string& model_flag, const std::string& dataset,
                   const std::string& system, const std::string& out) {
    RunConfig cfg = load_config(g);
    const RouterModel router = load_router(require_file(model_path(cfg, model_flag, "."), "model"));
    Dataset train;
    if (!dataset.empty()) {
        train = load_configured(cfg, dataset, "dataset");
    } else {
        train = load_splits(cfg).train;
    }
    const RouterModel updated = run_add_system(router, train, system);
    const std::string path = out.empty() ? model_path(cfg, model_flag, ".") : out;
    save_router(path, updated);
    std::cout << "added '" << system << "': " << updated.classifiers().size() << " classifiers, model " << path << "\n";
    return 0;
}

int cmd_features(const GlobalOptions& g, const std::vector<std::string>& wavs, const std::string& out) {
    load_config(g);
    json j = {{"kind", "automode.signal_props"}, {"schema_version", 1}, {"names", kSignalPropNames}};
    j["files"] = json::array();
    for (const auto& path : wavs) {
        const PcmAudio audio = read_wav(require_file(path, "wav"));
        const auto props = signal_properties(audio.samples, audio.sample_rate);
        j["files"].push_back({{"path", path}, {"signal_props", props}});
    }
    const std::string text = j.dump(2) + "\n";
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        write_text_file(out, text);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AutoMode-ASR: learn which ASR system to run on each segment"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("-c,--config", g.config_path, "Run configuration (JSON)")->envname(kConfigEnvVar);
    app.add_option("--seed", g.seed, "Override the configured seed");
    app.add_option("--budget", g.budget, "Enable HPO with this budget (trials, or seconds per config)");
    app.add_option("--pivot", g.pivot, "Override the pivot system id");

    std::string dataset, model, out, out_dir, generator, rescoring, qe, system;
    std::vector<std::string> models, wavs;
    std::optional<std::size_t> n;
    std::optional<double> noise, noise_level, threshold;
    std::optional<bool> weights;
    std::size_t top = 20;
    int status = 0;

    auto* synth = app.add_subcommand("synth", "Generate a planted-rule synthetic dataset");
    synth->add_option("--generator", generator, "Generator config (JSON); default: config 'generator' or built-in");
    synth->add_option("-n,--segments", n, "Number of segments");
    synth->add_option("--noise", noise, "Per-system WER noise amplitude");
    synth->add_option("--noise-level", noise_level, "Noise level of the built-in benchmark generator")
        ->check(CLI::NonNegativeNumber);
    synth->add_option("-o,--out", out, "Output dataset file")->required();
    synth->callback([&] { status = cmd_synth(g, absolute(generator), n, noise, noise_level, out); });

    auto* train = app.add_subcommand("train", "Train the pairwise classifiers and write a per-pair report");
    train->add_option("-d,--dataset", dataset, "Dataset to split (overrides config paths)");
    train->add_option("-m,--model", model, "Model output path");
    train->add_option("--out-dir", out_dir, "Report directory");
    train->add_option("--sample-weights", weights, "Use sample weights (true/false)");
    train->callback([&] { status = cmd_train(g, absolute(dataset), absolute(model), absolute(out_dir), weights); });

    auto* evaluate = app.add_subcommand("evaluate", "Compare routing against single-system baselines");
    evaluate->add_option("-m,--model", models, "Trained model(s); one table row each");
    evaluate->add_option("-d,--dataset", dataset, "Evaluation dataset (default: config test split)");
    evaluate->add_option("--out-dir", out_dir, "Report directory");
    evaluate->add_option("--rescoring", rescoring, "off, pivot-vs-selected or all-fired");
    evaluate->add_option("--qe", qe, "QE source: oracle, constant:<v>, file:<path>");
    evaluate->callback([&] {
        std::vector<std::string> abs;
        for (const auto& m : models) abs.push_back(absolute(m));
        status = cmd_evaluate(g, abs, absolute(dataset), absolute(out_dir), rescoring, qe);
    });

    auto* route = app.add_subcommand("route", "Write per-segment routing decisions");
    route->add_option("-m,--model", model, "Trained model");
    route->add_option("-d,--dataset", dataset, "Segments to route (default: config test split)");
    route->add_option("-o,--out", out, "Decisions file ('-' for stdout)")->required();
    route->add_option("--threshold", threshold, "Firing threshold");
    route->add_option("--rescoring", rescoring, "off, pivot-vs-selected or all-fired");
    route->add_option("--qe", qe, "QE source: oracle, constant:<v>, file:<path>");
    route->callback([&] {
        status = cmd_route(g, absolute(model), absolute(dataset), out == "-" ? out : absolute(out), threshold,
                           rescoring, qe);
    });

    auto* ablate = app.add_subcommand("ablate", "Train and score each configured feature-group combination");
    ablate->add_option("-d,--dataset", dataset, "Dataset to split (overrides config paths)");
    ablate->add_option("--out-dir", out_dir, "Report directory");
    ablate->callback([&] { status = cmd_ablate(g, absolute(dataset), absolute(out_dir)); });

    auto* importance = app.add_subcommand("importance", "Per-feature and per-group importance of a model");
    importance->add_option("-m,--model", model, "Trained model");
    importance->add_option("--out-dir", out_dir, "Report directory");
    importance->add_option("--top", top, "Features shown in the text chart (0 = all)");
    importance->callback([&] { status = cmd_importance(g, absolute(model), absolute(out_dir), top); });

    auto* add = app.add_subcommand("add-system", "Train one classifier for a new system and append it");
    add->add_option("-m,--model", model, "Existing model");
    add->add_option("-d,--dataset", dataset, "Training data with pivot and new-system outcomes");
    add->add_option("-s,--system", system, "Id of the new system")->required();
    add->add_option("-o,--out", out, "Output model path (default: overwrite the input model)");
    add->callback([&] { status = cmd_add_system(g, absolute(model), absolute(dataset), system, absolute(out)); });

    auto* features = app.add_subcommand("features", "Signal properties of WAV files");
    features->add_option("wav", wavs, "WAV files")->required();
    features->add_option("-o,--out", out, "Output JSON (default stdout)");
    features->callback([&] { status = cmd_features(g, wavs, out == "-" ? out : absolute(out)); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const automode::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.user_error() ? 2 : 1;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return status;
}
