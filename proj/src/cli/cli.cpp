#include "alcgan/cli/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <csignal>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "alcgan/data/manifest.hpp"
#include "alcgan/data/png_io.hpp"
#include "alcgan/data/taxonomy.hpp"
#include "alcgan/data/toy.hpp"
#include "alcgan/error.hpp"
#include "alcgan/eval/ablation.hpp"
#include "alcgan/eval/base64.hpp"
#include "alcgan/eval/drivers.hpp"
#include "alcgan/eval/grid.hpp"
#include "alcgan/service/service.hpp"
#include "alcgan/train/checkpoint.hpp"

namespace alcgan::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const fs::path& path, const std::string& field) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(field, std::string("malformed JSON in ") + path.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path& path, const json& doc) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("cannot write " + path.string());
}

/// Accepts a JSON array of 40 values, {"attributes": [...]}, or a
/// {name: value} map; either inline or as a file path. Empty means all zero.
data::AttributeVector parse_attributes(const std::string& arg) {
    if (arg.empty()) return {};
    const auto first = arg.find_first_not_of(" \t\n");
    const bool inline_json = first != std::string::npos && (arg[first] == '[' || arg[first] == '{');
    json doc;
    if (inline_json) {
        try {
            doc = json::parse(arg);
        } catch (const json::parse_error& e) {
            throw ValidationError("attrs", e.what());
        }
    } else {
        doc = read_json_file(arg, "attrs");
    }
    if (doc.is_object() && doc.contains("attributes")) doc = doc["attributes"];
    if (doc.is_array()) return data::AttributeVector::from_json(doc);
    if (!doc.is_object()) throw ValidationError("attrs", "expected a list of 40 values or a name -> value map");
    const auto names = data::AttributeNames::standard();
    data::AttributeVector a;
    for (const auto& [name, value] : doc.items()) {
        int k = 0;
        try {
            k = names.index_of(name);
        } catch (const ValidationError& e) {
            throw ValidationError("attrs." + name, e.what());
        }
        if (!value.is_number()) throw ValidationError("attrs." + name, "must be a number");
        try {
            a.set(k, value.get<double>());
        } catch (const ValidationError& e) {
            throw ValidationError("attrs." + name, e.what());
        }
    }
    return a;
}

data::SemanticLayout read_layout(const fs::path& path, int resolution) {
    auto map = data::read_png_indexed(path);
    if (map.height != resolution || map.width != resolution) {
        spdlog::info("resampling layout {} from {}x{} to {}x{}", path.string(), map.height, map.width, resolution,
                     resolution);
        map = data::preprocess_index_map(map, resolution);
    }
    return data::encode_layout(map);
}

/// Layout for a generator: from file, or all-unlabeled when the variant ignores layouts.
data::SemanticLayout layout_for(const std::string& path, const model::GeneratorConfig& config) {
    if (!path.empty()) return read_layout(path, config.resolution);
    if (config.layout_channels > 0) throw ValidationError("layout", "this checkpoint needs --layout");
    return data::encode_layout(data::IndexMap(config.resolution, config.resolution, data::kUnlabeled));
}

struct LoadedModel {
    train::Checkpoint state;
    eval::ModelSource source;
};

LoadedModel load_model(const fs::path& path) {
    auto state = train::load_checkpoint(path);
    eval::require_finite_weights(state.generator);
    eval::ModelSource source{path.string(), train::file_sha256(path), model::to_string(state.model.variant)};
    return {std::move(state), std::move(source)};
}

void write_image(const fs::path& path, const data::Image& image) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    data::write_png_rgb(path, data::quantize_image(image));
}

std::vector<double> parse_strengths(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos) {
            throw ValidationError("strengths", "not a number: '" + item + "'");
        }
        out.push_back(v);
    }
    return out;
}

int attribute_index(const std::string& text) {
    if (!text.empty() && std::all_of(text.begin(), text.end(), ::isdigit)) {
        const int k = std::stoi(text);
        if (k >= data::kAttributeCount) throw ValidationError("attribute", "index must lie in [0,39]");
        return k;
    }
    return data::AttributeNames::standard().index_of(text);
}

data::DatasetManifest open_manifest(const fs::path& path, int resolution) {
    auto manifest = data::load_manifest(path, {resolution, 0.7});
    const bool needs_propagation = std::any_of(manifest.records.begin(), manifest.records.end(),
                                               [](const data::ManifestRecord& r) { return !r.layout; });
    if (needs_propagation) manifest = data::propagate_webcam_layout(std::move(manifest));
    spdlog::info("manifest {}: {} records kept, {} excluded by coverage", path.string(), manifest.records.size(),
                 manifest.excluded);
    return manifest;
}

// --- edit sequences -------------------------------------------------------

std::string edit_label(const eval::LayoutEdit& e) {
    return std::string(e.op == eval::EditOp::Add ? "+" : "-") +
           data::LabelTaxonomy::standard().channel_names()[e.label];
}

void write_edit_sequence(const LoadedModel& m, const std::vector<data::SemanticLayout>& layouts,
                         const std::vector<eval::LayoutEdit>& script, const data::AttributeVector& attrs,
                         std::uint64_t seed, const fs::path& out_dir, std::ostream& out) {
    fs::create_directories(out_dir);
    eval::GridReport report;
    report.kind = "edit_sequence";
    report.rows = 1;
    report.cols = static_cast<int>(layouts.size());
    report.sources = {m.source};
    report.row_labels = {};
    report.parameters = {{"seed", seed}};
    for (std::size_t i = 0; i < layouts.size(); ++i) {
        eval::GridCell c;
        c.probe = {layouts[i], attrs, seed};
        c.image = eval::generate_image(m.state.generator, c.probe);
        write_image(out_dir / fmt::format("step_{:02d}.png", i), c.image);
        data::write_png_indexed(out_dir / fmt::format("step_{:02d}_layout.png", i), data::decode_layout(layouts[i]));
        report.col_labels.push_back(i == 0 ? "start" : edit_label(script[i - 1]));
        report.cells.push_back(std::move(c));
    }
    const auto sidecar = eval::export_grid(report, out_dir / "sequence.png");
    out << "wrote " << layouts.size() << " steps to " << out_dir.string() << " (grid sidecar " << sidecar.string()
        << ")\n";
}

// --- serve ------------------------------------------------------------------

std::atomic<service::Server*> g_server{nullptr};

extern "C" void handle_stop_signal(int) {
    if (auto* s = g_server.load()) s->stop();
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Attribute- and layout-conditioned scene generation"};
    app.name("alcgan");
    app.require_subcommand(1);
    app.fallthrough();
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    // make-toy-data
    auto* toy = app.add_subcommand("make-toy-data", "Render a synthetic dataset with a known oracle");
    std::string toy_out, toy_spec_path;
    int toy_count = 2000, toy_resolution = 0;
    std::uint64_t toy_seed = 0;
    toy->add_option("--out", toy_out, "Output directory")->required();
    toy->add_option("--count", toy_count, "Number of samples")->check(CLI::PositiveNumber);
    toy->add_option("--seed", toy_seed, "Dataset seed");
    toy->add_option("--spec", toy_spec_path, "Toy scene spec JSON (defaults built in)")->check(CLI::ExistingFile);
    toy->add_option("--resolution", toy_resolution, "Override the spec resolution")->check(CLI::PositiveNumber);

    // train
    auto* trn = app.add_subcommand("train", "Train a model on a manifest");
    std::string train_data, train_config, train_out, train_resume, train_variant;
    std::optional<int> train_epochs, train_batch, train_ckpt_every;
    std::optional<double> train_lr;
    std::optional<std::uint64_t> train_seed;
    trn->add_option("--data", train_data, "Dataset manifest (JSON lines)")->required()->check(CLI::ExistingFile);
    trn->add_option("--config", train_config, "Run config JSON {model, training}")->check(CLI::ExistingFile);
    trn->add_option("--out", train_out, "Run directory")->required();
    trn->add_option("--resume", train_resume, "Continue from a checkpoint (fine-tuning: pass other --data)")
        ->check(CLI::ExistingFile);
    trn->add_option("--epochs", train_epochs, "Total epochs (including those already in --resume)");
    trn->add_option("--batch-size", train_batch);
    trn->add_option("--lr", train_lr);
    trn->add_option("--seed", train_seed);
    trn->add_option("--variant", train_variant)->check(CLI::IsMember({"AL", "A_ONLY", "L_ONLY"}));
    trn->add_option("--checkpoint-every", train_ckpt_every, "Epochs between checkpoints (0: only at the end)");

    // generate
    auto* gen = app.add_subcommand("generate", "Generate one image");
    std::string gen_ckpt, gen_layout, gen_attrs, gen_out;
    std::uint64_t gen_seed = 0;
    gen->add_option("--ckpt", gen_ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
    gen->add_option("--layout", gen_layout, "Indexed layout PNG")->check(CLI::ExistingFile);
    gen->add_option("--attrs", gen_attrs, "Attribute JSON file or inline JSON");
    gen->add_option("--seed", gen_seed, "Noise seed");
    gen->add_option("--out", gen_out, "Output PNG")->required();

    // sweep
    auto* swp = app.add_subcommand("sweep", "Vary one attribute and export a grid");
    std::string swp_ckpt, swp_layout, swp_attrs, swp_attribute, swp_strengths = "0,0.25,0.5,0.75,1", swp_out;
    std::uint64_t swp_seed = 0;
    swp->add_option("--ckpt", swp_ckpt)->required()->check(CLI::ExistingFile);
    swp->add_option("--layout", swp_layout)->check(CLI::ExistingFile);
    swp->add_option("--attrs", swp_attrs, "Base attributes");
    swp->add_option("--attribute", swp_attribute, "Attribute name or index")->required();
    swp->add_option("--strengths", swp_strengths, "Comma-separated, ascending, in [0,1]");
    swp->add_option("--seed", swp_seed);
    swp->add_option("--out", swp_out, "Grid PNG (a .json sidecar is written beside it)")->required();

    // edit
    auto* edt = app.add_subcommand("edit", "Apply an edit script or replay a studio session");
    std::string edt_ckpt, edt_layout, edt_script, edt_session, edt_attrs, edt_out;
    std::uint64_t edt_seed = 0;
    edt->add_option("--ckpt", edt_ckpt)->required()->check(CLI::ExistingFile);
    auto* edt_layout_opt = edt->add_option("--layout", edt_layout)->check(CLI::ExistingFile);
    auto* edt_script_opt = edt->add_option("--script", edt_script, "Edit script JSON")->check(CLI::ExistingFile);
    auto* edt_session_opt =
        edt->add_option("--session", edt_session, "Studio session JSON (layout, attributes, seed, history)")
            ->check(CLI::ExistingFile);
    edt->add_option("--attrs", edt_attrs);
    edt->add_option("--seed", edt_seed);
    edt->add_option("--out", edt_out, "Output directory")->required();
    edt_session_opt->excludes(edt_script_opt)->excludes(edt_layout_opt);
    edt_script_opt->needs(edt_layout_opt);

    // nearest
    auto* nst = app.add_subcommand("nearest", "Find the closest training image (L1 in pixel space)");
    std::string nst_ckpt, nst_query, nst_data, nst_layout, nst_attrs, nst_out;
    std::uint64_t nst_seed = 0;
    int nst_resolution = 0;
    nst->add_option("--ckpt", nst_ckpt, "Checkpoint (sets the resolution; generates the query if --query is absent)")
        ->check(CLI::ExistingFile);
    nst->add_option("--query", nst_query, "Query image PNG")->check(CLI::ExistingFile);
    nst->add_option("--data", nst_data, "Training manifest")->required()->check(CLI::ExistingFile);
    nst->add_option("--layout", nst_layout)->check(CLI::ExistingFile);
    nst->add_option("--attrs", nst_attrs);
    nst->add_option("--seed", nst_seed);
    nst->add_option("--resolution", nst_resolution)->check(CLI::PositiveNumber);
    nst->add_option("--out", nst_out, "Result JSON");

    // ablate
    auto* abl = app.add_subcommand("ablate", "Train AL, A_ONLY and L_ONLY under one budget and compare");
    std::string abl_data, abl_config, abl_out, abl_toy;
    int abl_probes = 4;
    abl->add_option("--data", abl_data)->required()->check(CLI::ExistingFile);
    abl->add_option("--config", abl_config)->check(CLI::ExistingFile);
    abl->add_option("--out", abl_out)->required();
    abl->add_option("--toy-spec", abl_toy, "Score variants against this toy oracle")->check(CLI::ExistingFile);
    abl->add_option("--probes", abl_probes, "Grid columns taken from the first samples")->check(CLI::PositiveNumber);

    // serve
    auto* srv = app.add_subcommand("serve", "HTTP inference service");
    std::string srv_ckpt, srv_host = "127.0.0.1";
    std::optional<int> srv_port;
    int srv_workers = 2;
    srv->add_option("--ckpt", srv_ckpt)->required()->check(CLI::ExistingFile);
    srv->add_option("--host", srv_host);
    srv->add_option("--port", srv_port, "Port (default: $ALCGAN_PORT, else 8080)")->check(CLI::Range(0, 65535));
    srv->add_option("--workers", srv_workers, "Simultaneous generations")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? 0 : 2;
    }
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*toy) {
            auto spec = toy_spec_path.empty() ? data::ToySceneSpec::defaults()
                                              : data::ToySceneSpec::from_json(read_json_file(toy_spec_path, "spec"));
            if (toy_resolution > 0) spec.resolution = toy_resolution;
            spec.validate();
            const fs::path dir = toy_out;
            fs::create_directories(dir / "images");
            fs::create_directories(dir / "layouts");
            const auto samples = data::generate_toy_dataset(spec, toy_count, toy_seed);
            std::vector<data::ManifestRecord> records;
            for (std::size_t i = 0; i < samples.size(); ++i) {
                const auto name = fmt::format("{:05d}.png", i);
                data::write_png_rgb(dir / "images" / name, data::quantize_image(samples[i].image));
                data::write_png_indexed(dir / "layouts" / name, data::decode_layout(samples[i].layout));
                records.push_back({"images/" + name, "layouts/" + name, samples[i].attributes, "toy", 0});
            }
            data::write_manifest(dir / "toy.manifest", records);
            write_json_file(dir / "toy_spec.json", spec.to_json());
            out << "wrote " << samples.size() << " samples to " << (dir / "toy.manifest").string() << "\n";
            return 0;
        }

        if (*trn) {
            std::optional<train::Checkpoint> state;
            if (!train_resume.empty()) {
                state.emplace(train::load_checkpoint(train_resume));
                if (!train_config.empty()) spdlog::warn("--config is ignored with --resume; the checkpoint's settings apply");
                if (train_variant.size() && model::parse_variant(train_variant) != state->model.variant) {
                    throw ValidationError("variant", "cannot change the variant of a resumed run");
                }
                auto& t = state->training;
                if (train_epochs) t.epochs = *train_epochs;
                if (train_batch) t.batch_size = *train_batch;
                if (train_lr) t.learning_rate = *train_lr;
                if (train_ckpt_every) t.checkpoint_every = *train_ckpt_every;
                if (train_seed) spdlog::warn("--seed is ignored with --resume; the saved RNG state continues");
                t.validate();
                if (state->epoch >= t.epochs) {
                    spdlog::warn("checkpoint already has {} epochs; raise --epochs to train further", state->epoch);
                }
            } else {
                json doc = train_config.empty() ? json::object() : read_json_file(train_config, "config");
                if (!doc.is_object()) throw ValidationError("config", "must be an object");
                auto& t = doc["training"];
                if (t.is_null()) t = json::object();
                if (train_epochs) t["epochs"] = *train_epochs;
                if (train_batch) t["batch_size"] = *train_batch;
                if (train_lr) t["learning_rate"] = *train_lr;
                if (train_ckpt_every) t["checkpoint_every"] = *train_ckpt_every;
                if (train_seed) t["seed"] = *train_seed;
                if (!train_variant.empty()) t["variant"] = train_variant;
                const auto run = train::RunConfig::from_json(doc);
                state.emplace(run.model, run.training);
                fs::create_directories(train_out);
                write_json_file(fs::path(train_out) / "config.json", run.to_json());
            }
            const auto manifest = open_manifest(train_data, state->model.generator.resolution);
            const auto samples = data::load_samples(manifest);
            train::FitOptions opts;
            opts.out_dir = train_out;
            const auto result = train::fit(*state, samples, opts);
            out << "trained to epoch " << state->epoch << " (" << state->step << " steps)";
            if (!result.final_checkpoint.empty()) out << "; checkpoint " << result.final_checkpoint.string();
            out << "\n";
            return 0;
        }

        if (*gen) {
            const auto m = load_model(gen_ckpt);
            const auto& gc = m.state.model.generator;
            eval::Probe probe{layout_for(gen_layout, gc), parse_attributes(gen_attrs), gen_seed};
            const auto image = eval::generate_image(m.state.generator, probe);
            write_image(gen_out, image);
            out << json{{"image", gen_out}, {"checkpoint", m.source.sha256}, {"seed", gen_seed}}.dump() << "\n";
            return 0;
        }

        if (*swp) {
            const auto m = load_model(swp_ckpt);
            eval::SweepRequest req{layout_for(swp_layout, m.state.model.generator), parse_attributes(swp_attrs),
                                   attribute_index(swp_attribute), parse_strengths(swp_strengths), swp_seed};
            auto source = m.source;
            source.label = data::AttributeNames::standard().names()[req.attribute_index];
            const auto report = eval::attribute_sweep(m.state.generator, req, source);
            const auto sidecar = eval::export_grid(report, swp_out);
            out << "wrote " << swp_out << " and " << sidecar.string() << "\n";
            return 0;
        }

        if (*edt) {
            const auto m = load_model(edt_ckpt);
            const int res = m.state.model.generator.resolution;
            data::SemanticLayout start;
            data::AttributeVector attrs;
            std::uint64_t seed = edt_seed;
            std::vector<eval::LayoutEdit> script;
            if (!edt_session.empty()) {
                const auto doc = read_json_file(edt_session, "session");
                if (!doc.is_object()) throw ValidationError("session", "must be an object");
                if (doc.contains("checkpoint") && doc["checkpoint"].is_string()) {
                    const auto id = doc["checkpoint"].get<std::string>();
                    if (m.source.sha256.compare(0, id.size(), id) != 0) {
                        throw ValidationError("checkpoint", "session was recorded against checkpoint " + id);
                    }
                }
                if (!doc.contains("layout") || !doc["layout"].is_string()) throw ValidationError("layout", "missing");
                auto map = data::decode_png_indexed(eval::base64_decode(doc["layout"].get<std::string>(), "layout"));
                if (map.height != res || map.width != res) {
                    throw ValidationError("layout", fmt::format("session layout is {}x{}, model is {}x{}", map.height,
                                                                map.width, res, res));
                }
                start = data::encode_layout(map);
                attrs = data::AttributeVector::from_json(doc.value("attributes", json::array()));
                seed = doc.value("seed", std::uint64_t{0});
                script = eval::parse_edit_script(doc.value("history", json::array()),
                                                 fs::path(edt_session).parent_path(), res);
            } else {
                if (edt_layout.empty()) throw ValidationError("layout", "give --layout or --session");
                start = read_layout(edt_layout, res);
                attrs = parse_attributes(edt_attrs);
                if (!edt_script.empty()) script = eval::load_edit_script(edt_script, res);
            }
            const auto layouts = eval::apply_edit_script(start, script);
            write_edit_sequence(m, layouts, script, attrs, seed, edt_out, out);
            return 0;
        }

        if (*nst) {
            std::optional<LoadedModel> m;
            if (!nst_ckpt.empty()) m.emplace(load_model(nst_ckpt));
            int res = nst_resolution;
            if (m) {
                const int model_res = m->state.model.generator.resolution;
                if (res > 0 && res != model_res) throw ValidationError("resolution", "differs from the checkpoint");
                res = model_res;
            }
            if (res <= 0) throw ValidationError("resolution", "give --ckpt or --resolution");
            data::Image query;
            if (!nst_query.empty()) {
                query = data::preprocess_image(data::read_png_rgb(nst_query), res);
            } else {
                if (!m) throw ValidationError("query", "give --query, or --ckpt to generate one");
                eval::Probe probe{layout_for(nst_layout, m->state.model.generator), parse_attributes(nst_attrs),
                                  nst_seed};
                // Round through 8 bits so the query matches what a saved image would give.
                query = data::normalize_bytes(data::quantize_image(eval::generate_image(m->state.generator, probe)));
            }
            const auto manifest = data::load_manifest(nst_data, {res, 0.0});
            const auto match = eval::nearest_training_image(query, manifest);
            const json result{{"index", match.index},
                              {"image", manifest.resolve(manifest.records[match.index].image).string()},
                              {"distance", match.distance}};
            if (!nst_out.empty()) write_json_file(nst_out, result);
            out << result.dump() << "\n";
            return 0;
        }

        if (*abl) {
            const auto run = abl_config.empty() ? train::RunConfig::from_json(json::object())
                                                : train::RunConfig::load(abl_config);
            eval::AblationOptions opts;
            opts.base_model = model::make_variant(model::VariantKind::AL, run.model.generator, run.model.discriminator);
            opts.training = run.training;
            opts.out_dir = abl_out;
            if (!abl_toy.empty()) opts.toy = data::ToySceneSpec::from_json(read_json_file(abl_toy, "toy_spec"));
            const auto manifest = open_manifest(abl_data, run.model.generator.resolution);
            const auto samples = data::load_samples(manifest);
            for (int i = 0; i < abl_probes && i < static_cast<int>(samples.size()); ++i) {
                opts.probes.push_back({samples[i].layout, samples[i].attributes, static_cast<std::uint64_t>(i)});
            }
            const auto result = eval::ablation_compare(samples, opts);
            fs::create_directories(abl_out);
            const fs::path csv = fs::path(abl_out) / "ablation.csv";
            eval::write_ablation_csv(result, csv);
            if (!result.grid.cells.empty()) eval::export_grid(result.grid, fs::path(abl_out) / "ablation.png");
            std::ifstream in(csv);
            out << in.rdbuf();
            const bool any = std::any_of(result.outcomes.begin(), result.outcomes.end(),
                                         [](const eval::VariantOutcome& o) { return o.trained; });
            if (!any) {
                err << "error: no variant finished training\n";
                return 1;
            }
            return 0;
        }

        if (*srv) {
            service::InferenceService svc;
            service::ServerOptions opts{srv_host, srv_port ? *srv_port : service::port_from_environment(8080),
                                        srv_workers};
            service::Server server(svc, opts);
            const int port = server.bind();
            out << "listening on http://" << srv_host << ":" << port << "\n" << std::flush;
            std::atomic<bool> load_failed{false};
            std::thread loader([&] {
                try {
                    svc.load(srv_ckpt);
                } catch (const std::exception& e) {
                    spdlog::error("cannot load {}: {}", srv_ckpt, e.what());
                    load_failed = true;
                    server.wait_until_ready();
                    server.stop();
                }
            });
            g_server = &server;
            auto old_int = std::signal(SIGINT, handle_stop_signal);
            auto old_term = std::signal(SIGTERM, handle_stop_signal);
            server.listen();
            g_server = nullptr;
            std::signal(SIGINT, old_int);
            std::signal(SIGTERM, old_term);
            loader.join();
            if (load_failed) {
                err << "error: checkpoint " << srv_ckpt << " could not be loaded\n";
                return 1;
            }
            return 0;
        }
    } catch (const train::DivergenceError& e) {
        err << "error: " << e.what();
        if (!e.last_checkpoint().empty()) err << " (last checkpoint: " << e.last_checkpoint().string() << ")";
        err << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace alcgan::cli
