#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ip2cp/classifier.hpp"
#include "ip2cp/embedder.hpp"
#include "ip2cp/encoder.hpp"
#include "ip2cp/error.hpp"
#include "ip2cp/ingest.hpp"
#include "ip2cp/kernels.hpp"
#include "ip2cp/metrics.hpp"
#include "ip2cp/patches.hpp"
#include "ip2cp/plot.hpp"
#include "ip2cp/synth.hpp"

namespace ip2cp::cli {
namespace {

namespace fs = std::filesystem;

// Raised for flag combinations CLI11 cannot express; maps to exit 1.
struct UsageError : Error {
    using Error::Error;
};

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw IoError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

NormScope parse_scope(const std::string& s) {
    if (s == "joint") return NormScope::Joint;
    if (s == "per-channel") return NormScope::PerChannel;
    throw UsageError("unknown --norm-scope '" + s + "' (expected joint or per-channel)");
}

// Loads and encodes one manifest entry; every failure names the entry.
DatasetItem load_item(const ManifestEntry& e, NormScope scope) {
    try {
        DatasetItem item;
        item.id = e.id;
        const RasterImage pre = load_image(e.pre);
        item.post = load_image(e.post);
        if (pre.height() != item.post.height() || pre.width() != item.post.width())
            throw ShapeError("pre image is " + std::to_string(pre.height()) + "x" + std::to_string(pre.width()) +
                             " but post image is " + std::to_string(item.post.height()) + "x" +
                             std::to_string(item.post.width()));
        item.mask = load_labels(e.labels, pre.height(), pre.width());
        item.z = ip2cp_encode(pre, item.post, item.mask, scope);
        return item;
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& err) {
        throw DataError("entry '" + e.id + "': " + err.what());
    }
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep))
        if (!cur.empty()) out.push_back(cur);
    return out;
}

double parse_number(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError("cannot parse " + what + " '" + s + "'");
    }
}

// --- encode ---------------------------------------------------------------

struct EncodeArgs {
    std::string manifest, out_dir, scope = "joint";
};

int cmd_encode(const EncodeArgs& a, std::ostream&, std::ostream& err) {
    const NormScope scope = parse_scope(a.scope);
    const Manifest m = load_manifest(a.manifest);
    if (!m.entries.empty()) ensure_dir(a.out_dir);
    for (const auto& e : m.entries) {
        const DatasetItem item = load_item(e, scope);
        save_image(item.z.image, fs::path(a.out_dir) / (e.id + "_ip2cp.png"));
        save_ooi_map(item.z, fs::path(a.out_dir) / (e.id + "_ooi.png"));
    }
    err << "encode: " << m.entries.size() << " entries\n";
    return kSuccess;
}

// --- mine -----------------------------------------------------------------

struct MineArgs {
    std::string manifest, out_dir, scope = "joint";
    MinerConfig cfg;
};

int cmd_mine(const MineArgs& a, std::ostream& out, std::ostream& err) {
    a.cfg.validate();
    const NormScope scope = parse_scope(a.scope);
    const Manifest m = load_manifest(a.manifest);
    std::vector<LabeledPatch> sets[2];
    std::vector<DatasetItem> items[2];
    for (const auto& e : m.entries) {
        DatasetItem item = load_item(e, scope);
        const int s = e.split == Split::Train ? 0 : 1;
        auto mined = mine_patches(item.z, item.mask, item.post, a.cfg, e.id);
        sets[s].insert(sets[s].end(), std::make_move_iterator(mined.begin()), std::make_move_iterator(mined.end()));
        items[s].push_back(std::move(item));
    }
    write_patch_set(fs::path(a.out_dir) / "train", sets[0]);
    write_patch_set(fs::path(a.out_dir) / "test", sets[1]);
    out << "# patch_size=" << a.cfg.patch_size << " delta1=" << fmt_double(a.cfg.delta1)
        << " delta2=" << fmt_double(a.cfg.delta2) << " stride=" << a.cfg.effective_stride() << "\n";
    out << "split," << stats_csv_header() << "\n";
    for (int s = 0; s < 2; ++s)
        out << to_string(s == 0 ? Split::Train : Split::Test) << ',' << stats_csv_row(collect_stats(items[s], a.cfg))
            << "\n";
    err << "mine: " << sets[0].size() << " train and " << sets[1].size() << " test patches\n";
    return kSuccess;
}

// --- stats ----------------------------------------------------------------

struct StatsArgs {
    std::string manifest, sizes = "64", deltas = "0.12:0.04", out, scope = "joint";
};

int cmd_stats(const StatsArgs& a, std::ostream& out, std::ostream&) {
    std::vector<std::size_t> sizes;
    for (const auto& s : split_list(a.sizes, ',')) {
        const double v = parse_number(s, "patch size");
        if (v < 1 || v != std::floor(v)) throw UsageError("patch size must be a positive integer: " + s);
        sizes.push_back(static_cast<std::size_t>(v));
    }
    std::vector<std::pair<double, double>> deltas;
    for (const auto& d : split_list(a.deltas, ',')) {
        const auto parts = split_list(d, ':');
        if (parts.size() != 2) throw UsageError("delta pair must look like delta1:delta2, got '" + d + "'");
        deltas.emplace_back(parse_number(parts[0], "delta1"), parse_number(parts[1], "delta2"));
    }
    if (sizes.empty() || deltas.empty()) throw UsageError("--sizes and --deltas must not be empty");
    for (auto sz : sizes)
        for (auto [d1, d2] : deltas) MinerConfig{sz, d1, d2, 0}.validate();

    const NormScope scope = parse_scope(a.scope);
    const Manifest m = load_manifest(a.manifest);
    std::vector<DatasetItem> items;
    for (const auto& e : m.entries) items.push_back(load_item(e, scope));
    std::string csv = stats_csv_header() + "\n";
    for (const auto& row : sweep_patch_stats(items, sizes, deltas)) csv += stats_csv_row(row) + "\n";
    if (a.out.empty())
        out << csv;
    else
        write_text(a.out, csv);
    return kSuccess;
}

// --- train ----------------------------------------------------------------

struct TrainArgs {
    std::string patches, model_out, stats_out;
    TrainConfig cfg;
    bool no_augment = false;
};

int cmd_train(TrainArgs a, std::ostream&, std::ostream& err) {
    a.cfg.augment = !a.no_augment;
    a.cfg.validate();
    const auto patches = read_patch_set(a.patches);
    if (patches.empty()) throw DataError("patch set " + a.patches + " is empty");
    err << "train: " << patches.size() << " patches, " << a.cfg.epochs << " epochs\n";
    const auto result = train(patches, a.cfg, [&](std::size_t epoch, const EpochStats& s) {
        err << "epoch " << epoch + 1 << "/" << a.cfg.epochs << " loss " << s.mean_loss << "\n";
    });
    save_net(result.net, a.model_out);
    if (!a.stats_out.empty()) write_text(a.stats_out, train_stats_csv(result.stats));
    return kSuccess;
}

// --- fit-svm --------------------------------------------------------------

struct FitArgs {
    std::string patches, model, svm_out;
    SvmConfig cfg;
};

int cmd_fit_svm(const FitArgs& a, std::ostream& out, std::ostream&) {
    a.cfg.validate();
    const EmbedderNet net = load_net(a.model);
    const auto patches = read_patch_set(a.patches);
    const auto points = embed_all(net, patches);
    std::vector<BinaryLabel> labels;
    for (const auto& p : patches) labels.push_back(p.label);
    SvmFitReport report;
    const SvmModel svm = fit_svm(points, labels, a.cfg, &report);
    save_svm(svm, a.svm_out);
    out << "training_errors=" << report.training_errors << " of " << patches.size() << "\n";
    return kSuccess;
}

// --- predict --------------------------------------------------------------

struct PredictArgs {
    std::string model, svm, patches, triple, out, scope = "joint";
    double delta1 = 0.12, delta2 = 0.04;
    std::size_t stride = 0;
};

int cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream&) {
    if (a.patches.empty() == a.triple.empty()) throw UsageError("give exactly one of --patches or --image-triple");
    const EmbedderNet net = load_net(a.model);
    const SvmModel svm = load_svm(a.svm);
    std::vector<LabeledPatch> patches;
    if (!a.patches.empty()) {
        patches = read_patch_set(a.patches);
    } else {
        const auto parts = split_list(a.triple, ',');
        if (parts.size() != 3) throw UsageError("--image-triple expects pre,post,labels");
        ManifestEntry e;
        e.id = fs::path(parts[1]).stem().string();
        e.pre = parts[0];
        e.post = parts[1];
        e.labels = parts[2];
        MinerConfig cfg{net.architecture().input_height, a.delta1, a.delta2, a.stride};
        cfg.validate();
        const DatasetItem item = load_item(e, parse_scope(a.scope));
        patches = mine_patches(item.z, item.mask, item.post, cfg, e.id);
    }
    std::string tsv = "id\tlabel\n";
    for (const auto& p : patches) {
        tsv += p.id;
        tsv += '\t';
        tsv += to_string(predict_patch(net, svm, p.pixels));
        tsv += '\n';
    }
    if (a.out.empty())
        out << tsv;
    else
        write_text(a.out, tsv);
    return kSuccess;
}

// --- evaluate -------------------------------------------------------------

// id -> label from either a prediction TSV (with "id<TAB>label" header), a
// patch manifest file, or a patch set directory.
std::vector<std::pair<std::string, BinaryLabel>> read_id_labels(const fs::path& path) {
    std::vector<std::pair<std::string, BinaryLabel>> out;
    if (fs::is_directory(path)) {
        for (const auto& e : read_patch_manifest(path)) out.emplace_back(e.id, e.label);
        return out;
    }
    std::istringstream in(read_text(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line == "id\tlabel") continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected id<TAB>label");
        const auto end = line.find('\t', tab + 1);
        try {
            out.emplace_back(line.substr(0, tab), parse_binary_label(line.substr(tab + 1, end - tab - 1)));
        } catch (const DataError& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

struct EvalArgs {
    std::string pred, truth, mode = "patch", report;
};

int cmd_evaluate(const EvalArgs& a, std::ostream& out, std::ostream&) {
    std::string json;
    if (a.mode == "patch") {
        const auto preds = read_id_labels(a.pred);
        const auto truths = read_id_labels(a.truth);
        if (preds.size() != truths.size())
            throw DataError("length mismatch: " + std::to_string(preds.size()) + " predictions vs " +
                            std::to_string(truths.size()) + " truth labels");
        std::map<std::string, BinaryLabel> truth_by_id;
        for (const auto& [id, l] : truths)
            if (!truth_by_id.emplace(id, l).second) throw DataError("duplicate truth id '" + id + "'");
        std::vector<BinaryLabel> p, t;
        std::set<std::string> seen;
        for (const auto& [id, l] : preds) {
            const auto it = truth_by_id.find(id);
            if (it == truth_by_id.end()) throw DataError("prediction id '" + id + "' has no truth label");
            if (!seen.insert(id).second) throw DataError("duplicate prediction id '" + id + "'");
            p.push_back(l);
            t.push_back(it->second);
        }
        const ConfusionMatrix cm = confusion(p, t);
        json = patch_report_json(cm);
        out << "f1=" << f1_binary(cm, 1) << "\n";
    } else if (a.mode == "pixel") {
        LabelMask pred;
        try {
            pred = load_mask(a.pred);
        } catch (const Error& e) {
            throw DataError(e.what());
        }
        LabelMask truth;
        try {
            truth = load_labels(a.truth, pred.height(), pred.width());
        } catch (const Error& e) {
            throw DataError(e.what());
        }
        if (truth.height() != pred.height() || truth.width() != pred.width())
            throw DataError("prediction and truth maps differ in size");
        const PixelwiseF1 r = f1_pixelwise(pred, truth);
        json = pixel_report_json(r);
        out << "macro_f1=" << r.macro << "\n";
    } else {
        throw UsageError("--mode must be patch or pixel");
    }
    if (!a.report.empty()) write_text(a.report, json);
    return kSuccess;
}

// --- plot -----------------------------------------------------------------

struct PlotArgs {
    std::string model, patches, out_svg, out_csv;
};

int cmd_plot(const PlotArgs& a, std::ostream&, std::ostream&) {
    const EmbedderNet net = load_net(a.model);
    if (net.embed_dim() != 2)
        throw UsageError("plot needs a 2-dimensional embedding, model has embed_dim " +
                         std::to_string(net.embed_dim()));
    const auto patches = read_patch_set(a.patches);
    const auto emb = embed_all(net, patches);
    std::vector<ScatterPoint> pts;
    for (std::size_t i = 0; i < patches.size(); ++i)
        pts.push_back({patches[i].id, patches[i].label, emb[i].coords[0], emb[i].coords[1]});
    if (!a.out_svg.empty()) write_text(a.out_svg, scatter_svg(pts));
    if (!a.out_csv.empty()) write_text(a.out_csv, scatter_csv(pts));
    return kSuccess;
}

// --- synth ----------------------------------------------------------------

struct SynthArgs {
    std::string config, out_dir;
};

int cmd_synth(const SynthArgs& a, std::ostream&, std::ostream& err) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(a.config));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(a.config + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(a.config + ": config must be a JSON object");
    SceneConfig cfg;
    std::size_t scenes = 50;
    double train_fraction = 0.8;
    auto get_size = [&](const std::string& key, const nlohmann::json& v) -> std::size_t {
        if (!v.is_number_unsigned()) throw ConfigError(key + " must be a non-negative integer");
        return v.get<std::size_t>();
    };
    auto get_num = [&](const std::string& key, const nlohmann::json& v) -> double {
        if (!v.is_number()) throw ConfigError(key + " must be a number");
        return v.get<double>();
    };
    for (const auto& [key, v] : j.items()) {
        if (key == "image_size") cfg.image_size = get_size(key, v);
        else if (key == "building_count") cfg.building_count = get_size(key, v);
        else if (key == "building_min") cfg.building_min = get_size(key, v);
        else if (key == "building_max") cfg.building_max = get_size(key, v);
        else if (key == "damage_probability") cfg.damage_probability = get_num(key, v);
        else if (key == "damage_intensity") cfg.damage_intensity = get_num(key, v);
        else if (key == "speckle_fraction") cfg.speckle_fraction = get_num(key, v);
        else if (key == "noise_sigma") cfg.noise_sigma = get_num(key, v);
        else if (key == "seed") cfg.seed = get_size(key, v);
        else if (key == "scenes") scenes = get_size(key, v);
        else if (key == "train_fraction") train_fraction = get_num(key, v);
        else throw ConfigError(a.config + ": unknown key '" + key + "'");
    }
    cfg.validate();
    dataset_splits(scenes, train_fraction);
    const Manifest m = make_dataset(cfg, scenes, train_fraction, a.out_dir);
    err << "synth: " << m.entries.size() << " scenes in " << a.out_dir << "\n";
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"IP2CP building damage assessment toolkit"};
    app.require_subcommand(1);
    std::string kernels = "auto";
    app.add_option("--kernels", kernels, "Compute kernels: scalar, avx2 or auto")->capture_default_str();

    EncodeArgs enc;
    auto* s_enc = app.add_subcommand("encode", "Write IP2CP images and OOI maps for every manifest entry");
    s_enc->add_option("--manifest", enc.manifest)->required();
    s_enc->add_option("--out-dir", enc.out_dir)->required();
    s_enc->add_option("--norm-scope", enc.scope, "joint or per-channel")->capture_default_str();

    MineArgs mine;
    auto* s_mine = app.add_subcommand("mine", "Mine labelled patches into train/ and test/ patch sets");
    s_mine->add_option("--manifest", mine.manifest)->required();
    s_mine->add_option("--out-dir", mine.out_dir)->required();
    s_mine->add_option("--patch-size", mine.cfg.patch_size)->capture_default_str();
    s_mine->add_option("--delta1", mine.cfg.delta1)->capture_default_str();
    s_mine->add_option("--delta2", mine.cfg.delta2)->capture_default_str();
    s_mine->add_option("--stride", mine.cfg.stride, "Window step (0 = patch size)")->capture_default_str();
    s_mine->add_option("--norm-scope", mine.scope)->capture_default_str();

    StatsArgs st;
    auto* s_stats = app.add_subcommand("stats", "Patch counts over patch sizes and threshold pairs");
    s_stats->add_option("--manifest", st.manifest)->required();
    s_stats->add_option("--sizes", st.sizes, "Comma-separated patch sizes")->capture_default_str();
    s_stats->add_option("--deltas", st.deltas, "Comma-separated delta1:delta2 pairs")->capture_default_str();
    s_stats->add_option("--out", st.out, "CSV path (default: standard output)");
    s_stats->add_option("--norm-scope", st.scope)->capture_default_str();

    TrainArgs tr;
    auto* s_train = app.add_subcommand("train", "Train the siamese embedder");
    s_train->add_option("--patches", tr.patches)->required();
    s_train->add_option("--model-out", tr.model_out)->required();
    s_train->add_option("--stats-out", tr.stats_out);
    s_train->add_option("--epochs", tr.cfg.epochs)->capture_default_str();
    s_train->add_option("--margin", tr.cfg.margin)->capture_default_str();
    s_train->add_option("--embed-dim", tr.cfg.embed_dim)->capture_default_str();
    s_train->add_option("--seed", tr.cfg.seed)->capture_default_str();
    s_train->add_option("--lr", tr.cfg.learning_rate)->capture_default_str();
    s_train->add_option("--momentum", tr.cfg.momentum)->capture_default_str();
    s_train->add_option("--batch-pairs", tr.cfg.batch_pairs)->capture_default_str();
    s_train->add_flag("--no-augment", tr.no_augment, "Disable random quarter turns and flips");

    FitArgs fit;
    auto* s_fit = app.add_subcommand("fit-svm", "Fit the linear SVM on embedded training patches");
    s_fit->add_option("--patches", fit.patches)->required();
    s_fit->add_option("--model", fit.model)->required();
    s_fit->add_option("--svm-out", fit.svm_out)->required();
    s_fit->add_option("--lambda", fit.cfg.lambda)->capture_default_str();
    s_fit->add_option("--svm-epochs", fit.cfg.epochs)->capture_default_str();

    PredictArgs pr;
    auto* s_pred = app.add_subcommand("predict", "Predict patch labels");
    s_pred->add_option("--model", pr.model)->required();
    s_pred->add_option("--svm", pr.svm)->required();
    s_pred->add_option("--patches", pr.patches, "Patch set directory");
    s_pred->add_option("--image-triple", pr.triple, "pre,post,labels paths; patches are mined first");
    s_pred->add_option("--out", pr.out, "TSV path (default: standard output)");
    s_pred->add_option("--delta1", pr.delta1)->capture_default_str();
    s_pred->add_option("--delta2", pr.delta2)->capture_default_str();
    s_pred->add_option("--stride", pr.stride)->capture_default_str();
    s_pred->add_option("--norm-scope", pr.scope)->capture_default_str();

    EvalArgs ev;
    auto* s_eval = app.add_subcommand("evaluate", "Confusion matrix and F1 report");
    s_eval->add_option("--pred", ev.pred)->required();
    s_eval->add_option("--truth", ev.truth)->required();
    s_eval->add_option("--mode", ev.mode, "patch or pixel")->capture_default_str();
    s_eval->add_option("--report", ev.report, "JSON report path");

    PlotArgs pl;
    auto* s_plot = app.add_subcommand("plot", "Scatter of 2-D patch embeddings");
    s_plot->add_option("--model", pl.model)->required();
    s_plot->add_option("--patches", pl.patches)->required();
    s_plot->add_option("--out-svg", pl.out_svg);
    s_plot->add_option("--out-csv", pl.out_csv);

    SynthArgs sy;
    auto* s_synth = app.add_subcommand("synth", "Generate a synthetic dataset and manifest");
    s_synth->add_option("--config", sy.config)->required();
    s_synth->add_option("--out-dir", sy.out_dir)->required();

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    if (args.empty()) argv.push_back("ip2cp");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsageError;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        simd::set_backend(simd::parse_backend(kernels));
        if (name == "encode") return cmd_encode(enc, out, err);
        if (name == "mine") return cmd_mine(mine, out, err);
        if (name == "stats") return cmd_stats(st, out, err);
        if (name == "train") return cmd_train(tr, out, err);
        if (name == "fit-svm") return cmd_fit_svm(fit, out, err);
        if (name == "predict") return cmd_predict(pr, out, err);
        if (name == "evaluate") return cmd_evaluate(ev, out, err);
        if (name == "plot") return cmd_plot(pl, out, err);
        if (name == "synth") return cmd_synth(sy, out, err);
        throw UsageError("unknown command " + name);
    } catch (const UsageError& e) {
        err << name << ": " << e.what() << "\n";
        return kUsageError;
    } catch (const ConfigError& e) {
        err << name << ": " << e.what() << "\n";
        return kUsageError;
    } catch (const NumericalError& e) {
        err << name << ": " << e.what() << "\n";
        return kNumericalError;
    } catch (const Error& e) {
        err << name << ": " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception& e) {
        err << name << ": unexpected failure: " << e.what() << "\n";
        return kDataError;
    }
}

}  // namespace ip2cp::cli
