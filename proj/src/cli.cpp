#include "pegfit/cli.hpp"

#include <filesystem>
#include <set>
#include <sstream>

#include "pegfit/adaptation.hpp"
#include "pegfit/assembly.hpp"
#include "pegfit/dataset.hpp"
#include "pegfit/estimator.hpp"
#include "pegfit/io.hpp"
#include "pegfit/parallel.hpp"

namespace fs = std::filesystem;

namespace pegfit {
namespace cli {

int resolve_workers(const CommonOpts& opts) {
    return opts.workers > 0 ? opts.workers : default_workers();
}

namespace {

nlohmann::json common_json(const CommonOpts& opts) {
    return {{"seed", opts.seed}, {"workers", resolve_workers(opts)}, {"scale", opts.scale}};
}

DomainConfig domain_by_name(const std::string& name) {
    if (name == "sim") return DomainConfig::sim();
    if (name == "pseudo_real") return DomainConfig::pseudo_real_default();
    throw std::runtime_error("unknown domain: " + name + " (expected sim|pseudo_real)");
}

void write_json(const std::string& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

std::string dataset_csv(const Dataset& ds) {
    std::ostringstream out;
    out << "index,shape_id,domain,flags,split,dx,dy,dox,doy,doz,px,py,ox,oy,oz";
    for (int i = 0; i < 25; ++i) out << ",c" << i;
    out << "\n";
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const MisalignmentRecord& r = ds.records[i];
        out << i << "," << r.shape_id << "," << static_cast<int>(r.domain) << ","
            << static_cast<int>(r.flags & 0x7) << "," << static_cast<int>(r.split()) << ","
            << fmt_double(r.offset.dx) << "," << fmt_double(r.offset.dy) << ","
            << fmt_double(r.offset.dox) << "," << fmt_double(r.offset.doy) << ","
            << fmt_double(r.offset.doz) << "," << fmt_double(r.pose.px) << ","
            << fmt_double(r.pose.py) << "," << fmt_double(r.pose.ox) << ","
            << fmt_double(r.pose.oy) << "," << fmt_double(r.pose.oz);
        for (double v : r.signature) out << "," << fmt_double(v);
        out << "\n";
    }
    return out.str();
}

}  // namespace

std::string make_run_dir(const CommonOpts& opts, const std::string& default_name,
                         const nlohmann::json& resolved_config) {
    std::string dir = opts.out.empty() ? std::string("out/") + default_name : opts.out;
    fs::path p(dir);
    if (fs::exists(p / "config.json") && !opts.force)
        throw std::runtime_error("run directory already used (write-once): " + dir +
                                 " (pass --force to overwrite)");
    fs::create_directories(p);
    write_json((p / "config.json").string(), resolved_config);
    return dir;
}

std::string cmd_shapes(const ShapesOpts& opts) {
    nlohmann::json cfg = common_json(opts);
    cfg["command"] = "shapes";
    std::string dir = make_run_dir(opts, "shapes", cfg);

    ShapeSetConfig sc = opts.scale == "paper" ? paper_shape_config() : desk_shape_config();
    ShapeSet set = generate_shape_set(sc, opts.seed);
    write_json(dir + "/shapes.json", set.to_json());
    return dir;
}

std::string cmd_dataset(const DatasetOpts& opts) {
    if (opts.shapes_path.empty()) throw std::runtime_error("cmd_dataset: --shapes is required");
    nlohmann::json cfg = common_json(opts);
    cfg["command"] = "dataset";
    cfg["shapes"] = opts.shapes_path;
    cfg["paired"] = opts.paired;
    std::string dir = make_run_dir(opts, "dataset", cfg);

    ShapeSet shapes = ShapeSet::from_json(nlohmann::json::parse(read_text_file(opts.shapes_path)));

    DatasetGenConfig gen;
    gen.workers = resolve_workers(opts);
    if (opts.scale == "paper") {
        gen.train_per_shape = 1200;
        gen.val_per_shape = 1000;
    }
    GenReport report;
    Dataset ds = generate_dataset(shapes, gen, DomainConfig::sim(), opts.seed, &report);
    ds.save(dir + "/dataset.pfit");
    nlohmann::json rj = report.to_json();
    rj["dataset_hash"] = hash_hex(fnv1a_file(dir + "/dataset.pfit"));
    write_json(dir + "/report.json", rj);
    if (opts.csv_export) write_text_file(dir + "/dataset.csv", dataset_csv(ds));

    if (opts.paired) {
        PairedGenConfig pg;
        pg.workers = gen.workers;
        PairedDataset paired = generate_paired_dataset(shapes, pg, DomainConfig::sim(),
                                                       DomainConfig::pseudo_real_default(), opts.seed);
        paired.save(dir + "/paired.pfpr");
    }
    return dir;
}

std::string cmd_train(const TrainOpts& opts) {
    if (opts.dataset_path.empty()) throw std::runtime_error("cmd_train: --dataset is required");
    nlohmann::json cfg = common_json(opts);
    cfg["command"] = "train";
    cfg["dataset"] = opts.dataset_path;
    cfg["epochs"] = opts.epochs;
    cfg["batch"] = opts.batch;
    cfg["width"] = opts.width;
    std::string dir = make_run_dir(opts, "train", cfg);

    Dataset ds = Dataset::load(opts.dataset_path);
    std::uint64_t dhash = fnv1a_file(opts.dataset_path);

    EstimatorNet net = build_estimator(static_cast<int>(ds.k), opts.width, opts.seed);
    TrainConfig tc;
    tc.epochs = opts.epochs;
    tc.batch = opts.batch;
    tc.seed = opts.seed;
    tc.workers = resolve_workers(opts);
    TrainHistory hist = train_estimator(net, ds, tc);
    net.dataset_hash = dhash;
    save_estimator(net, dir + "/estimator.ckpt");
    nlohmann::json hj = hist.to_json();
    hj["dataset_hash"] = hash_hex(dhash);
    write_json(dir + "/history.json", hj);
    return dir;
}

std::string cmd_adapt(const AdaptOpts& opts) {
    if (opts.checkpoint_path.empty() || opts.paired_path.empty() || opts.shapes_path.empty())
        throw std::runtime_error("cmd_adapt: --checkpoint, --paired and --shapes are required");
    nlohmann::json cfg = common_json(opts);
    cfg["command"] = "adapt";
    cfg["checkpoint"] = opts.checkpoint_path;
    cfg["paired"] = opts.paired_path;
    std::string dir = make_run_dir(opts, "adapt", cfg);

    EstimatorNet sim_net = load_estimator(opts.checkpoint_path);
    PairedDataset paired = PairedDataset::load(opts.paired_path);
    std::uint64_t phash = fnv1a_file(opts.paired_path);
    ShapeSet shapes = ShapeSet::from_json(nlohmann::json::parse(read_text_file(opts.shapes_path)));

    AdaptConfig ac;
    ac.dla_epochs = opts.dla_epochs;
    ac.fla_epochs = opts.fla_epochs;
    ac.fine_tune_epochs = opts.fine_tune_epochs;
    ac.seed = opts.seed;
    ac.workers = resolve_workers(opts);

    DlaNet dla = train_dla(paired, ac, phash);
    EstimatorNet fla_net = distill_fla(sim_net, paired, ac, phash);
    EstimatorNet ft_net = fine_tune(sim_net, paired, ac);
    AdaptedEstimator ours;
    ours.paired_hash = phash;
    ours.dla = dla;
    ours.net = fine_tune(fla_net, paired, ac, &dla);
    ours.methods = {"dla", "fla", "fine_tune"};

    AdaptationReport report =
        evaluate_adaptation(sim_net, dla, fla_net, ft_net, ours, paired, shapes, phash);

    save_dla(dla, dir + "/dla.ckpt");
    save_estimator(ours.net, dir + "/adapted.ckpt");
    write_text_file(dir + "/table3.csv", report.to_csv());
    nlohmann::json prov = {{"paired_hash", hash_hex(phash)},
                           {"dataset_hash", hash_hex(sim_net.dataset_hash)},
                           {"methods", ours.methods}};
    write_json(dir + "/provenance.json", prov);
    write_json(dir + "/adaptation.json", report.to_json());
    return dir;
}

std::string cmd_eval_pose(const EvalPoseOpts& opts) {
    if (opts.checkpoint_path.empty() || opts.dataset_path.empty() || opts.shapes_path.empty())
        throw std::runtime_error("cmd_eval_pose: --checkpoint, --dataset and --shapes are required");
    nlohmann::json cfg = common_json(opts);
    cfg["command"] = "eval-pose";
    cfg["checkpoint"] = opts.checkpoint_path;
    cfg["dataset"] = opts.dataset_path;
    std::string dir = make_run_dir(opts, "eval-pose", cfg);

    EstimatorNet net = load_estimator(opts.checkpoint_path);
    Dataset ds = Dataset::load(opts.dataset_path);
    std::uint64_t dhash = fnv1a_file(opts.dataset_path);
    if (net.dataset_hash != 0 && net.dataset_hash != dhash)
        throw std::runtime_error("cmd_eval_pose: dataset hash mismatch with checkpoint provenance: " +
                                 opts.dataset_path);
    ShapeSet shapes = ShapeSet::from_json(nlohmann::json::parse(read_text_file(opts.shapes_path)));

    EvalReport report = evaluate(net, ds, shapes, Split::Test, resolve_workers(opts));
    nlohmann::json ej = report.to_json();
    ej["dataset_hash"] = hash_hex(dhash);
    write_json(dir + "/eval.json", ej);
    write_text_file(dir + "/table1_mae.csv", report.to_csv());

    // Raw feature export for offline embedding (t-SNE etc.).
    std::ostringstream feat;
    feat << "record,shape_id";
    for (int i = 0; i < net.width; ++i) feat << ",f" << i;
    for (int i = 0; i < net.width; ++i) feat << ",t" << i;
    for (int i = 0; i < net.width; ++i) feat << ",u" << i;
    feat << ",px,py,ox,oy,oz\n";
    std::size_t idx = 0;
    for (const MisalignmentRecord& r : ds.records) {
        if (!r.usable() || r.split() != Split::Test) continue;
        EstimatorFeatures f = extract_features(net, r.signature);
        feat << idx++ << "," << r.shape_id;
        for (double v : f.force) feat << "," << fmt_double(v);
        for (double v : f.torque) feat << "," << fmt_double(v);
        for (double v : f.fusion) feat << "," << fmt_double(v);
        feat << "," << fmt_double(r.pose.px) << "," << fmt_double(r.pose.py) << ","
             << fmt_double(r.pose.ox) << "," << fmt_double(r.pose.oy) << ","
             << fmt_double(r.pose.oz) << "\n";
    }
    write_text_file(dir + "/features.csv", feat.str());
    return dir;
}

std::string cmd_assemble(const AssembleOpts& opts) {
    if (opts.checkpoint_path.empty() || opts.shapes_path.empty())
        throw std::runtime_error("cmd_assemble: --checkpoint and --shapes are required");
    nlohmann::json cfg = common_json(opts);
    cfg["command"] = "assemble";
    cfg["checkpoint"] = opts.checkpoint_path;
    cfg["domain"] = opts.domain;
    cfg["scenarios_per_shape"] = opts.scenarios_per_shape;
    std::string dir = make_run_dir(opts, "assemble", cfg);

    EstimatorNet net = load_estimator(opts.checkpoint_path);
    ShapeSet shapes = ShapeSet::from_json(nlohmann::json::parse(read_text_file(opts.shapes_path)));
    DomainConfig domain = domain_by_name(opts.domain);

    std::vector<SuiteMethod> methods;
    if (!opts.bundle_dir.empty()) {
        AdaptedEstimator adapted;
        adapted.dla = load_dla(opts.bundle_dir + "/dla.ckpt");
        adapted.net = load_estimator(opts.bundle_dir + "/adapted.ckpt");
        adapted.methods = {"dla", "fla", "fine_tune"};
        adapted.paired_hash = adapted.dla->paired_hash;
        methods.push_back({"estimator_adapted", [adapted](const std::array<double, 25>& s) {
                               return estimate_adapted(adapted, s);
                           }});
    } else {
        methods.push_back({"estimator", [net](const std::array<double, 25>& s) { return estimate(net, s); }});
    }
    if (opts.spiral) methods.push_back({"spiral", nullptr});

    SuiteConfig sc;
    sc.scenarios_per_shape = opts.scenarios_per_shape;
    sc.workers = resolve_workers(opts);
    SuiteReport report = evaluate_suite(shapes, methods, sc, domain, opts.seed);

    nlohmann::json sj = report.summary_json();
    sj["dataset_hash"] = hash_hex(net.dataset_hash);
    write_json(dir + "/suite.json", sj);
    write_text_file(dir + "/table4.csv", report.to_csv());
    std::ostringstream jsonl;
    for (const MethodReport& m : report.methods)
        for (const TrialRecord& rec : m.records) {
            nlohmann::json rj = rec.to_json();
            rj["method"] = m.method;
            jsonl << rj.dump() << "\n";
        }
    write_text_file(dir + "/trials.jsonl", jsonl.str());
    return dir;
}

std::string cmd_report(const ReportOpts& opts) {
    if (opts.inputs.empty()) throw std::runtime_error("cmd_report: at least one input run dir required");
    nlohmann::json cfg = common_json(opts);
    cfg["command"] = "report";
    cfg["inputs"] = opts.inputs;
    std::string dir = make_run_dir(opts, "report", cfg);

    nlohmann::json merged;
    std::set<std::string> dataset_hashes;
    for (const std::string& in : opts.inputs) {
        for (const char* name : {"eval.json", "history.json", "suite.json", "report.json",
                                 "adaptation.json", "provenance.json"}) {
            fs::path p = fs::path(in) / name;
            if (!fs::exists(p)) continue;
            nlohmann::json j = nlohmann::json::parse(read_text_file(p.string()));
            merged[fs::path(in).filename().string() + "/" + name] = j;
            if (j.contains("dataset_hash")) dataset_hashes.insert(j["dataset_hash"].get<std::string>());
        }
        for (const char* name : {"table1_mae.csv", "table3.csv", "table4.csv"}) {
            fs::path p = fs::path(in) / name;
            if (fs::exists(p)) fs::copy_file(p, fs::path(dir) / name, fs::copy_options::overwrite_existing);
        }
        fs::path hist = fs::path(in) / "history.json";
        if (fs::exists(hist)) {
            nlohmann::json h = nlohmann::json::parse(read_text_file(hist.string()));
            std::ostringstream curve;
            curve << "epoch,lr,train_mae,val_mae\n";
            for (const auto& e : h["epochs"])
                curve << e["epoch"].get<int>() << "," << fmt_double(e["lr"].get<double>()) << ","
                      << fmt_double(e["train_mae"].get<double>()) << ","
                      << fmt_double(e["val_mae"].get<double>()) << "\n";
            write_text_file(dir + "/training_curve.csv", curve.str());
        }
    }
    if (dataset_hashes.size() > 1) {
        std::string list;
        for (const std::string& h : dataset_hashes) list += h + " ";
        throw std::runtime_error("cmd_report: mixed dataset hashes across inputs: " + list);
    }
    write_json(dir + "/summary.json", merged);
    return dir;
}

}  // namespace cli
}  // namespace pegfit
