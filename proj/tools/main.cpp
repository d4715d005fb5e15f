#include <iostream>

#include "pegfit/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

namespace {

void add_common(CLI::App* cmd, pegfit::cli::CommonOpts& opts) {
    cmd->add_option("--seed", opts.seed, "global seed");
    cmd->add_option("--out", opts.out, "run directory (default out/<command>)");
    cmd->add_option("--workers", opts.workers, "worker count (0 = PEGFIT_WORKERS env or hardware)");
    cmd->add_option("--scale", opts.scale, "desk|paper")->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_flag("--force", opts.force, "overwrite an existing run directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"peg-in-hole contact simulation, pose estimation and assembly pipeline"};
    app.set_config("--config", "", "TOML config file");
    app.require_subcommand(1);

    pegfit::cli::ShapesOpts shapes_opts;
    CLI::App* shapes = app.add_subcommand("shapes", "generate the shape manifest");
    add_common(shapes, shapes_opts);

    pegfit::cli::DatasetOpts dataset_opts;
    CLI::App* dataset = app.add_subcommand("dataset", "generate misalignment and paired datasets");
    add_common(dataset, dataset_opts);
    dataset->add_option("--shapes", dataset_opts.shapes_path, "shapes.json path")->required();
    dataset->add_flag("!--no-paired", dataset_opts.paired, "skip the sim/pseudo-real paired set");
    dataset->add_flag("--csv", dataset_opts.csv_export, "also export dataset.csv");

    pegfit::cli::TrainOpts train_opts;
    CLI::App* train = app.add_subcommand("train", "train the pose estimator");
    add_common(train, train_opts);
    train->add_option("--dataset", train_opts.dataset_path, "dataset.pfit path")->required();
    train->add_option("--epochs", train_opts.epochs, "training epochs");
    train->add_option("--batch", train_opts.batch, "batch size");
    train->add_option("--width", train_opts.width, "hidden width");

    pegfit::cli::AdaptOpts adapt_opts;
    CLI::App* adapt = app.add_subcommand("adapt", "sim-to-pseudo-real adaptation + Table-3 report");
    add_common(adapt, adapt_opts);
    adapt->add_option("--checkpoint", adapt_opts.checkpoint_path, "sim estimator checkpoint")->required();
    adapt->add_option("--paired", adapt_opts.paired_path, "paired.pfpr path")->required();
    adapt->add_option("--shapes", adapt_opts.shapes_path, "shapes.json path")->required();
    adapt->add_option("--dla-epochs", adapt_opts.dla_epochs, "DLA training epochs");
    adapt->add_option("--fla-epochs", adapt_opts.fla_epochs, "FLA distillation epochs");
    adapt->add_option("--ft-epochs", adapt_opts.fine_tune_epochs, "fine-tuning epochs");

    pegfit::cli::EvalPoseOpts eval_opts;
    CLI::App* eval = app.add_subcommand("eval-pose", "pose-estimation MAE report + feature export");
    add_common(eval, eval_opts);
    eval->add_option("--checkpoint", eval_opts.checkpoint_path, "estimator checkpoint")->required();
    eval->add_option("--dataset", eval_opts.dataset_path, "dataset.pfit path")->required();
    eval->add_option("--shapes", eval_opts.shapes_path, "shapes.json path")->required();

    pegfit::cli::AssembleOpts assemble_opts;
    CLI::App* assemble = app.add_subcommand("assemble", "closed-loop insertion suite");
    add_common(assemble, assemble_opts);
    assemble->add_option("--checkpoint", assemble_opts.checkpoint_path, "estimator checkpoint")->required();
    assemble->add_option("--shapes", assemble_opts.shapes_path, "shapes.json path")->required();
    assemble->add_option("--bundle", assemble_opts.bundle_dir, "adaptation bundle run dir");
    assemble->add_option("--domain", assemble_opts.domain, "sim|pseudo_real");
    assemble->add_option("--scenarios", assemble_opts.scenarios_per_shape, "scenarios per shape");
    assemble->add_flag("!--no-spiral", assemble_opts.spiral, "skip the spiral-search baseline");

    pegfit::cli::ReportOpts report_opts;
    CLI::App* report = app.add_subcommand("report", "merge run outputs into one summary");
    add_common(report, report_opts);
    report->add_option("--inputs", report_opts.inputs, "run directories to merge")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        std::string dir;
        if (*shapes) dir = pegfit::cli::cmd_shapes(shapes_opts);
        else if (*dataset) dir = pegfit::cli::cmd_dataset(dataset_opts);
        else if (*train) dir = pegfit::cli::cmd_train(train_opts);
        else if (*adapt) dir = pegfit::cli::cmd_adapt(adapt_opts);
        else if (*eval) dir = pegfit::cli::cmd_eval_pose(eval_opts);
        else if (*assemble) dir = pegfit::cli::cmd_assemble(assemble_opts);
        else if (*report) dir = pegfit::cli::cmd_report(report_opts);
        std::cout << dir << "\n";
    } catch (const std::exception& e) {
        nlohmann::json err = {{"error", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
