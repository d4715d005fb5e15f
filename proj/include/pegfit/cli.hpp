#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace pegfit {
namespace cli {

struct CommonOpts {
    std::string out;
    std::uint64_t seed = 1;
    int workers = 0;  // 0 = default_workers()
    std::string scale = "desk";
    bool force = false;
};

int resolve_workers(const CommonOpts& opts);

// Creates the run directory, refuses to reuse a completed one without
// --force, and writes the resolved-config snapshot next to the outputs.
std::string make_run_dir(const CommonOpts& opts, const std::string& default_name,
                         const nlohmann::json& resolved_config);

struct ShapesOpts : CommonOpts {};
struct DatasetOpts : CommonOpts {
    std::string shapes_path;
    bool paired = true;
    bool csv_export = false;
};
struct TrainOpts : CommonOpts {
    std::string dataset_path;
    int epochs = 300;
    int batch = 256;
    int width = 128;
};
struct AdaptOpts : CommonOpts {
    std::string checkpoint_path;
    std::string paired_path;
    std::string shapes_path;
    int dla_epochs = 300;
    int fla_epochs = 200;
    int fine_tune_epochs = 100;
};
struct EvalPoseOpts : CommonOpts {
    std::string checkpoint_path;
    std::string dataset_path;
    std::string shapes_path;
};
struct AssembleOpts : CommonOpts {
    std::string checkpoint_path;
    std::string shapes_path;
    std::string bundle_dir;  // optional adaptation bundle
    std::string domain = "sim";
    int scenarios_per_shape = 20;
    bool spiral = true;
};
struct ReportOpts : CommonOpts {
    std::vector<std::string> inputs;  // run directories to merge
};

std::string cmd_shapes(const ShapesOpts& opts);      // returns run dir
std::string cmd_dataset(const DatasetOpts& opts);
std::string cmd_train(const TrainOpts& opts);
std::string cmd_adapt(const AdaptOpts& opts);
std::string cmd_eval_pose(const EvalPoseOpts& opts);
std::string cmd_assemble(const AssembleOpts& opts);
std::string cmd_report(const ReportOpts& opts);

}  // namespace cli
}  // namespace pegfit
