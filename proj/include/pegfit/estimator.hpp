#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pegfit/dataset.hpp"
#include "pegfit/nn.hpp"

#include <json.hpp>

namespace pegfit {

// Extrinsic pose estimation network: force/torque encoders, fusion module,
// position and orientation heads. Input is the flattened 5 x k signature
// split into its force (2k) and torque (3k) blocks, standardized with the
// training-split channel statistics stored on the net.
struct EstimatorNet {
    int k = 5;
    int width = 128;
    nn::DenseStack force_enc;   // 2k -> w -> w -> w
    nn::DenseStack torque_enc;  // 3k -> w -> w -> w
    nn::DenseStack fusion;      // 2w -> w -> w -> w
    nn::DenseStack pos_head;    // w -> w -> w -> 2
    nn::DenseStack ori_head;    // w -> w -> w -> 3
    std::array<double, 25> in_mean{};
    std::array<double, 25> in_std{};
    std::uint64_t dataset_hash = 0;

    std::size_t param_count() const;
    std::vector<double> get_params() const;
    void set_params(std::span<const double> flat);
    std::array<double, 25> standardize(const std::array<double, 25>& sig) const;
};

// Deterministic per seed; stats initialized to identity (mean 0, std 1).
EstimatorNet build_estimator(int k, int width, std::uint64_t seed);

ExtrinsicPose estimate(const EstimatorNet& net, const std::array<double, 25>& signature);

struct EstimatorFeatures {
    std::vector<double> force;
    std::vector<double> torque;
    std::vector<double> fusion;
};

EstimatorFeatures extract_features(const EstimatorNet& net, const std::array<double, 25>& signature);

// Full forward with caches, used by the trainer and the distillation stage.
struct EstimatorForward {
    nn::StackCache force_cache, torque_cache, fusion_cache, pos_cache, ori_cache;
    std::vector<double> force_feat, torque_feat, fusion_feat;
    std::array<double, 5> pred{};
};

EstimatorForward forward_estimator(const EstimatorNet& net, const std::array<double, 25>& std_input);

// Accumulates gradients into a flat buffer laid out like get_params().
// Any of the gradient hooks may be empty; feature gradients (used by
// distillation) are injected at the corresponding feature nodes.
void backward_estimator(const EstimatorNet& net, const EstimatorForward& fwd,
                        std::span<const double> pred_grad,          // 5 or empty
                        std::span<const double> force_feat_grad,    // w or empty
                        std::span<const double> torque_feat_grad,   // w or empty
                        std::span<const double> fusion_feat_grad,   // w or empty
                        std::span<double> grad);

struct TrainConfig {
    int epochs = 300;
    int batch = 256;
    nn::CosineSchedule schedule;
    bool constant_lr = false;
    double lr_constant = 1e-4;
    std::uint64_t seed = 1;
    int workers = 1;
};

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double train_mae = 0.0;
    double val_mae = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val_mae = 0.0;

    nlohmann::json to_json() const;
};

// Supervised MAE training on usable train-split records; per-epoch shuffled
// batches from a seeded stream; retains the best-validation parameters.
// Batch gradients accumulate through fixed-size blocks so results are
// worker-count independent.
TrainHistory train_estimator(EstimatorNet& net, const Dataset& data, const TrainConfig& cfg);

struct EvalRow {
    int vertex_class = 0;
    bool seen = true;
    double pos_mae = 0.0;
    double ori_mae = 0.0;
    std::int64_t count = 0;
};

struct RecordError {
    std::uint32_t shape_id = 0;
    std::array<double, 5> abs_err{};  // |px|, |py|, |ox|, |oy|, |oz|
};

struct EvalReport {
    std::vector<EvalRow> rows;
    double seen_pos_mae = 0.0, seen_ori_mae = 0.0;
    double unseen_pos_mae = 0.0, unseen_ori_mae = 0.0;
    std::int64_t seen_count = 0, unseen_count = 0;
    std::vector<RecordError> record_errors;

    nlohmann::json to_json() const;
    std::string to_csv() const;  // Table-1-shaped MAE block
};

EvalReport evaluate(const EstimatorNet& net, const Dataset& data, const ShapeSet& shapes,
                    Split split, int workers = 1);

void save_estimator(const EstimatorNet& net, const std::string& path);
EstimatorNet load_estimator(const std::string& path);

}  // namespace pegfit
