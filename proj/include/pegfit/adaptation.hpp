#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pegfit/estimator.hpp"

namespace pegfit {

// Data-level adaptation network: converts a real-domain signature into its
// sim-domain counterpart. Same encoder/fusion topology as the estimator with
// generation heads back to the force/torque blocks.
struct DlaNet {
    int k = 5;
    int width = 128;
    nn::DenseStack force_enc;    // 2k -> w -> w -> w
    nn::DenseStack torque_enc;   // 3k -> w -> w -> w
    nn::DenseStack fusion;       // 2w -> w -> w -> w
    nn::DenseStack force_head;   // w -> w -> w -> 2k
    nn::DenseStack torque_head;  // w -> w -> w -> 3k
    std::array<double, 25> in_mean{}, in_std{};    // real-domain stats
    std::array<double, 25> out_mean{}, out_std{};  // sim-domain stats
    std::uint64_t paired_hash = 0;

    std::size_t param_count() const;
    std::vector<double> get_params() const;
    void set_params(std::span<const double> flat);
};

DlaNet build_dla(int k, int width, std::uint64_t seed);

// Pure forward pass; output de-standardized to physical units.
std::array<double, 25> convert(const DlaNet& dla, const std::array<double, 25>& real_signature);

struct AdaptConfig {
    int dla_epochs = 300;
    int fla_epochs = 200;
    int fine_tune_epochs = 100;
    double fine_tune_lr = 1e-4;
    int batch = 32;
    // Paired sets are tiny (tens of pairs); Gaussian jitter on standardized
    // inputs plus best-validation retention keep the nets from memorizing.
    double input_jitter = 0.1;
    double val_fraction = 0.2;
    std::uint64_t seed = 7;
    int workers = 1;
};

constexpr int kMinAdaptPairs = 20;

// Trains conversion on train-role pairs with MAE against the paired sim
// signature; throws if fewer than kMinAdaptPairs pairs.
DlaNet train_dla(const PairedDataset& paired, const AdaptConfig& cfg, std::uint64_t paired_hash);

// Knowledge distillation: real-domain copy of sim_net whose encoder/fusion
// features are trained (MAE, equal weights) toward the frozen sim_net
// features on the paired sim signatures. Heads stay untouched.
EstimatorNet distill_fla(const EstimatorNet& sim_net, const PairedDataset& paired,
                         const AdaptConfig& cfg, std::uint64_t paired_hash);

// Supervised fine-tuning on (real signature -> pose), all parameters, constant
// lr. `inputs_converted` routes signatures through a DLA front-end first.
EstimatorNet fine_tune(const EstimatorNet& net, const PairedDataset& paired, const AdaptConfig& cfg,
                       const DlaNet* front_end = nullptr);

struct AdaptedEstimator {
    std::optional<DlaNet> dla;
    EstimatorNet net;
    std::vector<std::string> methods;  // applied stages, in order
    std::uint64_t paired_hash = 0;
};

ExtrinsicPose estimate_adapted(const AdaptedEstimator& adapted, const std::array<double, 25>& signature);

// Full pipeline: DLA conversion front-end, FLA-distilled backbone, fine-tuned
// on DLA-converted real signatures.
AdaptedEstimator adapt_full(const EstimatorNet& sim_net, const PairedDataset& paired,
                            const AdaptConfig& cfg, std::uint64_t paired_hash);

struct AdaptationRow {
    std::string method;
    double seen_pos = 0.0, seen_ori = 0.0;
    double unseen_pos = 0.0, unseen_ori = 0.0;
};

struct AdaptationReport {
    std::vector<AdaptationRow> rows;  // w/o Adaptation, DLA, FLA, Fine-tuning, Ours

    nlohmann::json to_json() const;
    std::string to_csv() const;
    const AdaptationRow& row(const std::string& method) const;
};

// Pose-estimation error of each adaptation method on the eval-role pairs'
// real signatures. Throws a provenance error if expected_hash does not match
// the hash the adapted artifacts were trained against.
AdaptationReport evaluate_adaptation(const EstimatorNet& sim_net, const DlaNet& dla,
                                     const EstimatorNet& fla_net, const EstimatorNet& ft_net,
                                     const AdaptedEstimator& ours, const PairedDataset& paired,
                                     const ShapeSet& shapes, std::uint64_t expected_hash);

void save_dla(const DlaNet& dla, const std::string& path);
DlaNet load_dla(const std::string& path);

}  // namespace pegfit
