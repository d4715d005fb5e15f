#include "pegfit/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "pegfit/io.hpp"
#include "pegfit/parallel.hpp"

namespace pegfit {

std::size_t EstimatorNet::param_count() const {
    return force_enc.param_count() + torque_enc.param_count() + fusion.param_count() +
           pos_head.param_count() + ori_head.param_count();
}

std::vector<double> EstimatorNet::get_params() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    nn::stack_params_into(force_enc, flat);
    nn::stack_params_into(torque_enc, flat);
    nn::stack_params_into(fusion, flat);
    nn::stack_params_into(pos_head, flat);
    nn::stack_params_into(ori_head, flat);
    return flat;
}

void EstimatorNet::set_params(std::span<const double> flat) {
    std::size_t pos = 0;
    pos += nn::stack_params_from(force_enc, flat.subspan(pos));
    pos += nn::stack_params_from(torque_enc, flat.subspan(pos));
    pos += nn::stack_params_from(fusion, flat.subspan(pos));
    pos += nn::stack_params_from(pos_head, flat.subspan(pos));
    pos += nn::stack_params_from(ori_head, flat.subspan(pos));
    if (pos != flat.size()) throw std::invalid_argument("EstimatorNet::set_params: size mismatch");
}

std::array<double, 25> EstimatorNet::standardize(const std::array<double, 25>& sig) const {
    std::array<double, 25> out;
    for (int i = 0; i < 25; ++i)
        out[static_cast<std::size_t>(i)] =
            (sig[static_cast<std::size_t>(i)] - in_mean[static_cast<std::size_t>(i)]) / in_std[static_cast<std::size_t>(i)];
    return out;
}

EstimatorNet build_estimator(int k, int width, std::uint64_t seed) {
    EstimatorNet net;
    net.k = k;
    net.width = width;
    net.in_std.fill(1.0);
    RngStream rng = RngStream::derive(seed, {0xe57ULL});
    net.force_enc = nn::DenseStack::make({2 * k, width, width, width}, true, rng);
    net.torque_enc = nn::DenseStack::make({3 * k, width, width, width}, true, rng);
    net.fusion = nn::DenseStack::make({2 * width, width, width, width}, true, rng);
    net.pos_head = nn::DenseStack::make({width, width, width, 2}, false, rng);
    net.ori_head = nn::DenseStack::make({width, width, width, 3}, false, rng);
    return net;
}

EstimatorForward forward_estimator(const EstimatorNet& net, const std::array<double, 25>& x) {
    EstimatorForward f;
    int fk = 2 * net.k;
    f.force_feat = nn::forward(net.force_enc, std::span<const double>(x.data(), static_cast<std::size_t>(fk)), &f.force_cache);
    f.torque_feat = nn::forward(net.torque_enc, std::span<const double>(x.data() + fk, static_cast<std::size_t>(3 * net.k)), &f.torque_cache);
    std::vector<double> concat;
    concat.reserve(f.force_feat.size() + f.torque_feat.size());
    concat.insert(concat.end(), f.force_feat.begin(), f.force_feat.end());
    concat.insert(concat.end(), f.torque_feat.begin(), f.torque_feat.end());
    f.fusion_feat = nn::forward(net.fusion, concat, &f.fusion_cache);
    std::vector<double> pos = nn::forward(net.pos_head, f.fusion_feat, &f.pos_cache);
    std::vector<double> ori = nn::forward(net.ori_head, f.fusion_feat, &f.ori_cache);
    f.pred = {pos[0], pos[1], ori[0], ori[1], ori[2]};
    return f;
}

void backward_estimator(const EstimatorNet& net, const EstimatorForward& fwd,
                        std::span<const double> pred_grad,
                        std::span<const double> force_feat_grad,
                        std::span<const double> torque_feat_grad,
                        std::span<const double> fusion_feat_grad,
                        std::span<double> grad) {
    std::size_t off_force = 0;
    std::size_t off_torque = off_force + net.force_enc.param_count();
    std::size_t off_fusion = off_torque + net.torque_enc.param_count();
    std::size_t off_pos = off_fusion + net.fusion.param_count();
    std::size_t off_ori = off_pos + net.pos_head.param_count();

    std::vector<double> fusion_grad(static_cast<std::size_t>(net.width), 0.0);
    if (!pred_grad.empty()) {
        std::array<double, 2> pg = {pred_grad[0], pred_grad[1]};
        std::array<double, 3> og = {pred_grad[2], pred_grad[3], pred_grad[4]};
        std::vector<double> g1 = nn::backward(net.pos_head, fwd.pos_cache, pg,
                                              grad.subspan(off_pos, net.pos_head.param_count()));
        std::vector<double> g2 = nn::backward(net.ori_head, fwd.ori_cache, og,
                                              grad.subspan(off_ori, net.ori_head.param_count()));
        for (std::size_t i = 0; i < fusion_grad.size(); ++i) fusion_grad[i] = g1[i] + g2[i];
    }
    if (!fusion_feat_grad.empty())
        for (std::size_t i = 0; i < fusion_grad.size(); ++i) fusion_grad[i] += fusion_feat_grad[i];

    std::vector<double> concat_grad = nn::backward(net.fusion, fwd.fusion_cache, fusion_grad,
                                                   grad.subspan(off_fusion, net.fusion.param_count()));
    std::vector<double> fg(concat_grad.begin(), concat_grad.begin() + net.width);
    std::vector<double> tg(concat_grad.begin() + net.width, concat_grad.end());
    if (!force_feat_grad.empty())
        for (std::size_t i = 0; i < fg.size(); ++i) fg[i] += force_feat_grad[i];
    if (!torque_feat_grad.empty())
        for (std::size_t i = 0; i < tg.size(); ++i) tg[i] += torque_feat_grad[i];
    nn::backward(net.force_enc, fwd.force_cache, fg, grad.subspan(off_force, net.force_enc.param_count()));
    nn::backward(net.torque_enc, fwd.torque_cache, tg, grad.subspan(off_torque, net.torque_enc.param_count()));
}

ExtrinsicPose estimate(const EstimatorNet& net, const std::array<double, 25>& signature) {
    EstimatorForward f = forward_estimator(net, net.standardize(signature));
    return ExtrinsicPose{f.pred[0], f.pred[1], f.pred[2], f.pred[3], f.pred[4]};
}

EstimatorFeatures extract_features(const EstimatorNet& net, const std::array<double, 25>& signature) {
    EstimatorForward f = forward_estimator(net, net.standardize(signature));
    return EstimatorFeatures{f.force_feat, f.torque_feat, f.fusion_feat};
}

nlohmann::json TrainHistory::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const EpochStats& e : epochs)
        arr.push_back({{"epoch", e.epoch}, {"lr", e.lr}, {"train_mae", e.train_mae}, {"val_mae", e.val_mae}});
    return nlohmann::json{{"epochs", arr}, {"best_epoch", best_epoch}, {"best_val_mae", best_val_mae}};
}

namespace {

std::array<double, 5> record_target(const MisalignmentRecord& r) {
    return {r.pose.px, r.pose.py, r.pose.ox, r.pose.oy, r.pose.oz};
}

double eval_mae(const EstimatorNet& net, const std::vector<std::array<double, 25>>& inputs,
                const std::vector<std::array<double, 5>>& targets, const std::vector<std::size_t>& idx,
                int workers) {
    if (idx.empty()) return 0.0;
    std::vector<double> losses(idx.size());
    parallel_for(static_cast<std::int64_t>(idx.size()), workers, [&](std::int64_t i) {
        EstimatorForward f = forward_estimator(net, inputs[idx[static_cast<std::size_t>(i)]]);
        nn::MaeResult mae = nn::mae_loss(f.pred, targets[idx[static_cast<std::size_t>(i)]]);
        losses[static_cast<std::size_t>(i)] = mae.loss;
    });
    double sum = 0.0;
    for (double l : losses) sum += l;
    return sum / static_cast<double>(idx.size());
}

}  // namespace

TrainHistory train_estimator(EstimatorNet& net, const Dataset& data, const TrainConfig& cfg) {
    // Standardize once; stats come from the dataset's train split.
    net.in_mean = data.sig_mean;
    net.in_std = data.sig_std;

    std::vector<std::array<double, 25>> inputs;
    std::vector<std::array<double, 5>> targets;
    std::vector<std::size_t> train_idx, val_idx;
    for (const MisalignmentRecord& r : data.records) {
        if (!r.usable()) continue;
        if (r.split() == Split::Train) train_idx.push_back(inputs.size());
        else if (r.split() == Split::Val) val_idx.push_back(inputs.size());
        else continue;
        inputs.push_back(net.standardize(r.signature));
        targets.push_back(record_target(r));
    }
    if (train_idx.empty()) throw std::runtime_error("train_estimator: empty train split");

    std::vector<double> params = net.get_params();
    nn::AdamState adam(params.size());
    std::vector<double> grad(params.size() + 1);  // slot [n] accumulates batch loss
    RngStream shuffle_rng = RngStream::derive(cfg.seed, {0x7a17ULL});

    TrainHistory hist;
    std::vector<double> best_params = params;
    hist.best_val_mae = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order = train_idx;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = cfg.constant_lr ? cfg.lr_constant : cfg.schedule.lr(epoch);
        // Fisher-Yates with the seeded stream; batch order is part of the
        // deterministic contract.
        for (std::size_t i = order.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(shuffle_rng.next_u64() % i);
            std::swap(order[i - 1], order[j]);
        }
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
            std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
            std::size_t bsize = end - start;
            std::fill(grad.begin(), grad.end(), 0.0);
            blocked_accumulate(static_cast<std::int64_t>(bsize), cfg.workers, 32, grad,
                               [&](std::vector<double>& buf, std::int64_t bi) {
                                   std::size_t ri = order[start + static_cast<std::size_t>(bi)];
                                   EstimatorForward f = forward_estimator(net, inputs[ri]);
                                   nn::MaeResult mae = nn::mae_loss(f.pred, targets[ri]);
                                   for (double& g : mae.grad) g /= static_cast<double>(bsize);
                                   backward_estimator(net, f, mae.grad, {}, {}, {},
                                                      std::span<double>(buf.data(), buf.size() - 1));
                                   buf[buf.size() - 1] += mae.loss / static_cast<double>(bsize);
                               });
            epoch_loss += grad[grad.size() - 1];
            batches++;
            nn::adam_step(params, std::span<const double>(grad.data(), params.size()), adam, lr);
            net.set_params(params);
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        stats.train_mae = batches > 0 ? epoch_loss / static_cast<double>(batches) : 0.0;
        stats.val_mae = eval_mae(net, inputs, targets, val_idx, cfg.workers);
        hist.epochs.push_back(stats);
        if (!val_idx.empty() && stats.val_mae < hist.best_val_mae) {
            hist.best_val_mae = stats.val_mae;
            hist.best_epoch = epoch;
            best_params = params;
        }
    }
    if (hist.best_epoch >= 0) net.set_params(best_params);
    return hist;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const EvalRow& r : rows)
        rows_json.push_back({{"vertex_class", r.vertex_class},
                             {"seen", r.seen},
                             {"pos_mae_mm", r.pos_mae},
                             {"ori_mae_deg", r.ori_mae},
                             {"count", r.count}});
    nlohmann::json errs = nlohmann::json::array();
    for (const RecordError& e : record_errors)
        errs.push_back({{"shape_id", e.shape_id}, {"abs_err", e.abs_err}});
    return nlohmann::json{{"rows", rows_json},
                          {"seen_pos_mae_mm", seen_pos_mae},
                          {"seen_ori_mae_deg", seen_ori_mae},
                          {"unseen_pos_mae_mm", unseen_pos_mae},
                          {"unseen_ori_mae_deg", unseen_ori_mae},
                          {"seen_count", seen_count},
                          {"unseen_count", unseen_count},
                          {"record_errors", errs}};
}

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out << "group,vertex_class,pos_mae_mm,ori_mae_deg,count\n";
    for (const EvalRow& r : rows)
        out << (r.seen ? "seen" : "unseen") << "," << r.vertex_class << "," << fmt_double(r.pos_mae)
            << "," << fmt_double(r.ori_mae) << "," << r.count << "\n";
    out << "seen,avg," << fmt_double(seen_pos_mae) << "," << fmt_double(seen_ori_mae) << "," << seen_count << "\n";
    out << "unseen,avg," << fmt_double(unseen_pos_mae) << "," << fmt_double(unseen_ori_mae) << "," << unseen_count << "\n";
    return out.str();
}

EvalReport evaluate(const EstimatorNet& net, const Dataset& data, const ShapeSet& shapes,
                    Split split, int workers) {
    std::map<std::uint32_t, std::pair<int, bool>> shape_info;  // id -> (vclass, seen)
    for (const ShapeEntry& e : shapes.shapes) shape_info[e.id] = {e.shape.n(), e.seen};

    std::vector<const MisalignmentRecord*> recs;
    for (const MisalignmentRecord& r : data.records)
        if (r.usable() && r.split() == split) recs.push_back(&r);

    EvalReport report;
    report.record_errors.resize(recs.size());
    parallel_for(static_cast<std::int64_t>(recs.size()), workers, [&](std::int64_t i) {
        const MisalignmentRecord& r = *recs[static_cast<std::size_t>(i)];
        ExtrinsicPose est = estimate(net, r.signature);
        RecordError err;
        err.shape_id = r.shape_id;
        err.abs_err = {std::abs(est.px - r.pose.px), std::abs(est.py - r.pose.py),
                       std::abs(est.ox - r.pose.ox), std::abs(est.oy - r.pose.oy),
                       std::abs(est.oz - r.pose.oz)};
        report.record_errors[static_cast<std::size_t>(i)] = err;
    });

    std::map<int, EvalRow> by_class;
    double seen_pos = 0.0, seen_ori = 0.0, unseen_pos = 0.0, unseen_ori = 0.0;
    for (const RecordError& e : report.record_errors) {
        auto it = shape_info.find(e.shape_id);
        if (it == shape_info.end()) throw std::runtime_error("evaluate: record shape not in manifest");
        auto [vclass, seen] = it->second;
        EvalRow& row = by_class[vclass];
        row.vertex_class = vclass;
        row.seen = seen;
        double pos = 0.5 * (e.abs_err[0] + e.abs_err[1]);
        double ori = (e.abs_err[2] + e.abs_err[3] + e.abs_err[4]) / 3.0;
        row.pos_mae += pos;
        row.ori_mae += ori;
        row.count++;
        if (seen) {
            seen_pos += pos; seen_ori += ori; report.seen_count++;
        } else {
            unseen_pos += pos; unseen_ori += ori; report.unseen_count++;
        }
    }
    for (auto& [vclass, row] : by_class) {
        row.pos_mae /= static_cast<double>(row.count);
        row.ori_mae /= static_cast<double>(row.count);
        report.rows.push_back(row);
    }
    if (report.seen_count > 0) {
        report.seen_pos_mae = seen_pos / static_cast<double>(report.seen_count);
        report.seen_ori_mae = seen_ori / static_cast<double>(report.seen_count);
    }
    if (report.unseen_count > 0) {
        report.unseen_pos_mae = unseen_pos / static_cast<double>(report.unseen_count);
        report.unseen_ori_mae = unseen_ori / static_cast<double>(report.unseen_count);
    }
    return report;
}

namespace {

void save_stack(BinaryWriter& w, const nn::DenseStack& s) {
    w.u32(static_cast<std::uint32_t>(s.layers.size()));
    for (const nn::DenseLayer& l : s.layers) {
        w.u32(static_cast<std::uint32_t>(l.in));
        w.u32(static_cast<std::uint32_t>(l.out));
        w.u8(l.relu ? 1 : 0);
    }
    for (const nn::DenseLayer& l : s.layers) {
        for (double v : l.w) w.f64(v);
        for (double v : l.b) w.f64(v);
    }
}

nn::DenseStack load_stack(BinaryReader& rd) {
    nn::DenseStack s;
    std::uint32_t n = rd.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        nn::DenseLayer l;
        l.in = static_cast<int>(rd.u32());
        l.out = static_cast<int>(rd.u32());
        l.relu = rd.u8() != 0;
        l.w.resize(static_cast<std::size_t>(l.in) * static_cast<std::size_t>(l.out));
        l.b.resize(static_cast<std::size_t>(l.out));
        s.layers.push_back(std::move(l));
    }
    for (nn::DenseLayer& l : s.layers) {
        for (double& v : l.w) v = rd.f64();
        for (double& v : l.b) v = rd.f64();
    }
    return s;
}

}  // namespace

void save_estimator(const EstimatorNet& net, const std::string& path) {
    BinaryWriter w(path);
    w.magic("PFCK");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(net.k));
    w.u32(static_cast<std::uint32_t>(net.width));
    for (double v : net.in_mean) w.f64(v);
    for (double v : net.in_std) w.f64(v);
    w.u64(net.dataset_hash);
    save_stack(w, net.force_enc);
    save_stack(w, net.torque_enc);
    save_stack(w, net.fusion);
    save_stack(w, net.pos_head);
    save_stack(w, net.ori_head);
}

EstimatorNet load_estimator(const std::string& path) {
    BinaryReader rd(path);
    rd.expect_magic("PFCK");
    std::uint32_t version = rd.u32();
    if (version != 1) throw std::runtime_error(path + ": unsupported checkpoint version");
    EstimatorNet net;
    net.k = static_cast<int>(rd.u32());
    net.width = static_cast<int>(rd.u32());
    for (double& v : net.in_mean) v = rd.f64();
    for (double& v : net.in_std) v = rd.f64();
    net.dataset_hash = rd.u64();
    net.force_enc = load_stack(rd);
    net.torque_enc = load_stack(rd);
    net.fusion = load_stack(rd);
    net.pos_head = load_stack(rd);
    net.ori_head = load_stack(rd);
    return net;
}

}  // namespace pegfit
