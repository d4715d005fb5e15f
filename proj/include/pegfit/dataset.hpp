#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pegfit/contact.hpp"
#include "pegfit/geometry.hpp"

#include <json.hpp>

namespace pegfit {

constexpr double kMaxLateralOffsetMm = 10.0;
constexpr double kMaxAngularOffsetDeg = 5.0;

struct MisalignmentOffset {
    double dx = 0.0, dy = 0.0;          // mm
    double dox = 0.0, doy = 0.0, doz = 0.0;  // deg
};

// Uniform over the offset box: |dx|,|dy| <= 10 mm, each angle <= 5 deg.
MisalignmentOffset sample_offset(RngStream& rng);

// 5-DoF pose of the peg relative to the hole at the initial settled contact.
struct ExtrinsicPose {
    double px = 0.0, py = 0.0;
    double ox = 0.0, oy = 0.0, oz = 0.0;
};

ExtrinsicPose extrinsic_from_pose(const RigidPose& p);

enum RecordFlags : std::uint8_t {
    kFlagFreeInsert = 1,
    kFlagUnstable = 2,
    kFlagLostContact = 4,
};

enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };

struct MisalignmentRecord {
    std::uint32_t shape_id = 0;
    std::uint8_t domain = 0;  // Domain enum value
    std::uint8_t flags = 0;   // bits 0-2 flags, bits 3-4 split
    MisalignmentOffset offset;
    ExtrinsicPose pose;       // settled pose of probe column 0
    std::array<double, 25> signature{};

    Split split() const { return static_cast<Split>((flags >> 3) & 0x3); }
    void set_split(Split s) { flags = static_cast<std::uint8_t>((flags & 0x7) | (static_cast<std::uint8_t>(s) << 3)); }
    bool free_insert() const { return flags & kFlagFreeInsert; }
    bool unstable() const { return flags & kFlagUnstable; }
    bool lost_contact() const { return flags & kFlagLostContact; }
    // Usable for training/evaluation. Lost-contact probe columns stay in (the
    // near-zero wrench is informative data); only free inserts and unstable
    // settles are excluded.
    bool usable() const { return (flags & (kFlagFreeInsert | kFlagUnstable)) == 0; }
};

struct Dataset {
    std::uint32_t m = 4;
    std::uint32_t k = 5;
    std::array<double, 25> sig_mean{};
    std::array<double, 25> sig_std{};
    std::vector<MisalignmentRecord> records;

    void compute_stats();  // over usable train-split records
    void save(const std::string& path) const;
    static Dataset load(const std::string& path);
};

// Shape manifest: generated shape sets by vertex class with seen/unseen role.
struct ShapeEntry {
    std::uint32_t id = 0;
    PolygonShape shape;
    bool seen = true;
    int record_count = 0;
};

struct ShapeSet {
    double clearance = 1.0;
    std::vector<ShapeEntry> shapes;

    nlohmann::json to_json() const;
    static ShapeSet from_json(const nlohmann::json& j);
};

struct ShapeSetConfig {
    std::vector<int> seen_classes{4, 5, 6};
    std::vector<int> unseen_classes{7, 8, 9, 10};
    int shapes_per_seen_class = 3;
    int shapes_per_unseen_class = 2;
    int records_per_seen_shape = 800;
    int records_per_unseen_shape = 100;
    double clearance = 1.0;
};

ShapeSetConfig desk_shape_config();
ShapeSetConfig paper_shape_config();

ShapeSet generate_shape_set(const ShapeSetConfig& cfg, std::uint64_t seed);

// Commands the peg above the hole at the offset, descends in 0.5 mm steps
// until the averaged |Fz| crosses the contact threshold, then runs the probe
// protocol. No contact by 3 mm below the plate tags the record FREE_INSERT.
MisalignmentRecord generate_record(const ContactScene& scene, std::uint32_t shape_id,
                                   const MisalignmentOffset& offset,
                                   const ComplianceConfig& compliance, const DomainConfig& domain,
                                   RngStream& rng);

struct DatasetGenConfig {
    int train_per_shape = 600;
    int val_per_shape = 100;
    ComplianceConfig compliance;
    ContactParams contact = desk_contact_params();
    int workers = 1;
};

struct GenReport {
    std::int64_t records = 0;
    std::int64_t free_insert = 0;
    std::int64_t unstable = 0;
    std::int64_t lost_contact = 0;
    nlohmann::json to_json() const;
};

// Per-record RNG streams are derived from (seed, shape id, record index), so
// the result is byte-identical for any worker count.
Dataset generate_dataset(const ShapeSet& shapes, const DatasetGenConfig& cfg,
                         const DomainConfig& domain, std::uint64_t seed, GenReport* report = nullptr);

struct PairedRecord {
    std::uint32_t shape_id = 0;
    std::uint8_t role = 0;  // 0 = train, 1 = eval
    MisalignmentOffset offset;  // commanded, shared bitwise by both halves
    MisalignmentRecord sim;
    MisalignmentRecord real;
};

struct PairedDataset {
    std::uint32_t m = 4;
    std::uint32_t k = 5;
    std::vector<PairedRecord> pairs;

    void save(const std::string& path) const;
    static PairedDataset load(const std::string& path);
};

struct PairedGenConfig {
    int train_poses_per_shape = 40;  // seen shapes only
    int eval_poses_per_shape = 20;   // seen + unseen shapes
    ComplianceConfig compliance;
    ContactParams contact = desk_contact_params();
    int workers = 1;
};

// FREE_INSERT offsets are resampled so every pair carries contact in both
// domains.
PairedDataset generate_paired_dataset(const ShapeSet& shapes, const PairedGenConfig& cfg,
                                      const DomainConfig& sim_domain, const DomainConfig& real_domain,
                                      std::uint64_t seed);

}  // namespace pegfit
