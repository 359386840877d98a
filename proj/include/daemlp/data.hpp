#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace daemlp::data {

inline constexpr std::size_t kFeatureCount = 21;

using Features = std::array<double, kFeatureCount>;

enum class AttackClass { BP, DoS, DoS_gas, OaU, FoT };

inline constexpr std::array<AttackClass, 5> kAttackClasses{
    AttackClass::BP, AttackClass::DoS, AttackClass::DoS_gas, AttackClass::OaU, AttackClass::FoT};

std::string_view to_string(AttackClass c) noexcept;
std::optional<AttackClass> parse_attack_class(std::string_view name) noexcept;
std::size_t index_of(AttackClass c) noexcept;

inline constexpr int kNormal = 0;
inline constexpr int kAnomaly = 1;

// Column names f01..f21.
std::string feature_name(std::size_t index);

struct FeatureRecord {
    Features features{};
    std::optional<int> label;
    std::optional<AttackClass> attack_class;

    bool is_normal() const noexcept { return label && *label == kNormal; }
    bool is_anomaly() const noexcept { return label && *label == kAnomaly; }

    // Finite features, label in {0,1}, attack class only on anomaly rows.
    void validate() const;

    friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

struct FeatureRange {
    double min = 0.0;
    double max = 1.0;

    friend bool operator==(const FeatureRange&, const FeatureRange&) = default;
};

/// Per-feature min-max scaler mapping the fitted range onto [0, 1].
/// Values outside the fitted range are clamped; constant features map to 0.5.
struct Scaler {
    std::array<FeatureRange, kFeatureCount> ranges{};

    Features scale(const Features& raw) const noexcept;
    Features descale(const Features& scaled) const noexcept;
    void validate() const;

    friend bool operator==(const Scaler&, const Scaler&) = default;
};

struct Dataset {
    std::vector<FeatureRecord> records;
    std::optional<Scaler> scaler;  // set once records hold scaled features

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }
    std::size_t count_label(int label) const noexcept;
    std::size_t count_class(AttackClass c) const noexcept;
    bool has_both_classes() const noexcept { return count_label(kNormal) > 0 && count_label(kAnomaly) > 0; }
};

Dataset read_records(std::istream& in, std::string_view source = "<stream>");
Dataset load_records(const std::filesystem::path& path);

/// Writes the dataset file format: header f01..f21,label,attack_class,
/// LF line endings, shortest round-trip decimal numbers.
void write_records(const Dataset& ds, std::ostream& out);
void save_records(const Dataset& ds, const std::filesystem::path& path);

/// Parses the 21 leading feature fields of a comma-separated line; any
/// trailing label/attack_class columns are ignored. Returns an error
/// message instead of throwing, for per-line use in streaming detection.
std::optional<std::string> parse_feature_line(std::string_view line, Features& out);

Scaler fit_scaler(const Dataset& train);
Dataset apply_scaler(const Dataset& ds, const Scaler& scaler);

struct Split {
    Dataset train;
    Dataset test;
};

/// Seeded stratified split over (label, attack_class) groups; each group
/// contributes within one record of `ratio` of its size to the train side
/// and the train side totals round(ratio * n). Both sides keep file order.
Split split(const Dataset& ds, double ratio, std::uint64_t seed);

struct HoldOut {
    Dataset reduced;
    Dataset held;
};

HoldOut hold_out_class(const Dataset& ds, AttackClass c);

/// Records of the given attack classes plus an equal number of normal
/// records (the first ones in dataset order). Used for class-focused
/// evaluation where a majority normal class would otherwise dominate.
Dataset balanced_subset(const Dataset& ds, std::span<const AttackClass> classes);

Dataset concat(const Dataset& a, const Dataset& b);

// ---- synthetic traffic ----

enum class OverlapProfile { separable, network_like, consensus_like };

std::string_view to_string(OverlapProfile p) noexcept;
std::optional<OverlapProfile> parse_overlap_profile(std::string_view name) noexcept;

struct MixtureComponent {
    double weight = 1.0;
    Features mean{};
    Features stddev{};
};

// Diagonal Gaussian mixture over the 21 features, in raw feature units.
struct ClassDistribution {
    std::vector<MixtureComponent> components;
};

struct SyntheticClass {
    std::optional<AttackClass> attack;  // empty for the normal class
    std::size_t count = 0;
    OverlapProfile profile = OverlapProfile::network_like;
    ClassDistribution distribution;
};

struct SyntheticSpec {
    std::uint64_t seed = 7;
    std::vector<SyntheticClass> classes;

    void validate() const;
};

// Class sizes of the reference testbed capture (normal first, then BP,
// DoS, DoS_gas, OaU, FoT).
inline constexpr std::array<std::size_t, 6> kReferenceClassCounts{600000, 25293, 100000,
                                                                   91128,  50998, 100000};

// Network-layer attacks shift many features; consensus-layer attacks stay
// inside the normal marginals.
OverlapProfile default_profile(AttackClass c) noexcept;

ClassDistribution normal_distribution();
ClassDistribution attack_distribution(AttackClass c, OverlapProfile profile);

/// Reference class proportions multiplied by `scale` (rounded to nearest),
/// default profiles per class.
SyntheticSpec default_spec(double scale = 0.01, std::uint64_t seed = 7);

SyntheticSpec parse_synthetic_spec(std::string_view json_text);
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

Dataset generate(const SyntheticSpec& spec);

}  // namespace daemlp::data
