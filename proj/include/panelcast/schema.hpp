#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace panelcast {

enum class Category { diabetes, age, race, gender, house, economy, chronic };
enum class Unit { percent, currency };

std::string_view to_string(Category c) noexcept;
std::string_view to_string(Unit u) noexcept;
Category parse_category(std::string_view s);
Unit parse_unit(std::string_view s);

inline constexpr std::string_view kTargetFeature = "diabetes_pct";
inline constexpr std::size_t kCanonicalFeatureCount = 90;
inline constexpr std::size_t kPredictorCount = 89;
inline constexpr std::size_t kCanonicalStateCount = 51;

/// Feature counts per category in the integrated table, in enum order.
inline constexpr std::array<std::size_t, 7> kCategoryFeatureCounts{1, 4, 5, 3, 3, 3, 71};

struct FeatureSpec {
    std::string name;
    Category category;
    Unit unit;

    friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Ordered, versioned list of feature names with category and unit tags.
class Schema {
public:
    static constexpr int kVersion = 1;

    Schema() = default;
    explicit Schema(std::vector<FeatureSpec> features, int version = kVersion);

    /// The 90-feature integrated schema; the target comes first.
    static const Schema& canonical();

    [[nodiscard]] const std::vector<FeatureSpec>& features() const noexcept { return features_; }
    [[nodiscard]] std::size_t size() const noexcept { return features_.size(); }
    [[nodiscard]] int version() const noexcept { return version_; }
    [[nodiscard]] std::optional<std::size_t> index_of(std::string_view name) const;
    [[nodiscard]] const FeatureSpec* find(std::string_view name) const;
    [[nodiscard]] std::array<std::size_t, 7> category_counts() const;

    void write(std::ostream& os) const;
    static Schema read(std::istream& is);
    void save(const std::string& path) const;
    static Schema load(const std::string& path);

    friend bool operator==(const Schema&, const Schema&) = default;

private:
    std::vector<FeatureSpec> features_;
    int version_ = kVersion;
};

/// Fifty states plus DC, as postal codes.
const std::vector<std::string>& us_state_codes();

}  // namespace panelcast
