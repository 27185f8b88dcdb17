#include "panelcast/schema.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "panelcast/error.hpp"
#include "text.hpp"

namespace panelcast {

namespace {

constexpr std::array<std::string_view, 7> kCategoryNames{
    "diabetes", "age", "race", "gender", "house", "economy", "chronic"};

std::vector<FeatureSpec> build_canonical() {
    std::vector<FeatureSpec> f;
    f.reserve(kCanonicalFeatureCount);
    auto add = [&](std::string name, Category c, Unit u = Unit::percent) {
        f.push_back({std::move(name), c, u});
    };
    add(std::string(kTargetFeature), Category::diabetes);
    for (const char* n : {"age_0_19_pct", "age_20_39_pct", "age_40_59_pct", "age_60_plus_pct"})
        add(n, Category::age);
    for (const char* n : {"race_hispanic_pct", "race_nh_white_pct", "race_nh_asian_pi_pct",
                          "race_nh_aian_pct", "race_nh_black_pct"})
        add(n, Category::race);
    for (const char* n : {"gender_male_pct", "gender_female_pct", "population_share_pct"})
        add(n, Category::gender);
    for (const char* n : {"house_total_pct", "house_vacant_pct", "house_occupied_pct"})
        add(n, Category::house);
    add("econ_employed_pct", Category::economy);
    add("econ_per_capita_income", Category::economy, Unit::currency);
    add("econ_poverty_pct", Category::economy);

    const std::vector<std::string> named{
        "asthma", "arthritis", "chronic_kidney_disease", "high_cholesterol",
        "cholesterol_screening", "current_smoking", "foot_exam", "dilated_eye_exam",
        "a1c_test", "obesity", "overweight", "heavy_drinking", "binge_drinking",
        "hypertension", "copd", "cardiovascular_disease", "depression", "no_leisure_activity",
        "fruit_lt_daily", "vegetable_lt_daily", "no_health_insurance", "poor_self_rated_health",
        "influenza_vaccination", "pneumococcal_vaccination", "dental_visit", "mammography",
        "colorectal_screening", "cervical_screening", "short_sleep", "disability"};
    for (const auto& n : named) add("cdi_" + n + "_pct", Category::chronic);
    for (std::size_t k = named.size() + 1; f.size() < kCanonicalFeatureCount; ++k) {
        add("cdi_indicator_" + std::to_string(k) + "_pct", Category::chronic);
    }
    return f;
}

}  // namespace

std::string_view to_string(Category c) noexcept { return kCategoryNames[static_cast<int>(c)]; }

std::string_view to_string(Unit u) noexcept { return u == Unit::percent ? "percent" : "currency"; }

Category parse_category(std::string_view s) {
    for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
        if (kCategoryNames[i] == s) return static_cast<Category>(i);
    }
    throw SchemaError("unknown feature category '" + std::string(s) + "'");
}

Unit parse_unit(std::string_view s) {
    if (s == "percent") return Unit::percent;
    if (s == "currency") return Unit::currency;
    throw SchemaError("unknown unit tag '" + std::string(s) + "'");
}

Schema::Schema(std::vector<FeatureSpec> features, int version)
    : features_(std::move(features)), version_(version) {
    std::unordered_set<std::string> seen;
    for (const auto& f : features_) {
        if (!seen.insert(f.name).second) {
            throw SchemaError("duplicate feature '" + f.name + "' in schema");
        }
    }
}

const Schema& Schema::canonical() {
    static const Schema schema(build_canonical());
    return schema;
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < features_.size(); ++i) {
        if (features_[i].name == name) return i;
    }
    return std::nullopt;
}

const FeatureSpec* Schema::find(std::string_view name) const {
    auto i = index_of(name);
    return i ? &features_[*i] : nullptr;
}

std::array<std::size_t, 7> Schema::category_counts() const {
    std::array<std::size_t, 7> counts{};
    for (const auto& f : features_) ++counts[static_cast<int>(f.category)];
    return counts;
}

void Schema::write(std::ostream& os) const {
    os << "panelcast-schema " << version_ << '\n' << "name,category,unit\n";
    for (const auto& f : features_) {
        os << f.name << ',' << to_string(f.category) << ',' << to_string(f.unit) << '\n';
    }
}

Schema Schema::read(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw SchemaError("schema manifest is empty");
    auto head = detail::split(detail::trim(line), ' ');
    if (head.size() != 2 || head[0] != "panelcast-schema") {
        throw SchemaError("schema manifest must start with 'panelcast-schema <version>'");
    }
    const int version = static_cast<int>(detail::parse_int(head[1], "schema version"));
    if (version != kVersion) {
        throw SchemaError("unsupported schema version " + std::to_string(version));
    }
    if (!std::getline(is, line) || detail::trim(line) != "name,category,unit") {
        throw SchemaError("schema manifest header must be 'name,category,unit'");
    }
    std::vector<FeatureSpec> features;
    while (std::getline(is, line)) {
        auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto cells = detail::split(t, ',');
        if (cells.size() != 3) throw SchemaError("bad schema line: " + std::string(t));
        features.push_back({std::string(cells[0]), parse_category(cells[1]), parse_unit(cells[2])});
    }
    return Schema(std::move(features), version);
}

void Schema::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    write(os);
}

Schema Schema::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open schema manifest '" + path + "'");
    return read(is);
}

const std::vector<std::string>& us_state_codes() {
    static const std::vector<std::string> codes{
        "AK", "AL", "AR", "AZ", "CA", "CO", "CT", "DC", "DE", "FL", "GA", "HI", "IA",
        "ID", "IL", "IN", "KS", "KY", "LA", "MA", "MD", "ME", "MI", "MN", "MO", "MS",
        "MT", "NC", "ND", "NE", "NH", "NJ", "NM", "NV", "NY", "OH", "OK", "OR", "PA",
        "RI", "SC", "SD", "TN", "TX", "UT", "VA", "VT", "WA", "WI", "WV", "WY"};
    return codes;
}

}  // namespace panelcast
