#pragma once

#include <ecosim/types.hpp>

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace ecosim {

/// Every knob of one simulation run. Defaults reproduce the published setup;
/// the trailing block holds parameters the published setup leaves open.
struct SimConfig
{
    std::int32_t days_per_cycle = 30;
    std::int32_t cycles = 60;
    std::int32_t list_size = 5;
    FeeSchedule fee_schedule{};
    double switching_threshold = 0.04;
    double recency_bias = 1.0;
    double exploration_probability = 0.2;
    std::string niche_genre = "Western";
    double niche_boost_factor = 4.0;
    double mainstream_shrink_factor = 0.25;
    std::int32_t consumer_sample_size = 600;
    double niche_fraction = 0.1;
    std::int32_t provider_count = 10;
    std::int32_t items_per_mainstream_provider = 100;
    SelectionModel selection_model = SelectionModel::none;
    std::uint64_t seed = 1;

    bool niche_recommender_enabled = false;
    double smoothing_alpha = 1.0;
    std::int32_t preferred_rating_threshold = 4;
    bool mainstream_providers_exclude_niche = true;

    bool operator==(const SimConfig&) const = default;
};

/// Every violated invariant, in field order. Empty means valid.
std::vector<std::string> validate_config(const SimConfig& config);

void to_json(nlohmann::json& j, const SimConfig& c);
void from_json(const nlohmann::json& j, SimConfig& c);

// Applies the keys present in `overrides` on top of `base`. Unknown keys throw.
SimConfig apply_overrides(const SimConfig& base, const nlohmann::json& overrides);

std::string config_to_json_string(const SimConfig& c);
SimConfig config_from_json_string(const std::string& text);

} // namespace ecosim
