#include <ecosim/config.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace ecosim {

const char* to_string(ConsumerClass c)
{
    return c == ConsumerClass::niche ? "niche" : "mainstream";
}

const char* to_string(SelectionModel m)
{
    switch (m) {
    case SelectionModel::none: return "none";
    case SelectionModel::threshold: return "threshold";
    case SelectionModel::ucb: return "ucb";
    }
    return "none";
}

ConsumerClass consumer_class_from_string(const std::string& s)
{
    if (s == "niche") return ConsumerClass::niche;
    if (s == "mainstream") return ConsumerClass::mainstream;
    throw ValidationError("unknown consumer class '" + s + "'");
}

SelectionModel selection_model_from_string(const std::string& s)
{
    if (s == "none") return SelectionModel::none;
    if (s == "threshold") return SelectionModel::threshold;
    if (s == "ucb") return SelectionModel::ucb;
    throw ValidationError("unknown selection_model '" + s + "'");
}

namespace {

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

} // namespace

std::vector<std::string> validate_config(const SimConfig& c)
{
    std::vector<std::string> v;
    if (c.days_per_cycle < 1) v.emplace_back("days_per_cycle: must be >= 1");
    if (c.cycles < 1) v.emplace_back("cycles: must be >= 1");
    if (c.list_size < 1) v.emplace_back("list_size: list_size ≥ 1");
    const auto& f = c.fee_schedule;
    if (!finite_nonneg(f.display_fee)) v.emplace_back("fee_schedule.display_fee: must be finite and >= 0");
    if (!finite_nonneg(f.click_fee)) v.emplace_back("fee_schedule.click_fee: must be finite and >= 0");
    if (!finite_nonneg(f.display_utility)) v.emplace_back("fee_schedule.display_utility: must be finite and >= 0");
    if (!finite_nonneg(f.click_utility)) v.emplace_back("fee_schedule.click_utility: must be finite and >= 0");
    if (!std::isfinite(c.switching_threshold)) v.emplace_back("switching_threshold: must be finite");
    if (!finite_nonneg(c.recency_bias)) v.emplace_back("recency_bias: must be finite and >= 0");
    if (!(c.exploration_probability >= 0.0 && c.exploration_probability <= 1.0))
        v.emplace_back("exploration_probability: must lie in [0,1]");
    if (c.niche_genre.empty()) v.emplace_back("niche_genre: must be nonempty");
    if (!(std::isfinite(c.niche_boost_factor) && c.niche_boost_factor > 0.0))
        v.emplace_back("niche_boost_factor: must be positive");
    if (!(std::isfinite(c.mainstream_shrink_factor) && c.mainstream_shrink_factor > 0.0))
        v.emplace_back("mainstream_shrink_factor: must be positive");
    if (c.consumer_sample_size < 1) v.emplace_back("consumer_sample_size: must be >= 1");
    if (!(c.niche_fraction > 0.0 && c.niche_fraction < 1.0)) v.emplace_back("niche_fraction: must lie in (0,1)");
    if (c.provider_count < 2) v.emplace_back("provider_count: must be >= 2 (mainstream plus niche)");
    if (c.items_per_mainstream_provider < 1) v.emplace_back("items_per_mainstream_provider: must be >= 1");
    if (!(std::isfinite(c.smoothing_alpha) && c.smoothing_alpha > 0.0))
        v.emplace_back("smoothing_alpha: must be positive");
    if (c.preferred_rating_threshold < 1 || c.preferred_rating_threshold > 5)
        v.emplace_back("preferred_rating_threshold: must lie in [1,5]");
    if (c.selection_model != SelectionModel::none && !c.niche_recommender_enabled)
        v.emplace_back("selection_model: switching requires niche_recommender_enabled");
    return v;
}

void to_json(nlohmann::json& j, const SimConfig& c)
{
    j = nlohmann::json{
        {"days_per_cycle", c.days_per_cycle},
        {"cycles", c.cycles},
        {"list_size", c.list_size},
        {"fee_schedule",
         {{"display_fee", c.fee_schedule.display_fee},
          {"click_fee", c.fee_schedule.click_fee},
          {"display_utility", c.fee_schedule.display_utility},
          {"click_utility", c.fee_schedule.click_utility}}},
        {"switching_threshold", c.switching_threshold},
        {"recency_bias", c.recency_bias},
        {"exploration_probability", c.exploration_probability},
        {"niche_genre", c.niche_genre},
        {"niche_boost_factor", c.niche_boost_factor},
        {"mainstream_shrink_factor", c.mainstream_shrink_factor},
        {"consumer_sample_size", c.consumer_sample_size},
        {"niche_fraction", c.niche_fraction},
        {"provider_count", c.provider_count},
        {"items_per_mainstream_provider", c.items_per_mainstream_provider},
        {"selection_model", to_string(c.selection_model)},
        {"seed", c.seed},
        {"niche_recommender_enabled", c.niche_recommender_enabled},
        {"smoothing_alpha", c.smoothing_alpha},
        {"preferred_rating_threshold", c.preferred_rating_threshold},
        {"mainstream_providers_exclude_niche", c.mainstream_providers_exclude_niche},
    };
}

namespace {

template <class T>
void take(const nlohmann::json& j, const char* key, T& out)
{
    if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

} // namespace

void from_json(const nlohmann::json& j, SimConfig& c)
{
    static const char* known[] = {
        "days_per_cycle", "cycles", "list_size", "fee_schedule", "switching_threshold",
        "recency_bias", "exploration_probability", "niche_genre", "niche_boost_factor",
        "mainstream_shrink_factor", "consumer_sample_size", "niche_fraction", "provider_count",
        "items_per_mainstream_provider", "selection_model", "seed", "niche_recommender_enabled",
        "smoothing_alpha", "preferred_rating_threshold", "mainstream_providers_exclude_niche"};
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
            throw ValidationError("unknown config key '" + key + "'");
        }
    }
    take(j, "days_per_cycle", c.days_per_cycle);
    take(j, "cycles", c.cycles);
    take(j, "list_size", c.list_size);
    if (auto it = j.find("fee_schedule"); it != j.end()) {
        take(*it, "display_fee", c.fee_schedule.display_fee);
        take(*it, "click_fee", c.fee_schedule.click_fee);
        take(*it, "display_utility", c.fee_schedule.display_utility);
        take(*it, "click_utility", c.fee_schedule.click_utility);
    }
    take(j, "switching_threshold", c.switching_threshold);
    take(j, "recency_bias", c.recency_bias);
    take(j, "exploration_probability", c.exploration_probability);
    take(j, "niche_genre", c.niche_genre);
    take(j, "niche_boost_factor", c.niche_boost_factor);
    take(j, "mainstream_shrink_factor", c.mainstream_shrink_factor);
    take(j, "consumer_sample_size", c.consumer_sample_size);
    take(j, "niche_fraction", c.niche_fraction);
    take(j, "provider_count", c.provider_count);
    take(j, "items_per_mainstream_provider", c.items_per_mainstream_provider);
    if (auto it = j.find("selection_model"); it != j.end()) {
        c.selection_model = selection_model_from_string(it->get<std::string>());
    }
    take(j, "seed", c.seed);
    take(j, "niche_recommender_enabled", c.niche_recommender_enabled);
    take(j, "smoothing_alpha", c.smoothing_alpha);
    take(j, "preferred_rating_threshold", c.preferred_rating_threshold);
    take(j, "mainstream_providers_exclude_niche", c.mainstream_providers_exclude_niche);
}

SimConfig apply_overrides(const SimConfig& base, const nlohmann::json& overrides)
{
    SimConfig c = base;
    from_json(overrides, c);
    return c;
}

std::string config_to_json_string(const SimConfig& c)
{
    return nlohmann::json(c).dump(2);
}

SimConfig config_from_json_string(const std::string& text)
{
    SimConfig c;
    from_json(nlohmann::json::parse(text), c);
    return c;
}

} // namespace ecosim
