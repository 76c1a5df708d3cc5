#pragma once

#include <ecosim/config.hpp>
#include <ecosim/rng.hpp>
#include <ecosim/types.hpp>

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ecosim {

class ParseError : public std::runtime_error
{
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line)
    {
    }
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct Rating
{
    std::int32_t user_id = 0;
    ItemId item_id = 0;
    std::int32_t rating = 0;
    std::int64_t timestamp = 0;
};

struct RatingsTable
{
    std::vector<Rating> records;
};

struct ItemFeatures
{
    std::map<ItemId, FeatureVector<>> features;
    std::vector<std::string> genre_labels;
};

// Genre index file: "label|index" lines, blank lines ignored.
std::vector<std::string> parse_genres(std::string_view bytes);

// Pipe-delimited item file: id|title|date|video date|url|<one flag per genre label>.
ItemFeatures parse_items(std::string_view bytes, const std::vector<std::string>& genre_labels);

// Tab-delimited user/item/rating/timestamp lines.
RatingsTable parse_ratings(std::string_view bytes);

std::string read_file_bytes(const std::filesystem::path& path);

struct Dataset
{
    ItemFeatures items;
    RatingsTable ratings;
};

/// Loads u.genre, u.item and u.data from an ML-100k directory.
Dataset load_movielens(const std::filesystem::path& dir);

/// Genre frequencies over the user's items rated at or above `preferred_threshold`,
/// falling back to all of the user's rated items when none qualify.
PreferenceVector<> build_raw_preferences(std::int32_t user_id, const RatingsTable& ratings,
                                         const std::map<ItemId, FeatureVector<>>& features,
                                         std::int32_t preferred_threshold = 4);

/// n distinct user ids, uniformly without replacement, in draw order.
std::vector<std::int32_t> sample_consumers(const RatingsTable& ratings, std::int32_t n, Rng& rng);

struct ManipulatedPreference
{
    PreferenceVector<> preferences;
    ConsumerClass consumer_class = ConsumerClass::mainstream;
};

/// The ceil(niche_fraction * n) users with the highest niche-genre weight (ties by
/// smaller user id) get that weight multiplied by `boost`, everyone else by
/// `shrink`; each vector is then renormalized. Output order matches input order.
std::vector<ManipulatedPreference> apply_class_manipulation(std::span<const PreferenceVector<>> preferences,
                                                            std::span<const std::int32_t> user_ids,
                                                            Index niche_genre_index, double boost, double shrink,
                                                            double niche_fraction);

struct ProviderAssignmentOptions
{
    bool mainstream_exclude_niche = true;
};

/// Providers 1..count-1 each get a disjoint uniform sample of `items_per_provider`
/// items; provider `count` gets every niche-flagged item not already taken.
std::vector<Provider> assign_providers(const std::map<ItemId, FeatureVector<>>& features, Index niche_genre_index,
                                       std::int32_t provider_count, std::int32_t items_per_provider, Rng& rng,
                                       ProviderAssignmentOptions options = {});

std::map<ItemId, std::int64_t> item_popularity(const RatingsTable& ratings);

struct Population
{
    Catalog catalog;
    std::vector<Consumer> consumers; // ascending consumer_id
    std::vector<Provider> providers; // ascending provider_id
    std::vector<std::string> genre_labels;
    Index niche_genre_index = 0;
    ProviderId niche_provider_id = 0;
};

Index genre_index(const std::vector<std::string>& labels, const std::string& name);

/// Samples consumers, manipulates their preferences and assigns providers.
/// Consumer and provider draws use separate substreams of `config.seed`.
Population build_population(const SimConfig& config, const Dataset& data);

} // namespace ecosim
