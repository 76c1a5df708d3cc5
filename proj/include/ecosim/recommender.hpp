#pragma once

#include <ecosim/rng.hpp>
#include <ecosim/types.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace ecosim {

/// Per-consumer multinomial genre counts learned from clicks, Laplace-smoothed.
class GenreClickModel
{
public:
    using counts_t = Vector<std::int64_t>;

    GenreClickModel() = default;
    GenreClickModel(Index genre_count, double alpha);

    void observe(ConsumerId consumer, const FeatureVector<>& features);

    // Zero vector for a consumer with no clicks.
    counts_t counts(ConsumerId consumer) const;

    // q_g = (c_g + alpha) / sum_h (c_h + alpha).
    VectorXd predict(ConsumerId consumer) const;

    Index genre_count() const { return genre_count_; }
    double alpha() const { return alpha_; }

private:
    Index genre_count_ = 0;
    double alpha_ = 1.0;
    std::unordered_map<ConsumerId, counts_t> counts_;
};

// One list per genre of the items carrying that flag, descending popularity,
// ties by ascending item id.
using PopularityIndex = std::vector<std::vector<ItemId>>;

PopularityIndex build_popularity_index(std::span<const ItemId> catalog_view, const Catalog& items, Index genre_count);

/// Content-based recommender: exploits popular items of genres sampled from the
/// consumer's click model and, per list slot, explores uniformly among items
/// that share a genre with the consumer's clicks at this recommender.
class ContentRecommender
{
public:
    ContentRecommender(RecommenderId id, std::string name, std::vector<ItemId> catalog_view, const Catalog& catalog,
                       Index genre_count, double alpha, double exploration_probability);

    // Every catalog item.
    static ContentRecommender mainstream(RecommenderId id, const Catalog& catalog, Index genre_count, double alpha,
                                         double exploration_probability);
    // Catalog items carrying the niche flag only.
    static ContentRecommender niche(RecommenderId id, const Catalog& catalog, Index genre_count, Index niche_genre,
                                    double alpha, double exploration_probability);

    std::vector<ItemId> recommend(ConsumerId consumer, const std::unordered_set<ItemId>& excluded, Index list_size,
                                  Rng& rng) const;

    void observe_click(ConsumerId consumer, ItemId item);

    RecommenderId id() const { return id_; }
    const std::string& name() const { return name_; }
    const std::vector<ItemId>& catalog_view() const { return view_; }
    bool in_view(ItemId item) const { return position_.contains(item); }
    const GenreClickModel& click_model() const { return model_; }
    const PopularityIndex& popularity_index() const { return index_; }
    double exploration_probability() const { return exploration_probability_; }

    double fee_income = 0.0;

private:
    std::uint64_t clicked_mask(ConsumerId consumer) const;

    RecommenderId id_;
    std::string name_;
    std::vector<ItemId> view_; // ascending
    std::unordered_map<ItemId, std::size_t> position_;
    std::vector<std::uint64_t> masks_;
    std::vector<FeatureVector<>> features_;
    std::vector<std::size_t> by_popularity_; // positions, descending popularity
    PopularityIndex index_;
    GenreClickModel model_;
    double exploration_probability_;
};

} // namespace ecosim
