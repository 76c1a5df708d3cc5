#include <ecosim/recommender.hpp>

#include <algorithm>

namespace ecosim {

GenreClickModel::GenreClickModel(Index genre_count, double alpha) : genre_count_(genre_count), alpha_(alpha)
{
    if (!(alpha > 0.0)) throw ValidationError("smoothing alpha must be positive");
}

void GenreClickModel::observe(ConsumerId consumer, const FeatureVector<>& features)
{
    if (features.size() != genre_count_) throw ValidationError("click features have the wrong dimension");
    auto [it, inserted] = counts_.try_emplace(consumer, counts_t::Zero(genre_count_));
    for (Index g = 0; g < genre_count_; ++g) {
        if (features.has(g)) ++it->second[g];
    }
}

GenreClickModel::counts_t GenreClickModel::counts(ConsumerId consumer) const
{
    auto it = counts_.find(consumer);
    return it == counts_.end() ? counts_t::Zero(genre_count_) : it->second;
}

VectorXd GenreClickModel::predict(ConsumerId consumer) const
{
    VectorXd q = counts(consumer).cast<double>().array() + alpha_;
    return q / q.sum();
}

PopularityIndex build_popularity_index(std::span<const ItemId> catalog_view, const Catalog& items, Index genre_count)
{
    PopularityIndex index(static_cast<std::size_t>(genre_count));
    for (auto id : catalog_view) {
        const auto& item = items.at(id);
        for (Index g = 0; g < genre_count; ++g) {
            if (item.features.has(g)) index[static_cast<std::size_t>(g)].push_back(id);
        }
    }
    for (auto& list : index) {
        std::sort(list.begin(), list.end(), [&](ItemId a, ItemId b) {
            const auto pa = items.at(a).popularity;
            const auto pb = items.at(b).popularity;
            if (pa != pb) return pa > pb;
            return a < b;
        });
    }
    return index;
}

ContentRecommender::ContentRecommender(RecommenderId id, std::string name, std::vector<ItemId> catalog_view,
                                       const Catalog& catalog, Index genre_count, double alpha,
                                       double exploration_probability)
    : id_(id), name_(std::move(name)), view_(std::move(catalog_view)), model_(genre_count, alpha),
      exploration_probability_(exploration_probability)
{
    if (genre_count > 64) throw ValidationError("at most 64 genres are supported");
    if (!(exploration_probability >= 0.0 && exploration_probability <= 1.0)) {
        throw ValidationError("exploration probability must lie in [0,1]");
    }
    std::sort(view_.begin(), view_.end());
    view_.erase(std::unique(view_.begin(), view_.end()), view_.end());
    for (std::size_t i = 0; i < view_.size(); ++i) {
        const auto& item = catalog.at(view_[i]);
        position_.emplace(view_[i], i);
        std::uint64_t mask = 0;
        for (Index g = 0; g < genre_count; ++g) {
            if (item.features.has(g)) mask |= std::uint64_t{1} << g;
        }
        masks_.push_back(mask);
        features_.push_back(item.features);
    }
    by_popularity_.resize(view_.size());
    for (std::size_t i = 0; i < view_.size(); ++i) by_popularity_[i] = i;
    std::sort(by_popularity_.begin(), by_popularity_.end(), [&](std::size_t a, std::size_t b) {
        const auto pa = catalog.at(view_[a]).popularity;
        const auto pb = catalog.at(view_[b]).popularity;
        if (pa != pb) return pa > pb;
        return view_[a] < view_[b];
    });
    index_ = build_popularity_index(view_, catalog, genre_count);
}

ContentRecommender ContentRecommender::mainstream(RecommenderId id, const Catalog& catalog, Index genre_count,
                                                  double alpha, double exploration_probability)
{
    std::vector<ItemId> view;
    for (const auto& [item_id, item] : catalog) view.push_back(item_id);
    return ContentRecommender(id, "Mainstream", std::move(view), catalog, genre_count, alpha, exploration_probability);
}

ContentRecommender ContentRecommender::niche(RecommenderId id, const Catalog& catalog, Index genre_count,
                                             Index niche_genre, double alpha, double exploration_probability)
{
    std::vector<ItemId> view;
    for (const auto& [item_id, item] : catalog) {
        if (item.features.has(niche_genre)) view.push_back(item_id);
    }
    return ContentRecommender(id, "Niche", std::move(view), catalog, genre_count, alpha, exploration_probability);
}

std::uint64_t ContentRecommender::clicked_mask(ConsumerId consumer) const
{
    const auto c = model_.counts(consumer);
    std::uint64_t mask = 0;
    for (Index g = 0; g < c.size(); ++g) {
        if (c[g] > 0) mask |= std::uint64_t{1} << g;
    }
    return mask;
}

std::vector<ItemId> ContentRecommender::recommend(ConsumerId consumer, const std::unordered_set<ItemId>& excluded,
                                                  Index list_size, Rng& rng) const
{
    if (list_size < 1) throw ValidationError("list_size must be >= 1");
    if (static_cast<Index>(view_.size()) < list_size) {
        throw ValidationError("recommender '" + name_ + "' has " + std::to_string(view_.size()) +
                              " items, fewer than list size " + std::to_string(list_size));
    }
    std::vector<ItemId> list;
    list.reserve(static_cast<std::size_t>(list_size));
    auto usable = [&](ItemId id) {
        return !excluded.contains(id) && std::find(list.begin(), list.end(), id) == list.end();
    };

    const std::uint64_t history = clicked_mask(consumer);
    const VectorXd q = model_.predict(consumer);
    const auto genres = static_cast<std::size_t>(model_.genre_count());

    for (Index slot = 0; slot < list_size; ++slot) {
        if (rng.bernoulli(exploration_probability_)) {
            std::size_t candidates = 0;
            for (std::size_t i = 0; i < view_.size(); ++i) {
                if ((history == 0 || (masks_[i] & history) != 0) && usable(view_[i])) ++candidates;
            }
            if (candidates > 0) {
                auto pick = rng.below(candidates);
                for (std::size_t i = 0; i < view_.size(); ++i) {
                    if ((history == 0 || (masks_[i] & history) != 0) && usable(view_[i])) {
                        if (pick-- == 0) {
                            list.push_back(view_[i]);
                            break;
                        }
                    }
                }
                continue;
            }
        }

        // Exploit: sample a genre among those with an unlisted item left, take its most popular one.
        std::vector<const ItemId*> head(genres, nullptr);
        double mass = 0.0;
        for (std::size_t g = 0; g < genres; ++g) {
            for (const auto& id : index_[g]) {
                if (usable(id)) {
                    head[g] = &id;
                    break;
                }
            }
            if (head[g]) mass += q[static_cast<Index>(g)];
        }
        if (mass > 0.0) {
            const double u = rng.uniform() * mass;
            double acc = 0.0;
            const ItemId* chosen = nullptr;
            for (std::size_t g = 0; g < genres; ++g) {
                if (!head[g]) continue;
                acc += q[static_cast<Index>(g)];
                chosen = head[g];
                if (u < acc) break;
            }
            list.push_back(*chosen);
            continue;
        }
        // Only genre-less items remain.
        bool filled = false;
        for (auto pos : by_popularity_) {
            if (usable(view_[pos])) {
                list.push_back(view_[pos]);
                filled = true;
                break;
            }
        }
        if (!filled) {
            throw ValidationError("recommender '" + name_ + "' ran out of items for consumer " +
                                  std::to_string(consumer));
        }
    }
    return list;
}

void ContentRecommender::observe_click(ConsumerId consumer, ItemId item)
{
    auto it = position_.find(item);
    if (it == position_.end()) {
        throw ValidationError("recommender '" + name_ + "' observed a click on unknown item " + std::to_string(item));
    }
    model_.observe(consumer, features_[it->second]);
}

} // namespace ecosim
