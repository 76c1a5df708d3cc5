#include <doctest.h>

#include "toy_universe.hpp"

#include <ecosim/recommender.hpp>

#include <algorithm>
#include <set>

using namespace ecosim;
using ecosim::testing::make_item;

namespace {

// 4 genres: 0 Comedy, 1 Drama, 2 Action, 3 Western.
Catalog random_catalog(std::uint64_t seed, int n)
{
    Rng rng(seed);
    Catalog c;
    for (ItemId id = 1; id <= n; ++id) {
        std::vector<int> f(4);
        for (auto& x : f) x = rng.bernoulli(0.35) ? 1 : 0;
        c.emplace(id, make_item(id, 1, f, static_cast<std::int64_t>(rng.below(40))));
    }
    return c;
}

std::vector<ItemId> ids_of(const Catalog& c)
{
    std::vector<ItemId> out;
    for (const auto& [id, it] : c) out.push_back(id);
    return out;
}

} // namespace

TEST_CASE("GenreClickModel")
{
    GenreClickModel m(19, 1.0);
    CHECK(m.counts(7) == GenreClickModel::counts_t::Zero(19));

    const auto uniform = m.predict(7);
    for (Index g = 0; g < 19; ++g) CHECK(uniform[g] == doctest::Approx(1.0 / 19.0).epsilon(1e-12));

    std::vector<int> comedy(19, 0);
    comedy[5] = 1;
    for (int i = 0; i < 3; ++i) m.observe(7, FeatureVector<>::from_flags(comedy));
    CHECK(m.counts(7)[5] == 3);
    CHECK(m.counts(7).sum() == 3);
    CHECK(m.predict(7)[5] == doctest::Approx(4.0 / 22.0).epsilon(1e-12));
    CHECK(m.predict(7)[0] == doctest::Approx(1.0 / 22.0).epsilon(1e-12));
    CHECK(m.predict(7).minCoeff() > 0.0);
    CHECK(std::abs(m.predict(7).sum() - 1.0) < 1e-12);

    CHECK_THROWS_AS(m.observe(7, FeatureVector<>::from_flags(std::vector<int>{1, 0})), ValidationError);
    CHECK_THROWS_AS(GenreClickModel(3, 0.0), ValidationError);
}

TEST_CASE("build_popularity_index orders by popularity then id")
{
    Catalog c;
    for (auto it : {make_item(1, 1, {1, 0}, 5), make_item(2, 1, {1, 1}, 9), make_item(3, 1, {1, 0}, 9),
                    make_item(4, 1, {0, 0}, 100), make_item(5, 1, {0, 1}, 0)}) {
        c.emplace(it.item_id, it);
    }
    const auto view = ids_of(c);
    const auto index = build_popularity_index(view, c, 2);
    CHECK(index[0] == std::vector<ItemId>{2, 3, 1});
    CHECK(index[1] == std::vector<ItemId>{2, 5});
    // Item 4 has no genre, so it appears in no genre list.
    for (const auto& list : index) CHECK(std::find(list.begin(), list.end(), 4) == list.end());
}

TEST_CASE("observe_click")
{
    Catalog c;
    for (auto it : {make_item(1, 1, {1, 0, 0}, 5), make_item(2, 1, {1, 1, 0}, 3), make_item(3, 1, {0, 0, 1}, 1)}) {
        c.emplace(it.item_id, it);
    }
    auto rec = ContentRecommender::mainstream(1, c, 3, 1.0, 0.1);
    rec.observe_click(10, 2);
    CHECK(rec.click_model().counts(10) == (GenreClickModel::counts_t(3) << 1, 1, 0).finished());
    rec.observe_click(10, 1);
    CHECK(rec.click_model().counts(10)[0] == 2);
    CHECK_THROWS_AS(rec.observe_click(10, 99), ValidationError);

    auto niche = ContentRecommender::niche(2, c, 3, 2, 1.0, 0.1);
    CHECK(niche.catalog_view() == std::vector<ItemId>{3});
    CHECK_THROWS_AS(niche.observe_click(10, 1), ValidationError);
}

TEST_CASE("recommend returns distinct in-view items")
{
    const auto catalog = random_catalog(31, 120);
    auto rec = ContentRecommender::mainstream(1, catalog, 4, 1.0, 0.1);
    Rng rng(3);
    for (ConsumerId consumer = 1; consumer <= 50; ++consumer) {
        for (int day = 0; day < 20; ++day) {
            const auto list = rec.recommend(consumer, {}, 5, rng);
            CHECK(list.size() == 5);
            CHECK(std::set<ItemId>(list.begin(), list.end()).size() == 5);
            for (auto id : list) CHECK(rec.in_view(id));
            rec.observe_click(consumer, list[rng.below(5)]);
        }
    }
}

TEST_CASE("recommend respects the exclusion set")
{
    const auto catalog = random_catalog(5, 30);
    const auto rec = ContentRecommender::mainstream(1, catalog, 4, 1.0, 0.5);
    std::unordered_set<ItemId> excluded;
    for (ItemId id = 1; id <= 20; ++id) excluded.insert(id);
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        for (auto id : rec.recommend(1, excluded, 5, rng)) CHECK(id > 20);
    }
}

TEST_CASE("niche recommender lists only niche-flagged items")
{
    const auto catalog = random_catalog(77, 200);
    auto rec = ContentRecommender::niche(2, catalog, 4, 3, 1.0, 0.1);
    Rng rng(9);
    for (ConsumerId consumer = 1; consumer <= 20; ++consumer) {
        for (int day = 0; day < 30; ++day) {
            const auto list = rec.recommend(consumer, {}, 5, rng);
            for (auto id : list) CHECK(catalog.at(id).features.has(3));
            rec.observe_click(consumer, list.front());
        }
    }
}

TEST_CASE("a dominant clicked genre yields its most popular items")
{
    const auto catalog = random_catalog(123, 300);

    // Brute-force oracle: Comedy items sorted by descending popularity, ascending id.
    std::vector<std::pair<std::int64_t, ItemId>> comedy;
    for (const auto& [id, it] : catalog) {
        if (it.features.has(0)) comedy.emplace_back(-it.popularity, id);
    }
    std::sort(comedy.begin(), comedy.end());
    std::vector<ItemId> expected;
    for (std::size_t i = 0; i < 5; ++i) expected.push_back(comedy[i].second);

    ItemId comedy_only = 0;
    for (const auto& [id, it] : catalog) {
        if (it.features.count() == 1 && it.features.has(0)) {
            comedy_only = id;
            break;
        }
    }
    REQUIRE(comedy_only != 0);

    auto rec = ContentRecommender::mainstream(1, catalog, 4, 1e-12, 0.0);
    for (int i = 0; i < 1000; ++i) rec.observe_click(4, comedy_only);
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        auto list = rec.recommend(4, {}, 5, rng);
        std::sort(list.begin(), list.end());
        auto want = expected;
        std::sort(want.begin(), want.end());
        CHECK(list == want);
    }
}

TEST_CASE("click model state does not depend on click order")
{
    const auto catalog = random_catalog(8, 60);
    auto a = ContentRecommender::mainstream(1, catalog, 4, 1.0, 0.3);
    auto b = ContentRecommender::mainstream(1, catalog, 4, 1.0, 0.3);
    std::vector<ItemId> clicks{3, 9, 14, 3, 27, 41, 55};
    for (auto id : clicks) a.observe_click(1, id);
    std::reverse(clicks.begin(), clicks.end());
    for (auto id : clicks) b.observe_click(1, id);
    CHECK(a.click_model().counts(1) == b.click_model().counts(1));
    Rng ra(6), rb(6);
    for (int i = 0; i < 50; ++i) CHECK(a.recommend(1, {}, 5, ra) == b.recommend(1, {}, 5, rb));
}

TEST_CASE("recommend rejects a view smaller than the list")
{
    Catalog c;
    for (auto it : {make_item(1, 1, {1, 0}, 5), make_item(2, 1, {0, 1}, 3), make_item(3, 1, {0, 1}, 1)}) {
        c.emplace(it.item_id, it);
    }
    const auto rec = ContentRecommender::niche(2, c, 2, 1, 1.0, 0.1);
    Rng rng(1);
    CHECK_THROWS_AS(rec.recommend(1, {}, 5, rng), ValidationError);
    CHECK(rec.recommend(1, {}, 2, rng).size() == 2);
}

TEST_CASE("genre-less items fill the list once genre lists are exhausted")
{
    Catalog c;
    for (auto it : {make_item(1, 1, {1}, 5), make_item(2, 1, {0}, 3), make_item(3, 1, {0}, 7)}) {
        c.emplace(it.item_id, it);
    }
    const auto rec = ContentRecommender::mainstream(1, c, 1, 1.0, 0.0);
    Rng rng(1);
    CHECK(rec.recommend(1, {}, 3, rng) == std::vector<ItemId>{1, 3, 2});
}
