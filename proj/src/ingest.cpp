#include <ecosim/ingest.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace ecosim {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

template <class F>
void for_each_line(std::string_view bytes, F&& fn)
{
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < bytes.size()) {
        auto end = bytes.find('\n', start);
        if (end == std::string_view::npos) end = bytes.size();
        auto line = bytes.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        fn(line, line_no);
        start = end + 1;
    }
}

template <class T>
T parse_int(std::string_view field, std::size_t line_no, const char* what)
{
    T value{};
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || field.empty()) {
        throw ParseError(std::string("field '") + what + "' is not an integer: '" + std::string(field) + "'", line_no);
    }
    return value;
}

} // namespace

std::vector<std::string> parse_genres(std::string_view bytes)
{
    std::vector<std::pair<int, std::string>> entries;
    for_each_line(bytes, [&](std::string_view line, std::size_t n) {
        if (line.empty()) return;
        auto fields = split(line, '|');
        if (fields.size() != 2 || fields[0].empty()) throw ParseError("expected 'label|index'", n);
        entries.emplace_back(parse_int<int>(fields[1], n, "genre index"), std::string(fields[0]));
    });
    std::sort(entries.begin(), entries.end());
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].first != static_cast<int>(i)) {
            throw ValidationError("genre indices must be 0.." + std::to_string(entries.size() - 1) + " without gaps");
        }
        labels.push_back(entries[i].second);
    }
    return labels;
}

ItemFeatures parse_items(std::string_view bytes, const std::vector<std::string>& genre_labels)
{
    constexpr std::size_t leading = 5; // id, title, release date, video release date, url
    const std::size_t expected = leading + genre_labels.size();
    ItemFeatures out;
    out.genre_labels = genre_labels;
    std::vector<int> flags(genre_labels.size());
    for_each_line(bytes, [&](std::string_view line, std::size_t n) {
        if (line.empty()) return;
        auto fields = split(line, '|');
        if (fields.size() != expected) {
            throw ParseError("expected " + std::to_string(expected) + " pipe-delimited fields, found " +
                                 std::to_string(fields.size()),
                             n);
        }
        const auto id = parse_int<ItemId>(fields[0], n, "item id");
        for (std::size_t g = 0; g < genre_labels.size(); ++g) {
            const auto& f = fields[leading + g];
            if (f != "0" && f != "1") {
                throw ParseError("genre flag '" + genre_labels[g] + "' must be 0 or 1", n);
            }
            flags[g] = f == "1" ? 1 : 0;
        }
        if (!out.features.emplace(id, FeatureVector<>::from_flags(flags)).second) {
            throw ParseError("duplicate item id " + std::to_string(id), n);
        }
    });
    return out;
}

RatingsTable parse_ratings(std::string_view bytes)
{
    RatingsTable table;
    std::set<std::pair<std::int32_t, ItemId>> seen;
    for_each_line(bytes, [&](std::string_view line, std::size_t n) {
        if (line.empty()) return;
        auto fields = split(line, '\t');
        if (fields.size() != 4) throw ParseError("expected 4 tab-delimited fields", n);
        Rating r;
        r.user_id = parse_int<std::int32_t>(fields[0], n, "user id");
        r.item_id = parse_int<ItemId>(fields[1], n, "item id");
        r.rating = parse_int<std::int32_t>(fields[2], n, "rating");
        r.timestamp = parse_int<std::int64_t>(fields[3], n, "timestamp");
        if (r.rating < 1 || r.rating > 5) {
            throw ValidationError("line " + std::to_string(n) + ": rating " + std::to_string(r.rating) +
                                  " outside [1,5]");
        }
        if (!seen.emplace(r.user_id, r.item_id).second) {
            throw ValidationError("line " + std::to_string(n) + ": duplicate (user, item) pair (" +
                                  std::to_string(r.user_id) + ", " + std::to_string(r.item_id) + ")");
        }
        table.records.push_back(r);
    });
    return table;
}

std::string read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Dataset load_movielens(const std::filesystem::path& dir)
{
    for (const char* name : {"u.genre", "u.item", "u.data"}) {
        if (!std::filesystem::exists(dir / name)) {
            throw std::runtime_error("missing dataset file " + (dir / name).string());
        }
    }
    Dataset d;
    const auto labels = parse_genres(read_file_bytes(dir / "u.genre"));
    d.items = parse_items(read_file_bytes(dir / "u.item"), labels);
    d.ratings = parse_ratings(read_file_bytes(dir / "u.data"));
    return d;
}

PreferenceVector<> build_raw_preferences(std::int32_t user_id, const RatingsTable& ratings,
                                         const std::map<ItemId, FeatureVector<>>& features,
                                         std::int32_t preferred_threshold)
{
    if (features.empty()) throw ValidationError("build_raw_preferences: empty catalog");
    const Index dim = features.begin()->second.size();
    VectorXd preferred = VectorXd::Zero(dim);
    VectorXd all = VectorXd::Zero(dim);
    bool present = false;
    for (const auto& r : ratings.records) {
        if (r.user_id != user_id) continue;
        present = true;
        auto it = features.find(r.item_id);
        if (it == features.end()) {
            throw ValidationError("rating references unknown item " + std::to_string(r.item_id));
        }
        all += it->second.flags();
        if (r.rating >= preferred_threshold) preferred += it->second.flags();
    }
    if (!present) throw ValidationError("user " + std::to_string(user_id) + " has no ratings");
    if (preferred.sum() > 0.0) return PreferenceVector<>::normalize(preferred);
    return PreferenceVector<>::normalize(all);
}

std::vector<std::int32_t> sample_consumers(const RatingsTable& ratings, std::int32_t n, Rng& rng)
{
    std::set<std::int32_t> distinct;
    for (const auto& r : ratings.records) distinct.insert(r.user_id);
    std::vector<std::int32_t> pool(distinct.begin(), distinct.end());
    if (n < 0 || static_cast<std::size_t>(n) > pool.size()) {
        throw ValidationError("cannot sample " + std::to_string(n) + " consumers from " + std::to_string(pool.size()) +
                              " distinct users");
    }
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(n));
    return pool;
}

std::vector<ManipulatedPreference> apply_class_manipulation(std::span<const PreferenceVector<>> preferences,
                                                            std::span<const std::int32_t> user_ids,
                                                            Index niche_genre_index, double boost, double shrink,
                                                            double niche_fraction)
{
    if (preferences.size() != user_ids.size()) {
        throw ValidationError("apply_class_manipulation: preference and user id counts differ");
    }
    const std::size_t n = preferences.size();
    for (const auto& p : preferences) {
        if (niche_genre_index < 0 || niche_genre_index >= p.size()) {
            throw ValidationError("niche genre index " + std::to_string(niche_genre_index) + " out of range [0," +
                                  std::to_string(p.size()) + ")");
        }
    }
    const auto niche_count = static_cast<std::size_t>(std::ceil(niche_fraction * static_cast<double>(n) - 1e-9));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double wa = preferences[a][niche_genre_index];
        const double wb = preferences[b][niche_genre_index];
        if (wa != wb) return wa > wb;
        return user_ids[a] < user_ids[b];
    });
    std::vector<bool> is_niche(n, false);
    for (std::size_t r = 0; r < std::min(niche_count, n); ++r) is_niche[order[r]] = true;

    std::vector<ManipulatedPreference> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        VectorXd w = preferences[i].weights();
        w[niche_genre_index] *= is_niche[i] ? boost : shrink;
        out.push_back({PreferenceVector<>::normalize(w), is_niche[i] ? ConsumerClass::niche : ConsumerClass::mainstream});
    }
    return out;
}

std::vector<Provider> assign_providers(const std::map<ItemId, FeatureVector<>>& features, Index niche_genre_index,
                                       std::int32_t provider_count, std::int32_t items_per_provider, Rng& rng,
                                       ProviderAssignmentOptions options)
{
    if (provider_count < 2) throw ValidationError("assign_providers: need at least 2 providers");
    std::vector<ItemId> pool;
    for (const auto& [id, f] : features) {
        if (niche_genre_index < 0 || niche_genre_index >= f.size()) {
            throw ValidationError("niche genre index " + std::to_string(niche_genre_index) + " out of range");
        }
        if (!options.mainstream_exclude_niche || !f.has(niche_genre_index)) pool.push_back(id);
    }
    const auto mainstream = static_cast<std::size_t>(provider_count - 1);
    const std::size_t required = mainstream * static_cast<std::size_t>(items_per_provider);
    if (pool.size() < required) {
        throw ValidationError("assign_providers: need " + std::to_string(required) + " items for mainstream providers, " +
                              std::to_string(pool.size()) + " available");
    }
    for (std::size_t i = 0; i < required; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }

    std::vector<Provider> providers(static_cast<std::size_t>(provider_count));
    std::set<ItemId> taken;
    for (std::size_t v = 0; v < mainstream; ++v) {
        auto& p = providers[v];
        p.provider_id = static_cast<ProviderId>(v + 1);
        p.provider_class = ConsumerClass::mainstream;
        const auto first = pool.begin() + static_cast<std::ptrdiff_t>(v * static_cast<std::size_t>(items_per_provider));
        p.item_ids.assign(first, first + items_per_provider);
        std::sort(p.item_ids.begin(), p.item_ids.end());
        taken.insert(p.item_ids.begin(), p.item_ids.end());
    }
    auto& niche = providers.back();
    niche.provider_id = provider_count;
    niche.provider_class = ConsumerClass::niche;
    for (const auto& [id, f] : features) {
        if (f.has(niche_genre_index) && !taken.contains(id)) niche.item_ids.push_back(id);
    }
    if (niche.item_ids.empty()) throw ValidationError("assign_providers: no items carry the niche genre");
    return providers;
}

std::map<ItemId, std::int64_t> item_popularity(const RatingsTable& ratings)
{
    std::map<ItemId, std::int64_t> pop;
    for (const auto& r : ratings.records) ++pop[r.item_id];
    return pop;
}

Index genre_index(const std::vector<std::string>& labels, const std::string& name)
{
    auto it = std::find(labels.begin(), labels.end(), name);
    if (it == labels.end()) throw ValidationError("genre '" + name + "' not found in genre labels");
    return static_cast<Index>(it - labels.begin());
}

Population build_population(const SimConfig& config, const Dataset& data)
{
    Population pop;
    pop.genre_labels = data.items.genre_labels;
    pop.niche_genre_index = genre_index(pop.genre_labels, config.niche_genre);

    Rng consumer_rng = Rng::substream(config.seed, "population/consumers");
    Rng provider_rng = Rng::substream(config.seed, "population/providers");

    auto user_ids = sample_consumers(data.ratings, config.consumer_sample_size, consumer_rng);
    std::sort(user_ids.begin(), user_ids.end());

    // Group once so preference construction is linear in the ratings table.
    std::map<std::int32_t, RatingsTable> by_user;
    for (const auto& r : data.ratings.records) {
        if (std::binary_search(user_ids.begin(), user_ids.end(), r.user_id)) by_user[r.user_id].records.push_back(r);
    }
    std::vector<PreferenceVector<>> raw;
    raw.reserve(user_ids.size());
    for (auto uid : user_ids) {
        raw.push_back(build_raw_preferences(uid, by_user[uid], data.items.features, config.preferred_rating_threshold));
    }
    auto manipulated = apply_class_manipulation(raw, user_ids, pop.niche_genre_index, config.niche_boost_factor,
                                                config.mainstream_shrink_factor, config.niche_fraction);
    for (std::size_t i = 0; i < user_ids.size(); ++i) {
        Consumer c;
        c.consumer_id = user_ids[i];
        c.preferences = manipulated[i].preferences;
        c.consumer_class = manipulated[i].consumer_class;
        pop.consumers.push_back(std::move(c));
    }

    pop.providers = assign_providers(data.items.features, pop.niche_genre_index, config.provider_count,
                                     config.items_per_mainstream_provider, provider_rng,
                                     {config.mainstream_providers_exclude_niche});
    pop.niche_provider_id = pop.providers.back().provider_id;

    const auto popularity = item_popularity(data.ratings);
    for (const auto& p : pop.providers) {
        for (auto id : p.item_ids) {
            Item item;
            item.item_id = id;
            item.provider_id = p.provider_id;
            item.features = data.items.features.at(id);
            auto it = popularity.find(id);
            item.popularity = it == popularity.end() ? 0 : it->second;
            pop.catalog.emplace(id, std::move(item));
        }
    }
    return pop;
}

} // namespace ecosim
