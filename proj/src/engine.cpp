#include <ecosim/engine.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

namespace ecosim {

const Consumer& RunResult::consumer(ConsumerId id) const
{
    auto it = std::lower_bound(consumers.begin(), consumers.end(), id,
                               [](const Consumer& c, ConsumerId v) { return c.consumer_id < v; });
    if (it == consumers.end() || it->consumer_id != id) throw ValidationError("unknown consumer " + std::to_string(id));
    return *it;
}

const Provider& RunResult::provider(ProviderId id) const
{
    for (const auto& p : providers) {
        if (p.provider_id == id) return p;
    }
    throw ValidationError("unknown provider " + std::to_string(id));
}

std::map<RecommenderId, double> accrue_provider_utility(const Provider& provider, const FeeSchedule& fees)
{
    std::map<RecommenderId, double> out;
    const double per_display = fees.display_utility - fees.display_fee;
    const double per_click = fees.click_utility - fees.click_fee;
    for (const auto& [k, n] : provider.display_counts) out[k] += per_display * static_cast<double>(n);
    for (const auto& [k, n] : provider.click_counts) out[k] += per_click * static_cast<double>(n);
    return out;
}

double accrue_recommender_utility(RecommenderId recommender, std::span<const Provider> providers,
                                  const FeeSchedule& fees)
{
    double income = 0.0;
    for (const auto& p : providers) {
        if (auto it = p.display_counts.find(recommender); it != p.display_counts.end())
            income += fees.display_fee * static_cast<double>(it->second);
        if (auto it = p.click_counts.find(recommender); it != p.click_counts.end())
            income += fees.click_fee * static_cast<double>(it->second);
    }
    return income;
}

Simulation::Simulation(SimConfig config, const Population& population)
    : config_(std::move(config)), catalog_(population.catalog), consumers_(population.consumers),
      providers_(population.providers), niche_provider_id_(population.niche_provider_id)
{
    if (auto violations = validate_config(config_); !violations.empty()) {
        std::string msg = "invalid config:";
        for (const auto& v : violations) msg += "\n  " + v;
        throw ValidationError(msg);
    }
    if (consumers_.empty()) throw ValidationError("population has no consumers");
    std::sort(consumers_.begin(), consumers_.end(),
              [](const Consumer& a, const Consumer& b) { return a.consumer_id < b.consumer_id; });
    std::sort(providers_.begin(), providers_.end(),
              [](const Provider& a, const Provider& b) { return a.provider_id < b.provider_id; });
    for (std::size_t i = 0; i < providers_.size(); ++i) provider_pos_[providers_[i].provider_id] = i;
    for (const auto& [id, item] : catalog_) {
        if (!provider_pos_.contains(item.provider_id)) {
            throw ValidationError("item " + std::to_string(id) + " has unknown provider " +
                                  std::to_string(item.provider_id));
        }
    }

    const Index genres = population.genre_labels.empty() ? catalog_.begin()->second.features.size()
                                                         : static_cast<Index>(population.genre_labels.size());
    recommenders_.push_back(ContentRecommender::mainstream(kMainstreamRecommender, catalog_, genres,
                                                           config_.smoothing_alpha, config_.exploration_probability));
    if (config_.niche_recommender_enabled) {
        recommenders_.push_back(ContentRecommender::niche(kNicheRecommender, catalog_, genres,
                                                          population.niche_genre_index, config_.smoothing_alpha,
                                                          config_.exploration_probability));
    }

    for (auto& c : consumers_) {
        c.scores.clear();
        c.selection_counts.clear();
        c.last_used_cycle.clear();
        c.click_history.clear();
        for (const auto& r : recommenders_) {
            c.scores[r.id()] = 0.0;
            c.selection_counts[r.id()] = 0;
            c.last_used_cycle[r.id()] = 0;
        }
        c.current_recommender = kMainstreamRecommender;
        c.selection_counts[kMainstreamRecommender] = 1;
        c.last_used_cycle[kMainstreamRecommender] = 1;
        choice_rngs_.push_back(Rng::substream(config_.seed, "choice", static_cast<std::uint64_t>(c.consumer_id)));
    }
    for (const auto& r : recommenders_) {
        for (const auto& c : consumers_) {
            recommend_rngs_.push_back(Rng::substream(config_.seed, "recommend", static_cast<std::uint64_t>(r.id()),
                                                     static_cast<std::uint64_t>(c.consumer_id)));
        }
    }
    for (auto& p : providers_) {
        p.display_counts.clear();
        p.click_counts.clear();
        p.utility.clear();
        for (const auto& r : recommenders_) {
            p.display_counts[r.id()] = 0;
            p.click_counts[r.id()] = 0;
            p.utility[r.id()] = 0.0;
        }
    }
}

ContentRecommender& Simulation::recommender(RecommenderId id)
{
    for (auto& r : recommenders_) {
        if (r.id() == id) return r;
    }
    throw ValidationError("unknown recommender " + std::to_string(id));
}

Provider& Simulation::provider(ProviderId id)
{
    return providers_[provider_pos_.at(id)];
}

DayRecord Simulation::run_day()
{
    const std::int32_t total_days = config_.days_per_cycle * config_.cycles;
    if (day_ >= total_days) throw ValidationError("run already complete");
    DayRecord rec;
    rec.day = day_ + 1;
    rec.list_size = config_.list_size;
    rec.per_consumer.reserve(consumers_.size());
    rec.lists.reserve(consumers_.size() * static_cast<std::size_t>(config_.list_size));

    std::map<std::pair<ProviderId, RecommenderId>, ProviderDelta> deltas;
    const std::unordered_set<ItemId> nothing_excluded;
    std::vector<const FeatureVector<>*> features;

    for (std::size_t j = 0; j < consumers_.size(); ++j) {
        auto& consumer = consumers_[j];
        const RecommenderId k = consumer.current_recommender;
        auto& rec_k = recommender(k);
        const auto k_pos = static_cast<std::size_t>(&rec_k - recommenders_.data());
        auto& rng = recommend_rngs_[k_pos * consumers_.size() + j];

        std::vector<ItemId> list;
        try {
            list = rec_k.recommend(consumer.consumer_id, nothing_excluded, config_.list_size, rng);
        } catch (const std::exception& e) {
            throw std::runtime_error("day " + std::to_string(rec.day) + ", consumer " +
                                     std::to_string(consumer.consumer_id) + ": " + e.what());
        }

        features.clear();
        for (auto id : list) features.push_back(&catalog_.at(id).features);
        const auto report = evaluate_list(features, consumer.preferences);
        const Index pick = select_item(report.probabilities, choice_rngs_[j]);
        const ItemId clicked = list[static_cast<std::size_t>(pick)];

        consumer.scores[k] = update_recommender_score(consumer.scores[k], report.list_utility, config_.recency_bias);
        consumer.click_history.push_back(clicked);
        rec_k.observe_click(consumer.consumer_id, clicked);

        for (auto id : list) {
            const ProviderId v = catalog_.at(id).provider_id;
            ++provider(v).display_counts[k];
            auto& d = deltas[{v, k}];
            d.provider = v;
            d.recommender = k;
            ++d.displays;
        }
        const ProviderId clicked_provider = catalog_.at(clicked).provider_id;
        ++provider(clicked_provider).click_counts[k];
        auto& d = deltas[{clicked_provider, k}];
        d.provider = clicked_provider;
        d.recommender = k;
        ++d.clicks;

        rec.per_consumer.push_back({consumer.consumer_id, k, clicked, report.list_utility});
        rec.lists.insert(rec.lists.end(), list.begin(), list.end());
    }
    for (const auto& [key, d] : deltas) rec.per_provider_delta.push_back(d);
    ++day_;
    return rec;
}

void Simulation::close_cycle(std::vector<SwitchEvent>& switches)
{
    ++cycle_;
    for (auto& p : providers_) {
        const auto u = accrue_provider_utility(p, config_.fee_schedule);
        for (auto& [k, value] : p.utility) {
            auto it = u.find(k);
            value = it == u.end() ? 0.0 : it->second;
        }
        for (const auto& r : recommenders_) {
            provider_cycles_.push_back({cycle_, p.provider_id, p.provider_class, r.id(), p.display_counts.at(r.id()),
                                        p.click_counts.at(r.id()), p.utility.at(r.id())});
        }
    }
    for (auto& r : recommenders_) {
        r.fee_income = accrue_recommender_utility(r.id(), providers_, config_.fee_schedule);
        recommender_cycles_.push_back({cycle_, r.id(), r.fee_income});
    }

    if (cycle_ >= config_.cycles) return; // no cycle follows the last one
    const std::int64_t t = static_cast<std::int64_t>(cycle_) * config_.days_per_cycle;
    for (auto& c : consumers_) {
        RecommenderId next = c.current_recommender;
        switch (config_.selection_model) {
        case SelectionModel::none: break;
        case SelectionModel::threshold: {
            std::vector<Alternative> others;
            for (const auto& r : recommenders_) {
                if (r.id() != c.current_recommender) others.push_back({r.id(), c.last_used_cycle.at(r.id())});
            }
            next = threshold_decide(c.scores.at(c.current_recommender), config_.switching_threshold,
                                    c.current_recommender, others);
            break;
        }
        case SelectionModel::ucb: {
            std::map<RecommenderId, double> ucb;
            for (const auto& r : recommenders_) {
                ucb[r.id()] = ucb_score(c.scores.at(r.id()), t, c.selection_counts.at(r.id()));
            }
            next = ucb_decide(ucb);
            break;
        }
        }
        if (next != c.current_recommender) {
            switches.push_back({cycle_, c.consumer_id, c.current_recommender, next});
            c.current_recommender = next;
        }
        ++c.selection_counts[next];
        c.last_used_cycle[next] = cycle_ + 1;
    }
}

Simulation::CycleOutcome Simulation::run_cycle()
{
    if (cycle_ >= config_.cycles) throw ValidationError("run already complete");
    CycleOutcome out;
    out.days.reserve(static_cast<std::size_t>(config_.days_per_cycle));
    for (std::int32_t d = 0; d < config_.days_per_cycle; ++d) out.days.push_back(run_day());
    close_cycle(out.switches);
    return out;
}

RunResult Simulation::run()
{
    RunResult result;
    result.config = config_;
    result.day_records.reserve(static_cast<std::size_t>(config_.days_per_cycle * config_.cycles));
    while (cycle_ < config_.cycles) {
        auto outcome = run_cycle();
        std::move(outcome.days.begin(), outcome.days.end(), std::back_inserter(result.day_records));
        result.switch_events.insert(result.switch_events.end(), outcome.switches.begin(), outcome.switches.end());
    }
    result.consumers = consumers_;
    result.providers = providers_;
    result.recommenders = recommenders_;
    result.provider_cycles = provider_cycles_;
    result.recommender_cycles = recommender_cycles_;
    result.niche_provider_id = niche_provider_id_;
    return result;
}

RunResult run_experiment(const SimConfig& config, const Population& population)
{
    return Simulation(config, population).run();
}

std::vector<double> daily_class_mean(const RunResult& r, ConsumerClass cls)
{
    std::map<ConsumerId, ConsumerClass> classes;
    for (const auto& c : r.consumers) classes[c.consumer_id] = c.consumer_class;
    std::vector<double> out;
    out.reserve(r.day_records.size());
    for (const auto& day : r.day_records) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& cd : day.per_consumer) {
            if (classes.at(cd.consumer) == cls) {
                sum += cd.list_utility;
                ++n;
            }
        }
        out.push_back(n == 0 ? 0.0 : sum / static_cast<double>(n));
    }
    return out;
}

std::vector<double> last_day_utilities(const RunResult& r, ConsumerClass cls)
{
    std::vector<double> out;
    if (r.day_records.empty()) return out;
    for (const auto& cd : r.day_records.back().per_consumer) {
        if (r.consumer(cd.consumer).consumer_class == cls) out.push_back(cd.list_utility);
    }
    return out;
}

std::vector<double> provider_utility_by_cycle(const RunResult& r, ProviderId provider)
{
    std::vector<double> out(static_cast<std::size_t>(r.config.cycles), 0.0);
    for (const auto& row : r.provider_cycles) {
        if (row.provider == provider) out[static_cast<std::size_t>(row.cycle - 1)] += row.utility;
    }
    return out;
}

void write_event_log(const RunResult& r, std::ostream& out)
{
    for (const auto& day : r.day_records) {
        for (std::size_t i = 0; i < day.per_consumer.size(); ++i) {
            const auto& cd = day.per_consumer[i];
            const auto list = day.list_of(i);
            nlohmann::json j{{"day", day.day},
                             {"consumer", cd.consumer},
                             {"recommender", cd.recommender},
                             {"list", std::vector<ItemId>(list.begin(), list.end())},
                             {"click", cd.clicked},
                             {"utility", cd.list_utility}};
            out << j.dump() << '\n';
        }
    }
}

std::vector<LoggedEvent> read_event_log(std::istream& in)
{
    std::vector<LoggedEvent> events;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            LoggedEvent e;
            j.at("day").get_to(e.day);
            j.at("consumer").get_to(e.consumer);
            j.at("recommender").get_to(e.recommender);
            j.at("list").get_to(e.list);
            j.at("click").get_to(e.click);
            j.at("utility").get_to(e.utility);
            events.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError(std::string("bad event log entry: ") + ex.what(), n);
        }
    }
    return events;
}

std::map<ProviderId, std::map<RecommenderId, double>> replay_provider_utilities(std::span<const LoggedEvent> events,
                                                                               const Catalog& catalog,
                                                                               const FeeSchedule& fees)
{
    std::map<ProviderId, Provider> counters;
    for (const auto& e : events) {
        for (auto id : e.list) {
            auto& p = counters[catalog.at(id).provider_id];
            ++p.display_counts[e.recommender];
        }
        ++counters[catalog.at(e.click).provider_id].click_counts[e.recommender];
    }
    std::map<ProviderId, std::map<RecommenderId, double>> out;
    for (const auto& [v, p] : counters) out[v] = accrue_provider_utility(p, fees);
    return out;
}

} // namespace ecosim
