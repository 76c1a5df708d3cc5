#pragma once

#include <ecosim/choice.hpp>
#include <ecosim/config.hpp>
#include <ecosim/ingest.hpp>
#include <ecosim/recommender.hpp>
#include <ecosim/rng.hpp>
#include <ecosim/types.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

namespace ecosim {

inline constexpr RecommenderId kMainstreamRecommender = 1;
inline constexpr RecommenderId kNicheRecommender = 2;

struct ConsumerDay
{
    ConsumerId consumer = 0;
    RecommenderId recommender = 0;
    ItemId clicked = 0;
    double list_utility = 0.0;
};

struct ProviderDelta
{
    ProviderId provider = 0;
    RecommenderId recommender = 0;
    std::int64_t displays = 0;
    std::int64_t clicks = 0;
};

/// Everything that happened on one day. Lists are stored flat, `list_size`
/// entries per consumer in `per_consumer` order.
struct DayRecord
{
    std::int32_t day = 0;
    std::int32_t list_size = 0;
    std::vector<ConsumerDay> per_consumer;
    std::vector<ItemId> lists;
    std::vector<ProviderDelta> per_provider_delta; // sorted by (provider, recommender)

    std::span<const ItemId> list_of(std::size_t i) const
    {
        return std::span<const ItemId>(lists).subspan(i * static_cast<std::size_t>(list_size),
                                                      static_cast<std::size_t>(list_size));
    }
};

struct SwitchEvent
{
    std::int32_t cycle = 0; // switch takes effect after this cycle
    ConsumerId consumer = 0;
    RecommenderId from = 0;
    RecommenderId to = 0;
};

// Cumulative counters and utility at the end of a cycle.
struct ProviderCycleRow
{
    std::int32_t cycle = 0;
    ProviderId provider = 0;
    ConsumerClass provider_class = ConsumerClass::mainstream;
    RecommenderId recommender = 0;
    std::int64_t displays = 0;
    std::int64_t clicks = 0;
    double utility = 0.0;
};

struct RecommenderCycleRow
{
    std::int32_t cycle = 0;
    RecommenderId recommender = 0;
    double fee_income = 0.0;
};

struct RunResult
{
    SimConfig config;
    std::vector<DayRecord> day_records;
    std::vector<Consumer> consumers;
    std::vector<Provider> providers;
    std::vector<ContentRecommender> recommenders;
    std::vector<ProviderCycleRow> provider_cycles;
    std::vector<RecommenderCycleRow> recommender_cycles;
    std::vector<SwitchEvent> switch_events;
    ProviderId niche_provider_id = 0;

    const Consumer& consumer(ConsumerId id) const;
    const Provider& provider(ProviderId id) const;
};

/// u_{v,k} = (phi_d - delta_d) n_d + (phi_c - delta_c) n_c for every recommender k.
std::map<RecommenderId, double> accrue_provider_utility(const Provider& provider, const FeeSchedule& fees);

/// Fee income of one recommender: sum over providers of delta_d n_d + delta_c n_c.
double accrue_recommender_utility(RecommenderId recommender, std::span<const Provider> providers,
                                  const FeeSchedule& fees);

/// Day/cycle loop over one population. Single-threaded and deterministic in
/// (config, population).
class Simulation
{
public:
    Simulation(SimConfig config, const Population& population);

    DayRecord run_day();

    struct CycleOutcome
    {
        std::vector<DayRecord> days;
        std::vector<SwitchEvent> switches;
    };
    CycleOutcome run_cycle();

    RunResult run();

    std::int32_t day() const { return day_; }
    std::int32_t cycle() const { return cycle_; }
    const std::vector<Consumer>& consumers() const { return consumers_; }
    const std::vector<Provider>& providers() const { return providers_; }
    const std::vector<ContentRecommender>& recommenders() const { return recommenders_; }
    const Catalog& catalog() const { return catalog_; }

private:
    ContentRecommender& recommender(RecommenderId id);
    Provider& provider(ProviderId id);
    void close_cycle(std::vector<SwitchEvent>& switches);

    SimConfig config_;
    Catalog catalog_;
    std::vector<Consumer> consumers_;
    std::vector<Provider> providers_;
    std::map<ProviderId, std::size_t> provider_pos_;
    std::vector<ContentRecommender> recommenders_;
    std::vector<Rng> choice_rngs_;    // per consumer
    std::vector<Rng> recommend_rngs_; // per (recommender, consumer)
    ProviderId niche_provider_id_ = 0;
    std::int32_t day_ = 0;   // days completed
    std::int32_t cycle_ = 0; // cycles completed
    std::vector<ProviderCycleRow> provider_cycles_;
    std::vector<RecommenderCycleRow> recommender_cycles_;
};

RunResult run_experiment(const SimConfig& config, const Population& population);

/// Mean list utility per day for one consumer class (index 0 = day 1).
std::vector<double> daily_class_mean(const RunResult& r, ConsumerClass cls);

/// Last-day list utility of every consumer in a class.
std::vector<double> last_day_utilities(const RunResult& r, ConsumerClass cls);

/// Utility of one provider summed over recommenders at the end of each cycle (index 0 = cycle 1).
std::vector<double> provider_utility_by_cycle(const RunResult& r, ProviderId provider);

// JSON-lines event log: one object per consumer-day.
void write_event_log(const RunResult& r, std::ostream& out);

struct LoggedEvent
{
    std::int32_t day = 0;
    ConsumerId consumer = 0;
    RecommenderId recommender = 0;
    std::vector<ItemId> list;
    ItemId click = 0;
    double utility = 0.0;
};

std::vector<LoggedEvent> read_event_log(std::istream& in);

/// Final u_{v,k} recomputed from logged events alone.
std::map<ProviderId, std::map<RecommenderId, double>> replay_provider_utilities(std::span<const LoggedEvent> events,
                                                                               const Catalog& catalog,
                                                                               const FeeSchedule& fees);

} // namespace ecosim
