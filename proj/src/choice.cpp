#include <ecosim/choice.hpp>

namespace ecosim {

RecommenderId threshold_decide(double current_score, double threshold, RecommenderId current,
                               std::span<const Alternative> others)
{
    if (!(current_score < threshold) || others.empty()) return current;
    const Alternative* best = nullptr;
    for (const auto& alt : others) {
        if (alt.id == current) continue;
        if (best == nullptr || alt.last_used_cycle < best->last_used_cycle ||
            (alt.last_used_cycle == best->last_used_cycle && alt.id < best->id)) {
            best = &alt;
        }
    }
    return best ? best->id : current;
}

double ucb_score(double score, std::int64_t day, std::int64_t times_selected)
{
    if (day < 1) throw ValidationError("ucb_score: day index must be >= 1, got " + std::to_string(day));
    if (times_selected <= 0) return std::numeric_limits<double>::infinity();
    const double t = static_cast<double>(day);
    return score + std::sqrt(2.0 * std::log(t) / static_cast<double>(times_selected)) / (1.0 + t);
}

RecommenderId ucb_decide(const std::map<RecommenderId, double>& scores)
{
    if (scores.empty()) throw ValidationError("ucb_decide: no recommenders");
    auto best = scores.begin();
    for (auto it = std::next(scores.begin()); it != scores.end(); ++it) {
        if (it->second > best->second) best = it;
    }
    return best->first;
}

ListUtilityReport evaluate_list(std::span<const FeatureVector<>* const> items, const PreferenceVector<>& p)
{
    if (items.empty()) throw ValidationError("evaluate_list: empty recommendation list");
    ListUtilityReport r;
    r.per_item.resize(static_cast<Index>(items.size()));
    for (std::size_t i = 0; i < items.size(); ++i) {
        r.per_item[static_cast<Index>(i)] = item_utility(*items[i], p);
    }
    r.list_utility = list_utility(r.per_item);
    r.probabilities = selection_probabilities(r.per_item);
    return r;
}

} // namespace ecosim
