#pragma once

#include <ecosim/rng.hpp>
#include <ecosim/types.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <vector>

namespace ecosim {

/// Consumer utility for one item: (f . p) / F, with F the feature dimension.
template <class Scalar_>
Scalar_ item_utility(const FeatureVector<Scalar_>& f, const PreferenceVector<Scalar_>& p)
{
    if (f.size() != p.size()) {
        throw ValidationError("item_utility: feature dimension " + std::to_string(f.size()) +
                              " does not match preference dimension " + std::to_string(p.size()));
    }
    if (f.size() == 0) throw ValidationError("item_utility: empty feature vector");
    return f.flags().dot(p.weights()) / static_cast<Scalar_>(f.size());
}

/// Mean of item utilities over a nonempty list.
template <class Derived>
typename Derived::Scalar list_utility(const Eigen::MatrixBase<Derived>& utilities)
{
    if (utilities.size() == 0) throw ValidationError("list_utility: empty recommendation list");
    return utilities.mean();
}

/// Softmax over list utilities with the maximum subtracted before exponentiation.
template <class Derived>
Vector<typename Derived::Scalar> selection_probabilities(const Eigen::MatrixBase<Derived>& utilities)
{
    using Scalar = typename Derived::Scalar;
    if (utilities.size() == 0) throw ValidationError("selection_probabilities: empty input");
    if (!utilities.allFinite()) throw ValidationError("selection_probabilities: non-finite utility");
    const Scalar top = utilities.maxCoeff();
    Vector<Scalar> e = (utilities.array() - top).exp().matrix();
    return e / e.sum();
}

/// Categorical draw. Exactly one index is always returned.
template <class Derived>
Index select_item(const Eigen::MatrixBase<Derived>& probabilities, Rng& rng)
{
    const auto u = static_cast<typename Derived::Scalar>(rng.uniform());
    typename Derived::Scalar acc(0);
    Index last_positive = 0;
    for (Index i = 0; i < probabilities.size(); ++i) {
        if (probabilities[i] <= 0) continue;
        acc += probabilities[i];
        last_positive = i;
        if (u < acc) return i;
    }
    // Rounding left the cumulative sum just below u.
    return last_positive;
}

/// Recency-weighted recommender score: (U * beta + u) / (1 + beta).
template <class Scalar_>
Scalar_ update_recommender_score(Scalar_ score, Scalar_ list_utility, Scalar_ recency_bias)
{
    return (score * recency_bias + list_utility) / (Scalar_(1) + recency_bias);
}

struct Alternative
{
    RecommenderId id = 0;
    std::int32_t last_used_cycle = 0; // 0 = never used
};

/// Switches away from `current` when its score is below `threshold` and an
/// alternative exists. Among several alternatives the least recently used wins,
/// ties by ascending id.
RecommenderId threshold_decide(double current_score, double threshold, RecommenderId current,
                               std::span<const Alternative> others);

/// Upper confidence bound with decay. Unvisited recommenders (n = 0) score +inf.
double ucb_score(double score, std::int64_t day, std::int64_t times_selected);

/// Argmax, ties by ascending id.
RecommenderId ucb_decide(const std::map<RecommenderId, double>& scores);

struct ListUtilityReport
{
    VectorXd per_item;
    double list_utility = 0.0;
    VectorXd probabilities;
};

ListUtilityReport evaluate_list(std::span<const FeatureVector<>* const> items, const PreferenceVector<>& p);

} // namespace ecosim
