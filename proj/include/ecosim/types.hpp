#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecosim {

using Index = Eigen::Index;
using ItemId = std::int32_t;
using ConsumerId = std::int32_t;
using ProviderId = std::int32_t;
using RecommenderId = std::int32_t;

template <class Scalar_>
using Vector = Eigen::Matrix<Scalar_, Eigen::Dynamic, 1>;

using VectorXd = Vector<double>;

// Input failed a domain invariant. The message names the offending field or index.
class ValidationError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

enum class ConsumerClass { niche, mainstream };
enum class SelectionModel { none, threshold, ucb };

const char* to_string(ConsumerClass c);
const char* to_string(SelectionModel m);
ConsumerClass consumer_class_from_string(const std::string& s);
SelectionModel selection_model_from_string(const std::string& s);

/// Binary genre indicators of an item. Every entry is 0 or 1.
template <class Scalar_ = double>
class FeatureVector
{
public:
    using scalar_t = Scalar_;
    using vec_t = Vector<Scalar_>;

    FeatureVector() = default;

    explicit FeatureVector(vec_t flags) : flags_(std::move(flags))
    {
        for (Index g = 0; g < flags_.size(); ++g) {
            if (flags_[g] != Scalar_(0) && flags_[g] != Scalar_(1)) {
                throw ValidationError("feature flag at index " + std::to_string(g) + " is not 0 or 1");
            }
        }
    }

    static FeatureVector from_flags(std::span<const int> flags)
    {
        vec_t v(static_cast<Index>(flags.size()));
        for (std::size_t g = 0; g < flags.size(); ++g) v[static_cast<Index>(g)] = static_cast<Scalar_>(flags[g]);
        return FeatureVector(std::move(v));
    }

    const vec_t& flags() const { return flags_; }
    Index size() const { return flags_.size(); }
    bool has(Index g) const { return flags_[g] != Scalar_(0); }
    Index count() const { return static_cast<Index>((flags_.array() != Scalar_(0)).count()); }

    bool operator==(const FeatureVector& o) const { return flags_ == o.flags_; }

private:
    vec_t flags_;
};

/// Nonnegative genre weights summing to one.
template <class Scalar_ = double>
class PreferenceVector
{
public:
    using scalar_t = Scalar_;
    using vec_t = Vector<Scalar_>;

    PreferenceVector() = default;

    // Scales raw nonnegative weights to unit sum. Throws on negative, non-finite
    // or all-zero input.
    static PreferenceVector normalize(const Eigen::Ref<const vec_t>& raw)
    {
        for (Index g = 0; g < raw.size(); ++g) {
            if (!std::isfinite(static_cast<double>(raw[g])) || raw[g] < Scalar_(0)) {
                throw ValidationError("preference weight at index " + std::to_string(g) +
                                      " must be finite and nonnegative");
            }
        }
        const Scalar_ total = raw.sum();
        if (!(total > Scalar_(0))) {
            throw ValidationError("preference weights at indices 0.." + std::to_string(raw.size() - 1) +
                                  " are all zero");
        }
        PreferenceVector p;
        p.weights_ = raw / total;
        return p;
    }

    const vec_t& weights() const { return weights_; }
    Index size() const { return weights_.size(); }
    Scalar_ operator[](Index g) const { return weights_[g]; }

    bool operator==(const PreferenceVector& o) const { return weights_ == o.weights_; }

private:
    vec_t weights_;
};

template <class Scalar_>
PreferenceVector<Scalar_> normalize_preference(const Eigen::Ref<const Vector<Scalar_>>& raw)
{
    return PreferenceVector<Scalar_>::normalize(raw);
}

inline PreferenceVector<double> normalize_preference(std::span<const double> raw)
{
    return PreferenceVector<double>::normalize(
        Eigen::Map<const VectorXd>(raw.data(), static_cast<Index>(raw.size())));
}

struct Item
{
    ItemId item_id = 0;
    ProviderId provider_id = 0;
    FeatureVector<> features;
    std::int64_t popularity = 0;
};

using Catalog = std::map<ItemId, Item>;

struct Consumer
{
    ConsumerId consumer_id = 0;
    PreferenceVector<> preferences;
    ConsumerClass consumer_class = ConsumerClass::mainstream;
    RecommenderId current_recommender = 0;
    std::map<RecommenderId, double> scores;                 // U_{j,k}
    std::map<RecommenderId, std::int64_t> selection_counts; // n_{j,k}
    std::map<RecommenderId, std::int32_t> last_used_cycle;  // 0 = never
    std::vector<ItemId> click_history;
};

struct Provider
{
    ProviderId provider_id = 0;
    ConsumerClass provider_class = ConsumerClass::mainstream;
    std::vector<ItemId> item_ids; // sorted ascending
    std::map<RecommenderId, std::int64_t> display_counts;
    std::map<RecommenderId, std::int64_t> click_counts;
    std::map<RecommenderId, double> utility;

    double total_utility() const
    {
        double s = 0.0;
        for (const auto& [k, u] : utility) s += u;
        return s;
    }
};

struct FeeSchedule
{
    double display_fee = 0.01;    // delta_d
    double click_fee = 0.1;       // delta_c
    double display_utility = 0.1; // phi_d
    double click_utility = 0.4;   // phi_c

    bool operator==(const FeeSchedule&) const = default;
};

} // namespace ecosim
