#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dmbpn/corpus.hpp"

namespace dmbpn {

using TypeSection = std::map<std::string, std::vector<EventMention>>;

struct EpisodeConfig {
    int n_way = 5;
    int k_shot = 5;
    int q_query = 5;

    void validate() const;
    /// Minimum mentions a type needs to be sampled: K support plus the worst
    /// case ceil(Q/N) queries, all without replacement.
    int min_mentions_per_type() const;
};

/// One N-way-K-shot task. Mentions are copies; source indices into the
/// originating section are kept so tests can assert support/query
/// disjointness structurally.
struct Episode {
    std::vector<std::string> type_names;                    // local label -> global type
    std::vector<std::vector<EventMention>> support;         // [N][K]
    std::vector<std::vector<int>> support_src;              // [N][K] index within type list
    std::vector<EventMention> query;
    std::vector<int> query_label;                           // gold local labels
    std::vector<int> query_src;                             // index within its type list

    int n_way() const { return static_cast<int>(type_names.size()); }
    int k_shot() const { return support.empty() ? 0 : static_cast<int>(support[0].size()); }
    int query_count() const { return static_cast<int>(query.size()); }
    std::string to_json() const;  // debugging dump
};

struct EligibleTypes {
    std::vector<std::string> types;
    std::size_t excluded = 0;  // types below the mention threshold
};

EligibleTypes eligible_types(const TypeSection& section, const EpisodeConfig& cfg);

/// Draws N types without replacement, K support mentions per type, and Q
/// queries whose types are balanced over the N sampled types (floor(Q/N)
/// each plus a uniformly chosen remainder). Support and query instances are
/// disjoint within each type. Throws SamplingError naming the shortfall when
/// fewer than N types are eligible.
Episode sample_episode(const TypeSection& section, const EpisodeConfig& cfg, Rng& rng);

/// Reproducible sequence of exactly `iterations` episodes.
class EpisodeStream {
public:
    EpisodeStream(const TypeSection& section, EpisodeConfig cfg, std::size_t iterations,
                  std::uint64_t seed);
    std::optional<Episode> next();
    std::size_t remaining() const { return remaining_; }
    std::size_t excluded_types() const { return excluded_; }

private:
    const TypeSection& section_;
    EpisodeConfig cfg_;
    std::size_t remaining_;
    std::size_t excluded_;
    Rng rng_;
};

}  // namespace dmbpn
