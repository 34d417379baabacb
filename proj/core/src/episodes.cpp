#include "dmbpn/episodes.hpp"

#include <algorithm>

#include <json.hpp>

namespace dmbpn {

void EpisodeConfig::validate() const {
    if (n_way < 2) throw DomainError("episode config: n_way must be >= 2");
    if (k_shot < 1) throw DomainError("episode config: k_shot must be >= 1");
    if (q_query < 1) throw DomainError("episode config: q_query must be >= 1");
}

int EpisodeConfig::min_mentions_per_type() const {
    return k_shot + (q_query + n_way - 1) / n_way;
}

EligibleTypes eligible_types(const TypeSection& section, const EpisodeConfig& cfg) {
    cfg.validate();
    EligibleTypes out;
    const std::size_t need = static_cast<std::size_t>(cfg.min_mentions_per_type());
    for (const auto& [type, mentions] : section) {
        if (mentions.size() >= need) out.types.push_back(type);
        else ++out.excluded;
    }
    return out;
}

Episode sample_episode(const TypeSection& section, const EpisodeConfig& cfg, Rng& rng) {
    EligibleTypes eligible = eligible_types(section, cfg);
    if (static_cast<int>(eligible.types.size()) < cfg.n_way)
        throw SamplingError("sample_episode: need " + std::to_string(cfg.n_way) +
                            " eligible types, have " + std::to_string(eligible.types.size()) +
                            " (" + std::to_string(eligible.excluded) +
                            " excluded below " +
                            std::to_string(cfg.min_mentions_per_type()) + " mentions)");

    rng.shuffle(eligible.types);
    Episode ep;
    ep.type_names.assign(eligible.types.begin(), eligible.types.begin() + cfg.n_way);

    // Balanced query assignment: floor(Q/N) per type plus a remainder spread
    // over distinct uniformly chosen types, so no type ever needs more than
    // ceil(Q/N) queries.
    std::vector<int> queries_per_type(static_cast<std::size_t>(cfg.n_way),
                                      cfg.q_query / cfg.n_way);
    std::vector<int> order(static_cast<std::size_t>(cfg.n_way));
    for (int i = 0; i < cfg.n_way; ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(order);
    for (int r = 0; r < cfg.q_query % cfg.n_way; ++r)
        ++queries_per_type[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];

    struct PendingQuery {
        EventMention mention;
        int label;
        int src;
    };
    std::vector<PendingQuery> pending;

    for (int i = 0; i < cfg.n_way; ++i) {
        const auto& pool = section.at(ep.type_names[static_cast<std::size_t>(i)]);
        std::vector<int> idx(pool.size());
        for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = static_cast<int>(j);
        rng.shuffle(idx);

        std::vector<EventMention> shots;
        std::vector<int> shot_src;
        for (int j = 0; j < cfg.k_shot; ++j) {
            shots.push_back(pool[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])]);
            shot_src.push_back(idx[static_cast<std::size_t>(j)]);
        }
        ep.support.push_back(std::move(shots));
        ep.support_src.push_back(std::move(shot_src));

        for (int q = 0; q < queries_per_type[static_cast<std::size_t>(i)]; ++q) {
            const int src = idx[static_cast<std::size_t>(cfg.k_shot + q)];
            pending.push_back({pool[static_cast<std::size_t>(src)], i, src});
        }
    }

    rng.shuffle(pending);
    for (auto& p : pending) {
        ep.query.push_back(std::move(p.mention));
        ep.query_label.push_back(p.label);
        ep.query_src.push_back(p.src);
    }
    return ep;
}

std::string Episode::to_json() const {
    nlohmann::json j;
    j["types"] = type_names;
    auto mention_json = [](const EventMention& m) {
        nlohmann::json o;
        o["tokens"] = m.tokens;
        o["trigger_index"] = m.trigger_index;
        return o;
    };
    for (int i = 0; i < n_way(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& m : support[static_cast<std::size_t>(i)]) row.push_back(mention_json(m));
        j["support"].push_back(row);
    }
    j["query"] = nlohmann::json::array();
    for (std::size_t q = 0; q < query.size(); ++q) {
        nlohmann::json o = mention_json(query[q]);
        o["label"] = query_label[q];
        j["query"].push_back(o);
    }
    return j.dump();
}

EpisodeStream::EpisodeStream(const TypeSection& section, EpisodeConfig cfg,
                             std::size_t iterations, std::uint64_t seed)
    : section_(section), cfg_(cfg), remaining_(iterations),
      excluded_(eligible_types(section, cfg).excluded), rng_(seed) {
    cfg_.validate();
}

std::optional<Episode> EpisodeStream::next() {
    if (remaining_ == 0) return std::nullopt;
    --remaining_;
    return sample_episode(section_, cfg_, rng_);
}

}  // namespace dmbpn
