#include "dmbpn/fewshot_ec.hpp"

namespace dmbpn {

std::pair<SupportEncodings, QueryEncodings> integrate_sentences(
    const Episode& episode, std::span<const Var> mention_encodings) {
    const int n = episode.n_way();
    const int k = episode.k_shot();
    const std::size_t expected =
        static_cast<std::size_t>(n) * k + episode.query.size();
    if (mention_encodings.size() != expected)
        throw StateError("integrate_sentences: expected " + std::to_string(expected) +
                         " encodings, got " + std::to_string(mention_encodings.size()));

    SupportEncodings support;
    support.n_way = n;
    support.k_shot = k;
    support.grid.assign(mention_encodings.begin(),
                        mention_encodings.begin() + static_cast<std::ptrdiff_t>(n) * k);
    QueryEncodings query;
    query.list.assign(mention_encodings.begin() + static_cast<std::ptrdiff_t>(n) * k,
                      mention_encodings.end());
    return {std::move(support), std::move(query)};
}

std::vector<Var> fuse_support(Tape& tape, const SupportEncodings& support,
                              const BiGruParams& p) {
    if (support.grid.empty()) throw DomainError("fuse_support: empty support grid");
    return bigru_sequence(tape, support.grid, p);
}

std::vector<Var> ec_question(Tape& tape, const SupportEncodings& support,
                             const BiGruParams& p) {
    if (support.grid.empty()) throw DomainError("ec_question: empty support grid");
    return bigru_sequence(tape, support.grid, p);
}

PrototypeSet memory_prototypes(Tape& tape, const SupportEncodings& support,
                               std::span<const Var> facts, std::span<const Var> questions,
                               int passes, const MemoryParams& p) {
    if (facts.size() != support.grid.size() || questions.size() != support.grid.size())
        throw DimensionError("memory_prototypes: facts/questions must cover the grid");

    PrototypeSet protos;
    protos.prototypes.reserve(static_cast<std::size_t>(support.n_way));
    for (int type = 0; type < support.n_way; ++type) {
        const std::size_t base = static_cast<std::size_t>(type) * support.k_shot;
        std::span<const Var> type_facts = facts.subspan(base, static_cast<std::size_t>(support.k_shot));
        std::vector<Var> refined;
        refined.reserve(static_cast<std::size_t>(support.k_shot));
        for (int shot = 0; shot < support.k_shot; ++shot)
            refined.push_back(
                run_episodic_memory(tape, type_facts, questions[base + shot], passes, p));
        protos.prototypes.push_back(tape.average(refined));
    }
    return protos;
}

PrototypeSet avg_prototype(Tape& tape, const SupportEncodings& support) {
    if (support.grid.empty()) throw DomainError("avg_prototype: empty support grid");
    PrototypeSet protos;
    protos.prototypes.reserve(static_cast<std::size_t>(support.n_way));
    for (int type = 0; type < support.n_way; ++type) {
        std::span<const Var> shots(
            support.grid.data() + static_cast<std::size_t>(type) * support.k_shot,
            static_cast<std::size_t>(support.k_shot));
        protos.prototypes.push_back(tape.average(shots));
    }
    return protos;
}

Var classify_query(Tape& tape, Var query, const PrototypeSet& protos) {
    if (protos.prototypes.empty()) throw DomainError("classify_query: no prototypes");
    std::vector<Var> neg_dist;
    neg_dist.reserve(protos.prototypes.size());
    for (Var e : protos.prototypes) {
        if (tape.dim(e) != tape.dim(query))
            throw DimensionError("classify_query: query dim " +
                                 std::to_string(tape.dim(query)) + " != prototype dim " +
                                 std::to_string(tape.dim(e)));
        neg_dist.push_back(tape.scale(tape.norm(tape.sub(query, e)), -1.0));
    }
    return tape.softmax(tape.concat(neg_dist));
}

Var matching_score(Tape& tape, Var query, const SupportEncodings& support) {
    if (support.grid.empty()) throw DomainError("matching_score: empty support grid");
    constexpr double kNormFloor = 1e-8;
    Var qn = tape.clamp_min(tape.norm(query), kNormFloor);

    std::vector<Var> type_scores;
    type_scores.reserve(static_cast<std::size_t>(support.n_way));
    for (int type = 0; type < support.n_way; ++type) {
        std::vector<Var> cosines;
        cosines.reserve(static_cast<std::size_t>(support.k_shot));
        for (int shot = 0; shot < support.k_shot; ++shot) {
            Var s = support.at(type, shot);
            if (tape.dim(s) != tape.dim(query))
                throw DimensionError("matching_score: encoding dims differ");
            Var sn = tape.clamp_min(tape.norm(s), kNormFloor);
            cosines.push_back(tape.div(tape.dot(query, s), tape.mul(qn, sn)));
        }
        type_scores.push_back(tape.average(cosines));
    }
    return tape.softmax(tape.concat(type_scores));
}

Var ec_loss(Tape& tape, Var pred, int gold) {
    if (gold < 0 || gold >= tape.dim(pred))
        throw DomainError("ec_loss: gold label " + std::to_string(gold) +
                          " out of range for " + std::to_string(tape.dim(pred)) + " types");
    return tape.cross_entropy(pred, gold);
}

Var joint_loss(Tape& tape, Var l_ti, Var l_ec, double lambda) {
    if (lambda < 0.0 || lambda > 1.0)
        throw DomainError("joint_loss: lambda must lie in [0, 1]");
    return tape.add(tape.scale(l_ti, lambda), tape.scale(l_ec, 1.0 - lambda));
}

}  // namespace dmbpn
