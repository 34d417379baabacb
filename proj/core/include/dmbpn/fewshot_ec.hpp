#pragma once

#include <span>
#include <vector>

#include "dmbpn/episodes.hpp"
#include "dmbpn/memory.hpp"

namespace dmbpn {

/// Sentence encodings of an episode's support set, type-major shot-minor.
struct SupportEncodings {
    int n_way = 0;
    int k_shot = 0;
    std::vector<Var> grid;  // [n_way * k_shot]

    Var at(int type, int shot) const {
        return grid[static_cast<std::size_t>(type * k_shot + shot)];
    }
};

struct QueryEncodings {
    std::vector<Var> list;
};

struct PrototypeSet {
    std::vector<Var> prototypes;  // one per episode type
};

/// Arranges per-mention sentence encodings into the support grid and query
/// list following the episode structure. `mention_encodings` must hold the
/// support encodings type-major shot-minor, then the query encodings, i.e.
/// the order in which the episode lists its mentions.
std::pair<SupportEncodings, QueryEncodings> integrate_sentences(
    const Episode& episode, std::span<const Var> mention_encodings);

/// Input fusion over the support set: Bi-GRU across the N*K sentence
/// encodings in grid order; one fact per support sentence.
std::vector<Var> fuse_support(Tape& tape, const SupportEncodings& support,
                              const BiGruParams& p);

/// Question module over the support set ("how does this mention contribute
/// to the prototype?"); one question vector per support sentence.
std::vector<Var> ec_question(Tape& tape, const SupportEncodings& support,
                             const BiGruParams& p);

/// Memory-refined prototypes: for each type, every shot's question drives an
/// episodic-memory run over that type's own facts; the prototype is the mean
/// of the K refined encodings. Facts never cross type boundaries here.
PrototypeSet memory_prototypes(Tape& tape, const SupportEncodings& support,
                               std::span<const Var> facts, std::span<const Var> questions,
                               int passes, const MemoryParams& p);

/// Vanilla prototypes: arithmetic mean of each type's support encodings.
/// The mean of K identical encodings reproduces the encoding bit-for-bit.
PrototypeSet avg_prototype(Tape& tape, const SupportEncodings& support);

/// Distance-softmax classification: P(y=k) proportional to
/// exp(-||query - prototype_k||), Euclidean norm.
Var classify_query(Tape& tape, Var query, const PrototypeSet& protos);

/// Matching baseline: per-type mean cosine similarity between the query and
/// that type's shots, softmax over types. Norms are floored at 1e-8.
Var matching_score(Tape& tape, Var query, const SupportEncodings& support);

/// -log pred[gold], floored as in the kernel.
Var ec_loss(Tape& tape, Var pred, int gold);

/// lambda * l_ti + (1 - lambda) * l_ec; lambda must lie in [0, 1].
Var joint_loss(Tape& tape, Var l_ti, Var l_ec, double lambda);

}  // namespace dmbpn
