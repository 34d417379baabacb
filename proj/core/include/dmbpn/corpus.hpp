#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "dmbpn/tensor.hpp"

namespace dmbpn {

/// One labeled event mention: a tokenized sentence, the position of its
/// trigger word, and the event-type label.
struct EventMention {
    std::vector<std::string> tokens;
    int trigger_index = 0;
    std::string event_type;
};

/// Dense word ids with reserved padding and unknown slots.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    Vocabulary();
    int add(const std::string& word);  // idempotent
    int id_of(const std::string& word) const;  // kUnk when absent
    bool contains(const std::string& word) const { return ids_.count(word) > 0; }
    const std::string& word_of(int id) const { return words_.at(static_cast<std::size_t>(id)); }
    int size() const { return static_cast<int>(words_.size()); }

private:
    std::map<std::string, int> ids_;
    std::vector<std::string> words_;
};

/// Word vectors aligned to vocabulary ids, one row per id.
struct EmbeddingTable {
    Tensor table;  // [vocab, d_w], trainable
    int dim = 0;
    std::size_t loaded_words = 0;     // rows taken from the file
    std::size_t random_words = 0;     // rows initialized randomly
    std::size_t duplicate_warnings = 0;
};

struct LoadResult {
    std::vector<EventMention> mentions;
    std::size_t rejected = 0;   // records failing validation
    std::size_t truncated = 0;  // records shortened to max_len
};

/// Reads UTF-8 JSONL with fields tokens / trigger_index / event_type.
/// Over-length sentences are truncated to max_len; a record whose trigger
/// would be cut off is rejected and counted. Malformed JSON throws ParseError
/// with the line number.
LoadResult load_jsonl(const std::string& path, int max_len);

/// Parses JSONL from an in-memory string (same contract as load_jsonl).
LoadResult parse_jsonl(const std::string& text, int max_len);

/// Frequency-thresholded vocabulary. Ids are assigned by (frequency desc,
/// word asc), after the reserved pad/unk slots, so the assignment is
/// deterministic.
Vocabulary build_vocab(const std::vector<EventMention>& mentions, std::size_t min_count = 1);

/// Loads whitespace-separated "word v1 .. v_dw" lines. Words missing from the
/// file get seeded uniform rows in [-0.25, 0.25]. A repeated word keeps its
/// last occurrence and bumps duplicate_warnings.
EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab, int d_w,
                               std::uint64_t seed);

/// Fresh random table for runs without pretrained vectors.
EmbeddingTable random_embeddings(const Vocabulary& vocab, int d_w, std::uint64_t seed);

/// (distance to start, distance to end, sentence length) per token, each
/// clamped to [0, max_index] so it can index a fixed embedding table.
std::vector<std::array<int, 3>> position_features(int sentence_length, int max_index = 255);

struct SynthOptions {
    int sentence_len = 7;
    int signature_words = 3;  // trigger words owned by each type
};

/// Synthetic separable corpus: each type owns a disjoint signature-trigger
/// set; sentences are random filler with one signature word at a random
/// position. A trigger-word lookup classifies it perfectly by construction.
std::vector<EventMention> synth_generate(int n_types, int per_type, int vocab_size,
                                         std::uint64_t seed, const SynthOptions& opts = {});

/// Mentions grouped by event type, plus the type inventory of one split.
struct DatasetSplit {
    std::vector<std::string> train_types, val_types, test_types;
    std::map<std::string, std::vector<EventMention>> by_type;

    std::map<std::string, std::vector<EventMention>> section(
        const std::vector<std::string>& types) const;
    std::map<std::string, std::vector<EventMention>> train_section() const { return section(train_types); }
    std::map<std::string, std::vector<EventMention>> val_section() const { return section(val_types); }
    std::map<std::string, std::vector<EventMention>> test_section() const { return section(test_types); }
};

/// Partitions event *types* (never instances) into train/val/test by the
/// given fractions. Deterministic under seed; each split receives at least
/// one type or a DomainError is thrown.
DatasetSplit split_by_type(const std::vector<EventMention>& mentions, double train_frac,
                           double val_frac, double test_frac, std::uint64_t seed);

/// Same, with explicit type lists. Types must be disjoint and cover only
/// labels present in the data.
DatasetSplit split_by_type(const std::vector<EventMention>& mentions,
                           const std::vector<std::string>& train_types,
                           const std::vector<std::string>& val_types,
                           const std::vector<std::string>& test_types);

/// Writes mentions back out as JSONL (one object per line).
void write_jsonl(const std::string& path, const std::vector<EventMention>& mentions);

}  // namespace dmbpn
