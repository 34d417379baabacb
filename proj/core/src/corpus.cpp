#include "dmbpn/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dmbpn {

using nlohmann::json;

Vocabulary::Vocabulary() {
    words_ = {"<pad>", "<unk>"};
    ids_ = {{"<pad>", kPad}, {"<unk>", kUnk}};
}

int Vocabulary::add(const std::string& word) {
    auto it = ids_.find(word);
    if (it != ids_.end()) return it->second;
    int id = static_cast<int>(words_.size());
    words_.push_back(word);
    ids_.emplace(word, id);
    return id;
}

int Vocabulary::id_of(const std::string& word) const {
    auto it = ids_.find(word);
    return it == ids_.end() ? kUnk : it->second;
}

namespace {

LoadResult parse_jsonl_stream(std::istream& in, int max_len) {
    if (max_len < 1) throw DomainError("load_jsonl: max_len must be >= 1");
    LoadResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object())
            throw ParseError("load_jsonl: malformed JSON object", line_no);
        if (!obj.contains("tokens") || !obj["tokens"].is_array() ||
            !obj.contains("trigger_index") || !obj["trigger_index"].is_number_integer() ||
            !obj.contains("event_type") || !obj["event_type"].is_string())
            throw ParseError("load_jsonl: expected fields tokens/trigger_index/event_type",
                             line_no);

        EventMention m;
        for (const auto& t : obj["tokens"]) {
            if (!t.is_string())
                throw ParseError("load_jsonl: tokens must be strings", line_no);
            m.tokens.push_back(t.get<std::string>());
        }
        m.trigger_index = obj["trigger_index"].get<int>();
        m.event_type = obj["event_type"].get<std::string>();

        if (m.tokens.empty() || m.trigger_index < 0 ||
            m.trigger_index >= static_cast<int>(m.tokens.size())) {
            ++result.rejected;
            continue;
        }
        if (static_cast<int>(m.tokens.size()) > max_len) {
            if (m.trigger_index >= max_len) {  // trigger would be cut off
                ++result.rejected;
                continue;
            }
            m.tokens.resize(static_cast<std::size_t>(max_len));
            ++result.truncated;
        }
        result.mentions.push_back(std::move(m));
    }
    return result;
}

}  // namespace

LoadResult load_jsonl(const std::string& path, int max_len) {
    std::ifstream in(path);
    if (!in) throw StateError("load_jsonl: cannot open " + path);
    return parse_jsonl_stream(in, max_len);
}

LoadResult parse_jsonl(const std::string& text, int max_len) {
    std::istringstream in(text);
    return parse_jsonl_stream(in, max_len);
}

void write_jsonl(const std::string& path, const std::vector<EventMention>& mentions) {
    std::ofstream out(path);
    if (!out) throw StateError("write_jsonl: cannot open " + path);
    for (const auto& m : mentions) {
        json obj;
        obj["tokens"] = m.tokens;
        obj["trigger_index"] = m.trigger_index;
        obj["event_type"] = m.event_type;
        out << obj.dump() << "\n";
    }
}

Vocabulary build_vocab(const std::vector<EventMention>& mentions, std::size_t min_count) {
    if (mentions.empty()) throw DomainError("build_vocab: no mentions");
    std::map<std::string, std::size_t> freq;
    for (const auto& m : mentions)
        for (const auto& t : m.tokens) ++freq[t];

    std::vector<std::pair<std::string, std::size_t>> order(freq.begin(), freq.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    for (const auto& [word, count] : order)
        if (count >= min_count) vocab.add(word);
    return vocab;
}

EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab, int d_w,
                               std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw StateError("load_embeddings: cannot open " + path);

    std::map<std::string, std::vector<double>> file_vectors;
    std::size_t duplicates = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        std::vector<double> vec;
        double v;
        while (ls >> v) vec.push_back(v);
        if (static_cast<int>(vec.size()) != d_w)
            throw ParseError("load_embeddings: expected " + std::to_string(d_w) +
                                 " values, got " + std::to_string(vec.size()),
                             line_no);
        if (file_vectors.count(word)) ++duplicates;  // last occurrence wins
        file_vectors[word] = std::move(vec);
    }

    EmbeddingTable table = random_embeddings(vocab, d_w, seed);
    table.duplicate_warnings = duplicates;
    table.loaded_words = 0;
    for (int id = 0; id < vocab.size(); ++id) {
        auto it = file_vectors.find(vocab.word_of(id));
        if (it == file_vectors.end()) continue;
        std::copy(it->second.begin(), it->second.end(),
                  table.table.values.begin() + static_cast<std::size_t>(id) * d_w);
        ++table.loaded_words;
    }
    table.random_words = static_cast<std::size_t>(vocab.size()) - table.loaded_words;
    table.table.check_invariants("embeddings");
    return table;
}

EmbeddingTable random_embeddings(const Vocabulary& vocab, int d_w, std::uint64_t seed) {
    if (d_w < 1) throw DomainError("embeddings: dimension must be >= 1");
    Rng rng(seed);
    EmbeddingTable table;
    table.dim = d_w;
    table.table = Tensor::uniform({vocab.size(), d_w}, rng, -0.25, 0.25);
    table.table.trainable = true;
    table.random_words = static_cast<std::size_t>(vocab.size());
    return table;
}

std::vector<std::array<int, 3>> position_features(int sentence_length, int max_index) {
    if (sentence_length < 1) throw DomainError("position_features: length must be >= 1");
    std::vector<std::array<int, 3>> out(static_cast<std::size_t>(sentence_length));
    auto clamp = [max_index](int v) { return std::min(std::max(v, 0), max_index); };
    for (int i = 0; i < sentence_length; ++i)
        out[static_cast<std::size_t>(i)] = {clamp(i), clamp(sentence_length - 1 - i),
                                            clamp(sentence_length)};
    return out;
}

std::vector<EventMention> synth_generate(int n_types, int per_type, int vocab_size,
                                         std::uint64_t seed, const SynthOptions& opts) {
    if (n_types < 2) throw DomainError("synth_generate: need at least 2 types");
    if (per_type < 1) throw DomainError("synth_generate: per_type must be >= 1");
    if (opts.sentence_len < 2) throw DomainError("synth_generate: sentences need >= 2 tokens");
    const int needed = n_types * opts.signature_words;
    if (vocab_size < needed + 2)
        throw DomainError("synth_generate: vocab_size " + std::to_string(vocab_size) +
                          " too small for " + std::to_string(needed) +
                          " disjoint signature words plus filler");

    std::vector<std::string> words;
    words.reserve(static_cast<std::size_t>(vocab_size));
    for (int i = 0; i < vocab_size; ++i) {
        std::ostringstream os;
        os << "w" << i;
        words.push_back(os.str());
    }
    // First signature_words*n_types words are signatures, the rest filler.
    const int filler_base = needed;
    const int filler_count = vocab_size - needed;

    Rng rng(seed);
    std::vector<EventMention> mentions;
    mentions.reserve(static_cast<std::size_t>(n_types) * per_type);
    for (int t = 0; t < n_types; ++t) {
        std::ostringstream label;
        label << "etype_" << t;
        for (int k = 0; k < per_type; ++k) {
            EventMention m;
            m.event_type = label.str();
            m.tokens.resize(static_cast<std::size_t>(opts.sentence_len));
            for (auto& tok : m.tokens)
                tok = words[static_cast<std::size_t>(
                    filler_base + static_cast<int>(rng.uniform_int(
                                      static_cast<std::uint64_t>(filler_count))))];
            m.trigger_index = static_cast<int>(
                rng.uniform_int(static_cast<std::uint64_t>(opts.sentence_len)));
            const int sig = t * opts.signature_words +
                            static_cast<int>(rng.uniform_int(
                                static_cast<std::uint64_t>(opts.signature_words)));
            m.tokens[static_cast<std::size_t>(m.trigger_index)] = words[static_cast<std::size_t>(sig)];
            mentions.push_back(std::move(m));
        }
    }
    return mentions;
}

std::map<std::string, std::vector<EventMention>> DatasetSplit::section(
    const std::vector<std::string>& types) const {
    std::map<std::string, std::vector<EventMention>> out;
    for (const auto& t : types) {
        auto it = by_type.find(t);
        if (it != by_type.end()) out.emplace(t, it->second);
    }
    return out;
}

namespace {

std::map<std::string, std::vector<EventMention>> group_by_type(
    const std::vector<EventMention>& mentions) {
    std::map<std::string, std::vector<EventMention>> groups;
    for (const auto& m : mentions) groups[m.event_type].push_back(m);
    return groups;
}

}  // namespace

DatasetSplit split_by_type(const std::vector<EventMention>& mentions, double train_frac,
                           double val_frac, double test_frac, std::uint64_t seed) {
    if (train_frac <= 0 || val_frac <= 0 || test_frac <= 0 ||
        std::fabs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw DomainError("split_by_type: fractions must be positive and sum to 1");

    DatasetSplit split;
    split.by_type = group_by_type(mentions);
    const int total = static_cast<int>(split.by_type.size());
    if (total < 3) throw DomainError("split_by_type: need at least 3 event types");

    std::vector<std::string> types;
    types.reserve(static_cast<std::size_t>(total));
    for (const auto& [t, v] : split.by_type) types.push_back(t);
    Rng rng(seed);
    rng.shuffle(types);

    int n_train = static_cast<int>(std::lround(train_frac * total));
    int n_val = static_cast<int>(std::lround(val_frac * total));
    n_train = std::max(1, std::min(n_train, total - 2));
    n_val = std::max(1, std::min(n_val, total - n_train - 1));
    const int n_test = total - n_train - n_val;
    if (n_test < 1) throw DomainError("split_by_type: fewer types than partitions");

    split.train_types.assign(types.begin(), types.begin() + n_train);
    split.val_types.assign(types.begin() + n_train, types.begin() + n_train + n_val);
    split.test_types.assign(types.begin() + n_train + n_val, types.end());
    return split;
}

DatasetSplit split_by_type(const std::vector<EventMention>& mentions,
                           const std::vector<std::string>& train_types,
                           const std::vector<std::string>& val_types,
                           const std::vector<std::string>& test_types) {
    DatasetSplit split;
    split.by_type = group_by_type(mentions);
    split.train_types = train_types;
    split.val_types = val_types;
    split.test_types = test_types;

    std::map<std::string, int> seen;
    for (const auto& t : train_types) ++seen[t];
    for (const auto& t : val_types) ++seen[t];
    for (const auto& t : test_types) ++seen[t];
    for (const auto& [t, count] : seen) {
        if (count > 1) throw DomainError("split_by_type: type '" + t + "' assigned twice");
        if (!split.by_type.count(t))
            throw DomainError("split_by_type: type '" + t + "' not present in data");
    }
    return split;
}

}  // namespace dmbpn
