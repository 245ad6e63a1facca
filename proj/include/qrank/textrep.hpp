#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qrank {

enum class VocabKind { WordUnigram, CharTrigram, WordTrigram };

const char* vocab_kind_name(VocabKind kind);
VocabKind vocab_kind_from_name(std::string_view name);

// Lowercases, then splits into maximal runs of alphanumeric characters.
// Punctuation and whitespace separate tokens and are dropped. Bytes >= 0x80
// are kept as token characters so UTF-8 text survives intact; only ASCII
// letters are case-folded.
std::vector<std::string> tokenize(std::string_view text);

// Lowercases, collapses whitespace runs to one space, trims, then emits every
// contiguous 3-character window (windows are over code points, not bytes).
// Normalized strings shorter than 3 characters yield the whole string as a
// single degenerate token.
std::vector<std::string> char_trigrams(std::string_view text);

// Word-level alternative to char_trigrams: windows of 3 consecutive tokens
// joined by spaces; fewer than 3 tokens yield one joined pseudo-token, no
// tokens yield nothing.
std::vector<std::string> word_trigrams(std::string_view text);

std::vector<std::string> extract_tokens(std::string_view text, VocabKind kind);

// Token -> index map with indices exactly 0..size-1 in first-occurrence order.
struct Vocab {
    VocabKind kind = VocabKind::WordUnigram;
    std::vector<std::string> tokens;  // index order
    std::unordered_map<std::string, int> index_of;

    int size() const { return static_cast<int>(tokens.size()); }
    std::uint64_t fingerprint() const;
};

Vocab build_vocab(const std::vector<std::string>& texts, VocabKind kind);
Vocab vocab_from_tokens(VocabKind kind, std::vector<std::string> tokens);

// Binary indicator vector stored as its sorted set of on-indices.
struct SparseBinaryVec {
    int dims = 0;
    std::vector<int> on_indices;  // strictly ascending, all < dims
};

// Marks which vocabulary tokens occur at least once in the text.
// Out-of-vocabulary tokens are ignored.
SparseBinaryVec indicator_vector(std::string_view text, const Vocab& vocab);

struct EmbeddingTable {
    int dim = 0;
    std::unordered_map<std::string, std::vector<double>> vectors;
    std::uint64_t fingerprint = 0;  // hash of the source content

    bool empty() const { return vectors.empty(); }
};

// Text format: optional first header line "count dim"; every other line is a
// token followed by `dim` decimal reals, space separated. Duplicate tokens
// keep their first occurrence.
EmbeddingTable load_embeddings(const std::string& path);
EmbeddingTable parse_embeddings(std::istream& in, const std::string& source_name);

// Arithmetic mean of the table vectors of in-table tokens of tokenize(text);
// all-OOV (or empty) texts map to the zero vector of length table.dim.
std::vector<double> mean_embedding(std::string_view text, const EmbeddingTable& table);

}  // namespace qrank
