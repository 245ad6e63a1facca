#include "qrank/textrep.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>

#include "qrank/error.hpp"
#include "qrank/rng.hpp"

namespace qrank {

namespace {

bool is_ascii_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_token_char(unsigned char c) {
    return std::isalnum(c) != 0 || c >= 0x80;
}

char ascii_lower(unsigned char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

// Lowercase (ASCII), collapse whitespace runs to a single space, trim.
std::string normalize_for_trigrams(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (is_ascii_space(c)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(ascii_lower(c));
    }
    return out;
}

// Byte offsets of code-point starts, plus end offset. Invalid UTF-8 bytes
// count as one code point each so the windowing stays total.
std::vector<std::size_t> codepoint_starts(std::string_view s) {
    std::vector<std::size_t> starts;
    std::size_t i = 0;
    while (i < s.size()) {
        starts.push_back(i);
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        if ((c & 0xe0) == 0xc0) {
            len = 2;
        } else if ((c & 0xf0) == 0xe0) {
            len = 3;
        } else if ((c & 0xf8) == 0xf0) {
            len = 4;
        }
        std::size_t j = i + 1;
        while (j < i + len && j < s.size() && (static_cast<unsigned char>(s[j]) & 0xc0) == 0x80) {
            ++j;
        }
        i = j;
    }
    starts.push_back(s.size());
    return starts;
}

}  // namespace

const char* vocab_kind_name(VocabKind kind) {
    switch (kind) {
        case VocabKind::WordUnigram: return "word_unigram";
        case VocabKind::CharTrigram: return "char_trigram";
        case VocabKind::WordTrigram: return "word_trigram";
    }
    return "?";
}

VocabKind vocab_kind_from_name(std::string_view name) {
    if (name == "word_unigram") return VocabKind::WordUnigram;
    if (name == "char_trigram") return VocabKind::CharTrigram;
    if (name == "word_trigram") return VocabKind::WordTrigram;
    throw ValidationError("unknown vocabulary kind '" + std::string(name) +
                          "' (expected word_unigram, char_trigram or word_trigram)");
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (is_token_char(c)) {
            current.push_back(ascii_lower(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<std::string> char_trigrams(std::string_view text) {
    const std::string norm = normalize_for_trigrams(text);
    const std::vector<std::size_t> starts = codepoint_starts(norm);
    const std::size_t n = starts.size() - 1;  // code points
    if (n < 3) return {norm};
    std::vector<std::string> grams;
    grams.reserve(n - 2);
    for (std::size_t i = 0; i + 3 <= n; ++i) {
        grams.push_back(norm.substr(starts[i], starts[i + 3] - starts[i]));
    }
    return grams;
}

std::vector<std::string> word_trigrams(std::string_view text) {
    const std::vector<std::string> words = tokenize(text);
    if (words.empty()) return {};
    auto join = [](auto first, auto last) {
        std::string s = *first;
        for (auto it = first + 1; it != last; ++it) {
            s += ' ';
            s += *it;
        }
        return s;
    };
    if (words.size() < 3) return {join(words.begin(), words.end())};
    std::vector<std::string> grams;
    grams.reserve(words.size() - 2);
    for (std::size_t i = 0; i + 3 <= words.size(); ++i) {
        grams.push_back(join(words.begin() + i, words.begin() + i + 3));
    }
    return grams;
}

std::vector<std::string> extract_tokens(std::string_view text, VocabKind kind) {
    switch (kind) {
        case VocabKind::WordUnigram: return tokenize(text);
        case VocabKind::CharTrigram: return char_trigrams(text);
        case VocabKind::WordTrigram: return word_trigrams(text);
    }
    return {};
}

std::uint64_t Vocab::fingerprint() const {
    std::uint64_t h = fnv1a(vocab_kind_name(kind));
    for (const auto& t : tokens) {
        h = fnv1a(t, h);
        h = fnv1a(std::string_view("\n", 1), h);
    }
    return h;
}

Vocab build_vocab(const std::vector<std::string>& texts, VocabKind kind) {
    Vocab vocab;
    vocab.kind = kind;
    for (const auto& text : texts) {
        for (auto& token : extract_tokens(text, kind)) {
            if (vocab.index_of.emplace(token, vocab.size()).second) {
                vocab.tokens.push_back(std::move(token));
            }
        }
    }
    if (vocab.tokens.empty()) {
        throw ValidationError("cannot build vocabulary: no tokens in the corpus");
    }
    return vocab;
}

Vocab vocab_from_tokens(VocabKind kind, std::vector<std::string> tokens) {
    Vocab vocab;
    vocab.kind = kind;
    vocab.tokens = std::move(tokens);
    for (int i = 0; i < vocab.size(); ++i) {
        if (!vocab.index_of.emplace(vocab.tokens[i], i).second) {
            throw ValidationError("duplicate token in vocabulary file: '" + vocab.tokens[i] + "'");
        }
    }
    if (vocab.tokens.empty()) throw ValidationError("empty vocabulary");
    return vocab;
}

SparseBinaryVec indicator_vector(std::string_view text, const Vocab& vocab) {
    SparseBinaryVec vec;
    vec.dims = vocab.size();
    std::vector<bool> seen(static_cast<std::size_t>(vocab.size()), false);
    for (const auto& token : extract_tokens(text, vocab.kind)) {
        const auto it = vocab.index_of.find(token);
        if (it != vocab.index_of.end()) seen[static_cast<std::size_t>(it->second)] = true;
    }
    for (int i = 0; i < vec.dims; ++i) {
        if (seen[static_cast<std::size_t>(i)]) vec.on_indices.push_back(i);
    }
    return vec;
}

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open embedding file: " + path);
    return parse_embeddings(in, path);
}

namespace {

bool is_plain_integer(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

}  // namespace

EmbeddingTable parse_embeddings(std::istream& in, const std::string& source_name) {
    EmbeddingTable table;
    std::string line;
    std::uint64_t content_hash = fnv1a("embeddings");
    int line_no = 0;
    bool seen_content = false;
    while (std::getline(in, line)) {
        ++line_no;
        content_hash = fnv1a(line, content_hash);
        content_hash = fnv1a(std::string_view("\n", 1), content_hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream split(line);
        std::vector<std::string> fields;
        for (std::string f; split >> f;) fields.push_back(std::move(f));
        // Optional header: exactly two bare integers (count, dim) as the first line.
        if (!seen_content && fields.size() == 2 && is_plain_integer(fields[0]) &&
            is_plain_integer(fields[1])) {
            seen_content = true;
            continue;
        }
        seen_content = true;
        if (fields.size() < 2) {
            throw ValidationError(source_name + ":" + std::to_string(line_no) +
                                  ": vector line with no components");
        }
        std::vector<double> values;
        values.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            try {
                std::size_t pos = 0;
                values.push_back(std::stod(fields[i], &pos));
                if (pos != fields[i].size()) throw std::invalid_argument(fields[i]);
            } catch (const std::exception&) {
                throw ValidationError(source_name + ":" + std::to_string(line_no) +
                                      ": non-numeric vector component '" + fields[i] + "'");
            }
        }
        if (table.dim == 0) table.dim = static_cast<int>(values.size());
        if (static_cast<int>(values.size()) != table.dim) {
            throw ValidationError(source_name + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(table.dim) + " components, found " +
                                  std::to_string(values.size()));
        }
        table.vectors.emplace(std::move(fields[0]), std::move(values));  // first occurrence wins
    }
    if (table.vectors.empty()) {
        throw ValidationError(source_name + ": no embedding vectors found");
    }
    table.fingerprint = content_hash;
    return table;
}

std::vector<double> mean_embedding(std::string_view text, const EmbeddingTable& table) {
    std::vector<double> mean(static_cast<std::size_t>(table.dim), 0.0);
    int hits = 0;
    for (const auto& token : tokenize(text)) {
        const auto it = table.vectors.find(token);
        if (it == table.vectors.end()) continue;
        ++hits;
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += it->second[i];
    }
    if (hits > 0) {
        for (auto& v : mean) v /= hits;
    }
    return mean;
}

}  // namespace qrank
