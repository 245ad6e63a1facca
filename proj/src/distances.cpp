#include "qrank/distances.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "qrank/error.hpp"

namespace qrank {

namespace {

void check_same_length(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw ValidationError("vector length mismatch: " + std::to_string(x.size()) + " vs " +
                              std::to_string(y.size()));
    }
}

// Size of the intersection of two sorted index sets.
int overlap(const SparseBinaryVec& x, const SparseBinaryVec& y) {
    int count = 0;
    auto ix = x.on_indices.begin();
    auto iy = y.on_indices.begin();
    while (ix != x.on_indices.end() && iy != y.on_indices.end()) {
        if (*ix < *iy) {
            ++ix;
        } else if (*iy < *ix) {
            ++iy;
        } else {
            ++count;
            ++ix;
            ++iy;
        }
    }
    return count;
}

void check_same_dims(const SparseBinaryVec& x, const SparseBinaryVec& y) {
    if (x.dims != y.dims) {
        throw ValidationError("indicator dimension mismatch: " + std::to_string(x.dims) + " vs " +
                              std::to_string(y.dims));
    }
}

}  // namespace

const char* cosine_mode_name(CosineMode mode) {
    return mode == CosineMode::SumNorms ? "paper" : "standard";
}

CosineMode cosine_mode_from_name(std::string_view name) {
    if (name == "paper") return CosineMode::SumNorms;
    if (name == "standard") return CosineMode::Standard;
    throw ValidationError("unknown cosine mode '" + std::string(name) +
                          "' (expected paper or standard)");
}

const char* jaccard_mode_name(JaccardMode mode) {
    return mode == JaccardMode::DotOverM ? "paper" : "iou";
}

JaccardMode jaccard_mode_from_name(std::string_view name) {
    if (name == "paper") return JaccardMode::DotOverM;
    if (name == "iou") return JaccardMode::IntersectionOverUnion;
    throw ValidationError("unknown jaccard mode '" + std::string(name) + "' (expected paper or iou)");
}

double cosine(std::span<const double> x, std::span<const double> y, CosineMode mode) {
    check_same_length(x, y);
    double dot = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        xx += x[i] * x[i];
        yy += y[i] * y[i];
    }
    const double denom = mode == CosineMode::SumNorms ? std::sqrt(xx) + std::sqrt(yy)
                                                      : std::sqrt(xx) * std::sqrt(yy);
    if (denom == 0.0) return 0.0;
    return dot / denom;
}

double manhattan(std::span<const double> x, std::span<const double> y) {
    check_same_length(x, y);
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += std::abs(x[i] - y[i]);
    return sum;
}

double bhattacharya(std::span<const double> x, std::span<const double> y) {
    check_same_length(x, y);
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        // Negative elementwise products (possible with embeddings) clamp to 0
        // before the square root; the outer clamp keeps disjoint supports finite.
        sum += std::sqrt(std::max(0.0, x[i] * y[i]));
    }
    return -std::log(std::max(kLogClamp, sum));
}

double squared_euclidean(std::span<const double> x, std::span<const double> y) {
    check_same_length(x, y);
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        sum += d * d;
    }
    return sum;
}

double euclidean(std::span<const double> x, std::span<const double> y) {
    return std::sqrt(squared_euclidean(x, y));
}

double jaccard(std::span<const double> x, std::span<const double> y, JaccardMode mode) {
    check_same_length(x, y);
    if (x.empty()) throw ValidationError("jaccard requires m >= 1");
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if ((x[i] != 0.0 && x[i] != 1.0) || (y[i] != 0.0 && y[i] != 1.0)) {
            throw ValidationError("jaccard requires binary (0/1) vectors");
        }
        dot += x[i] * y[i];
        nx += x[i];
        ny += y[i];
    }
    if (mode == JaccardMode::DotOverM) return dot / static_cast<double>(x.size());
    const double uni = nx + ny - dot;
    return uni == 0.0 ? 0.0 : dot / uni;
}

double cosine(const SparseBinaryVec& x, const SparseBinaryVec& y, CosineMode mode) {
    check_same_dims(x, y);
    const double dot = overlap(x, y);
    const double nx = std::sqrt(static_cast<double>(x.on_indices.size()));
    const double ny = std::sqrt(static_cast<double>(y.on_indices.size()));
    const double denom = mode == CosineMode::SumNorms ? nx + ny : nx * ny;
    if (denom == 0.0) return 0.0;
    return dot / denom;
}

double manhattan(const SparseBinaryVec& x, const SparseBinaryVec& y) {
    check_same_dims(x, y);
    return static_cast<double>(x.on_indices.size() + y.on_indices.size() - 2u * overlap(x, y));
}

double bhattacharya(const SparseBinaryVec& x, const SparseBinaryVec& y) {
    check_same_dims(x, y);
    return -std::log(std::max(kLogClamp, static_cast<double>(overlap(x, y))));
}

double squared_euclidean(const SparseBinaryVec& x, const SparseBinaryVec& y) {
    return manhattan(x, y);  // exact on binary vectors
}

double euclidean(const SparseBinaryVec& x, const SparseBinaryVec& y) {
    return std::sqrt(squared_euclidean(x, y));
}

double jaccard(const SparseBinaryVec& x, const SparseBinaryVec& y, JaccardMode mode) {
    check_same_dims(x, y);
    if (x.dims < 1) throw ValidationError("jaccard requires m >= 1");
    const double dot = overlap(x, y);
    if (mode == JaccardMode::DotOverM) return dot / static_cast<double>(x.dims);
    const double uni = static_cast<double>(x.on_indices.size() + y.on_indices.size()) - dot;
    return uni == 0.0 ? 0.0 : dot / uni;
}

FeatureMask full_mask() {
    FeatureMask mask;
    mask.fill(true);
    return mask;
}

int active_feature_count(const FeatureMask& mask) {
    return static_cast<int>(std::count(mask.begin(), mask.end(), true));
}

const std::array<std::string, kFeatureCount>& feature_names() {
    static const std::array<std::string, kFeatureCount> names = {
        "cosine_embedding",       "cosine_unigram",       "cosine_trigram",
        "manhattan_embedding",    "manhattan_unigram",    "manhattan_trigram",
        "bhattacharya_embedding", "bhattacharya_unigram", "bhattacharya_trigram",
        "euclidean_embedding",    "euclidean_unigram",    "euclidean_trigram",
        "jaccard_unigram",        "jaccard_trigram",
    };
    return names;
}

int feature_index(std::string_view name) {
    const auto& names = feature_names();
    for (int i = 0; i < kFeatureCount; ++i) {
        if (names[static_cast<std::size_t>(i)] == name) return i;
    }
    throw ValidationError("unknown feature slot '" + std::string(name) + "'");
}

namespace {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Slots touching each representation.
constexpr std::array<int, 4> kEmbeddingSlots = {0, 3, 6, 9};
constexpr std::array<int, 5> kUnigramSlots = {1, 4, 7, 10, 12};
constexpr std::array<int, 5> kTrigramSlots = {2, 5, 8, 11, 13};

bool apply_group(FeatureMask& mask, const std::string& name) {
    auto enable = [&mask](auto slots) {
        for (int slot : slots) mask[static_cast<std::size_t>(slot)] = true;
    };
    if (name == "all") {
        mask = full_mask();
    } else if (name == "unigrams") {
        enable(kUnigramSlots);
    } else if (name == "meanemb" || name == "emb") {
        enable(kEmbeddingSlots);
    } else if (name == "trigrams" || name == "ngrams") {
        enable(kTrigramSlots);
    } else if (name == "unigrams+trigrams" || name == "unigrams+ngrams") {
        enable(kUnigramSlots);
        enable(kTrigramSlots);
    } else if (name == "unigrams+meanemb" || name == "meanemb+unigrams") {
        enable(kUnigramSlots);
        enable(kEmbeddingSlots);
    } else if (name == "meanemb+trigrams" || name == "emb+trigrams") {
        enable(kEmbeddingSlots);
        enable(kTrigramSlots);
    } else {
        return false;
    }
    return true;
}

}  // namespace

FeatureMask mask_from_names(const std::vector<std::string>& names) {
    FeatureMask mask;
    mask.fill(false);
    for (const auto& raw : names) {
        const std::string name = to_lower(raw);
        if (apply_group(mask, name)) continue;
        mask[static_cast<std::size_t>(feature_index(name))] = true;
    }
    if (active_feature_count(mask) == 0) {
        throw ValidationError("feature selection leaves no active features");
    }
    return mask;
}

std::vector<std::string> names_from_mask(const FeatureMask& mask) {
    std::vector<std::string> names;
    for (int i = 0; i < kFeatureCount; ++i) {
        if (mask[static_cast<std::size_t>(i)]) names.push_back(feature_names()[static_cast<std::size_t>(i)]);
    }
    return names;
}

Featurizer::Featurizer(Vocab unigrams, Vocab trigrams, EmbeddingTable table, FeatureOptions options)
    : unigrams_(std::move(unigrams)),
      trigrams_(std::move(trigrams)),
      table_(std::move(table)),
      options_(options) {
    if (unigrams_.kind != VocabKind::WordUnigram) {
        throw ValidationError("featurizer: first vocabulary must be word_unigram");
    }
    if (trigrams_.kind != options_.trigram) {
        throw ValidationError("featurizer: trigram vocabulary kind does not match options");
    }
}

Featurizer Featurizer::from_texts(const std::vector<std::string>& texts, EmbeddingTable table,
                                  FeatureOptions options) {
    return Featurizer(build_vocab(texts, VocabKind::WordUnigram),
                      build_vocab(texts, options.trigram), std::move(table), options);
}

FeatureVector Featurizer::features(std::string_view text_a, std::string_view text_b,
                                   const FeatureMask& mask) const {
    const std::vector<double> ea = mean_embedding(text_a, table_);
    const std::vector<double> eb = mean_embedding(text_b, table_);
    const SparseBinaryVec ua = indicator_vector(text_a, unigrams_);
    const SparseBinaryVec ub = indicator_vector(text_b, unigrams_);
    const SparseBinaryVec ta = indicator_vector(text_a, trigrams_);
    const SparseBinaryVec tb = indicator_vector(text_b, trigrams_);

    FeatureVector out;
    out.mask = mask;
    auto put = [&out](int slot, double value) {
        if (out.mask[static_cast<std::size_t>(slot)]) out.values[static_cast<std::size_t>(slot)] = value;
    };
    put(0, cosine(ea, eb, options_.cosine));
    put(1, cosine(ua, ub, options_.cosine));
    put(2, cosine(ta, tb, options_.cosine));
    put(3, manhattan(ea, eb));
    put(4, manhattan(ua, ub));
    put(5, manhattan(ta, tb));
    put(6, bhattacharya(ea, eb));
    put(7, bhattacharya(ua, ub));
    put(8, bhattacharya(ta, tb));
    put(9, euclidean(ea, eb));
    put(10, euclidean(ua, ub));
    put(11, euclidean(ta, tb));
    put(12, jaccard(ua, ub, options_.jaccard));
    put(13, jaccard(ta, tb, options_.jaccard));
    return out;
}

FeatureVector Featurizer::features(std::string_view text_a, std::string_view text_b) const {
    return features(text_a, text_b, full_mask());
}

}  // namespace qrank
