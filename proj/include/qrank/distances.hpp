#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrank/textrep.hpp"

namespace qrank {

inline constexpr int kFeatureCount = 14;

// Lower clamp applied inside logs so divergences stay finite on disjoint
// supports and all-OOV (zero) vectors.
inline constexpr double kLogClamp = 1e-12;

// The printed cosine formula divides by the *sum* of the two norms. The
// standard product-of-norms form is available for comparison runs.
enum class CosineMode { SumNorms, Standard };

// The printed Jaccard index is x.y / m over m-dimensional indicator vectors;
// intersection-over-union is available for comparison runs.
enum class JaccardMode { DotOverM, IntersectionOverUnion };

const char* cosine_mode_name(CosineMode mode);
CosineMode cosine_mode_from_name(std::string_view name);
const char* jaccard_mode_name(JaccardMode mode);
JaccardMode jaccard_mode_from_name(std::string_view name);

// Dense-vector metrics. All throw ValidationError on length mismatch.
double cosine(std::span<const double> x, std::span<const double> y,
              CosineMode mode = CosineMode::SumNorms);
double manhattan(std::span<const double> x, std::span<const double> y);
double bhattacharya(std::span<const double> x, std::span<const double> y);
double squared_euclidean(std::span<const double> x, std::span<const double> y);
double euclidean(std::span<const double> x, std::span<const double> y);
// Requires binary inputs (every component exactly 0 or 1) of equal dims >= 1.
double jaccard(std::span<const double> x, std::span<const double> y,
               JaccardMode mode = JaccardMode::DotOverM);

// Sparse counterparts; equal to the dense metrics on the equivalent
// indicator vectors.
double cosine(const SparseBinaryVec& x, const SparseBinaryVec& y,
              CosineMode mode = CosineMode::SumNorms);
double manhattan(const SparseBinaryVec& x, const SparseBinaryVec& y);
double bhattacharya(const SparseBinaryVec& x, const SparseBinaryVec& y);
double squared_euclidean(const SparseBinaryVec& x, const SparseBinaryVec& y);
double euclidean(const SparseBinaryVec& x, const SparseBinaryVec& y);
double jaccard(const SparseBinaryVec& x, const SparseBinaryVec& y,
               JaccardMode mode = JaccardMode::DotOverM);

using FeatureMask = std::array<bool, kFeatureCount>;

FeatureMask full_mask();
int active_feature_count(const FeatureMask& mask);

// Canonical feature order: metrics [cosine, manhattan, bhattacharya,
// euclidean] x representations [embedding, unigram, trigram] (slots 0-11,
// metric-major), then jaccard_unigram (12) and jaccard_trigram (13).
const std::array<std::string, kFeatureCount>& feature_names();
int feature_index(std::string_view name);

// Accepts canonical slot names, the representation-group names (unigrams,
// meanemb, trigrams, unigrams+trigrams aka unigrams+ngrams, unigrams+meanemb,
// meanemb+trigrams aka emb+trigrams), and "all". Case-insensitive.
FeatureMask mask_from_names(const std::vector<std::string>& names);
std::vector<std::string> names_from_mask(const FeatureMask& mask);

// The 14 ordered distance features for one pair. Masked-off slots hold 0 and
// are flagged inactive.
struct FeatureVector {
    std::array<double, kFeatureCount> values{};
    FeatureMask mask{};
};

struct FeatureOptions {
    CosineMode cosine = CosineMode::SumNorms;
    JaccardMode jaccard = JaccardMode::DotOverM;
    VocabKind trigram = VocabKind::CharTrigram;

    bool operator==(const FeatureOptions&) const = default;
};

// Bundles the two vocabularies and the embedding table needed to turn a text
// pair into its feature vector. The embedding table may be empty, in which
// case the embedding-based slots must be masked off.
class Featurizer {
  public:
    Featurizer(Vocab unigrams, Vocab trigrams, EmbeddingTable table, FeatureOptions options = {});

    // Builds both vocabularies from the given texts (main-task training
    // texts; both sides of every pair, in order).
    static Featurizer from_texts(const std::vector<std::string>& texts, EmbeddingTable table,
                                 FeatureOptions options = {});

    FeatureVector features(std::string_view text_a, std::string_view text_b,
                           const FeatureMask& mask) const;
    FeatureVector features(std::string_view text_a, std::string_view text_b) const;

    const Vocab& unigram_vocab() const { return unigrams_; }
    const Vocab& trigram_vocab() const { return trigrams_; }
    const EmbeddingTable& embeddings() const { return table_; }
    const FeatureOptions& options() const { return options_; }

  private:
    Vocab unigrams_;
    Vocab trigrams_;
    EmbeddingTable table_;
    FeatureOptions options_;
};

}  // namespace qrank
