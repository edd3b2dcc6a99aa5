#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace revassist {

using Embedding = std::vector<double>;

/// Maps a text to a vector. Implementations must return one fixed dimension.
using Embedder = std::function<Embedding(std::string_view)>;

/// Cosine similarity in [-1, 1]; 0 when either vector has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Deterministic offline embedder: hashed word and character-trigram
/// features folded into `dim` signed buckets, then L2-normalised.
class HashNgramEmbedder {
public:
    explicit HashNgramEmbedder(std::size_t dim = 256) : dim_(dim) {}

    Embedding operator()(std::string_view text) const;
    std::size_t dim() const { return dim_; }

private:
    std::size_t dim_;
};

}  // namespace revassist
