#include "revassist/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>

namespace revassist {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::min(a.size(), b.size());
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    const double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ULL ^ seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    // final avalanche so nearby inputs spread over buckets
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return h;
}

}  // namespace

Embedding HashNgramEmbedder::operator()(std::string_view text) const {
    Embedding v(dim_, 0.0);
    if (dim_ == 0) return v;
    auto add = [&](std::string_view feature, std::uint64_t seed, double weight) {
        const auto h = fnv1a(feature, seed);
        const double sign = (h >> 63) ? -1.0 : 1.0;
        v[h % dim_] += sign * weight;
    };

    std::string lowered;
    lowered.reserve(text.size());
    for (unsigned char c : text) lowered.push_back(static_cast<char>(std::tolower(c)));

    std::size_t i = 0;
    while (i < lowered.size()) {
        if (!std::isalnum(static_cast<unsigned char>(lowered[i])) && lowered[i] != '_') {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < lowered.size() && (std::isalnum(static_cast<unsigned char>(lowered[j])) || lowered[j] == '_')) ++j;
        add(std::string_view(lowered).substr(i, j - i), 1, 1.0);
        i = j;
    }
    for (std::size_t k = 0; k + 3 <= lowered.size(); ++k) {
        add(std::string_view(lowered).substr(k, 3), 2, 0.5);
    }

    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

}  // namespace revassist
