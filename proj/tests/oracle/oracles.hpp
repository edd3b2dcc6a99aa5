#pragma once

// Reference implementations used only by tests. Each one takes a different
// route from the library code it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace revassist::testing {

// Fisher p-values by walking the hypergeometric ratio recurrence in long
// double, starting from the lowest feasible cell.
struct FisherOracle {
    long double two_sided = 0, less = 0, greater = 0;
};

inline FisherOracle fisher_oracle(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
    const std::int64_t n = a + b + c + d, r1 = a + b, c1 = a + c;
    const std::int64_t lo = std::max<std::int64_t>(0, r1 + c1 - n), hi = std::min(r1, c1);
    std::vector<long double> w{1.0L};
    for (std::int64_t x = lo; x < hi; ++x) {
        const long double ratio = static_cast<long double>(c1 - x) * static_cast<long double>(r1 - x) /
                                  (static_cast<long double>(x + 1) * static_cast<long double>(n - c1 - r1 + x + 1));
        w.push_back(w.back() * ratio);
        if (w.back() > 1e300L) {  // rescale to stay in range
            for (auto& v : w) v /= 1e300L;
        }
    }
    long double total = 0;
    for (const auto v : w) total += v;
    FisherOracle o;
    const long double obs = w[a - lo];
    for (std::int64_t x = lo; x <= hi; ++x) {
        const long double p = w[x - lo] / total;
        if (w[x - lo] <= obs * (1 + 1e-7L)) o.two_sided += p;
        if (x <= a) o.less += p;
        if (x >= a) o.greater += p;
    }
    o.two_sided = std::min(o.two_sided, 1.0L);
    o.less = std::min(o.less, 1.0L);
    o.greater = std::min(o.greater, 1.0L);
    return o;
}

// Exact two-sided p for small tables as a ratio of integers.
inline long double fisher_exact_integer(int a, int b, int c, int d) {
    auto choose = [](int n, int k) -> unsigned __int128 {
        if (k < 0 || k > n) return 0;
        unsigned __int128 r = 1;
        for (int i = 1; i <= k; ++i) r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
        return r;
    };
    const int n = a + b + c + d, r1 = a + b, c1 = a + c;
    const auto obs = choose(c1, a) * choose(n - c1, r1 - a);
    unsigned __int128 hit = 0;
    for (int x = 0; x <= r1; ++x) {
        const auto w = choose(c1, x) * choose(n - c1, r1 - x);
        if (w != 0 && w <= obs) hit += w;
    }
    return static_cast<long double>(hit) / static_cast<long double>(choose(n, r1));
}

// Cohen's d from explicitly expanded 0/1 samples.
inline double cohens_d_oracle(int hits1, int n1, int hits2, int n2) {
    std::vector<double> s1(n1, 0.0), s2(n2, 0.0);
    std::fill(s1.begin(), s1.begin() + hits1, 1.0);
    std::fill(s2.begin(), s2.begin() + hits2, 1.0);
    auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
    auto ss = [](const std::vector<double>& v, double m) {
        double s = 0;
        for (const double x : v) s += (x - m) * (x - m);
        return s;
    };
    const double m1 = mean(s1), m2 = mean(s2);
    const double pooled = std::sqrt((ss(s1, m1) + ss(s2, m2)) / (n1 + n2 - 2));
    return (m1 - m2) / pooled;
}

// Minimum within-cluster sum of squares over every split into two
// non-empty groups; returns the membership mask of the best split.
inline std::uint32_t best_two_partition(const std::vector<std::vector<double>>& pts) {
    const std::size_t n = pts.size();
    const std::size_t dim = pts[0].size();
    auto wcss = [&](std::uint32_t mask, bool side) {
        std::vector<double> mean(dim, 0.0);
        int count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (((mask >> i) & 1u) != side) continue;
            for (std::size_t j = 0; j < dim; ++j) mean[j] += pts[i][j];
            ++count;
        }
        for (auto& m : mean) m /= count;
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (((mask >> i) & 1u) != side) continue;
            for (std::size_t j = 0; j < dim; ++j) s += (pts[i][j] - mean[j]) * (pts[i][j] - mean[j]);
        }
        return s;
    };
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_mask = 0;
    // point 0 always on side 0 so each split is visited once
    for (std::uint32_t mask = 2; mask < (1u << n); mask += 2) {
        const double s = wcss(mask, false) + wcss(mask, true);
        if (s < best) {
            best = s;
            best_mask = mask;
        }
    }
    return best_mask;
}

// Reference scan kept deliberately naive: plain loops, full sort.
inline double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    long double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<long double>(a[i]) * b[i];
        na += static_cast<long double>(a[i]) * a[i];
        nb += static_cast<long double>(b[i]) * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return static_cast<double>(dot / std::sqrt(na * nb));
}

inline std::vector<std::size_t> oracle_top_k(const std::vector<std::vector<double>>& corpus, const std::vector<double>& q,
                                      std::size_t k) {
    std::vector<std::size_t> idx(corpus.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> sim(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) sim[i] = oracle_cosine(corpus[i], q);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return sim[a] > sim[b]; });
    idx.resize(std::min(k, idx.size()));
    return idx;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(dim);
    for (auto& x : v) x = n(rng);
    return v;
}

}  // namespace revassist::testing
