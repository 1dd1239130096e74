#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace fedsem::rng {

// splitmix64 finalizer; good avalanche, cheap.
inline std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent sub-stream seed from a master seed and tags.
// Used so per-client / per-round draws do not depend on execution order.
inline std::uint64_t derive(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                            std::uint64_t c = 0) {
    std::uint64_t h = mix(master);
    h = mix(h ^ a);
    h = mix(h ^ b);
    h = mix(h ^ c);
    return h;
}

inline std::mt19937_64 engine(std::uint64_t seed) { return std::mt19937_64(seed); }

// Dirichlet(alpha) sample via normalized independent Gamma draws.
inline std::vector<double> dirichlet(const std::vector<double>& alpha, std::mt19937_64& eng) {
    std::vector<double> out(alpha.size());
    double total = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        std::gamma_distribution<double> gamma(alpha[i], 1.0);
        out[i] = gamma(eng);
        total += out[i];
    }
    if (total <= 0.0) {
        // All gammas underflowed (tiny alphas): fall back to uniform mass.
        for (auto& v : out) v = 1.0 / static_cast<double>(out.size());
        return out;
    }
    for (auto& v : out) v /= total;
    return out;
}

// Uniform sample of `count` distinct values from [0, n), sorted ascending.
inline std::vector<int> sample_without_replacement(int n, int count, std::mt19937_64& eng) {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    for (int i = 0; i < count; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(pool[i], pool[pick(eng)]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

} // namespace fedsem::rng
