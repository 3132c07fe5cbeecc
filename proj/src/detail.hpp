#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "qdcluster/types.hpp"

namespace qdc::detail {

// Reductions are split into fixed-size chunks whose partial sums are combined
// in index order, so results do not depend on the OpenMP thread count.
inline constexpr std::size_t kChunk = 1024;

template <typename T, typename F>
T ordered_sum_impl(std::size_t count, F&& term) {
    const std::size_t n_chunks = (count + kChunk - 1) / kChunk;
    std::vector<T> partial(n_chunks, T{});
#pragma omp parallel for schedule(static) if (n_chunks > 8)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(n_chunks); ++c) {
        const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
        const std::size_t hi = std::min(count, lo + kChunk);
        T acc{};
        for (std::size_t i = lo; i < hi; ++i) {
            acc += term(i);
        }
        partial[static_cast<std::size_t>(c)] = acc;
    }
    T total{};
    for (const T& p : partial) {
        total += p;
    }
    return total;
}

template <typename F>
double ordered_sum(std::size_t count, F&& term) {
    return ordered_sum_impl<double>(count, std::forward<F>(term));
}

template <typename F>
cplx ordered_sum_c(std::size_t count, F&& term) {
    return ordered_sum_impl<cplx>(count, std::forward<F>(term));
}

/// Maps (block r, local index l) to a full basis index for a site subset.
class SubspaceIndexer {
public:
    explicit SubspaceIndexer(std::span<const int> support) {
        sorted_.assign(support.begin(), support.end());
        std::sort(sorted_.begin(), sorted_.end());
        const std::size_t local_dim = std::size_t{1} << support.size();
        offsets_.resize(local_dim);
        for (std::size_t l = 0; l < local_dim; ++l) {
            std::size_t m = 0;
            for (std::size_t q = 0; q < support.size(); ++q) {
                if ((l >> q) & 1U) {
                    m |= std::size_t{1} << support[q];
                }
            }
            offsets_[l] = m;
        }
    }

    /// Full index of block r with all support bits cleared.
    std::size_t base(std::size_t r) const {
        for (int s : sorted_) {
            const std::size_t low = r & ((std::size_t{1} << s) - 1);
            r = ((r >> s) << (s + 1)) | low;
        }
        return r;
    }

    std::size_t offset(std::size_t local) const { return offsets_[local]; }

private:
    std::vector<int> sorted_;
    std::vector<std::size_t> offsets_;
};

/// Applies m on `support` to a length-2^n_sites amplitude array in place.
void apply_kernel(cplx* amps, int n_sites, std::span<const int> support, const CMatrix& m);

}  // namespace qdc::detail
