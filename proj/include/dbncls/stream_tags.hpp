#ifndef DBNCLS_STREAM_TAGS_HPP
#define DBNCLS_STREAM_TAGS_HPP

#include <cstdint>

namespace dbncls::stream_tags {

// Fixed tags for deriving named sub-streams. Every unit of randomized work
// owns the stream derived from its tags, which keeps runs reproducible no
// matter how the work is ordered or parallelized.
inline constexpr std::uint64_t init = 1;       // parameter initialization
inline constexpr std::uint64_t pretrain = 2;   // per-layer pretraining
inline constexpr std::uint64_t shuffle = 3;    // epoch shuffles
inline constexpr std::uint64_t cd = 4;         // contrastive-divergence chains
inline constexpr std::uint64_t el = 5;         // expected-loss sampling
inline constexpr std::uint64_t bl_grad = 6;    // bilevel penalty gradient estimate
inline constexpr std::uint64_t bl_hvp = 7;     // bilevel Hessian-vector probe
inline constexpr std::uint64_t eval = 8;       // post-epoch objective evaluation
inline constexpr std::uint64_t data = 9;       // dataset subsampling / splitting
inline constexpr std::uint64_t finetune = 10;  // supervised training loop

} // namespace dbncls::stream_tags

#endif
