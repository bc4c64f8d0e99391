#pragma once

#include "mgtc/degradation.hpp"
#include "mgtc/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mgtc {

// A W x W spatial window spanning all bands, flattened to (W*W, I3).
struct FullBandBlock {
    PatchOrigin origin;
    DenseTensor data;
};

// Blocks grouped by k-means, stacked along mode 2 into (W^2, I3, H).
struct Cluster {
    std::vector<PatchOrigin> member_origins;
    DenseTensor group_tensor;
    ObservationMask sub_mask;
};

// A key patch plus its most similar patches, stacked into (W, W, I3, k).
struct NssGroup {
    PatchOrigin key_origin;
    std::vector<PatchOrigin> member_origins;  // key first
    DenseTensor group_tensor;
    ObservationMask sub_mask;
};

// Grid origins {0, stride, 2*stride, ...} clamped to extent - width, with a
// final flush position so the border is always covered.
std::vector<std::int64_t> grid_positions(std::int64_t extent, std::int64_t width, std::int64_t stride);

// Overlapping full-band blocks on the (stride1, stride1) grid, row-major
// origin order. Every pixel is covered by at least one block.
std::vector<FullBandBlock> extract_fullband_blocks(const DenseTensor& x, std::int64_t w1, std::int64_t stride1);

// Seeded k-means++ initialization followed by Lloyd iterations on the
// flattened block vectors. Returns exactly `cluster_count` clusters, each
// nonempty, carrying member origins only (build_cluster_tensor fills the
// tensors). Deterministic given the seed.
std::vector<Cluster> kmeanspp_cluster(const std::vector<FullBandBlock>& blocks, int cluster_count,
                                      std::uint64_t seed, int max_kmeans_iters);

// Gathers member blocks of x into (W^2, I3, H) in member order along with the
// matching sub-mask.
Cluster build_cluster_tensor(std::span<const PatchOrigin> members, const DenseTensor& x,
                             const ObservationMask& mask, std::int64_t w1);

// Returns completed cluster tensors to their positions, averaging overlaps
// with uniform weights. Throws if any pixel is uncovered.
DenseTensor scatter_clusters(std::span<const Cluster> clusters, const Dims& image_dims, std::int64_t w1);

// Key-patch origins at interval v with flush final positions, row-major.
std::vector<PatchOrigin> select_key_patches(const Dims& dims, std::int64_t w2, std::int64_t v);

// Scans all stride-1 patch origins within `search_radius` of the key (in
// Chebyshev distance, clamped to the valid range; radius < 0 means the whole
// image) and keeps the k nearest in Euclidean distance over the patch values.
// The key is always ranked first; ties break in row-major origin order. Fewer
// than k candidates yields a smaller group.
NssGroup block_match(const PatchOrigin& key_origin, const DenseTensor& x, const ObservationMask& mask,
                     std::int64_t w2, int k, std::int64_t search_radius);

// Uniform-weight aggregation of completed groups, groups processed in the
// given order and members in rank order. Throws if any pixel is uncovered.
DenseTensor aggregate_groups(std::span<const NssGroup> groups, const Dims& image_dims, std::int64_t w2);

// Weighted-sum accumulator shared by the two reconstruction paths.
class Accumulator {
public:
    explicit Accumulator(Dims image_dims);

    // patch points at w*w*I3 values in (row, col, band) fastest-first order.
    void add_patch(const PatchOrigin& origin, std::int64_t width, std::span<const double> patch);

    // Entrywise sum / weight; throws on any zero-weight entry.
    DenseTensor finalize() const;

private:
    DenseTensor sum_;
    std::vector<double> weight_;
};

}  // namespace mgtc
