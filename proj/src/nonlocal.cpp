#include "mgtc/nonlocal.hpp"

#include "mgtc/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>

namespace mgtc {

namespace {

void require_order3(const Dims& dims, const char* who) {
    if (dims.size() != 3) {
        throw std::invalid_argument(std::string(who) + ": expected an order-3 tensor, got order " +
                                    std::to_string(dims.size()));
    }
}

void require_patch_fits(const Dims& dims, const PatchOrigin& o, std::int64_t width, const char* who) {
    if (o.row < 0 || o.col < 0 || o.row + width > dims[0] || o.col + width > dims[1]) {
        throw std::out_of_range(std::string(who) + ": patch origin (" + std::to_string(o.row) + ", " +
                                std::to_string(o.col) + ") with width " + std::to_string(width) +
                                " leaves the " + std::to_string(dims[0]) + "x" + std::to_string(dims[1]) +
                                " spatial extent");
    }
}

// Gathers the (width, width, I3) patch at `o` into dst, (row, col, band)
// fastest-first.
void gather_patch(const DenseTensor& x, const PatchOrigin& o, std::int64_t width, double* dst) {
    const std::int64_t i1 = x.dim(0);
    const std::int64_t i2 = x.dim(1);
    const std::int64_t i3 = x.dim(2);
    std::int64_t pos = 0;
    for (std::int64_t b = 0; b < i3; ++b) {
        for (std::int64_t j = 0; j < width; ++j) {
            const double* src = x.data() + (o.row + (o.col + j) * i1 + b * i1 * i2);
            std::memcpy(dst + pos, src, static_cast<std::size_t>(width) * sizeof(double));
            pos += width;
        }
    }
}

double squared_distance(const double* a, const double* b, std::int64_t n) {
    Eigen::Map<const Eigen::VectorXd> va(a, n);
    Eigen::Map<const Eigen::VectorXd> vb(b, n);
    return (va - vb).squaredNorm();
}

}  // namespace

std::vector<std::int64_t> grid_positions(std::int64_t extent, std::int64_t width, std::int64_t stride) {
    if (width < 1 || width > extent) {
        throw std::invalid_argument("grid_positions: width " + std::to_string(width) +
                                    " does not fit extent " + std::to_string(extent));
    }
    if (stride < 1) {
        throw std::invalid_argument("grid_positions: stride must be positive");
    }
    std::vector<std::int64_t> out;
    const std::int64_t last = extent - width;
    for (std::int64_t p = 0; p <= last; p += stride) {
        out.push_back(p);
    }
    if (out.back() != last) {
        out.push_back(last);
    }
    return out;
}

std::vector<FullBandBlock> extract_fullband_blocks(const DenseTensor& x, std::int64_t w1, std::int64_t stride1) {
    require_order3(x.dims(), "extract_fullband_blocks");
    const auto rows = grid_positions(x.dim(0), w1, stride1);
    const auto cols = grid_positions(x.dim(1), w1, stride1);
    const std::int64_t i3 = x.dim(2);
    std::vector<FullBandBlock> blocks;
    blocks.reserve(rows.size() * cols.size());
    for (std::int64_t r : rows) {
        for (std::int64_t c : cols) {
            FullBandBlock blk;
            blk.origin = PatchOrigin{r, c};
            blk.data = DenseTensor::zeros({w1 * w1, i3});
            gather_patch(x, blk.origin, w1, blk.data.data());
            blocks.push_back(std::move(blk));
        }
    }
    return blocks;
}

std::vector<Cluster> kmeanspp_cluster(const std::vector<FullBandBlock>& blocks, int cluster_count,
                                      std::uint64_t seed, int max_kmeans_iters) {
    const std::int64_t n = static_cast<std::int64_t>(blocks.size());
    if (n == 0) {
        throw std::invalid_argument("kmeanspp_cluster: no blocks");
    }
    if (cluster_count < 1 || cluster_count > n) {
        throw std::invalid_argument("kmeanspp_cluster: cluster count " + std::to_string(cluster_count) +
                                    " not in [1, " + std::to_string(n) + "]");
    }
    if (max_kmeans_iters < 0) {
        throw std::invalid_argument("kmeanspp_cluster: negative iteration cap");
    }
    const std::int64_t d = element_count(blocks[0].data.dims());
    for (const auto& blk : blocks) {
        if (element_count(blk.data.dims()) != d) {
            throw std::invalid_argument("kmeanspp_cluster: blocks disagree on size");
        }
    }
    const std::int64_t l = cluster_count;
    SeededRng rng(seed);

    // k-means++ seeding: centers drawn proportionally to the squared distance
    // from the nearest already-chosen center.
    Eigen::MatrixXd centers(d, l);
    std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    {
        const std::int64_t first = static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(n)));
        centers.col(0) = Eigen::Map<const Eigen::VectorXd>(blocks[first].data.data(), d);
    }
    for (std::int64_t c = 1; c < l; ++c) {
        double total = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const double dist = squared_distance(blocks[i].data.data(), centers.col(c - 1).data(), d);
            d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], dist);
            total += d2[static_cast<std::size_t>(i)];
        }
        std::int64_t chosen = -1;
        if (total > 0.0) {
            const double r = rng.uniform_double() * total;
            double cum = 0.0;
            for (std::int64_t i = 0; i < n; ++i) {
                cum += d2[static_cast<std::size_t>(i)];
                if (cum > r) {
                    chosen = i;
                    break;
                }
            }
            if (chosen < 0) {
                chosen = n - 1;
            }
        } else {
            chosen = static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(n)));
        }
        centers.col(c) = Eigen::Map<const Eigen::VectorXd>(blocks[chosen].data.data(), d);
    }

    std::vector<std::int64_t> assign(static_cast<std::size_t>(n), 0);
    std::vector<double> assign_dist(static_cast<std::size_t>(n), 0.0);
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(l), 0);

    auto assign_all = [&]() {
        bool changed = false;
        std::fill(sizes.begin(), sizes.end(), std::int64_t{0});
        for (std::int64_t i = 0; i < n; ++i) {
            std::int64_t best = 0;
            double best_dist = std::numeric_limits<double>::infinity();
            for (std::int64_t c = 0; c < l; ++c) {
                const double dist = squared_distance(blocks[i].data.data(), centers.col(c).data(), d);
                if (dist < best_dist) {
                    best_dist = dist;
                    best = c;
                }
            }
            if (assign[static_cast<std::size_t>(i)] != best) {
                changed = true;
                assign[static_cast<std::size_t>(i)] = best;
            }
            assign_dist[static_cast<std::size_t>(i)] = best_dist;
            ++sizes[static_cast<std::size_t>(best)];
        }
        return changed;
    };

    auto repair_empty = [&]() {
        for (std::int64_t c = 0; c < l; ++c) {
            if (sizes[static_cast<std::size_t>(c)] > 0) {
                continue;
            }
            // Move the point farthest from its current center, drawn from a
            // cluster that can spare one; lowest block index breaks ties.
            std::int64_t pick = -1;
            double worst = -1.0;
            for (std::int64_t i = 0; i < n; ++i) {
                if (sizes[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])] < 2) {
                    continue;
                }
                if (assign_dist[static_cast<std::size_t>(i)] > worst) {
                    worst = assign_dist[static_cast<std::size_t>(i)];
                    pick = i;
                }
            }
            if (pick < 0) {
                throw std::runtime_error("kmeanspp_cluster: cannot repair empty cluster");
            }
            --sizes[static_cast<std::size_t>(assign[static_cast<std::size_t>(pick)])];
            assign[static_cast<std::size_t>(pick)] = c;
            assign_dist[static_cast<std::size_t>(pick)] = 0.0;
            ++sizes[static_cast<std::size_t>(c)];
            centers.col(c) = Eigen::Map<const Eigen::VectorXd>(blocks[pick].data.data(), d);
        }
    };

    auto recompute_centers = [&]() {
        centers.setZero();
        for (std::int64_t i = 0; i < n; ++i) {
            centers.col(assign[static_cast<std::size_t>(i)]) +=
                Eigen::Map<const Eigen::VectorXd>(blocks[i].data.data(), d);
        }
        for (std::int64_t c = 0; c < l; ++c) {
            centers.col(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
        }
    };

    assign_all();
    repair_empty();
    for (int it = 0; it < max_kmeans_iters; ++it) {
        recompute_centers();
        const bool changed = assign_all();
        repair_empty();
        if (!changed) {
            break;
        }
    }

    std::vector<Cluster> clusters(static_cast<std::size_t>(l));
    for (std::int64_t i = 0; i < n; ++i) {
        clusters[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])].member_origins.push_back(
            blocks[static_cast<std::size_t>(i)].origin);
    }
    return clusters;
}

Cluster build_cluster_tensor(std::span<const PatchOrigin> members, const DenseTensor& x,
                             const ObservationMask& mask, std::int64_t w1) {
    require_order3(x.dims(), "build_cluster_tensor");
    if (x.dims() != mask.dims()) {
        throw std::invalid_argument("build_cluster_tensor: tensor and mask shapes differ");
    }
    if (members.empty()) {
        throw std::invalid_argument("build_cluster_tensor: empty member list");
    }
    const std::int64_t h = static_cast<std::int64_t>(members.size());
    const std::int64_t i3 = x.dim(2);
    Cluster out;
    out.member_origins.assign(members.begin(), members.end());
    out.group_tensor = DenseTensor::zeros({w1 * w1, i3, h});
    const std::int64_t patch_elems = w1 * w1 * i3;
    for (std::int64_t m = 0; m < h; ++m) {
        require_patch_fits(x.dims(), members[static_cast<std::size_t>(m)], w1, "build_cluster_tensor");
        gather_patch(x, members[static_cast<std::size_t>(m)], w1,
                     out.group_tensor.data() + m * patch_elems);
    }
    out.sub_mask = gather_submask(mask, members, w1).reshaped({w1 * w1, i3, h});
    return out;
}

DenseTensor scatter_clusters(std::span<const Cluster> clusters, const Dims& image_dims, std::int64_t w1) {
    require_order3(image_dims, "scatter_clusters");
    Accumulator acc(image_dims);
    const std::int64_t patch_elems = w1 * w1 * image_dims[2];
    for (const Cluster& cluster : clusters) {
        const std::int64_t h = static_cast<std::int64_t>(cluster.member_origins.size());
        if (element_count(cluster.group_tensor.dims()) != patch_elems * h) {
            throw std::invalid_argument("scatter_clusters: cluster tensor size does not match its members");
        }
        for (std::int64_t m = 0; m < h; ++m) {
            acc.add_patch(cluster.member_origins[static_cast<std::size_t>(m)], w1,
                          std::span<const double>(cluster.group_tensor.data() + m * patch_elems,
                                                  static_cast<std::size_t>(patch_elems)));
        }
    }
    return acc.finalize();
}

std::vector<PatchOrigin> select_key_patches(const Dims& dims, std::int64_t w2, std::int64_t v) {
    require_order3(dims, "select_key_patches");
    const auto rows = grid_positions(dims[0], w2, v);
    const auto cols = grid_positions(dims[1], w2, v);
    std::vector<PatchOrigin> keys;
    keys.reserve(rows.size() * cols.size());
    for (std::int64_t r : rows) {
        for (std::int64_t c : cols) {
            keys.push_back(PatchOrigin{r, c});
        }
    }
    return keys;
}

NssGroup block_match(const PatchOrigin& key_origin, const DenseTensor& x, const ObservationMask& mask,
                     std::int64_t w2, int k, std::int64_t search_radius) {
    require_order3(x.dims(), "block_match");
    if (x.dims() != mask.dims()) {
        throw std::invalid_argument("block_match: tensor and mask shapes differ");
    }
    if (k < 1) {
        throw std::invalid_argument("block_match: k must be positive");
    }
    require_patch_fits(x.dims(), key_origin, w2, "block_match");

    const std::int64_t row_last = x.dim(0) - w2;
    const std::int64_t col_last = x.dim(1) - w2;
    std::int64_t r0 = 0, r1 = row_last, c0 = 0, c1 = col_last;
    if (search_radius >= 0) {
        r0 = std::max<std::int64_t>(0, key_origin.row - search_radius);
        r1 = std::min(row_last, key_origin.row + search_radius);
        c0 = std::max<std::int64_t>(0, key_origin.col - search_radius);
        c1 = std::min(col_last, key_origin.col + search_radius);
    }

    const std::int64_t patch_elems = w2 * w2 * x.dim(2);
    std::vector<double> key_patch(static_cast<std::size_t>(patch_elems));
    gather_patch(x, key_origin, w2, key_patch.data());

    struct Candidate {
        double dist;
        std::int64_t row;
        std::int64_t col;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(static_cast<std::size_t>((r1 - r0 + 1) * (c1 - c0 + 1)));
    std::vector<double> buf(static_cast<std::size_t>(patch_elems));
    for (std::int64_t r = r0; r <= r1; ++r) {
        for (std::int64_t c = c0; c <= c1; ++c) {
            if (r == key_origin.row && c == key_origin.col) {
                continue;
            }
            gather_patch(x, PatchOrigin{r, c}, w2, buf.data());
            candidates.push_back(Candidate{squared_distance(buf.data(), key_patch.data(), patch_elems), r, c});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.row != b.row) return a.row < b.row;
        return a.col < b.col;
    });

    NssGroup group;
    group.key_origin = key_origin;
    group.member_origins.push_back(key_origin);
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k - 1), candidates.size());
    for (std::size_t i = 0; i < take; ++i) {
        group.member_origins.push_back(PatchOrigin{candidates[i].row, candidates[i].col});
    }

    const std::int64_t h = static_cast<std::int64_t>(group.member_origins.size());
    group.group_tensor = DenseTensor::zeros({w2, w2, x.dim(2), h});
    for (std::int64_t m = 0; m < h; ++m) {
        gather_patch(x, group.member_origins[static_cast<std::size_t>(m)], w2,
                     group.group_tensor.data() + m * patch_elems);
    }
    group.sub_mask = gather_submask(mask, group.member_origins, w2);
    return group;
}

DenseTensor aggregate_groups(std::span<const NssGroup> groups, const Dims& image_dims, std::int64_t w2) {
    require_order3(image_dims, "aggregate_groups");
    Accumulator acc(image_dims);
    const std::int64_t patch_elems = w2 * w2 * image_dims[2];
    for (const NssGroup& group : groups) {
        const std::int64_t h = static_cast<std::int64_t>(group.member_origins.size());
        if (element_count(group.group_tensor.dims()) != patch_elems * h) {
            throw std::invalid_argument("aggregate_groups: group tensor size does not match its members");
        }
        for (std::int64_t m = 0; m < h; ++m) {
            acc.add_patch(group.member_origins[static_cast<std::size_t>(m)], w2,
                          std::span<const double>(group.group_tensor.data() + m * patch_elems,
                                                  static_cast<std::size_t>(patch_elems)));
        }
    }
    return acc.finalize();
}

Accumulator::Accumulator(Dims image_dims) : sum_(DenseTensor::zeros(image_dims)) {
    require_order3(sum_.dims(), "Accumulator");
    weight_.assign(static_cast<std::size_t>(element_count(sum_.dims())), 0.0);
}

void Accumulator::add_patch(const PatchOrigin& origin, std::int64_t width, std::span<const double> patch) {
    require_patch_fits(sum_.dims(), origin, width, "Accumulator::add_patch");
    const std::int64_t i1 = sum_.dim(0);
    const std::int64_t i2 = sum_.dim(1);
    const std::int64_t i3 = sum_.dim(2);
    if (static_cast<std::int64_t>(patch.size()) != width * width * i3) {
        throw std::invalid_argument("Accumulator::add_patch: patch size mismatch");
    }
    std::int64_t pos = 0;
    for (std::int64_t b = 0; b < i3; ++b) {
        for (std::int64_t j = 0; j < width; ++j) {
            const std::int64_t base = origin.row + (origin.col + j) * i1 + b * i1 * i2;
            for (std::int64_t i = 0; i < width; ++i) {
                sum_.values()[static_cast<std::size_t>(base + i)] += patch[static_cast<std::size_t>(pos)];
                weight_[static_cast<std::size_t>(base + i)] += 1.0;
                ++pos;
            }
        }
    }
}

DenseTensor Accumulator::finalize() const {
    DenseTensor out = sum_;
    for (std::size_t i = 0; i < weight_.size(); ++i) {
        if (weight_[i] <= 0.0) {
            throw std::runtime_error("Accumulator::finalize: entry " + std::to_string(i) +
                                     " was never covered by a patch");
        }
        out.values()[i] /= weight_[i];
    }
    return out;
}

}  // namespace mgtc
