#include "mgtc/degradation.hpp"

#include "mgtc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mgtc {

ObservationMask ObservationMask::full(Dims dims) {
    ObservationMask m;
    const std::int64_t total = element_count(dims);
    m.dims_ = std::move(dims);
    m.observed_.assign(static_cast<std::size_t>(total), 1);
    return m;
}

ObservationMask ObservationMask::empty(Dims dims) {
    ObservationMask m;
    const std::int64_t total = element_count(dims);
    m.dims_ = std::move(dims);
    m.observed_.assign(static_cast<std::size_t>(total), 0);
    return m;
}

ObservationMask ObservationMask::from_bytes(Dims dims, std::vector<std::uint8_t> observed) {
    const std::int64_t total = element_count(dims);
    if (total != static_cast<std::int64_t>(observed.size())) {
        throw std::invalid_argument("mask byte count does not match dims");
    }
    for (std::uint8_t b : observed) {
        if (b > 1) throw std::invalid_argument("mask bytes must be 0 or 1");
    }
    ObservationMask m;
    m.dims_ = std::move(dims);
    m.observed_ = std::move(observed);
    return m;
}

std::int64_t ObservationMask::observed_count() const {
    return std::accumulate(observed_.begin(), observed_.end(), std::int64_t{0},
                           [](std::int64_t acc, std::uint8_t b) { return acc + b; });
}

double ObservationMask::realized_rate() const {
    return static_cast<double>(observed_count()) / static_cast<double>(size());
}

ObservationMask ObservationMask::reshaped(Dims new_dims) const {
    if (element_count(new_dims) != size()) {
        throw std::invalid_argument("mask reshape changes element count");
    }
    ObservationMask m;
    m.dims_ = std::move(new_dims);
    m.observed_ = observed_;
    return m;
}

namespace {

void check_rate(double rate) {
    if (!(rate > 0.0) || rate > 1.0) {
        throw std::invalid_argument("sampling rate must be in (0, 1], got " + std::to_string(rate));
    }
}

}  // namespace

ObservationMask make_pixel_mask(const Dims& dims, double sampling_rate, std::uint64_t seed) {
    check_rate(sampling_rate);
    const std::int64_t total = element_count(dims);
    const std::int64_t keep = std::llround(sampling_rate * static_cast<double>(total));

    // Partial Fisher-Yates: the first `keep` slots end up holding a uniform
    // sample without replacement.
    std::vector<std::int64_t> indices(static_cast<std::size_t>(total));
    std::iota(indices.begin(), indices.end(), std::int64_t{0});
    SeededRng rng(seed);
    ObservationMask mask = ObservationMask::empty(dims);
    for (std::int64_t i = 0; i < keep; ++i) {
        const std::int64_t j = i + static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(total - i)));
        std::swap(indices[static_cast<std::size_t>(i)], indices[static_cast<std::size_t>(j)]);
        mask.set(indices[static_cast<std::size_t>(i)], true);
    }
    return mask;
}

ObservationMask make_stripe_mask(const Dims& dims, double sampling_rate, std::uint64_t seed) {
    check_rate(sampling_rate);
    if (dims.size() != 3) {
        throw std::invalid_argument("stripe mask requires an order-3 tensor");
    }
    const std::int64_t rows = dims[0], cols = dims[1], bands = dims[2];
    const std::int64_t keep = std::llround(sampling_rate * static_cast<double>(cols));
    if (keep == 0) {
        throw std::invalid_argument("stripe rate " + std::to_string(sampling_rate) + " retains zero columns of " +
                                    std::to_string(cols));
    }

    SeededRng rng(seed);
    ObservationMask mask = ObservationMask::empty(dims);
    std::vector<std::int64_t> columns(static_cast<std::size_t>(cols));
    for (std::int64_t b = 0; b < bands; ++b) {
        std::iota(columns.begin(), columns.end(), std::int64_t{0});
        for (std::int64_t i = 0; i < keep; ++i) {
            const std::int64_t j =
                i + static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(cols - i)));
            std::swap(columns[static_cast<std::size_t>(i)], columns[static_cast<std::size_t>(j)]);
            const std::int64_t c = columns[static_cast<std::size_t>(i)];
            for (std::int64_t r = 0; r < rows; ++r) {
                mask.set(r + rows * (c + cols * b), true);
            }
        }
    }
    return mask;
}

ObservationMask make_mask(const Dims& dims, const DegradationSpec& spec) {
    switch (spec.kind) {
        case DegradationKind::pixel:
            return make_pixel_mask(dims, spec.sampling_rate, spec.seed);
        case DegradationKind::stripe:
            return make_stripe_mask(dims, spec.sampling_rate, spec.seed);
    }
    throw std::invalid_argument("unknown degradation kind");
}

DenseTensor apply_mask(const DenseTensor& t, const ObservationMask& mask) {
    if (t.dims() != mask.dims()) {
        throw std::invalid_argument("apply_mask: dimension mismatch");
    }
    DenseTensor out = DenseTensor::zeros(t.dims());
    for (std::int64_t i = 0; i < t.size(); ++i) {
        if (mask.observed(i)) out[i] = t[i];
    }
    return out;
}

DenseTensor project_observed(const DenseTensor& x, const DenseTensor& t, const ObservationMask& mask) {
    if (x.dims() != t.dims() || x.dims() != mask.dims()) {
        throw std::invalid_argument("project_observed: dimension mismatch");
    }
    DenseTensor out = x;
    for (std::int64_t i = 0; i < t.size(); ++i) {
        if (mask.observed(i)) out[i] = t[i];
    }
    return out;
}

ObservationMask gather_submask(const ObservationMask& mask, std::span<const PatchOrigin> origins,
                               std::int64_t width) {
    if (mask.order() != 3) {
        throw std::invalid_argument("gather_submask: mask must be order 3");
    }
    const std::int64_t rows = mask.dim(0), cols = mask.dim(1), bands = mask.dim(2);
    const std::int64_t count = static_cast<std::int64_t>(origins.size());
    if (count == 0) throw std::invalid_argument("gather_submask: empty patch list");

    ObservationMask out = ObservationMask::empty({width, width, bands, count});
    std::int64_t pos = 0;
    for (std::int64_t h = 0; h < count; ++h) {
        const auto& o = origins[static_cast<std::size_t>(h)];
        if (o.row < 0 || o.col < 0 || o.row + width > rows || o.col + width > cols) {
            throw std::out_of_range("gather_submask: patch origin out of bounds");
        }
        for (std::int64_t b = 0; b < bands; ++b) {
            for (std::int64_t j = 0; j < width; ++j) {
                for (std::int64_t i = 0; i < width; ++i) {
                    out.set(pos++, mask.observed((o.row + i) + rows * ((o.col + j) + cols * b)));
                }
            }
        }
    }
    return out;
}

}  // namespace mgtc
