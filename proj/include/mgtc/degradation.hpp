#pragma once

#include "mgtc/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mgtc {

// Boolean tensor marking the observed set. Shares the linearization of
// DenseTensor (mode 0 fastest).
class ObservationMask {
public:
    ObservationMask() = default;
    static ObservationMask full(Dims dims);
    static ObservationMask empty(Dims dims);
    static ObservationMask from_bytes(Dims dims, std::vector<std::uint8_t> observed);

    const Dims& dims() const { return dims_; }
    int order() const { return static_cast<int>(dims_.size()); }
    std::int64_t size() const { return static_cast<std::int64_t>(observed_.size()); }
    std::int64_t dim(int mode) const { return dims_[static_cast<std::size_t>(mode)]; }

    bool observed(std::int64_t i) const { return observed_[static_cast<std::size_t>(i)] != 0; }
    void set(std::int64_t i, bool value) { observed_[static_cast<std::size_t>(i)] = value ? 1 : 0; }

    const std::vector<std::uint8_t>& bytes() const { return observed_; }

    std::int64_t observed_count() const;
    double realized_rate() const;

    ObservationMask reshaped(Dims new_dims) const;

private:
    Dims dims_;
    std::vector<std::uint8_t> observed_;
};

enum class DegradationKind { pixel, stripe };

struct DegradationSpec {
    DegradationKind kind = DegradationKind::pixel;
    double sampling_rate = 1.0;  // fraction observed, in (0, 1]
    std::uint64_t seed = 0;
};

// Exactly round(rate * total) entries observed, drawn uniformly without
// replacement from the seeded generator.
ObservationMask make_pixel_mask(const Dims& dims, double sampling_rate, std::uint64_t seed);

// Order-3 only. Per band, round(rate * I2) full-height columns are retained;
// everything else is missing. A rate that rounds to zero columns is an error
// (the band would be unrecoverable).
ObservationMask make_stripe_mask(const Dims& dims, double sampling_rate, std::uint64_t seed);

ObservationMask make_mask(const Dims& dims, const DegradationSpec& spec);

// Observed entries copied, missing entries set to 0.
DenseTensor apply_mask(const DenseTensor& t, const ObservationMask& mask);

// t on the observed set, x elsewhere. Observed entries are copied bitwise.
DenseTensor project_observed(const DenseTensor& x, const DenseTensor& t, const ObservationMask& mask);

struct PatchOrigin {
    std::int64_t row = 0;
    std::int64_t col = 0;
};

// Gathers the mask entries of the given spatial patches (width x width, all
// bands) into a mask of dims (width, width, I3, H), patches stacked along the
// last mode in list order. Callers flatten to (width^2, I3, H) via reshaped().
ObservationMask gather_submask(const ObservationMask& mask, std::span<const PatchOrigin> origins,
                               std::int64_t width);

}  // namespace mgtc
