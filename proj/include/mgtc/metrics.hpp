#pragma once

#include "mgtc/tensor.hpp"

#include <string>
#include <vector>

namespace mgtc {

struct QualityReport {
    double psnr_db = 0.0;  // mean of the per-band values
    double ssim = 0.0;     // mean of the per-band values
    double rse = 0.0;
    std::vector<double> per_band_psnr;
    std::vector<double> per_band_ssim;

    std::string to_text() const;
};

// Peak used by both PSNR and SSIM: the maximum of the reference cube. Must be
// positive.
double reference_peak(const DenseTensor& ref);

// 10*log10(peak^2 / mse) per band; an exact-zero mse is reported as 100 dB.
std::vector<double> psnr_per_band(const DenseTensor& x, const DenseTensor& ref);

// Single PSNR over the whole cube with the same peak convention.
double psnr_global(const DenseTensor& x, const DenseTensor& ref);

// Mean SSIM per band: 11x11 Gaussian window (sigma 1.5), valid region only,
// C1 = (0.01*peak)^2, C2 = (0.03*peak)^2 with peak the larger of the two
// input maxima (so the score is symmetric). Bitwise-identical inputs score
// exactly 1.0.
std::vector<double> ssim_per_band(const DenseTensor& x, const DenseTensor& ref);

// ||x - ref||_F / ||ref||_F.
double relative_squared_error(const DenseTensor& x, const DenseTensor& ref);

QualityReport evaluate_quality(const DenseTensor& x, const DenseTensor& ref);

}  // namespace mgtc
