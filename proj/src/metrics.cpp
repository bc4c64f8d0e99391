#include "mgtc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mgtc {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kPsnrCapDb = 100.0;

void require_same_cube(const DenseTensor& x, const DenseTensor& ref, const char* who) {
    if (x.dims().size() != 3 || ref.dims().size() != 3) {
        throw std::invalid_argument(std::string(who) + ": expected order-3 tensors");
    }
    if (x.dims() != ref.dims()) {
        throw std::invalid_argument(std::string(who) + ": shapes differ");
    }
    require_finite(x, who);
    require_finite(ref, who);
}

double band_mse(const DenseTensor& x, const DenseTensor& ref, std::int64_t band) {
    const std::int64_t plane = x.dim(0) * x.dim(1);
    const double* px = x.data() + band * plane;
    const double* pr = ref.data() + band * plane;
    double acc = 0.0;
    for (std::int64_t i = 0; i < plane; ++i) {
        const double d = px[i] - pr[i];
        acc += d * d;
    }
    return acc / static_cast<double>(plane);
}

double psnr_from_mse(double mse, double peak) {
    if (mse == 0.0) {
        return kPsnrCapDb;
    }
    return 10.0 * std::log10(peak * peak / mse);
}

// Normalized 11x11 Gaussian, row-major.
std::vector<double> gaussian_window() {
    std::vector<double> w(kSsimWindow * kSsimWindow);
    const int half = kSsimWindow / 2;
    double total = 0.0;
    for (int r = 0; r < kSsimWindow; ++r) {
        for (int c = 0; c < kSsimWindow; ++c) {
            const double dr = r - half;
            const double dc = c - half;
            const double v = std::exp(-(dr * dr + dc * dc) / (2.0 * kSsimSigma * kSsimSigma));
            w[static_cast<std::size_t>(r * kSsimWindow + c)] = v;
            total += v;
        }
    }
    for (double& v : w) {
        v /= total;
    }
    return w;
}

}  // namespace

double reference_peak(const DenseTensor& ref) {
    if (ref.values().empty()) {
        throw std::invalid_argument("reference_peak: empty tensor");
    }
    const double peak = *std::max_element(ref.values().begin(), ref.values().end());
    if (!(peak > 0.0)) {
        throw std::invalid_argument("reference_peak: reference maximum must be positive, got " +
                                    std::to_string(peak));
    }
    return peak;
}

std::vector<double> psnr_per_band(const DenseTensor& x, const DenseTensor& ref) {
    require_same_cube(x, ref, "psnr_per_band");
    const double peak = reference_peak(ref);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(x.dim(2)));
    for (std::int64_t b = 0; b < x.dim(2); ++b) {
        out.push_back(psnr_from_mse(band_mse(x, ref, b), peak));
    }
    return out;
}

double psnr_global(const DenseTensor& x, const DenseTensor& ref) {
    require_same_cube(x, ref, "psnr_global");
    const double peak = reference_peak(ref);
    const std::int64_t n = element_count(x.dims());
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double d = x.values()[static_cast<std::size_t>(i)] - ref.values()[static_cast<std::size_t>(i)];
        acc += d * d;
    }
    return psnr_from_mse(acc / static_cast<double>(n), peak);
}

std::vector<double> ssim_per_band(const DenseTensor& x, const DenseTensor& ref) {
    require_same_cube(x, ref, "ssim_per_band");
    const std::int64_t rows = x.dim(0);
    const std::int64_t cols = x.dim(1);
    if (rows < kSsimWindow || cols < kSsimWindow) {
        throw std::invalid_argument("ssim_per_band: band smaller than the 11x11 window");
    }
    // Symmetric dynamic range so that swapping the arguments cannot change
    // the score.
    const double peak = std::max(*std::max_element(x.values().begin(), x.values().end()),
                                 *std::max_element(ref.values().begin(), ref.values().end()));
    if (!(peak > 0.0)) {
        throw std::invalid_argument("ssim_per_band: inputs must contain a positive value");
    }
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    const std::vector<double> w = gaussian_window();
    const std::int64_t plane = rows * cols;

    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(x.dim(2)));
    for (std::int64_t b = 0; b < x.dim(2); ++b) {
        const double* px = x.data() + b * plane;
        const double* pr = ref.data() + b * plane;
        double total = 0.0;
        std::int64_t count = 0;
        for (std::int64_t top = 0; top + kSsimWindow <= rows; ++top) {
            for (std::int64_t left = 0; left + kSsimWindow <= cols; ++left) {
                double mu_x = 0.0, mu_y = 0.0, xx = 0.0, yy = 0.0, xy = 0.0;
                for (int wc = 0; wc < kSsimWindow; ++wc) {
                    for (int wr = 0; wr < kSsimWindow; ++wr) {
                        const double g = w[static_cast<std::size_t>(wr * kSsimWindow + wc)];
                        const double a = px[(top + wr) + (left + wc) * rows];
                        const double r = pr[(top + wr) + (left + wc) * rows];
                        mu_x += g * a;
                        mu_y += g * r;
                        xx += g * (a * a);
                        yy += g * (r * r);
                        xy += g * (a * r);
                    }
                }
                const double sigma_x2 = xx - mu_x * mu_x;
                const double sigma_y2 = yy - mu_y * mu_y;
                const double sigma_xy = xy - mu_x * mu_y;
                const double num = (2.0 * (mu_x * mu_y) + c1) * (2.0 * sigma_xy + c2);
                const double den = (mu_x * mu_x + mu_y * mu_y + c1) * (sigma_x2 + sigma_y2 + c2);
                total += num / den;
                ++count;
            }
        }
        double band = total / static_cast<double>(count);
        out.push_back(band);
    }
    return out;
}

double relative_squared_error(const DenseTensor& x, const DenseTensor& ref) {
    require_same_cube(x, ref, "relative_squared_error");
    double diff2 = 0.0;
    double ref2 = 0.0;
    const std::int64_t n = element_count(x.dims());
    for (std::int64_t i = 0; i < n; ++i) {
        const double r = ref.values()[static_cast<std::size_t>(i)];
        const double d = x.values()[static_cast<std::size_t>(i)] - r;
        diff2 += d * d;
        ref2 += r * r;
    }
    if (ref2 == 0.0) {
        throw std::invalid_argument("relative_squared_error: reference is identically zero");
    }
    return std::sqrt(diff2) / std::sqrt(ref2);
}

QualityReport evaluate_quality(const DenseTensor& x, const DenseTensor& ref) {
    QualityReport report;
    report.per_band_psnr = psnr_per_band(x, ref);
    report.per_band_ssim = ssim_per_band(x, ref);
    report.rse = relative_squared_error(x, ref);
    double psum = 0.0;
    for (double v : report.per_band_psnr) {
        psum += v;
    }
    double ssum = 0.0;
    for (double v : report.per_band_ssim) {
        ssum += v;
    }
    report.psnr_db = psum / static_cast<double>(report.per_band_psnr.size());
    report.ssim = ssum / static_cast<double>(report.per_band_ssim.size());
    return report;
}

std::string QualityReport::to_text() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << "psnr_db " << psnr_db << "\n";
    os << "ssim    " << ssim << "\n";
    os.precision(6);
    os << "rse     " << rse << "\n";
    return os.str();
}

}  // namespace mgtc
