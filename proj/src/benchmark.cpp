#include "mgtc/benchmark.hpp"

#include "mgtc/io.hpp"

#include <json.hpp>

#include <chrono>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace mgtc {

namespace {

std::string kind_name(DegradationKind kind) {
    return kind == DegradationKind::pixel ? "pixel" : "stripe";
}

std::string default_name(const DegradationSpec& spec) {
    std::ostringstream os;
    os << kind_name(spec.kind) << "_" << spec.sampling_rate;
    return os.str();
}

}  // namespace

BenchmarkTable run_benchmark(const DenseTensor& truth, const std::vector<BenchmarkScenario>& scenarios,
                             const PipelineConfig& config) {
    if (scenarios.empty()) {
        throw std::invalid_argument("run_benchmark: no scenarios");
    }
    BenchmarkTable table;
    for (const BenchmarkScenario& scenario : scenarios) {
        const auto t0 = std::chrono::steady_clock::now();
        ObservationMask mask = make_mask(truth.dims(), scenario.degradation);
        RecoveryResult result = recover(truth, mask, config);
        BenchmarkRow row;
        row.name = scenario.name.empty() ? default_name(scenario.degradation) : scenario.name;
        row.kind = kind_name(scenario.degradation.kind);
        row.sampling_rate = scenario.degradation.sampling_rate;
        row.realized_rate = mask.realized_rate();
        row.quality = evaluate_quality(result.x, truth);
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        table.rows.push_back(std::move(row));
    }
    return table;
}

BenchmarkTable run_benchmark(const std::string& truth_path, const std::vector<BenchmarkScenario>& scenarios,
                             const PipelineConfig& config) {
    return run_benchmark(load_tensor(truth_path), scenarios, config);
}

std::string BenchmarkTable::to_text() const {
    std::ostringstream os;
    os << std::left << std::setw(16) << "scenario" << std::right << std::setw(8) << "kind" << std::setw(8)
       << "rate" << std::setw(10) << "realized" << std::setw(10) << "psnr_db" << std::setw(9) << "ssim"
       << std::setw(11) << "rse" << std::setw(10) << "seconds" << "\n";
    for (const BenchmarkRow& r : rows) {
        os << std::left << std::setw(16) << r.name << std::right << std::setw(8) << r.kind << std::fixed
           << std::setw(8) << std::setprecision(3) << r.sampling_rate << std::setw(10) << std::setprecision(4)
           << r.realized_rate << std::setw(10) << std::setprecision(3) << r.quality.psnr_db << std::setw(9)
           << std::setprecision(4) << r.quality.ssim << std::setw(11) << std::setprecision(6) << r.quality.rse
           << std::setw(10) << std::setprecision(2) << r.seconds << "\n";
        os.unsetf(std::ios::floatfield);
    }
    return os.str();
}

std::string BenchmarkTable::to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const BenchmarkRow& r : rows) {
        nlohmann::json row;
        row["scenario"] = r.name;
        row["kind"] = r.kind;
        row["sampling_rate"] = r.sampling_rate;
        row["realized_rate"] = r.realized_rate;
        row["psnr_db"] = r.quality.psnr_db;
        row["ssim"] = r.quality.ssim;
        row["rse"] = r.quality.rse;
        row["per_band_psnr"] = r.quality.per_band_psnr;
        row["per_band_ssim"] = r.quality.per_band_ssim;
        row["seconds"] = r.seconds;
        out.push_back(std::move(row));
    }
    return out.dump(2) + "\n";
}

}  // namespace mgtc
