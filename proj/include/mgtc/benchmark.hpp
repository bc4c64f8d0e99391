#pragma once

#include "mgtc/degradation.hpp"
#include "mgtc/metrics.hpp"
#include "mgtc/pipeline.hpp"
#include "mgtc/tensor.hpp"

#include <string>
#include <vector>

namespace mgtc {

struct BenchmarkScenario {
    std::string name;  // row label; empty picks "<kind>_<rate>"
    DegradationSpec degradation;
};

struct BenchmarkRow {
    std::string name;
    std::string kind;
    double sampling_rate = 0.0;
    double realized_rate = 0.0;
    QualityReport quality;
    double seconds = 0.0;
};

struct BenchmarkTable {
    std::vector<BenchmarkRow> rows;

    std::string to_text() const;
    std::string to_json() const;
};

// Degrades the reference cube per scenario, recovers it with the given
// configuration, and scores the result against the reference.
BenchmarkTable run_benchmark(const DenseTensor& truth, const std::vector<BenchmarkScenario>& scenarios,
                             const PipelineConfig& config);

// Same, loading the reference from a tensor container on disk.
BenchmarkTable run_benchmark(const std::string& truth_path, const std::vector<BenchmarkScenario>& scenarios,
                             const PipelineConfig& config);

}  // namespace mgtc
