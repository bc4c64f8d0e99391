#pragma once

#include "mgtc/coarse.hpp"
#include "mgtc/degradation.hpp"
#include "mgtc/fctn.hpp"
#include "mgtc/metrics.hpp"
#include "mgtc/tensor.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mgtc {

enum class Ablation { full, coarse_only, fine_only };

std::string ablation_name(Ablation a);
Ablation parse_ablation(const std::string& name);

struct PipelineConfig {
    std::int64_t w1 = 5;       // coarse-path block width
    std::int64_t stride1 = 2;  // coarse-path grid stride
    std::int64_t w2 = 6;       // fine-path patch width
    std::int64_t v = 5;        // key-patch interval
    std::int64_t blocks_per_cluster = 50;  // cluster count rule: max(1, ceil(S / blocks_per_cluster))
    std::int64_t cluster_count = 0;        // > 0 overrides the rule (still capped at S)
    int k_similar = 16;
    std::int64_t search_radius = 20;  // Chebyshev radius for block matching; < 0 searches everywhere
    int iters = 3;                    // non-local rounds after the two init stages
    int kmeans_max_iters = 20;
    int workers = 0;  // 0: hardware concurrency
    std::uint64_t seed = 0;
    Ablation ablation = Ablation::full;
    bool normalize_input = true;
    CoarseConfig coarse;
    FctnConfig fctn_init;   // whole-cube run, order-3 ranks
    FctnConfig fctn_group;  // per-group runs, order-4 ranks

    PipelineConfig();

    void validate() const;

    // Flat key/value view used by the config file format and the report echo.
    std::vector<std::pair<std::string, std::string>> to_key_values() const;
    // Applies one key; unknown keys and unparsable values throw.
    void set_key_value(const std::string& key, const std::string& value);
};

// Observer snapshot handed out after every pipeline stage. `x` is the current
// iterate in the pipeline's working scale and matches `observed` bitwise on
// the mask.
struct StageSnapshot {
    const std::string& name;
    const DenseTensor& x;
    const DenseTensor& observed;
    const ObservationMask& mask;
};
using StageObserver = std::function<void(const StageSnapshot&)>;

struct StageRecord {
    std::string name;
    double seconds = 0.0;
    int iterations = 0;           // inner solver iterations (summed over groups for non-local stages)
    double rel_change = 0.0;      // change of the full iterate produced by this stage
    std::int64_t groups = 0;      // solves run by this stage (1 for the init stages)
};

struct RecoveryReport {
    std::vector<StageRecord> stages;
    double realized_rate = 0.0;
    double normalization_scale = 1.0;
    std::uint64_t seed = 0;
    std::string rng_name;
    std::string ablation;
    double total_seconds = 0.0;

    std::string to_text(bool include_timings) const;
};

struct RecoveryResult {
    DenseTensor x;
    RecoveryReport report;
};

// Full recovery: coarse whole-cube init, fine whole-cube init warm-started
// from it, then `iters` rounds of a clustered coarse pass followed by a
// block-matched fine pass. Ablations skip one of the two paths end to end.
// The returned tensor equals t bitwise on the observed set.
RecoveryResult recover(const DenseTensor& t, const ObservationMask& mask, const PipelineConfig& config,
                       const StageObserver& observer = {});

}  // namespace mgtc
