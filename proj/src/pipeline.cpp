#include "mgtc/pipeline.hpp"

#include "mgtc/format.hpp"
#include "mgtc/nonlocal.hpp"
#include "mgtc/parallel.hpp"
#include "mgtc/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace mgtc {

namespace {

// Sub-stream tags for derive_seed.
constexpr std::uint64_t kSeedFctnInit = 1;
constexpr std::uint64_t kSeedKmeans = 2;
constexpr std::uint64_t kSeedGroupFctn = 3;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::int64_t parse_i64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer for '" + key + "': " + value);
    }
}

int parse_int(const std::string& key, const std::string& value) {
    return static_cast<int>(parse_i64(key, value));
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad unsigned integer for '" + key + "': " + value);
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad number for '" + key + "': " + value);
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::invalid_argument("config: bad boolean for '" + key + "': " + value);
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::string item;
    std::istringstream is(value);
    while (std::getline(is, item, ',')) {
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) {
        throw std::invalid_argument("config: empty list for '" + key + "'");
    }
    return out;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += format_double(v[i]);
    }
    return out;
}

FctnRankTable group_rank_table(std::int64_t spatial, std::int64_t similarity) {
    FctnRankTable t(4);
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            t.set_rank(i, j, j == 3 ? similarity : spatial);
        }
    }
    return t;
}

std::string scale_to_string(const std::optional<double>& s) {
    return s ? format_double(*s) : std::string("auto");
}

void scale_from_string(std::optional<double>& s, const std::string& key, const std::string& value) {
    if (value == "auto") {
        s.reset();
    } else {
        s = parse_double(key, value);
    }
}

}  // namespace

std::string ablation_name(Ablation a) {
    switch (a) {
        case Ablation::full: return "full";
        case Ablation::coarse_only: return "coarse_only";
        case Ablation::fine_only: return "fine_only";
    }
    throw std::invalid_argument("ablation_name: unknown value");
}

Ablation parse_ablation(const std::string& name) {
    if (name == "full") return Ablation::full;
    if (name == "coarse_only" || name == "coarse") return Ablation::coarse_only;
    if (name == "fine_only" || name == "fine") return Ablation::fine_only;
    throw std::invalid_argument("parse_ablation: expected full|coarse_only|fine_only, got '" + name + "'");
}

PipelineConfig::PipelineConfig() {
    fctn_init.ranks = FctnRankTable::uniform(3, 3);
    fctn_group.ranks = group_rank_table(3, 2);
}

void PipelineConfig::validate() const {
    if (w1 < 1 || w2 < 1) {
        throw std::invalid_argument("PipelineConfig: block widths must be positive");
    }
    if (stride1 < 1 || stride1 > w1) {
        throw std::invalid_argument("PipelineConfig: stride1 must be in [1, w1] so blocks cover the image");
    }
    if (v < 1 || v > w2) {
        throw std::invalid_argument("PipelineConfig: v must be in [1, w2] so key patches cover the image");
    }
    if (blocks_per_cluster < 1) {
        throw std::invalid_argument("PipelineConfig: blocks_per_cluster must be positive");
    }
    if (cluster_count < 0) {
        throw std::invalid_argument("PipelineConfig: cluster_count must be >= 0");
    }
    if (k_similar < 1) {
        throw std::invalid_argument("PipelineConfig: k_similar must be positive");
    }
    if (iters < 0 || kmeans_max_iters < 0 || workers < 0) {
        throw std::invalid_argument("PipelineConfig: counts must be non-negative");
    }
    coarse.validate(3);
    fctn_init.validate();
    fctn_group.validate();
    if (fctn_init.ranks.order() != 3) {
        throw std::invalid_argument("PipelineConfig: fctn_init ranks must be order 3");
    }
    if (fctn_group.ranks.order() != 4) {
        throw std::invalid_argument("PipelineConfig: fctn_group ranks must be order 4");
    }
}

std::vector<std::pair<std::string, std::string>> PipelineConfig::to_key_values() const {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("w1", std::to_string(w1));
    kv.emplace_back("stride1", std::to_string(stride1));
    kv.emplace_back("w2", std::to_string(w2));
    kv.emplace_back("v", std::to_string(v));
    kv.emplace_back("blocks_per_cluster", std::to_string(blocks_per_cluster));
    kv.emplace_back("cluster_count", std::to_string(cluster_count));
    kv.emplace_back("k_similar", std::to_string(k_similar));
    kv.emplace_back("search_radius", std::to_string(search_radius));
    kv.emplace_back("iters", std::to_string(iters));
    kv.emplace_back("kmeans_max_iters", std::to_string(kmeans_max_iters));
    kv.emplace_back("workers", std::to_string(workers));
    kv.emplace_back("seed", std::to_string(seed));
    kv.emplace_back("ablation", ablation_name(ablation));
    kv.emplace_back("normalize_input", normalize_input ? "true" : "false");
    kv.emplace_back("coarse.alpha", join_doubles(coarse.alpha));
    kv.emplace_back("coarse.mu0", format_double(coarse.mu0));
    kv.emplace_back("coarse.eta", format_double(coarse.eta));
    kv.emplace_back("coarse.epsilon", format_double(coarse.epsilon));
    kv.emplace_back("coarse.max_iters", std::to_string(coarse.max_iters));
    kv.emplace_back("coarse.tol", format_double(coarse.tol));
    kv.emplace_back("coarse.weighted", coarse.weighted ? "true" : "false");
    kv.emplace_back("fctn_init.rank", std::to_string(fctn_init.ranks.rank(0, 1)));
    kv.emplace_back("fctn_init.rho", format_double(fctn_init.rho));
    kv.emplace_back("fctn_init.max_iters", std::to_string(fctn_init.max_iters));
    kv.emplace_back("fctn_init.tol", format_double(fctn_init.tol));
    kv.emplace_back("fctn_init.init_scale", scale_to_string(fctn_init.init_scale));
    kv.emplace_back("fctn_group.rank_spatial", std::to_string(fctn_group.ranks.rank(0, 1)));
    kv.emplace_back("fctn_group.rank_similarity", std::to_string(fctn_group.ranks.rank(0, 3)));
    kv.emplace_back("fctn_group.rho", format_double(fctn_group.rho));
    kv.emplace_back("fctn_group.max_iters", std::to_string(fctn_group.max_iters));
    kv.emplace_back("fctn_group.tol", format_double(fctn_group.tol));
    kv.emplace_back("fctn_group.init_scale", scale_to_string(fctn_group.init_scale));
    return kv;
}

void PipelineConfig::set_key_value(const std::string& key, const std::string& value) {
    if (key == "w1") w1 = parse_i64(key, value);
    else if (key == "stride1") stride1 = parse_i64(key, value);
    else if (key == "w2") w2 = parse_i64(key, value);
    else if (key == "v") v = parse_i64(key, value);
    else if (key == "blocks_per_cluster") blocks_per_cluster = parse_i64(key, value);
    else if (key == "cluster_count") cluster_count = parse_i64(key, value);
    else if (key == "k_similar") k_similar = parse_int(key, value);
    else if (key == "search_radius") search_radius = parse_i64(key, value);
    else if (key == "iters") iters = parse_int(key, value);
    else if (key == "kmeans_max_iters") kmeans_max_iters = parse_int(key, value);
    else if (key == "workers") workers = parse_int(key, value);
    else if (key == "seed") seed = parse_u64(key, value);
    else if (key == "ablation") ablation = parse_ablation(value);
    else if (key == "normalize_input") normalize_input = parse_bool(key, value);
    else if (key == "coarse.alpha") coarse.alpha = parse_double_list(key, value);
    else if (key == "coarse.mu0") coarse.mu0 = parse_double(key, value);
    else if (key == "coarse.eta") coarse.eta = parse_double(key, value);
    else if (key == "coarse.epsilon") coarse.epsilon = parse_double(key, value);
    else if (key == "coarse.max_iters") coarse.max_iters = parse_int(key, value);
    else if (key == "coarse.tol") coarse.tol = parse_double(key, value);
    else if (key == "coarse.weighted") coarse.weighted = parse_bool(key, value);
    else if (key == "fctn_init.rank") fctn_init.ranks = FctnRankTable::uniform(3, parse_i64(key, value));
    else if (key == "fctn_init.rho") fctn_init.rho = parse_double(key, value);
    else if (key == "fctn_init.max_iters") fctn_init.max_iters = parse_int(key, value);
    else if (key == "fctn_init.tol") fctn_init.tol = parse_double(key, value);
    else if (key == "fctn_init.init_scale") scale_from_string(fctn_init.init_scale, key, value);
    else if (key == "fctn_group.rank_spatial")
        fctn_group.ranks = group_rank_table(parse_i64(key, value), fctn_group.ranks.rank(0, 3));
    else if (key == "fctn_group.rank_similarity")
        fctn_group.ranks = group_rank_table(fctn_group.ranks.rank(0, 1), parse_i64(key, value));
    else if (key == "fctn_group.rho") fctn_group.rho = parse_double(key, value);
    else if (key == "fctn_group.max_iters") fctn_group.max_iters = parse_int(key, value);
    else if (key == "fctn_group.tol") fctn_group.tol = parse_double(key, value);
    else if (key == "fctn_group.init_scale") scale_from_string(fctn_group.init_scale, key, value);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

std::string RecoveryReport::to_text(bool include_timings) const {
    std::ostringstream os;
    os << "ablation            " << ablation << "\n";
    os << "seed                " << seed << "\n";
    os << "rng                 " << rng_name << "\n";
    os << "realized_rate       " << format_double(realized_rate) << "\n";
    os << "normalization_scale " << format_double(normalization_scale) << "\n";
    os << std::left << std::setw(20) << "stage" << std::right << std::setw(8) << "groups" << std::setw(8)
       << "iters" << std::setw(13) << "rel_change";
    if (include_timings) {
        os << std::setw(11) << "seconds";
    }
    os << "\n";
    for (const StageRecord& s : stages) {
        os << std::left << std::setw(20) << s.name << std::right << std::setw(8) << s.groups << std::setw(8)
           << s.iterations << std::setw(13) << std::scientific << std::setprecision(4) << s.rel_change;
        os.unsetf(std::ios::floatfield);
        if (include_timings) {
            os << std::setw(11) << std::fixed << std::setprecision(3) << s.seconds;
            os.unsetf(std::ios::floatfield);
        }
        os << "\n";
    }
    if (include_timings) {
        os << "total_seconds       " << std::fixed << std::setprecision(3) << total_seconds << "\n";
    }
    return os.str();
}

RecoveryResult recover(const DenseTensor& t, const ObservationMask& mask, const PipelineConfig& config,
                       const StageObserver& observer) {
    config.validate();
    if (t.dims().size() != 3) {
        throw std::invalid_argument("recover: expected an order-3 tensor, got order " +
                                    std::to_string(t.dims().size()));
    }
    if (t.dims() != mask.dims()) {
        throw std::invalid_argument("recover: tensor and mask shapes differ");
    }
    if (mask.observed_count() == 0) {
        throw std::invalid_argument("recover: mask observes nothing");
    }

    const auto run_start = std::chrono::steady_clock::now();

    // All stages run on masked, scaled data; the final result is rescaled and
    // pinned to the original observations.
    DenseTensor t_work = apply_mask(t, mask);
    require_finite(t_work, "recover");
    double scale = 1.0;
    if (config.normalize_input) {
        double peak = 0.0;
        for (double v : t_work.values()) {
            peak = std::max(peak, std::abs(v));
        }
        scale = peak > 0.0 ? peak : 1.0;
        for (double& v : t_work.values()) {
            v /= scale;
        }
    }

    RecoveryReport report;
    report.realized_rate = mask.realized_rate();
    report.normalization_scale = scale;
    report.seed = config.seed;
    report.rng_name = SeededRng::algorithm_name();
    report.ablation = ablation_name(config.ablation);

    DenseTensor x = t_work;
    const bool run_coarse = config.ablation != Ablation::fine_only;
    const bool run_fine = config.ablation != Ablation::coarse_only;

    auto run_stage = [&](const std::string& name, std::int64_t groups, auto&& body) {
        const auto t0 = std::chrono::steady_clock::now();
        StageRecord record;
        record.name = name;
        record.groups = groups;
        DenseTensor next;
        try {
            next = body(record);
        } catch (const std::exception& e) {
            throw std::runtime_error("recover: stage " + name + ": " + e.what());
        }
        record.seconds = seconds_since(t0);
        record.rel_change = relative_change(next, x);
        x = std::move(next);
        report.stages.push_back(record);
        if (observer) {
            observer(StageSnapshot{record.name, x, t_work, mask});
        }
    };

    if (run_coarse) {
        run_stage("coarse_init", 1, [&](StageRecord& rec) {
            CoarseResult res = coarse_complete(t_work, mask, config.coarse);
            rec.iterations = res.iterations;
            return res.x;
        });
    }
    if (run_fine) {
        run_stage("fine_init", 1, [&](StageRecord& rec) {
            FctnConfig cfg = config.fctn_init;
            cfg.init_seed = derive_seed(config.seed, kSeedFctnInit, 0, 0);
            FctnResult res = config.ablation == Ablation::full
                                 ? fctn_complete(t_work, mask, cfg, x)
                                 : fctn_complete(t_work, mask, cfg);
            rec.iterations = res.iterations;
            return res.x;
        });
    }

    for (int round = 1; round <= config.iters; ++round) {
        if (run_coarse) {
            run_stage("coarse_nonlocal_" + std::to_string(round), 0, [&](StageRecord& rec) {
                auto blocks = extract_fullband_blocks(x, config.w1, config.stride1);
                const std::int64_t s = static_cast<std::int64_t>(blocks.size());
                std::int64_t l = config.cluster_count > 0
                                     ? std::min(config.cluster_count, s)
                                     : (s + config.blocks_per_cluster - 1) / config.blocks_per_cluster;
                auto clusters = kmeanspp_cluster(
                    blocks, static_cast<int>(l),
                    derive_seed(config.seed, kSeedKmeans, static_cast<std::uint64_t>(round), 0),
                    config.kmeans_max_iters);
                rec.groups = static_cast<std::int64_t>(clusters.size());
                std::vector<Cluster> completed(clusters.size());
                std::vector<int> inner(clusters.size(), 0);
                parallel_for(static_cast<std::int64_t>(clusters.size()), config.workers, [&](std::int64_t i) {
                    const auto& members = clusters[static_cast<std::size_t>(i)].member_origins;
                    Cluster cx = build_cluster_tensor(members, x, mask, config.w1);
                    Cluster ct = build_cluster_tensor(members, t_work, mask, config.w1);
                    CoarseResult res =
                        coarse_complete(ct.group_tensor, cx.sub_mask, config.coarse, cx.group_tensor);
                    cx.group_tensor = std::move(res.x);
                    inner[static_cast<std::size_t>(i)] = res.iterations;
                    completed[static_cast<std::size_t>(i)] = std::move(cx);
                });
                for (int n : inner) {
                    rec.iterations += n;
                }
                DenseTensor scattered = scatter_clusters(completed, t_work.dims(), config.w1);
                return project_observed(scattered, t_work, mask);
            });
        }
        if (run_fine) {
            run_stage("fine_nonlocal_" + std::to_string(round), 0, [&](StageRecord& rec) {
                auto keys = select_key_patches(t_work.dims(), config.w2, config.v);
                rec.groups = static_cast<std::int64_t>(keys.size());
                std::vector<NssGroup> completed(keys.size());
                std::vector<int> inner(keys.size(), 0);
                parallel_for(static_cast<std::int64_t>(keys.size()), config.workers, [&](std::int64_t g) {
                    NssGroup group = block_match(keys[static_cast<std::size_t>(g)], x, mask, config.w2,
                                                 config.k_similar, config.search_radius);
                    const std::int64_t h = static_cast<std::int64_t>(group.member_origins.size());
                    DenseTensor t_group =
                        build_cluster_tensor(group.member_origins, t_work, mask, config.w2)
                            .group_tensor.reshaped({config.w2, config.w2, t_work.dim(2), h});
                    FctnConfig cfg = config.fctn_group;
                    cfg.init_seed = derive_seed(config.seed, kSeedGroupFctn, static_cast<std::uint64_t>(round),
                                                static_cast<std::uint64_t>(g));
                    FctnResult res = fctn_complete(t_group, group.sub_mask, cfg, group.group_tensor);
                    group.group_tensor = std::move(res.x);
                    inner[static_cast<std::size_t>(g)] = res.iterations;
                    completed[static_cast<std::size_t>(g)] = std::move(group);
                });
                for (int n : inner) {
                    rec.iterations += n;
                }
                DenseTensor aggregated = aggregate_groups(completed, t_work.dims(), config.w2);
                return project_observed(aggregated, t_work, mask);
            });
        }
    }

    for (double& v : x.values()) {
        v *= scale;
    }
    RecoveryResult out;
    out.x = project_observed(x, t, mask);
    report.total_seconds = seconds_since(run_start);
    out.report = std::move(report);
    return out;
}

}  // namespace mgtc
