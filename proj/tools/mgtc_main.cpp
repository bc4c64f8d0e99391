#include "mgtc/benchmark.hpp"
#include "mgtc/degradation.hpp"
#include "mgtc/format.hpp"
#include "mgtc/io.hpp"
#include "mgtc/metrics.hpp"
#include "mgtc/pipeline.hpp"
#include "mgtc/rng.hpp"
#include "mgtc/tensor.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace mgtc;

Dims parse_dims(const std::string& text) {
    Dims dims;
    std::string item;
    std::istringstream is(text);
    std::string normalized = text;
    for (char& c : normalized) {
        if (c == 'x' || c == 'X') {
            c = ',';
        }
    }
    std::istringstream ns(normalized);
    while (std::getline(ns, item, ',')) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(item, &used);
            if (used != item.size() || v < 1) {
                throw std::invalid_argument("bad");
            }
            dims.push_back(v);
        } catch (const std::exception&) {
            throw CLI::ValidationError("--dims", "expected positive integers like 30,30,10, got '" + text + "'");
        }
    }
    if (dims.empty()) {
        throw CLI::ValidationError("--dims", "no dimensions given");
    }
    return dims;
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

// Config assembly shared by recover and benchmark: optional file, then
// key=value overrides, then dedicated flags.
PipelineConfig assemble_config(const std::string& config_path, const std::vector<std::string>& sets,
                               const std::optional<std::string>& ablation_flag,
                               const std::optional<std::uint64_t>& seed_flag) {
    PipelineConfig config;
    if (!config_path.empty()) {
        config = load_config(config_path);
    }
    for (const std::string& kv : sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            throw CLI::ValidationError("--set", "expected key=value, got '" + kv + "'");
        }
        try {
            config.set_key_value(kv.substr(0, eq), kv.substr(eq + 1));
        } catch (const std::exception& e) {
            throw CLI::ValidationError("--set", e.what());
        }
    }
    if (ablation_flag) {
        config.ablation = parse_ablation(*ablation_flag);
    }
    if (seed_flag) {
        config.seed = *seed_flag;
    }
    config.validate();
    return config;
}

void write_report_file(const std::string& path, const PipelineConfig& config, const RecoveryReport& report,
                       const QualityReport* quality, bool include_timings) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("io: cannot open '" + path + "' for writing");
    }
    for (const auto& [key, value] : config.to_key_values()) {
        out << "config." << key << " = " << value << "\n";
    }
    out << "run.ablation = " << report.ablation << "\n";
    out << "run.seed = " << report.seed << "\n";
    out << "run.rng = " << report.rng_name << "\n";
    out << "run.realized_rate = " << format_double(report.realized_rate) << "\n";
    out << "run.normalization_scale = " << format_double(report.normalization_scale) << "\n";
    out << "run.stage_count = " << report.stages.size() << "\n";
    for (std::size_t i = 0; i < report.stages.size(); ++i) {
        const StageRecord& s = report.stages[i];
        const std::string p = "stage." + std::to_string(i + 1) + ".";
        out << p << "name = " << s.name << "\n";
        out << p << "groups = " << s.groups << "\n";
        out << p << "inner_iters = " << s.iterations << "\n";
        out << p << "rel_change = " << format_double(s.rel_change) << "\n";
        if (include_timings) {
            out << p << "seconds = " << format_double(s.seconds) << "\n";
        }
    }
    if (include_timings) {
        out << "run.total_seconds = " << format_double(report.total_seconds) << "\n";
    }
    if (quality) {
        out << "quality.psnr_db = " << format_double(quality->psnr_db) << "\n";
        out << "quality.ssim = " << format_double(quality->ssim) << "\n";
        out << "quality.rse = " << format_double(quality->rse) << "\n";
    }
    if (!out) {
        throw std::runtime_error("io: short write to '" + path + "'");
    }
}

int run_import(const std::string& input, const std::string& dims_text, const std::string& output) {
    const Dims dims = parse_dims(dims_text);
    std::ifstream in(input, std::ios::binary);
    if (!in) {
        throw std::runtime_error("io: cannot open '" + input + "' for reading");
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::int64_t count = element_count(dims);
    const std::size_t expected = 8 * static_cast<std::size_t>(count);
    if (bytes.size() != expected) {
        throw std::runtime_error("import: '" + input + "': expected " + std::to_string(expected) +
                                 " bytes for dims of product " + std::to_string(count) + ", got " +
                                 std::to_string(bytes.size()));
    }
    DenseTensor t = DenseTensor::zeros(dims);
    for (std::int64_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int b = 7; b >= 0; --b) {
            bits = (bits << 8) | bytes[8 * static_cast<std::size_t>(i) + static_cast<std::size_t>(b)];
        }
        double v;
        static_assert(sizeof(v) == sizeof(bits));
        std::memcpy(&v, &bits, sizeof(v));
        t.values()[static_cast<std::size_t>(i)] = v;
    }
    require_finite(t, "import");
    save_tensor(output, t);
    std::cout << "imported " << count << " values into " << output << "\n";
    return 0;
}

int run_degrade(const std::string& input, const std::string& out_tensor, const std::string& out_mask,
                const std::string& kind, double rate, std::uint64_t seed) {
    const DenseTensor t = load_tensor(input);
    DegradationSpec spec;
    if (kind == "pixel") {
        spec.kind = DegradationKind::pixel;
    } else if (kind == "stripe") {
        spec.kind = DegradationKind::stripe;
    } else {
        throw CLI::ValidationError("--kind", "expected pixel or stripe, got '" + kind + "'");
    }
    spec.sampling_rate = rate;
    spec.seed = seed;
    const ObservationMask mask = make_mask(t.dims(), spec);
    save_tensor(out_tensor, apply_mask(t, mask));
    save_mask(out_mask, mask);
    std::cout << "realized_rate = " << format_double(mask.realized_rate()) << "\n";
    return 0;
}

int run_recover(const std::string& observed_path, const std::string& mask_path, const std::string& output_path,
                const std::string& config_path, const std::vector<std::string>& sets,
                const std::optional<std::string>& ablation_flag, const std::optional<std::uint64_t>& seed_flag,
                const std::string& report_path, const std::string& truth_path, bool no_timings) {
    const PipelineConfig config = assemble_config(config_path, sets, ablation_flag, seed_flag);
    const DenseTensor observed = load_tensor(observed_path);
    const ObservationMask mask = load_mask(mask_path);
    const RecoveryResult result = recover(observed, mask, config);
    save_tensor(output_path, result.x);

    std::optional<QualityReport> quality;
    if (!truth_path.empty()) {
        quality = evaluate_quality(result.x, load_tensor(truth_path));
    }
    std::cout << result.report.to_text(!no_timings);
    if (quality) {
        std::cout << quality->to_text();
    }
    if (!report_path.empty()) {
        write_report_file(report_path, config, result.report, quality ? &*quality : nullptr, !no_timings);
    }
    return 0;
}

int run_metrics(const std::string& candidate_path, const std::string& reference_path, bool per_band) {
    const DenseTensor candidate = load_tensor(candidate_path);
    const DenseTensor reference = load_tensor(reference_path);
    const QualityReport q = evaluate_quality(candidate, reference);
    std::cout << q.to_text();
    if (per_band) {
        for (std::size_t b = 0; b < q.per_band_psnr.size(); ++b) {
            std::cout << "band " << b << " psnr_db " << format_double(q.per_band_psnr[b]) << " ssim "
                      << format_double(q.per_band_ssim[b]) << "\n";
        }
    }
    return 0;
}

int run_export_band(const std::string& input, std::int64_t band, const std::string& output) {
    export_band(output, load_tensor(input), band);
    return 0;
}

int run_benchmark_cmd(const std::string& truth_path, const std::string& kinds_text, const std::string& rates_text,
                      std::uint64_t mask_seed, const std::string& config_path,
                      const std::vector<std::string>& sets, const std::string& json_path,
                      const std::string& text_path) {
    const PipelineConfig config = assemble_config(config_path, sets, std::nullopt, std::nullopt);
    std::vector<BenchmarkScenario> scenarios;
    std::uint64_t index = 0;
    for (const std::string& kind : split_commas(kinds_text)) {
        DegradationKind k;
        if (kind == "pixel") {
            k = DegradationKind::pixel;
        } else if (kind == "stripe") {
            k = DegradationKind::stripe;
        } else {
            throw CLI::ValidationError("--kinds", "expected pixel or stripe, got '" + kind + "'");
        }
        for (const std::string& rate : split_commas(rates_text)) {
            BenchmarkScenario s;
            s.degradation.kind = k;
            try {
                s.degradation.sampling_rate = std::stod(rate);
            } catch (const std::exception&) {
                throw CLI::ValidationError("--rates", "bad rate '" + rate + "'");
            }
            s.degradation.seed = derive_seed(mask_seed, 0xB, index, 0);
            s.name = kind + "_" + rate;
            scenarios.push_back(std::move(s));
            ++index;
        }
    }
    const BenchmarkTable table = run_benchmark(truth_path, scenarios, config);
    std::cout << table.to_text();
    if (!json_path.empty()) {
        std::ofstream out(json_path, std::ios::trunc);
        if (!out) {
            throw std::runtime_error("io: cannot open '" + json_path + "' for writing");
        }
        out << table.to_json();
    }
    if (!text_path.empty()) {
        std::ofstream out(text_path, std::ios::trunc);
        if (!out) {
            throw std::runtime_error("io: cannot open '" + text_path + "' for writing");
        }
        out << table.to_text();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyperspectral cube completion via grouped low-rank models"};
    app.require_subcommand(1);

    int rc = 0;

    // import
    auto* import_cmd = app.add_subcommand("import", "convert raw little-endian f64 values into a tensor file");
    std::string import_input, import_dims, import_output;
    import_cmd->add_option("--input", import_input, "raw f64 file")->required();
    import_cmd->add_option("--dims", import_dims, "dimensions, e.g. 30,30,10 or 30x30x10")->required();
    import_cmd->add_option("--output", import_output, "output tensor file")->required();
    import_cmd->callback([&] { rc = run_import(import_input, import_dims, import_output); });

    // degrade
    auto* degrade_cmd = app.add_subcommand("degrade", "apply a sampling mask to a tensor");
    std::string deg_input, deg_out_tensor, deg_out_mask, deg_kind = "pixel";
    double deg_rate = 0.1;
    std::uint64_t deg_seed = 0;
    degrade_cmd->add_option("--input", deg_input, "clean tensor file")->required();
    degrade_cmd->add_option("--output-tensor", deg_out_tensor, "masked tensor file")->required();
    degrade_cmd->add_option("--output-mask", deg_out_mask, "mask file")->required();
    degrade_cmd->add_option("--kind", deg_kind, "pixel or stripe");
    degrade_cmd->add_option("--rate", deg_rate, "fraction observed, in (0, 1]");
    degrade_cmd->add_option("--seed", deg_seed, "mask seed");
    degrade_cmd->callback(
        [&] { rc = run_degrade(deg_input, deg_out_tensor, deg_out_mask, deg_kind, deg_rate, deg_seed); });

    // recover
    auto* recover_cmd = app.add_subcommand("recover", "complete an observed tensor");
    std::string rec_observed, rec_mask, rec_output, rec_config, rec_report, rec_truth;
    std::vector<std::string> rec_sets;
    std::optional<std::string> rec_ablation;
    std::optional<std::uint64_t> rec_seed;
    bool rec_no_timings = false;
    recover_cmd->add_option("--observed", rec_observed, "observed tensor file")->required();
    recover_cmd->add_option("--mask", rec_mask, "mask file")->required();
    recover_cmd->add_option("--output", rec_output, "recovered tensor file")->required();
    recover_cmd->add_option("--config", rec_config, "config file; defaults apply when omitted");
    recover_cmd->add_option("--set", rec_sets, "config override key=value (repeatable)");
    recover_cmd->add_option("--ablation", rec_ablation, "full, coarse or fine");
    recover_cmd->add_option("--seed", rec_seed, "pipeline seed override");
    recover_cmd->add_option("--report", rec_report, "write a key-value run report here");
    recover_cmd->add_option("--truth", rec_truth, "reference tensor; adds quality metrics");
    recover_cmd->add_flag("--no-timings", rec_no_timings, "omit wall-clock fields from output");
    recover_cmd->callback([&] {
        rc = run_recover(rec_observed, rec_mask, rec_output, rec_config, rec_sets, rec_ablation, rec_seed,
                         rec_report, rec_truth, rec_no_timings);
    });

    // metrics
    auto* metrics_cmd = app.add_subcommand("metrics", "score a candidate against a reference");
    std::string met_candidate, met_reference;
    bool met_per_band = false;
    metrics_cmd->add_option("--candidate", met_candidate, "candidate tensor file")->required();
    metrics_cmd->add_option("--reference", met_reference, "reference tensor file")->required();
    metrics_cmd->add_flag("--per-band", met_per_band, "also print per-band values");
    metrics_cmd->callback([&] { rc = run_metrics(met_candidate, met_reference, met_per_band); });

    // export-band
    auto* export_cmd = app.add_subcommand("export-band", "write one band as an 8-bit PGM image");
    std::string exp_input, exp_output;
    std::int64_t exp_band = 0;
    export_cmd->add_option("--input", exp_input, "tensor file")->required();
    export_cmd->add_option("--band", exp_band, "band index (0-based)")->required();
    export_cmd->add_option("--output", exp_output, "output PGM path")->required();
    export_cmd->callback([&] { rc = run_export_band(exp_input, exp_band, exp_output); });

    // benchmark
    auto* bench_cmd = app.add_subcommand("benchmark", "degrade, recover and score scenario grid");
    std::string ben_truth, ben_kinds = "pixel", ben_rates = "0.1", ben_config, ben_json, ben_text;
    std::uint64_t ben_seed = 0;
    std::vector<std::string> ben_sets;
    bench_cmd->add_option("--truth", ben_truth, "clean tensor file")->required();
    bench_cmd->add_option("--kinds", ben_kinds, "comma list of pixel,stripe");
    bench_cmd->add_option("--rates", ben_rates, "comma list of sampling rates");
    bench_cmd->add_option("--seed", ben_seed, "base seed for scenario masks");
    bench_cmd->add_option("--config", ben_config, "config file");
    bench_cmd->add_option("--set", ben_sets, "config override key=value (repeatable)");
    bench_cmd->add_option("--json", ben_json, "write the table as JSON here");
    bench_cmd->add_option("--text", ben_text, "write the aligned table here");
    bench_cmd->callback([&] {
        rc = run_benchmark_cmd(ben_truth, ben_kinds, ben_rates, ben_seed, ben_config, ben_sets, ben_json,
                               ben_text);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
