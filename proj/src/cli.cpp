#include "bnm/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bnm/config.hpp"
#include "bnm/experiment.hpp"
#include "bnm/linalg.hpp"
#include "bnm/regularizers.hpp"

namespace bnm::cli {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

// Nuclear norm of a two-column matrix from the closed-form eigenvalues of the
// 2x2 Gram matrix.
double two_column_nuclear(const Matrix& a) {
    double p = 0.0, q = 0.0, r = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        p += a(i, 0) * a(i, 0);
        q += a(i, 0) * a(i, 1);
        r += a(i, 1) * a(i, 1);
    }
    const double mid = 0.5 * (p + r);
    const double rad = std::sqrt(0.25 * (p - r) * (p - r) + q * q);
    return std::sqrt(mid + rad) + std::sqrt(std::max(0.0, mid - rad));
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << contents;
    if (!f) throw std::runtime_error("write failed for " + path.string());
}

std::string file_label(const std::string& label) {
    std::string out = label;
    for (char& c : out) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '.' || c == '-' || c == '_' || c == '@';
        if (!ok) c = '_';
    }
    return out;
}

std::string summary_text(const RunConfig& cfg, std::uint64_t seed, const RunRecord& last) {
    std::string s;
    const auto line = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
    line("scenario", std::string(to_string(cfg.setup.scenario.kind)));
    line("objective", std::string(to_string(cfg.train.objective)));
    line("lambda", format_real(cfg.train.lambda));
    line("seed", std::to_string(seed));
    line("steps", std::to_string(cfg.train.steps));
    line("final_step", std::to_string(last.step));
    for (const auto& [name, value] : metric_columns(last)) line(name, format_real(value));
    line("batch_rank", std::to_string(last.batch_rank));
    return s;
}

std::optional<RunConfig> load_or_report(const Options& opts, ConfigPurpose purpose, std::ostream& err,
                                        int& status) {
    if (!opts.config_path) {
        err << "error: --config is required\n";
        status = kExitUsage;
        return std::nullopt;
    }
    try {
        return load_config(opts.config_path->string(), purpose);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        status = kExitFailure;
        return std::nullopt;
    }
}

bool ensure_dir(const fs::path& dir, std::ostream& err) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        err << "error: cannot create output directory " << dir << "\n";
        return false;
    }
    return true;
}

} // namespace

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::optional<std::uint64_t> config,
                           const char* env_value) {
    if (flag) return *flag;
    if (config) return *config;
    if (env_value && *env_value) {
        const std::string s(env_value);
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc{} && ptr == s.data() + s.size()) return v;
    }
    return kDefaultSeed;
}

int cmd_check(const CheckOptions& opts, std::ostream& out) {
    const auto results = run_check_suites(opts);
    bool ok = true;
    for (const auto& r : results) {
        out << (r.passed ? "PASS " : "FAIL ") << pad(r.name, 16) << " cases=" << r.cases << "\n";
        ok = ok && r.passed;
    }
    for (const auto& r : results) {
        if (!r.passed) {
            out << "counterexample [" << r.name << "]: " << r.counterexample << "\n";
            break;
        }
    }
    out << (ok ? "all suites passed" : "check failed") << "\n";
    return ok ? kExitOk : kExitFailure;
}

int cmd_toy(std::ostream& out) {
    struct Row {
        std::string name;
        Matrix a;
    };
    const std::vector<Row> vertices{
        {"[[1,0],[1,0]]", Matrix::from_rows({{1, 0}, {1, 0}})},
        {"[[0,1],[1,0]]", Matrix::from_rows({{0, 1}, {1, 0}})},
        {"[[1,0],[0,1]]", Matrix::from_rows({{1, 0}, {0, 1}})},
        {"[[0,1],[0,1]]", Matrix::from_rows({{0, 1}, {0, 1}})},
    };
    bool ok = true;
    out << pad("matrix", 34) << pad("entropy", 12) << pad("F-norm", 12) << "nuclear\n";
    std::size_t reaching_two = 0;
    for (const auto& v : vertices) {
        const double h = entropy(BatchOutput(v.a));
        const double f = frobenius_norm(v.a);
        const double n = nuclear_norm(v.a);
        out << pad(v.name, 34) << pad(fixed(h), 12) << pad(fixed(f), 12) << fixed(n) << "\n";
        const bool permutation = v.a(0, 0) != v.a(1, 0);
        const double expected = permutation ? 2.0 : std::sqrt(2.0);
        ok = ok && h == 0.0 && std::abs(f - std::sqrt(2.0)) <= 1e-10 && std::abs(n - expected) <= 1e-10;
        if (std::abs(n - 2.0) <= 1e-10) ++reaching_two;
    }
    ok = ok && reaching_two == 2;

    const DiversityDemo demo = equal_entropy_diversity_demo();
    const struct {
        const char* name;
        const BatchOutput& a;
    } pair[] = {{"concentrated 4x[0.9,0.1]", demo.concentrated},
                {"diverse 3x[0.9,0.1]+[0.1,0.9]", demo.diverse}};
    for (const auto& p : pair) {
        const double n = nuclear_norm(p.a.matrix());
        out << pad(p.name, 34) << pad(fixed(entropy(p.a)), 12)
            << pad(fixed(frobenius_norm(p.a.matrix())), 12) << fixed(n) << "\n";
        ok = ok && std::abs(n - two_column_nuclear(p.a.matrix())) <= 1e-10;
    }
    const double gap = nuclear_norm(demo.diverse.matrix()) - nuclear_norm(demo.concentrated.matrix());
    ok = ok && gap > 0.0;
    out << "nuclear-norm gap (diverse - concentrated) = " << fixed(gap, 9) << "\n";
    out << (ok ? "toy assertions passed" : "toy assertions FAILED") << "\n";
    return ok ? kExitOk : kExitFailure;
}

int cmd_train(const Options& opts, std::ostream& out, std::ostream& err) {
    int status = kExitOk;
    const auto cfg = load_or_report(opts, ConfigPurpose::Train, err, status);
    if (!cfg) return status;
    if (!ensure_dir(opts.output_dir, err)) return kExitFailure;

    const std::uint64_t seed = resolve_seed(opts.seed_override, cfg->seed, std::getenv(kSeedEnvVar));
    TrainConfig tc = cfg->train;
    tc.seed = seed;
    try {
        const PreparedRun run = prepare(cfg->setup, seed);
        const TrainResult result = train(run.initial, run.data, tc);

        std::ostringstream csv;
        write_run_csv(csv, result.records, run.data.meta.n_classes);
        write_file(opts.output_dir / "run.csv", csv.str());
        std::ostringstream data;
        write_dataset_csv(data, run.data);
        write_file(opts.output_dir / "dataset.csv", data.str());
        const std::string summary =
            result.records.empty() ? std::string("no evaluation records\n")
                                   : summary_text(*cfg, seed, result.records.back());
        write_file(opts.output_dir / "summary.txt", summary);
        if (opts.verbosity != Verbosity::Quiet) out << summary;
    } catch (const std::exception& e) {
        err << "train failed: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}

int cmd_compare(const Options& opts, std::ostream& out, std::ostream& err) {
    int status = kExitOk;
    const auto cfg = load_or_report(opts, ConfigPurpose::Compare, err, status);
    if (!cfg) return status;
    if (!ensure_dir(opts.output_dir, err)) return kExitFailure;

    const std::uint64_t seed = resolve_seed(opts.seed_override, cfg->seed, std::getenv(kSeedEnvVar));
    const std::size_t n_seeds = opts.seeds.value_or(cfg->seeds.value_or(4));
    if (n_seeds == 0) {
        err << "error: --seeds must be positive\n";
        return kExitUsage;
    }
    CompareTable table;
    try {
        table = compare(cfg->methods, cfg->setup, seed, n_seeds);
        std::ostringstream csv;
        write_compare_csv(csv, table);
        write_file(opts.output_dir / "compare.csv", csv.str());
        const fs::path runs = opts.output_dir / "runs";
        if (!ensure_dir(runs, err)) return kExitFailure;
        for (const auto& cell : table.cells) {
            if (!cell.ok) continue;
            std::ostringstream rc;
            write_run_csv(rc, cell.records, cfg->setup.scenario.n_classes);
            write_file(runs / (file_label(cell.method) + "_seed" + std::to_string(cell.seed) + ".csv"),
                       rc.str());
        }
    } catch (const std::exception& e) {
        err << "compare failed: " << e.what() << "\n";
        return kExitFailure;
    }

    bool any_method_dead = false;
    if (opts.verbosity != Verbosity::Quiet) {
        out << pad("method", 14) << pad("ok", 5) << pad("acc", 20) << pad("minority_recall", 20)
            << pad("div_ratio", 20) << "unknown_ratio\n";
    }
    for (const auto& row : table.rows) {
        any_method_dead = any_method_dead || row.n_ok == 0;
        if (opts.verbosity == Verbosity::Quiet) continue;
        out << pad(row.label, 14) << pad(std::to_string(row.n_ok), 5);
        if (row.n_ok == 0) {
            out << "all cells failed\n";
            continue;
        }
        for (const char* m : {"acc", "minority_recall", "div_ratio", "unknown_ratio"}) {
            const auto& s = row.metric(m);
            const std::string cell = fixed(s.mean, 4) + " +- " + fixed(s.stddev, 4);
            out << (std::string(m) == "unknown_ratio" ? cell : pad(cell, 20));
        }
        out << "\n";
    }
    for (const auto& cell : table.cells) {
        if (!cell.ok) err << "cell " << cell.method << " seed " << cell.seed << " failed: " << cell.error << "\n";
        else if (opts.verbosity == Verbosity::Verbose)
            out << "cell " << cell.method << " seed " << cell.seed
                << " acc=" << format_real(cell.records.back().acc_unlabeled) << "\n";
    }
    return any_method_dead ? kExitFailure : kExitOk;
}

} // namespace bnm::cli
