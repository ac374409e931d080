#include "coarsen/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "coarsen/analysis.hpp"
#include "coarsen/errors.hpp"
#include "coarsen/linearized.hpp"
#include "coarsen/svg.hpp"
#include "coarsen/transform.hpp"

namespace coarsen {

namespace {

constexpr Index kMaxRadius = 12;
constexpr Index kMaxSupernodeSide = 4;
constexpr unsigned kMaxJobs = 256;

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    if (!text.empty() && text.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& text) {
    double value = 0.0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end) {
        throw ConfigError("not a number: '" + text + "'");
    }
    return value;
}

long long parse_integer(const std::string& text) {
    long long value = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end) {
        throw ConfigError("not an integer: '" + text + "'");
    }
    return value;
}

std::string normalize_key(std::string key) {
    key = trim(key);
    std::replace(key.begin(), key.end(), '-', '_');
    return key;
}

bool is_single_lambda(const std::string& subcommand) {
    return subcommand != "lambda-sweep" && subcommand != "global-verify";
}

// Runs body(k) for k in [0, n) on up to `jobs` threads. Results must be
// written to slot k so the output order never depends on scheduling.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body) {
    const unsigned workers_n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    if (workers_n <= 1) {
        for (std::size_t k = 0; k < n; ++k) body(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(workers_n);
    for (unsigned w = 0; w < workers_n; ++w) {
        workers.emplace_back([&] {
            for (std::size_t k = next++; k < n; k = next++) body(k);
        });
    }
    for (auto& t : workers) t.join();
}

std::string cell(double v) { return format_double(v); }
std::string cell(Index v) { return std::to_string(v); }
std::string cell(int v) { return std::to_string(v); }

// Failure text is stored in CSV cells, which must not contain separators.
std::string sanitize(std::string text) {
    for (char& ch : text) {
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    }
    return text;
}

LinearizedOptions minimizer_options(const RunConfig& config) {
    LinearizedOptions o;
    o.max_iter = config.max_iter;
    o.rel_change_tol = config.tol;
    return o;
}

// First failure in m order wins so the reported message is deterministic.
struct FailureSlot {
    bool failed = false;
    std::string message;
};

std::string first_failure(const std::vector<FailureSlot>& slots, const std::vector<Index>& ms) {
    for (std::size_t k = 0; k < slots.size(); ++k) {
        if (slots[k].failed) return "m=" + std::to_string(ms[k]) + ": " + slots[k].message;
    }
    return {};
}

ExperimentResult sd_convergence(const RunConfig& config) {
    const double lambda = config.lambdas.front();
    std::vector<ConvergenceTrace> traces(config.ms.size());
    std::vector<FailureSlot> failures(config.ms.size());
    parallel_for(config.ms.size(), config.jobs, [&](std::size_t k) {
        const LocalProblem problem = sweep_problem(config.ms[k], config.p, config.q, lambda);
        SteepestDescentOptions o;
        o.max_iter = config.max_iter;
        o.tol = config.tol;
        try {
            traces[k] = steepest_descent(problem, o).trace;
        } catch (const MinimizationFailure& e) {
            traces[k] = e.trace();
            failures[k] = {true, e.what()};
        }
    });

    ExperimentResult result;
    CsvTable table{"sd_convergence", {"m", "iteration", "error"}, {}};
    for (std::size_t k = 0; k < traces.size(); ++k) {
        for (const auto& it : traces[k].iterations) {
            table.add_row({cell(config.ms[k]), cell(it.iteration), cell(it.error)});
        }
    }
    result.tables.push_back(std::move(table));
    result.message = first_failure(failures, config.ms);
    if (!result.message.empty()) result.exit_code = 3;
    return result;
}

ExperimentResult svd_spectrum(const RunConfig& config) {
    const double lambda = config.lambdas.front();
    std::vector<Vector> spectra(config.ms.size());
    std::vector<FailureSlot> failures(config.ms.size());
    parallel_for(config.ms.size(), config.jobs, [&](std::size_t k) {
        const LocalProblem problem = sweep_problem(config.ms[k], config.p, config.q, lambda);
        try {
            spectra[k] = spectrum_at(problem, initial_guess(problem)).operator_sigma_normalized();
        } catch (const NumericalFailure& e) {
            failures[k] = {true, e.what()};
        }
    });

    ExperimentResult result;
    CsvTable table{"svd_spectrum", {"m", "index", "sigma_normalized"}, {}};
    for (std::size_t k = 0; k < spectra.size(); ++k) {
        for (Index i = 0; i < spectra[k].size(); ++i) {
            table.add_row({cell(config.ms[k]), cell(i + 1), cell(spectra[k](i))});
        }
    }
    result.tables.push_back(std::move(table));
    result.message = first_failure(failures, config.ms);
    if (!result.message.empty()) result.exit_code = 3;
    return result;
}

struct LinRun {
    ConvergenceTrace trace;
    std::optional<double> final_cond;
};

ExperimentResult lin_convergence(const RunConfig& config) {
    const double lambda = config.lambdas.front();
    const LinearizedOptions options = minimizer_options(config);
    std::vector<LinRun> runs(config.ms.size());
    std::vector<FailureSlot> failures(config.ms.size());
    parallel_for(config.ms.size(), config.jobs, [&](std::size_t k) {
        const LocalProblem problem = sweep_problem(config.ms[k], config.p, config.q, lambda);
        try {
            const LinearizedResult r = linearized_minimize(problem, options);
            runs[k].trace = r.trace;
            runs[k].final_cond =
                spectrum_at(problem, r.pair, options.truncation, options.rank_tol).cond_eq7_estimate;
        } catch (const MinimizationFailure& e) {
            runs[k].trace = e.trace();
            failures[k] = {true, e.what()};
        } catch (const NumericalFailure& e) {
            failures[k] = {true, e.what()};
        }
    });

    ExperimentResult result;
    CsvTable table{"lin_convergence", {"m", "iteration", "error", "alpha", "cond_eq7_estimate"}, {}};
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto& its = runs[k].trace.iterations;
        for (std::size_t i = 0; i < its.size(); ++i) {
            std::optional<double> cond = its[i].cond_eq7;
            if (!cond && i + 1 == its.size()) cond = runs[k].final_cond;
            table.add_row({cell(config.ms[k]), cell(its[i].iteration), cell(its[i].error),
                           cell(its[i].alpha), cond ? cell(*cond) : std::string("nan")});
        }
    }
    result.tables.push_back(std::move(table));
    result.message = first_failure(failures, config.ms);
    if (!result.message.empty()) result.exit_code = 3;
    return result;
}

ExperimentResult spatial_decay_cmd(const RunConfig& config) {
    const double lambda = config.lambdas.front();
    const LinearizedOptions options = minimizer_options(config);
    std::vector<double> errors(config.ms.size(), 0.0);
    std::vector<std::vector<DecayRecord>> profiles(config.ms.size());
    std::vector<FailureSlot> failures(config.ms.size());
    const Index profile_m = *std::max_element(config.ms.begin(), config.ms.end());
    parallel_for(config.ms.size(), config.jobs, [&](std::size_t k) {
        const LocalProblem problem = sweep_problem(config.ms[k], config.p, config.q, lambda);
        try {
            const LinearizedResult r = linearized_minimize(problem, options);
            errors[k] = r.trace.final_error();
            if (config.ms[k] == profile_m) profiles[k] = spatial_decay(problem, r.pair);
        } catch (const NumericalFailure& e) {
            failures[k] = {true, e.what()};
        }
    });

    ExperimentResult result;
    CsvTable table{"spatial_decay", {"kind", "distance_or_m", "value"}, {}};
    for (std::size_t k = 0; k < errors.size(); ++k) {
        if (failures[k].failed) continue;
        table.add_row({"error_vs_m", cell(config.ms[k]), cell(errors[k])});
    }
    for (std::size_t k = 0; k < profiles.size(); ++k) {
        if (profiles[k].empty()) continue;
        std::vector<DecayRecord> recs = profiles[k];
        std::stable_sort(recs.begin(), recs.end(), [](const DecayRecord& a, const DecayRecord& b) {
            return a.distance < b.distance;
        });
        for (const auto& r : recs) table.add_row({"column_norm", cell(r.distance), cell(r.y_deviation)});
        for (const auto& r : recs) {
            table.add_row({"column_norm_atilde", cell(r.distance), cell(r.a_deviation)});
        }
        break;
    }
    result.tables.push_back(std::move(table));
    result.message = first_failure(failures, config.ms);
    if (!result.message.empty()) result.exit_code = 3;
    return result;
}

const std::vector<std::string>& sweep_header() {
    static const std::vector<std::string> header{
        "lambda", "m",      "p",        "q",      "n_l",      "n_a_tilde", "error",
        "iterations", "converged", "cond_y", "cond_eq7", "null_dim", "status"};
    return header;
}

std::vector<std::string> sweep_row(const SweepRecord& r) {
    const bool ok = r.ok();
    auto num = [ok](double v) { return ok ? format_double(v) : std::string("nan"); };
    return {cell(r.lambda),
            cell(r.m),
            cell(r.p),
            cell(r.q),
            cell(r.n_l),
            cell(r.n_a_tilde),
            num(r.error),
            ok ? cell(r.iterations) : std::string("0"),
            r.converged ? "1" : "0",
            num(r.cond_y),
            num(r.cond_eq7),
            ok ? cell(r.null_dim) : std::string("0"),
            ok ? std::string("ok") : "failed: " + sanitize(r.failure)};
}

constexpr double kSymmetryTolerance = 1e-8;

ExperimentResult lambda_sweep(const RunConfig& config) {
    SweepOptions options;
    options.minimizer = minimizer_options(config);
    options.jobs = config.jobs;

    std::vector<double> mirrored;
    if (config.mirror) {
        for (double l : config.lambdas) {
            const double partner = 8.0 - l;
            if (partner != l &&
                std::find(config.lambdas.begin(), config.lambdas.end(), partner) == config.lambdas.end() &&
                std::find(mirrored.begin(), mirrored.end(), partner) == mirrored.end()) {
                mirrored.push_back(partner);
            }
        }
    }
    std::vector<double> all = config.lambdas;
    all.insert(all.end(), mirrored.begin(), mirrored.end());
    const std::vector<SweepRecord> records = run_sweep(all, config.ms, config.p, config.q, options);

    ExperimentResult result;
    CsvTable table{"lambda_sweep", sweep_header(), {}};
    std::map<std::pair<double, Index>, const SweepRecord*> by_key;
    for (const auto& r : records) {
        by_key[{r.lambda, r.m}] = &r;
        const bool requested =
            std::find(config.lambdas.begin(), config.lambdas.end(), r.lambda) != config.lambdas.end();
        if (requested) table.add_row(sweep_row(r));
        if (!r.ok() && result.message.empty()) {
            result.message = "lambda=" + format_double(r.lambda) + " m=" + std::to_string(r.m) +
                             ": " + r.failure;
        }
    }
    result.tables.push_back(std::move(table));

    if (config.mirror) {
        CsvTable sym{"lambda_sweep_symmetry",
                     {"lambda", "mirror_lambda", "m", "error", "mirror_error", "relative_difference", "equal"},
                     {}};
        std::vector<double> ls = config.lambdas;
        std::sort(ls.begin(), ls.end());
        for (double l : ls) {
            const double partner = 8.0 - l;
            if (partner == l) continue;
            if (partner < l && std::binary_search(ls.begin(), ls.end(), partner)) continue;
            for (Index m : [&] {
                     std::vector<Index> v = config.ms;
                     std::sort(v.begin(), v.end());
                     return v;
                 }()) {
                const SweepRecord* a = by_key.at({l, m});
                const SweepRecord* b = by_key.at({partner, m});
                if (!a->ok() || !b->ok()) continue;
                const double scale = std::max(std::abs(a->error), std::abs(b->error));
                const double rel = scale > 0.0 ? std::abs(a->error - b->error) / scale : 0.0;
                sym.add_row({cell(l), cell(partner), cell(m), cell(a->error), cell(b->error), cell(rel),
                             rel <= kSymmetryTolerance ? "1" : "0"});
            }
        }
        result.tables.push_back(std::move(sym));
    }
    if (!result.message.empty()) result.exit_code = 3;
    return result;
}

constexpr double kEmbeddingRelTol = 1e-12;
constexpr double kExactTol = 1e-13;

ExperimentResult global_verify_cmd(const RunConfig& config) {
    struct Point {
        double lambda;
        Index m;
        GlobalReport report;
        bool failed = false;
        std::string message;
    };
    std::vector<double> ls = config.lambdas;
    std::vector<Index> ms = config.ms;
    std::sort(ls.begin(), ls.end());
    std::sort(ms.begin(), ms.end());
    std::vector<Point> points;
    for (Index m : ms) {
        for (double l : ls) points.push_back({l, m, {}, false, {}});
    }
    const LinearizedOptions options = minimizer_options(config);
    parallel_for(points.size(), config.jobs, [&](std::size_t k) {
        Point& pt = points[k];
        try {
            const LocalProblem problem = sweep_problem(pt.m, config.p, config.q, pt.lambda);
            const LinearizedResult r = linearized_minimize(problem, options);
            pt.report = global_verify(verification_grid(problem), verification_center(problem),
                                      problem, r.pair);
        } catch (const NumericalFailure& e) {
            pt.failed = true;
            pt.message = e.what();
        }
    });

    ExperimentResult result;
    CsvTable table{"global_verify",
                   {"m", "lambda", "local_error", "global_error", "max_decoupled_offdiag"},
                   {}};
    for (const Point& pt : points) {
        const std::string where = "lambda=" + format_double(pt.lambda) + " m=" + std::to_string(pt.m);
        if (pt.failed) {
            if (result.message.empty()) result.message = where + ": " + pt.message;
            continue;
        }
        const GlobalReport& g = pt.report;
        table.add_row({cell(pt.m), cell(pt.lambda), cell(g.local_error), cell(g.global_error),
                       cell(g.max_decoupled_offdiag)});
        std::string violation;
        const double scale = std::max(g.local_error, std::numeric_limits<double>::min());
        if (std::abs(g.global_error - g.local_error) > kEmbeddingRelTol * scale) {
            violation = "global error differs from local error";
        } else if (g.max_decoupled_offdiag > g.local_error) {
            violation = "decoupled off-diagonal exceeds local error";
        } else if (g.coupling_deviation > kExactTol || g.external_deviation > kExactTol) {
            violation = "external or coupling block changed";
        }
        if (!violation.empty() && result.message.empty()) result.message = where + ": " + violation;
    }
    result.tables.push_back(std::move(table));
    if (!result.message.empty()) result.exit_code = 3;
    return result;
}

ChartSpec chart_for(const std::string& table) {
    if (table == "sd_convergence") return {"Steepest descent convergence", "iteration", "error", "m"};
    if (table == "svd_spectrum") return {"Normal-system singular values", "index", "sigma_normalized", "m"};
    if (table == "lin_convergence") return {"Linearized convergence", "iteration", "error", "m"};
    if (table == "spatial_decay") return {"Spatial decay", "distance_or_m", "value", "kind"};
    if (table == "lambda_sweep") return {"Converged error", "m", "error", "lambda"};
    if (table == "global_verify") return {"Global verification", "m", "local_error", "lambda"};
    return {};
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names{"sd-convergence", "svd-spectrum",  "lin-convergence",
                                                "spatial-decay",  "lambda-sweep", "global-verify"};
    return names;
}

RunConfig default_config(const std::string& subcommand) {
    RunConfig c;
    c.subcommand = subcommand;
    c.lambdas = {0.0};
    if (subcommand == "sd-convergence") {
        c.ms = {1, 2, 3, 4};
        c.max_iter = 1000;
        c.tol = 1e-12;
    } else if (subcommand == "svd-spectrum") {
        c.ms = {2, 3, 4, 5, 6, 7, 8, 9, 10};
    } else if (subcommand == "lin-convergence" || subcommand == "spatial-decay") {
        c.ms = {1, 2, 3, 4, 5, 6, 7};
    } else if (subcommand == "lambda-sweep") {
        c.lambdas = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
        c.ms = {1, 2, 3, 4, 5, 6, 7};
    } else if (subcommand == "global-verify") {
        c.lambdas = {0.0, 3.5};
        c.ms = {2, 4};
    } else {
        throw ConfigError("unknown subcommand '" + subcommand + "'");
    }
    return c;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) out.push_back(parse_double(item));
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

std::vector<Index> parse_index_list(const std::string& text) {
    std::vector<Index> out;
    for (const auto& item : split(text, ',')) {
        const auto dots = item.find("..");
        if (dots == std::string::npos) {
            out.push_back(static_cast<Index>(parse_integer(item)));
            continue;
        }
        const long long lo = parse_integer(trim(item.substr(0, dots)));
        const long long hi = parse_integer(trim(item.substr(dots + 2)));
        if (hi < lo) throw ConfigError("empty range '" + item + "'");
        if (hi - lo > 1000) throw ConfigError("range too long '" + item + "'");
        for (long long v = lo; v <= hi; ++v) out.push_back(static_cast<Index>(v));
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

void apply_setting(RunConfig& config, const std::string& raw_key, const std::string& raw_value) {
    const std::string key = normalize_key(raw_key);
    const std::string value = trim(raw_value);
    try {
        if (key == "lambda") {
            config.lambdas = parse_double_list(value);
        } else if (key == "m") {
            config.ms = parse_index_list(value);
        } else if (key == "p") {
            config.p = static_cast<Index>(parse_integer(value));
        } else if (key == "q") {
            config.q = static_cast<Index>(parse_integer(value));
        } else if (key == "max_iter") {
            const long long v = parse_integer(value);
            if (v < 1 || v > 1000000) throw ConfigError("must lie in [1, 1000000]");
            config.max_iter = static_cast<int>(v);
        } else if (key == "tol") {
            config.tol = parse_double(value);
        } else if (key == "out") {
            if (value.empty()) throw ConfigError("empty path");
            config.out_dir = value;
        } else if (key == "format") {
            if (value == "csv") {
                config.format = OutputFormat::csv;
            } else if (value == "csv+svg") {
                config.format = OutputFormat::csv_svg;
            } else {
                throw ConfigError("expected csv or csv+svg");
            }
        } else if (key == "jobs") {
            const long long v = parse_integer(value);
            if (v < 1 || v > static_cast<long long>(kMaxJobs)) throw ConfigError("must lie in [1, 256]");
            config.jobs = static_cast<unsigned>(v);
        } else if (key == "mirror") {
            if (value == "true" || value == "1") {
                config.mirror = true;
            } else if (value == "false" || value == "0") {
                config.mirror = false;
            } else {
                throw ConfigError("expected true or false");
            }
        } else {
            throw ConfigError("unknown key");
        }
    } catch (const ConfigError& e) {
        throw ConfigError("invalid setting '" + key + "': " + e.what());
    }
}

void load_config_file(RunConfig& config, const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file " + file.string());
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(file.string() + ":" + std::to_string(number) + ": expected key=value");
        }
        try {
            apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(file.string() + ":" + std::to_string(number) + ": " + e.what());
        }
    }
}

void validate(const RunConfig& config) {
    const auto& names = subcommand_names();
    if (std::find(names.begin(), names.end(), config.subcommand) == names.end()) {
        throw ConfigError("unknown subcommand '" + config.subcommand + "'");
    }
    if (config.lambdas.empty()) throw ConfigError("lambda list is empty");
    for (double l : config.lambdas) {
        if (!std::isfinite(l) || l < 0.0 || l > 8.0) throw ConfigError("lambda must lie in [0, 8]");
    }
    if (is_single_lambda(config.subcommand) && config.lambdas.size() != 1) {
        throw ConfigError(config.subcommand + " takes exactly one lambda");
    }
    if (config.ms.empty()) throw ConfigError("m list is empty");
    for (Index m : config.ms) {
        if (m < 1 || m > kMaxRadius) throw ConfigError("m must lie in [1, 12]");
    }
    auto has_duplicates = [](auto v) {
        std::sort(v.begin(), v.end());
        return std::adjacent_find(v.begin(), v.end()) != v.end();
    };
    if (has_duplicates(config.ms)) throw ConfigError("m list has duplicates");
    if (has_duplicates(config.lambdas)) throw ConfigError("lambda list has duplicates");
    if (config.p < 1 || config.p > kMaxSupernodeSide || config.q < 1 || config.q > kMaxSupernodeSide) {
        throw ConfigError("p and q must lie in [1, 4]");
    }
    if (config.max_iter < 1) throw ConfigError("max_iter must be positive");
    if (!std::isfinite(config.tol) || config.tol <= 0.0 || config.tol >= 1.0) {
        throw ConfigError("tol must lie in (0, 1)");
    }
    if (config.jobs < 1 || config.jobs > kMaxJobs) throw ConfigError("jobs must lie in [1, 256]");
}

ExperimentResult run_experiment(const RunConfig& config) {
    const std::string& s = config.subcommand;
    if (s == "sd-convergence") return sd_convergence(config);
    if (s == "svd-spectrum") return svd_spectrum(config);
    if (s == "lin-convergence") return lin_convergence(config);
    if (s == "spatial-decay") return spatial_decay_cmd(config);
    if (s == "lambda-sweep") return lambda_sweep(config);
    if (s == "global-verify") return global_verify_cmd(config);
    throw ConfigError("unknown subcommand '" + s + "'");
}

void write_outputs(const RunConfig& config, const ExperimentResult& result) {
    std::filesystem::create_directories(config.out_dir);
    for (const CsvTable& table : result.tables) {
        const auto csv_path = config.out_dir / (table.name + ".csv");
        std::ofstream out(csv_path, std::ios::binary);
        table.write(out);
        if (!out) throw std::runtime_error("cannot write " + csv_path.string());
        const ChartSpec spec = chart_for(table.name);
        if (config.format == OutputFormat::csv_svg && !spec.x_column.empty()) {
            std::ofstream svg(config.out_dir / (table.name + ".svg"), std::ios::binary);
            svg << render_log_chart(table, spec);
        }
    }
    const auto marker = config.out_dir / (config.subcommand + ".incomplete");
    if (result.exit_code != 0) {
        std::ofstream out(marker, std::ios::binary);
        out << result.message << '\n';
    } else {
        std::filesystem::remove(marker);
    }
}

int execute(const RunConfig& config, std::ostream& err) {
    try {
        validate(config);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return 2;
    }
    ExperimentResult result;
    try {
        result = run_experiment(config);
    } catch (const NumericalFailure& e) {
        result.exit_code = 3;
        result.message = e.what();
    }
    try {
        write_outputs(config, result);
    } catch (const std::exception& e) {
        err << "output error: " << e.what() << '\n';
        return 2;
    }
    if (result.exit_code != 0) err << config.subcommand << ": " << result.message << '\n';
    return result.exit_code;
}

}  // namespace coarsen
