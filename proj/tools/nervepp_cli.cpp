// Command-line driver: simulate -> infer -> envelope -> report, all file-based
// and deterministic under a fixed --seed.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nervepp/nervepp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nervepp;

namespace {

// Observed-summary seeds must never collide with reference-table row seeds
// (row indices are small); keep them in a far-away index block.
constexpr std::uint64_t kObservedSeedBlock = 1ULL << 40;
constexpr std::uint64_t kStatisticSeedBlock = 1ULL << 41;

std::string replicate_name(std::size_t rep, std::size_t total) {
    int width = 3;
    for (std::size_t v = total > 0 ? total - 1 : 0; v >= 1000; v /= 10) ++width;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "pattern_%0*zu.csv", width, rep);
    return buf;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string model;
    std::string params_path;
    std::string window_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::size_t n_reps = 1;
    double lambda = 0.002;
    std::string group = "healthy";
    std::string prefix = "sim";
};

int run_simulate(const SimulateArgs& args) {
    const Window window =
        args.window_path.empty() ? default_window() : load_window(args.window_path);
    MaternParams params;
    if (!args.params_path.empty()) params = load_matern_params(args.params_path).params;
    const Group group = group_from_string(args.group);

    fs::create_directories(args.out_dir);
    json manifest;
    manifest["command"] = "simulate";
    manifest["model"] = args.model;
    manifest["seed"] = args.seed;
    manifest["n_reps"] = args.n_reps;
    manifest["window"] = window_to_json(window);
    if (args.model == "matern")
        manifest["params"] = {{"kappa", params.kappa}, {"R", params.R}, {"mu", params.mu}};
    else
        manifest["params"] = {{"lambda", args.lambda}};
    manifest["files"] = json::array();

    for (std::size_t rep = 0; rep < args.n_reps; ++rep) {
        const std::uint64_t rep_seed = derive_seed(args.seed, rep);
        Rng rng(rep_seed);
        char idbuf[64];
        std::snprintf(idbuf, sizeof(idbuf), "%s_%03zu", args.prefix.c_str(), rep);
        NerveSample sample;
        if (args.model == "matern") {
            sample = simulate_matern(params, window, rng, idbuf, idbuf, group);
        } else {
            // a plain point pattern is stored as bases-only trees
            const PointPattern pts = simulate_poisson(args.lambda, window, rng);
            sample.sample_id = idbuf;
            sample.subject_id = idbuf;
            sample.group = group;
            sample.window = window;
            for (std::size_t i = 0; i < pts.size(); ++i)
                sample.trees.push_back(
                    NerveTree{static_cast<std::int64_t>(i + 1), pts.points[i], {}});
        }
        const std::string name = replicate_name(rep, args.n_reps);
        save_sample_set(SampleSet({sample}), (fs::path(args.out_dir) / name).string());
        manifest["files"].push_back({{"file", name}, {"seed", rep_seed}});
    }
    write_json((fs::path(args.out_dir) / "manifest.json").string(), manifest);
    std::cout << "wrote " << args.n_reps << " pattern file(s) to " << args.out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// infer
// ---------------------------------------------------------------------------

struct InferArgs {
    std::string healthy_dir;
    std::string targets_csv;
    std::string target_dir;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::size_t n_sims = 100000;
    double quantile = 0.001;
    std::optional<double> epsilon;
    double prior_rate = 10.0;
    double trunc_low = 0.01;
    double f_threshold = 0.3;
    unsigned threads = 0;
};

struct InferTarget {
    std::string target_id;
    std::size_t n_B = 0;
    double observed_summary = 0.0;
};

std::vector<InferTarget> load_targets_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line) ||
        split_csv_line(line) != std::vector<std::string>{"target_id", "n_B", "observed_summary"})
        throw data_error(path + ": expected header target_id,n_B,observed_summary");
    std::vector<InferTarget> targets;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 3)
            throw data_error(path + ":" + std::to_string(line_no) + ": expected 3 fields");
        InferTarget t;
        t.target_id = f[0];
        const long long nb = parse_int_field(f[1], path, line_no);
        if (nb < 1) throw data_error(path + ":" + std::to_string(line_no) + ": n_B must be >= 1");
        t.n_B = static_cast<std::size_t>(nb);
        t.observed_summary = parse_double_field(f[2], path, line_no);
        targets.push_back(std::move(t));
    }
    if (targets.empty()) throw data_error(path + ": no targets");
    return targets;
}

int run_infer(const InferArgs& args) {
    const SampleSet healthy = load_sample_dir(args.healthy_dir);

    ABCConfig config;
    config.n_sims = args.n_sims;
    config.accept_quantile = args.quantile;
    config.epsilon = args.epsilon;
    config.f_threshold = args.f_threshold;
    config.threads = args.threads;
    PriorSpec prior;
    prior.rate = args.prior_rate;
    prior.trunc_low = args.trunc_low;

    std::vector<InferTarget> targets;
    if (!args.targets_csv.empty()) {
        targets = load_targets_csv(args.targets_csv);
    } else {
        const SampleSet observed = load_sample_dir(args.target_dir);
        std::size_t index = 0;
        for (const NerveSample& s : observed.samples) {
            InferTarget t;
            t.target_id = s.sample_id;
            t.n_B = s.tree_count();
            Rng rng(derive_seed(args.seed, kObservedSeedBlock + index++));
            t.observed_summary = observed_summary_of(s, config, rng);
            targets.push_back(std::move(t));
        }
    }

    std::vector<TargetSpec> specs;
    specs.reserve(targets.size());
    for (const InferTarget& t : targets) specs.push_back({t.target_id, t.n_B});
    const ReferenceTable table =
        build_reference_table(healthy, specs, prior, config, RngSpec{args.seed});

    fs::create_directories(args.out_dir);
    save_reference_table((fs::path(args.out_dir) / "table.csv").string(), table);

    json summary;
    summary["command"] = "infer";
    summary["seed"] = args.seed;
    summary["n_sims"] = args.n_sims;
    if (args.epsilon)
        summary["epsilon"] = *args.epsilon;
    else
        summary["quantile"] = args.quantile;
    summary["prior"] = {{"family", "exponential"}, {"rate", prior.rate},
                        {"trunc_low", prior.trunc_low}};
    summary["f_threshold"] = args.f_threshold;
    summary["targets"] = json::array();

    std::vector<PosteriorDraws> posteriors;
    for (const InferTarget& t : targets) {
        const PosteriorDraws draws =
            abc_accept(table.for_target(t.target_id), t.observed_summary, config);
        json entry;
        entry["target_id"] = t.target_id;
        entry["n_B"] = t.n_B;
        entry["observed_summary"] = t.observed_summary;
        entry["n_rows"] = draws.n_total;
        entry["n_invalid"] = draws.n_invalid;
        entry["n_accepted"] = draws.thetas.size();
        if (draws.thetas.size() >= 20) {
            const PosteriorSummary ps = posterior_summary(draws);
            entry["median"] = ps.median;
            entry["ci95"] = {ps.ci_lo, ps.ci_hi};
        } else {
            entry["note"] = "too few accepted draws for a stable posterior summary";
        }
        summary["targets"].push_back(std::move(entry));
        posteriors.push_back(draws);
    }
    save_posteriors((fs::path(args.out_dir) / "posterior.csv").string(), posteriors);
    write_json((fs::path(args.out_dir) / "summary.json").string(), summary);
    std::cout << "wrote table.csv, posterior.csv, summary.json to " << args.out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// envelope / report
// ---------------------------------------------------------------------------

struct EnvelopeArgs {
    std::string healthy_dir;
    std::string target_dir;
    std::string posterior_csv;
    std::string statistic = "L-ends";
    std::string out_dir;
    std::uint64_t seed = 0;
    std::size_t n_sim = 2500;
    double alpha = 0.05;
    bool svg = false;
    unsigned threads = 0;
};

void run_envelope_one(const SampleSet& healthy, const SampleSet& observed,
                      const std::vector<PosteriorDraws>& posteriors, Statistic stat,
                      const EnvelopeArgs& args, std::uint64_t band_seed,
                      const std::string& file_stem) {
    std::vector<PredictiveTarget> targets;
    for (const NerveSample& s : observed.samples) {
        PredictiveTarget t;
        t.target_id = s.sample_id;
        t.n_B = s.tree_count();
        bool found = false;
        for (const PosteriorDraws& d : posteriors)
            if (d.target_id == s.sample_id) {
                t.posterior = d;
                found = true;
                break;
            }
        if (!found)
            throw data_error("no posterior draws for target '" + s.sample_id + "' in " +
                             args.posterior_csv);
        targets.push_back(std::move(t));
    }

    const std::vector<double> grid = default_grid_for(stat);
    std::vector<const NerveSample*> group;
    for (const NerveSample& s : observed.samples) group.push_back(&s);
    const SummaryCurve observed_curve = group_statistic_curve(group, stat, grid);

    std::vector<SummaryCurve> replicates;
    posterior_predictive_band(healthy, targets, stat, args.n_sim, args.alpha,
                              RngSpec{band_seed}, grid, args.threads, &replicates);
    EnvelopeTest test = erl_test(replicates, observed_curve, args.alpha);

    fs::create_directories(args.out_dir);
    const fs::path base = fs::path(args.out_dir) / file_stem;
    save_envelope(base.string() + ".envelope.csv", test.envelope);
    save_envelope_report(base.string() + ".verdict.json", test, args.n_sim, to_string(stat));
    if (args.svg)
        save_envelope_svg(base.string() + ".svg", test.envelope, to_string(stat));
    std::cout << file_stem << ": observed curve "
              << (test.inside ? "inside" : "outside") << " the " << (1.0 - args.alpha) * 100.0
              << "% envelope\n";
}

int run_envelope(const EnvelopeArgs& args, bool full_report) {
    const SampleSet healthy = load_sample_dir(args.healthy_dir);
    const SampleSet observed = load_sample_dir(args.target_dir);
    const std::vector<PosteriorDraws> posteriors = load_posteriors(args.posterior_csv);

    if (full_report) {
        std::size_t index = 0;
        for (const auto& [stat, name] : statistic_names()) {
            run_envelope_one(healthy, observed, posteriors, stat, args,
                             derive_seed(args.seed, kStatisticSeedBlock + index++), name);
        }
    } else {
        const Statistic stat = statistic_from_string(args.statistic);
        run_envelope_one(healthy, observed, posteriors, stat, args, args.seed, args.statistic);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatial analysis of nerve-tree point patterns: summary statistics, "
                 "thinning models, ABC inference and global envelope tests"};
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* cmd_sim = app.add_subcommand("simulate", "Generate synthetic pattern files");
    cmd_sim->add_option("model", sim.model, "Process to simulate")
        ->required()
        ->check(CLI::IsMember({"poisson", "matern"}));
    cmd_sim->add_option("--params", sim.params_path, "Matern params JSON (kappa, R, mu)")
        ->check(CLI::ExistingFile);
    cmd_sim->add_option("--lambda", sim.lambda, "Poisson intensity (points per square micron)");
    cmd_sim->add_option("--window", sim.window_path, "Window JSON (default 330x432 microns)")
        ->check(CLI::ExistingFile);
    cmd_sim->add_option("--n-reps", sim.n_reps, "Number of replicate samples")
        ->required()
        ->check(CLI::PositiveNumber);
    cmd_sim->add_option("--seed", sim.seed, "Base RNG seed")->required();
    cmd_sim->add_option("--out", sim.out_dir, "Output directory")->required();
    cmd_sim->add_option("--group", sim.group, "Group label for the samples")
        ->check(CLI::IsMember({"healthy", "mild", "moderate"}));
    cmd_sim->add_option("--prefix", sim.prefix, "Sample id prefix");

    InferArgs inf;
    CLI::App* cmd_inf = app.add_subcommand("infer", "ABC inference of the thinning parameter");
    cmd_inf->add_option("--healthy-dir", inf.healthy_dir, "Directory of healthy pattern CSVs")
        ->required()
        ->check(CLI::ExistingDirectory);
    CLI::Option* opt_targets =
        cmd_inf->add_option("--targets", inf.targets_csv,
                            "Targets CSV (target_id,n_B,observed_summary)")
            ->check(CLI::ExistingFile);
    CLI::Option* opt_tdir =
        cmd_inf->add_option("--target-dir", inf.target_dir,
                            "Directory of observed target pattern CSVs")
            ->check(CLI::ExistingDirectory);
    opt_targets->excludes(opt_tdir);
    opt_tdir->excludes(opt_targets);
    cmd_inf->add_option("--n-sims", inf.n_sims, "Reference-table rows per target")
        ->check(CLI::PositiveNumber);
    CLI::Option* opt_q =
        cmd_inf->add_option("--quantile", inf.quantile, "Acceptance quantile of the distances");
    CLI::Option* opt_eps =
        cmd_inf->add_option("--epsilon", inf.epsilon, "Fixed acceptance tolerance");
    opt_q->excludes(opt_eps);
    opt_eps->excludes(opt_q);
    cmd_inf->add_option("--prior-rate", inf.prior_rate, "Exponential prior rate");
    cmd_inf->add_option("--trunc", inf.trunc_low, "Prior truncation (theta > trunc)");
    cmd_inf->add_option("--f-threshold", inf.f_threshold, "F level defining the summary");
    cmd_inf->add_option("--seed", inf.seed, "Base RNG seed")->required();
    cmd_inf->add_option("--out", inf.out_dir, "Output directory")->required();
    cmd_inf->add_option("--threads", inf.threads, "Worker threads (0 = all cores)");

    EnvelopeArgs env;
    CLI::App* cmd_env =
        app.add_subcommand("envelope", "Posterior predictive global envelope test");
    CLI::App* cmd_rep =
        app.add_subcommand("report", "Envelope tests for the full panel of statistics");
    for (CLI::App* cmd : {cmd_env, cmd_rep}) {
        cmd->add_option("--healthy-dir", env.healthy_dir, "Directory of healthy pattern CSVs")
            ->required()
            ->check(CLI::ExistingDirectory);
        cmd->add_option("--target-dir", env.target_dir,
                        "Directory of observed target pattern CSVs")
            ->required()
            ->check(CLI::ExistingDirectory);
        cmd->add_option("--posterior", env.posterior_csv, "Posterior CSV (target_id,theta)")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--n-sim", env.n_sim, "Posterior predictive replicates")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--alpha", env.alpha, "Envelope level");
        cmd->add_option("--seed", env.seed, "Base RNG seed")->required();
        cmd->add_option("--out", env.out_dir, "Output directory")->required();
        cmd->add_flag("--svg", env.svg, "Also write an SVG figure per statistic");
        cmd->add_option("--threads", env.threads, "Worker threads (0 = all cores)");
    }
    std::vector<std::string> stat_names;
    for (const auto& [s, name] : statistic_names()) stat_names.push_back(name);
    cmd_env->add_option("--statistic", env.statistic, "Curve statistic to test")
        ->required()
        ->check(CLI::IsMember(stat_names));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(cmd_sim)) return run_simulate(sim);
        if (app.got_subcommand(cmd_inf)) {
            if (inf.targets_csv.empty() && inf.target_dir.empty())
                throw data_error("infer needs --targets or --target-dir");
            return run_infer(inf);
        }
        if (app.got_subcommand(cmd_env)) return run_envelope(env, false);
        if (app.got_subcommand(cmd_rep)) return run_envelope(env, true);
    } catch (const data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
