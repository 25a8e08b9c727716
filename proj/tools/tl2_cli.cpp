// Command-line front end: simulate | fit | select | probe | ingest.
// Exit codes: 0 success, 2 invalid input, 3 runtime/numeric failure.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tl2/tl2.hpp"

namespace {

using namespace tl2;

struct CommonOpts {
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;
    std::string kernel = "gaussian";
    char delimiter = ',';
};

struct PipelineOpts {
    std::string source_rule = "appendix-optimal";
    double source_beta = 1.0;
    double source_bw = 0.0;
    std::string nw_rule = "appendix-optimal";
    double nw_beta = 1.0;
    double nw_bw = 0.0;
    std::string transfer_rule = "experiment-n13";
    double h = 0.0;
    double hbar = 0.0;
    double beta_g = 1.0;
    int grid_m = 0;
    std::uint64_t l_max = 0;
    double anneal_t0 = -1.0;
    double anneal_alpha = 0.95;
    int anneal_steps = 100;
    int anneal_moves = 1;
    std::string method = "erm";
    int mom_blocks = 0;
    double mom_delta = 0.1;
    bool window_only = false;
    std::size_t n_eval = 2000;
};

SourceBandwidthRule parse_source_rule(const std::string& s) {
    if (s == "appendix-optimal") return SourceBandwidthRule::appendix_optimal;
    if (s == "algorithm-box") return SourceBandwidthRule::algorithm_box;
    if (s == "fixed") return SourceBandwidthRule::fixed;
    throw std::invalid_argument("unknown bandwidth rule: " + s);
}

PipelineConfig make_pipeline(const CommonOpts& common, const PipelineOpts& p) {
    PipelineConfig pc;
    pc.kernel.shape = kernel_shape_from_string(common.kernel);
    pc.source_rule = parse_source_rule(p.source_rule);
    pc.source_beta = p.source_beta;
    pc.source_fixed_h = p.source_bw;
    pc.nw_rule = parse_source_rule(p.nw_rule);
    pc.nw_beta = p.nw_beta;
    pc.nw_fixed_h = p.nw_bw;
    if (p.transfer_rule == "experiment-n13") pc.transfer_rule = TransferBandwidthRule::experiment_n13;
    else if (p.transfer_rule == "theory-optimal") {
        pc.transfer_rule = TransferBandwidthRule::theory_optimal;
        pc.transfer_p1 = p.h;
        pc.transfer_p2 = p.beta_g;
    } else if (p.transfer_rule == "fixed") {
        pc.transfer_rule = TransferBandwidthRule::fixed;
        pc.transfer_p1 = p.h;
        pc.transfer_p2 = p.hbar;
    } else {
        throw std::invalid_argument("unknown transfer bandwidth rule: " + p.transfer_rule);
    }
    pc.grid_m = p.grid_m;
    pc.l_max = p.l_max;
    pc.schedule.t0 = p.anneal_t0;
    pc.schedule.alpha = p.anneal_alpha;
    pc.schedule.steps = p.anneal_steps;
    pc.schedule.moves_per_step = p.anneal_moves;
    if (p.method == "erm") pc.method.kind = SelectionMethod::Kind::erm;
    else if (p.method == "mom") pc.method.kind = SelectionMethod::Kind::mom;
    else throw std::invalid_argument("unknown selection method: " + p.method);
    pc.method.blocks = p.mom_blocks;
    pc.mom_delta = p.mom_delta;
    pc.window_only = p.window_only;
    pc.n_eval = p.n_eval;
    return pc;
}

void add_pipeline_flags(CLI::App* cmd, PipelineOpts& p) {
    cmd->add_option("--source-bw-rule", p.source_rule,
                    "source bandwidth rule: appendix-optimal|algorithm-box|fixed");
    cmd->add_option("--source-beta", p.source_beta, "source smoothness beta_S");
    cmd->add_option("--source-bw", p.source_bw, "fixed source bandwidth");
    cmd->add_option("--nw-bw-rule", p.nw_rule, "baseline NW bandwidth rule");
    cmd->add_option("--nw-beta", p.nw_beta, "baseline NW smoothness beta");
    cmd->add_option("--nw-bw", p.nw_bw, "fixed baseline NW bandwidth");
    cmd->add_option("--transfer-bw-rule", p.transfer_rule,
                    "transfer bandwidth rule: experiment-n13|theory-optimal|fixed");
    cmd->add_option("--transfer-h", p.h, "spatial transfer bandwidth (theory-optimal/fixed)");
    cmd->add_option("--transfer-hbar", p.hbar, "score transfer bandwidth (fixed)");
    cmd->add_option("--beta-g", p.beta_g, "transfer smoothness beta_g (theory-optimal)");
    cmd->add_option("--grid-m", p.grid_m, "tessellation grid resolution (0: n_target)");
    cmd->add_option("--l-max", p.l_max, "cell-count cap (0: m^d)");
    cmd->add_option("--anneal-t0", p.anneal_t0, "initial temperature (<0: initial risk)");
    cmd->add_option("--anneal-alpha", p.anneal_alpha, "cooling factor per step");
    cmd->add_option("--anneal-steps", p.anneal_steps, "annealing steps");
    cmd->add_option("--anneal-moves", p.anneal_moves, "proposals per step");
    cmd->add_option("--method", p.method, "selection risk: erm|mom");
    cmd->add_option("--mom-blocks", p.mom_blocks, "MoM blocks (0: block rule)");
    cmd->add_option("--mom-delta", p.mom_delta, "MoM block-rule confidence delta");
    cmd->add_flag("--window-only", p.window_only, "sum fits over all training points (kernel windows only)");
    cmd->add_option("--n-eval", p.n_eval, "Monte Carlo evaluation points");
}

std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) if (!tok.empty()) out.push_back(tok);
    return out;
}

Dataset load_dataset(const std::string& path, DatasetRole role, char delim) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open dataset file: " + path);
    Dataset ds = read_dataset(in, role, delim);
    ds.validate();
    return ds;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

SyntheticTarget parse_target(const std::string& s) {
    if (s == "target1") return SyntheticTarget::target1;
    if (s == "target2") return SyntheticTarget::target2;
    throw std::invalid_argument("unknown target: " + s);
}

// --- simulate ---------------------------------------------------------------

struct SimulateOpts {
    std::string target = "target1";
    std::string dims = "1";
    std::string n_sources = "100";
    std::size_t n_target = 20;
    int reps = 100;
    double noise = 0.1;
    std::string noise_convention = "stddev";
    std::string out_table = "simulate_table.csv";
    std::string out_summary = "simulate_summary.txt";
};

int run_simulate(const CommonOpts& common, const PipelineOpts& popts, const SimulateOpts& s) {
    const PipelineConfig pc = make_pipeline(common, popts);
    std::ostringstream table;
    table << "target" << common.delimiter << "d" << common.delimiter << "n_source"
          << common.delimiter << "replication" << common.delimiter << "mse_nw" << common.delimiter
          << "mse_tl2" << common.delimiter << "e_red" << common.delimiter << "chosen\n";

    ReportWriter summary;
    summary.section("run");
    summary.field("command", "simulate");
    summary.field("target", s.target);
    summary.field("n_target", s.n_target);
    summary.field("replications", s.reps);
    summary.field("noise", s.noise);
    summary.field("noise_convention", s.noise_convention);
    summary.field("seed", std::to_string(common.seed) + "/" + std::to_string(common.stream));
    summary.end_section();
    summary.section("results");

    std::uint64_t stream = common.stream;
    for (const std::string& dtok : split_csv_list(s.dims)) {
        for (const std::string& ntok : split_csv_list(s.n_sources)) {
            SyntheticSpec spec;
            spec.d = std::stoi(dtok);
            spec.n_source = std::stoul(ntok);
            spec.n_target = s.n_target;
            spec.target = parse_target(s.target);
            spec.noise = s.noise;
            if (s.noise_convention == "stddev") spec.noise_convention = NoiseConvention::stddev;
            else if (s.noise_convention == "variance") spec.noise_convention = NoiseConvention::variance;
            else throw std::invalid_argument("unknown noise convention: " + s.noise_convention);

            const ExperimentResult res = error_reduction(spec, pc, s.reps, {common.seed, stream});
            stream += static_cast<std::uint64_t>(s.reps) + 1;

            for (const auto& row : res.rows) {
                table << s.target << common.delimiter << spec.d << common.delimiter << spec.n_source
                      << common.delimiter << row.replication << common.delimiter
                      << detail::fmt17(row.mse_nw) << common.delimiter << detail::fmt17(row.mse_tl2)
                      << common.delimiter << detail::fmt17(row.e_red) << common.delimiter
                      << detail::table_safe(row.chosen_record, common.delimiter) << '\n';
            }
            summary.section("d" + dtok + "_ns" + ntok);
            summary.field("median_mse_nw", res.median_mse_nw);
            summary.field("median_mse_tl2", res.median_mse_tl2);
            summary.field("median_e_red", res.median_e_red);
            summary.end_section();
        }
    }
    summary.end_section();
    write_file(s.out_table, table.str());
    write_file(s.out_summary, summary.str());
    std::cout << "wrote " << s.out_table << " and " << s.out_summary << '\n';
    return 0;
}

// --- fit --------------------------------------------------------------------

struct FitOpts {
    std::string source_path;
    std::string train_path;
    std::string tess_record;
    std::string tess_file;
    std::string out_model = "model.txt";
};

int run_fit(const CommonOpts& common, const PipelineOpts& popts, const FitOpts& f) {
    const PipelineConfig pc = make_pipeline(common, popts);
    const Dataset source_data = load_dataset(f.source_path, DatasetRole::source, common.delimiter);
    const Dataset train = load_dataset(f.train_path, DatasetRole::target_train, common.delimiter);

    std::string record = f.tess_record;
    if (record.empty() && !f.tess_file.empty()) {
        std::ifstream in(f.tess_file);
        if (!in) throw std::invalid_argument("cannot open tessellation file: " + f.tess_file);
        std::getline(in, record);
    }
    if (record.empty()) throw std::invalid_argument("fit: provide --tess or --tess-file");
    const Tessellation tess = tessellation_from_record(record);
    if (tess.dim() != train.dim) throw std::invalid_argument("fit: tessellation/data dimension mismatch");

    const double h_s = bandwidth_rule_source(source_data.size(), train.dim, pc.source_beta,
                                             pc.source_rule, pc.source_fixed_h);
    auto src = std::make_shared<SourceModel>(nw_fit(source_data, pc.kernel, h_s, pc.source_beta));
    const FitConfig cfg = pc.make_fit_config(train.size(), train.dim);
    const TransferModel model = fit_transfer(tess, train, src, cfg);
    write_file(f.out_model, to_record(model));
    std::cout << "wrote " << f.out_model << '\n';
    return 0;
}

// --- select -------------------------------------------------------------------

struct SelectOpts {
    std::string source_path;
    std::string target_path;   // full target sample, split internally
    std::string train_path;    // alternative: explicit halves
    std::string validate_path;
    std::string candidates_file;  // one tessellation record per line; empty: anneal
    std::string out_report = "selection_report.txt";
    std::string out_model;
};

int run_select(const CommonOpts& common, const PipelineOpts& popts, const SelectOpts& s) {
    const PipelineConfig pc = make_pipeline(common, popts);
    const Dataset source_data = load_dataset(s.source_path, DatasetRole::source, common.delimiter);

    Dataset train, validate;
    if (!s.target_path.empty()) {
        const Dataset full = load_dataset(s.target_path, DatasetRole::target_full, common.delimiter);
        auto halves = split_target(full, substream({common.seed, common.stream}, 2));
        train = std::move(halves.first);
        validate = std::move(halves.second);
    } else if (!s.train_path.empty() && !s.validate_path.empty()) {
        train = load_dataset(s.train_path, DatasetRole::target_train, common.delimiter);
        validate = load_dataset(s.validate_path, DatasetRole::target_validate, common.delimiter);
    } else {
        throw std::invalid_argument("select: provide --target or both --train and --validate");
    }
    if (train.dim != source_data.dim)
        throw std::invalid_argument("select: source/target dimension mismatch");

    const double h_s = bandwidth_rule_source(source_data.size(), train.dim, pc.source_beta,
                                             pc.source_rule, pc.source_fixed_h);
    auto src = std::make_shared<SourceModel>(nw_fit(source_data, pc.kernel, h_s, pc.source_beta));
    const FitConfig cfg = pc.make_fit_config(train.size(), train.dim);

    SelectionMethod method = pc.method;
    SelectionReport report;
    if (!s.candidates_file.empty()) {
        std::ifstream in(s.candidates_file);
        if (!in) throw std::invalid_argument("cannot open candidates file: " + s.candidates_file);
        std::vector<Tessellation> candidates;
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) candidates.push_back(tessellation_from_record(line));
        if (method.kind == SelectionMethod::Kind::mom && method.blocks <= 0)
            method.blocks = std::min<int>(mom_block_rule(std::max<std::size_t>(1, candidates.size()),
                                                         pc.mom_delta),
                                          static_cast<int>(validate.size()));
        report = select_over(candidates, train, validate, src, cfg, method,
                             substream({common.seed, common.stream}, 5), pc.constants);
    } else {
        if (method.kind == SelectionMethod::Kind::mom && method.blocks <= 0) {
            const std::size_t family =
                static_cast<std::size_t>(pc.schedule.steps) *
                    static_cast<std::size_t>(pc.schedule.moves_per_step) + 1;
            method.blocks = std::min<int>(mom_block_rule(family, pc.mom_delta),
                                          static_cast<int>(validate.size()));
        }
        AnnealSpace space;
        space.d = train.dim;
        space.m = pc.grid_m > 0 ? pc.grid_m : static_cast<int>(train.size() + validate.size());
        space.l_max = pc.l_max;
        report = anneal_select(space, train, validate, src, cfg, pc.schedule, method,
                               substream({common.seed, common.stream}, 3), pc.constants);
    }
    write_file(s.out_report, to_text(report));
    std::cout << "chosen: " << report.chosen_record << '\n';
    if (!s.out_model.empty()) write_file(s.out_model, to_record(report.chosen_model));
    std::cout << "wrote " << s.out_report << '\n';
    return 0;
}

// --- probe --------------------------------------------------------------------

struct ProbeOpts {
    std::string axis = "n-source";
    std::string sizes = "250,1000,4000";
    int reps = 50;
    int d = 1;
    std::size_t n_eval = 1000;
    std::string out_report = "probe_report.txt";
};

int run_probe(const CommonOpts& common, const ProbeOpts& p) {
    RateAxis axis;
    if (p.axis == "n-source") axis = RateAxis::n_source_plugin;
    else if (p.axis == "n-target") axis = RateAxis::n_target_parametric;
    else if (p.axis == "l-bias") axis = RateAxis::l_bias;
    else throw std::invalid_argument("unknown probe axis: " + p.axis);

    std::vector<std::size_t> sizes;
    for (const auto& tok : split_csv_list(p.sizes)) sizes.push_back(std::stoul(tok));
    const RateProbeResult res =
        rate_probe(axis, sizes, p.reps, {common.seed, common.stream}, p.d, p.n_eval);

    ReportWriter w;
    w.section("run");
    w.field("command", "probe");
    w.field("axis", p.axis);
    w.field("replications", p.reps);
    w.field("d", p.d);
    w.field("seed", std::to_string(common.seed) + "/" + std::to_string(common.stream));
    w.end_section();
    w.section("results");
    for (std::size_t i = 0; i < res.sizes.size(); ++i)
        w.field("median_risk_" + std::to_string(res.sizes[i]), res.medians[i]);
    w.field("loglog_slope", res.slope);
    w.end_section();
    write_file(p.out_report, w.str());
    std::cout << "slope: " << detail::fmt17(res.slope) << '\n';
    std::cout << "wrote " << p.out_report << '\n';
    return 0;
}

// --- ingest ---------------------------------------------------------------------

struct IngestOpts {
    std::string input;
    std::string features;
    std::string response;
    std::string group;
    std::string source_group;
    std::string target_group;
    std::string out_source = "source.csv";
    std::string out_target = "target.csv";
    std::string out_report = "ingest_report.txt";
};

int run_ingest(const CommonOpts& common, const IngestOpts& g) {
    IngestSchema schema;
    schema.feature_columns = split_csv_list(g.features);
    schema.response_column = g.response;
    schema.group_column = g.group;
    schema.source_group = g.source_group;
    schema.target_group = g.target_group;
    schema.delim = common.delimiter;

    std::ifstream in(g.input);
    if (!in) throw std::invalid_argument("cannot open input file: " + g.input);
    const IngestResult res = ingest(in, schema);

    {
        std::ofstream src(g.out_source);
        if (!src) throw std::runtime_error("cannot open output: " + g.out_source);
        write_dataset(src, res.source, common.delimiter);
    }
    {
        std::ofstream tgt(g.out_target);
        if (!tgt) throw std::runtime_error("cannot open output: " + g.out_target);
        write_dataset(tgt, res.target, common.delimiter);
    }

    ReportWriter w;
    w.section("run");
    w.field("command", "ingest");
    w.field("input", g.input);
    w.field("n_source", res.source.size());
    w.field("n_target", res.target.size());
    w.end_section();
    w.section("feature_ranges");  // recorded for inverse mapping
    for (const auto& r : res.ranges) {
        w.section(r.name);
        w.field("min", r.lo);
        w.field("max", r.hi);
        w.end_section();
    }
    w.end_section();
    write_file(g.out_report, w.str());
    std::cout << "wrote " << g.out_source << ", " << g.out_target << ", " << g.out_report << '\n';
    return 0;
}

// --- config file merging -----------------------------------------------------

/// Injects `key: value` pairs from --config as options right after the
/// subcommand token, so explicit command-line values win.
std::vector<std::string> merge_config(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    std::string config_path;
    for (std::size_t i = 1; i + 1 < args.size(); ++i)
        if (args[i] == "--config") config_path = args[i + 1];
    if (config_path.empty()) return args;

    std::ifstream in(config_path);
    if (!in) throw std::invalid_argument("cannot open config file: " + config_path);
    const auto kv = read_config_file(in);

    std::size_t subcmd_pos = 0;
    for (std::size_t i = 1; i < args.size(); ++i)
        if (!args[i].empty() && args[i][0] != '-') {
            subcmd_pos = i;
            break;
        }
    if (subcmd_pos == 0) return args;

    std::vector<std::string> merged(args.begin(), args.begin() + subcmd_pos + 1);
    for (const auto& [key, value] : kv) {
        merged.push_back("--" + key);
        if (!value.empty() && value != "true") merged.push_back(value);
    }
    merged.insert(merged.end(), args.begin() + subcmd_pos + 1, args.end());
    return merged;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tessellation-localized transfer learning for nonparametric regression"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    CommonOpts common;
    std::string config_path;
    std::string delim_str = ",";

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", common.seed, "rng seed");
        cmd->add_option("--stream", common.stream, "rng stream id");
        cmd->add_option("--kernel", common.kernel, "kernel shape: gaussian|epanechnikov|uniform");
        cmd->add_option("--delimiter", delim_str, "field delimiter for tables and datasets");
        cmd->add_option("--config", config_path, "config file with `key: value` lines (flags override)");
    };

    PipelineOpts popts;
    SimulateOpts sim;
    auto* c_sim = app.add_subcommand("simulate", "run the synthetic error-reduction experiments");
    add_common(c_sim);
    add_pipeline_flags(c_sim, popts);
    c_sim->add_option("--target", sim.target, "target1|target2");
    c_sim->add_option("--d", sim.dims, "regressor dimensions, comma-separated");
    c_sim->add_option("--n-source", sim.n_sources, "source sample sizes, comma-separated");
    c_sim->add_option("--n-target", sim.n_target, "target sample size");
    c_sim->add_option("--reps", sim.reps, "Monte Carlo replications");
    c_sim->add_option("--noise", sim.noise, "noise parameter of N(0, v)");
    c_sim->add_option("--noise-convention", sim.noise_convention, "stddev|variance");
    c_sim->add_option("--out-table", sim.out_table, "per-replication table path");
    c_sim->add_option("--out-summary", sim.out_summary, "summary record path");

    FitOpts fit;
    auto* c_fit = app.add_subcommand("fit", "fit a transfer model on a fixed tessellation");
    add_common(c_fit);
    add_pipeline_flags(c_fit, popts);
    c_fit->add_option("--source", fit.source_path, "source dataset csv")->required();
    c_fit->add_option("--train", fit.train_path, "target training dataset csv")->required();
    c_fit->add_option("--tess", fit.tess_record, "tessellation record");
    c_fit->add_option("--tess-file", fit.tess_file, "file with a tessellation record");
    c_fit->add_option("--out-model", fit.out_model, "model record output path");

    SelectOpts sel;
    auto* c_sel = app.add_subcommand("select", "data-driven tessellation selection");
    add_common(c_sel);
    add_pipeline_flags(c_sel, popts);
    c_sel->add_option("--source", sel.source_path, "source dataset csv")->required();
    c_sel->add_option("--target", sel.target_path, "full target dataset csv (split internally)");
    c_sel->add_option("--train", sel.train_path, "target training csv");
    c_sel->add_option("--validate", sel.validate_path, "target validation csv");
    c_sel->add_option("--candidates", sel.candidates_file,
                      "file of tessellation records (default: simulated annealing)");
    c_sel->add_option("--out-report", sel.out_report, "selection report path");
    c_sel->add_option("--out-model", sel.out_model, "chosen model record path");

    ProbeOpts probe;
    auto* c_probe = app.add_subcommand("probe", "statistical rate probes");
    add_common(c_probe);
    c_probe->add_option("--axis", probe.axis, "n-source|n-target|l-bias");
    c_probe->add_option("--sizes", probe.sizes, "size grid, comma-separated");
    c_probe->add_option("--reps", probe.reps, "replications per size");
    c_probe->add_option("--d", probe.d, "dimension");
    c_probe->add_option("--n-eval", probe.n_eval, "Monte Carlo evaluation points");
    c_probe->add_option("--out-report", probe.out_report, "report path");

    IngestOpts ing;
    auto* c_ing = app.add_subcommand("ingest", "rescale and split a raw delimited dataset");
    add_common(c_ing);
    c_ing->add_option("--input", ing.input, "raw delimited file with header")->required();
    c_ing->add_option("--features", ing.features, "feature column names, comma-separated")->required();
    c_ing->add_option("--response", ing.response, "response column name")->required();
    c_ing->add_option("--group", ing.group, "group column name");
    c_ing->add_option("--source-group", ing.source_group, "group value mapped to the source role");
    c_ing->add_option("--target-group", ing.target_group, "group value mapped to the target role");
    c_ing->add_option("--out-source", ing.out_source, "source dataset output path");
    c_ing->add_option("--out-target", ing.out_target, "target dataset output path");
    c_ing->add_option("--out-report", ing.out_report, "ingest report path (feature ranges)");

    try {
        const std::vector<std::string> merged = merge_config(argc, argv);
        std::vector<const char*> cargs;
        for (const auto& a : merged) cargs.push_back(a.c_str());
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (!delim_str.empty()) common.delimiter = delim_str[0];
        if (c_sim->parsed()) return run_simulate(common, popts, sim);
        if (c_fit->parsed()) return run_fit(common, popts, fit);
        if (c_sel->parsed()) return run_select(common, popts, sel);
        if (c_probe->parsed()) return run_probe(common, probe);
        if (c_ing->parsed()) return run_ingest(common, ing);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
