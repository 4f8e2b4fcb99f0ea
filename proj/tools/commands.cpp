#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "cestgm/density.hpp"
#include "cestgm/dmarkov.hpp"
#include "cestgm/json_io.hpp"
#include "cestgm/parallel.hpp"
#include "cestgm/sampler.hpp"
#include "cestgm/spectral.hpp"

namespace cestgm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t text_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Collects produced files and appends one manifest line per run.
struct RunContext {
    explicit RunContext(fs::path dir) : out_dir(std::move(dir)) {}
    fs::path out_dir;
    json flags = json::object();
    std::string command;
    std::string spec_path;
    std::uint64_t spec_hash = 0;
    std::vector<std::string> outputs;

    void write_text(const std::string& name, const std::string& text) {
        fs::create_directories(out_dir);
        std::ofstream f(out_dir / name, std::ios::binary);
        f << text;
        outputs.push_back(name);
    }

    void finish() {
        fs::create_directories(out_dir);
        json entry;
        entry["command"] = command;
        entry["spec_path"] = spec_path;
        entry["spec_hash"] = spec_hash;
        entry["flags"] = flags;
        entry["tool_version"] = kVersion;
        entry["timestamp"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::system_clock::now().time_since_epoch())
                                 .count();
        entry["outputs"] = outputs;
        std::ofstream f(out_dir / "manifest.jsonl", std::ios::app | std::ios::binary);
        f << entry.dump() << "\n";
    }
};

struct GridFlags {
    int grid_size = 201;
    std::size_t grid_cap = 1u << 20;
    double truncation_tol = 1e-12;
    GridConfig config() const { return {grid_size, grid_cap, truncation_tol}; }
};

void add_grid_flags(CLI::App* cmd, GridFlags& g) {
    cmd->add_option("--grid-size", g.grid_size, "points per continuous axis");
    cmd->add_option("--grid-cap", g.grid_cap, "max tensor grid size");
    cmd->add_option("--truncation-tol", g.truncation_tol, "certified tail mass outside the domain");
}

ValidatedModel load_and_validate(const std::string& path) {
    return validate(load_model_spec(path));
}

json screening_json(const HsScreening& s) {
    return {{"status", hs_status_name(s.status)}, {"reason", s.reason}};
}

json neighborhoods_json(const ValidatedModel& m) {
    json out = json::object();
    for (int a = 0; a < m.p(); ++a) {
        json nb = json::array();
        for (int b : m.neighborhoods()[a]) nb.push_back(b + 1);
        out[std::to_string(a + 1)] = nb;
    }
    return out;
}

json grid_meta_json(const DiscretizedSpace& space) {
    json axes = json::array();
    for (int i = 0; i < space.dim(); ++i) {
        const Axis& ax = space.axis(i);
        axes.push_back({{"size", ax.size()},
                        {"lo", ax.lo()},
                        {"hi", ax.hi()},
                        {"counting", ax.counting}});
    }
    return {{"axes", axes}, {"total_size", space.total_size()}, {"slices", space.slices()}};
}

json hs_json(const HsResult& hs) {
    return {{"value", hs.value},
            {"log_value", hs.log_value},
            {"diverging", hs.diverging},
            {"doublings", hs.doublings},
            {"probe_log_values", hs.probe_log_values}};
}

DiscretizedSpace spectral_space(const ValidatedModel& model, const GridConfig& cfg,
                                bool uncertified) {
    DiscretizedSpace slice =
        uncertified ? build_space_uncertified(model, cfg) : build_space(model, cfg);
    return model.d() == 1 ? slice : slice.tiled(model.d(), cfg.grid_cap);
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& spec_path, const std::string& out_dir) {
    json report;
    int code = 0;
    try {
        const ValidatedModel m = load_and_validate(spec_path);
        report["valid"] = true;
        report["violations"] = json::array();
        report["neighborhoods"] = neighborhoods_json(m);
        report["hs_screening"] = screening_json(m.hs_screening());
    } catch (const ParseError& e) {
        report["valid"] = false;
        report["violations"] = {e.what()};
        code = 2;
    } catch (const ValidationError& e) {
        report["valid"] = false;
        report["violations"] = {e.what()};
        code = 1;
    }
    std::cout << report.dump(2) << "\n";
    if (!out_dir.empty()) {
        RunContext ctx(out_dir);
        ctx.command = "validate";
        ctx.spec_path = spec_path;
        try {
            ctx.spec_hash = text_hash(model_spec_to_json(load_model_spec(spec_path)));
        } catch (...) {
        }
        ctx.write_text("validate.json", report.dump(2) + "\n");
        ctx.finish();
    }
    return code;
}

int cmd_graph(const std::string& spec_path, const std::string& out_dir, int unroll,
              const std::string& dot_name) {
    const ValidatedModel m = load_and_validate(spec_path);
    RunContext ctx(out_dir.empty() ? "." : out_dir);
    ctx.command = "graph";
    ctx.spec_path = spec_path;
    ctx.spec_hash = text_hash(model_spec_to_json(m.spec()));
    ctx.flags["unroll"] = unroll;
    ctx.write_text(dot_name.empty() ? "cig.dot" : dot_name, export_dot(ci_graph(m)));
    if (unroll > 0) {
        ctx.write_text("unrolled.dot", export_dot(time_unrolled_graph(m, unroll), "cig_unrolled"));
    }
    ctx.finish();
    std::cout << export_dot(ci_graph(m));
    return 0;
}

int cmd_spectrum(const std::string& spec_path, const std::string& out_dir, const GridFlags& grid,
                 double tol, int max_iter, bool force) {
    const ValidatedModel m = load_and_validate(spec_path);
    RunContext ctx(out_dir.empty() ? "." : out_dir);
    ctx.command = "spectrum";
    ctx.spec_path = spec_path;
    ctx.spec_hash = text_hash(model_spec_to_json(m.spec()));
    ctx.flags = {{"grid_size", grid.grid_size},
                 {"tol", tol},
                 {"max_iter", max_iter},
                 {"force", force}};

    const HsScreening& screen = m.hs_screening();
    DiscretizedSpace space;
    bool envelope_failed = false;
    try {
        space = spectral_space(m, grid.config(), false);
    } catch (const UnboundedEnvelope&) {
        // no certifiable truncation: fall back to the base envelope so the
        // divergence probe can produce diagnostics
        envelope_failed = true;
        space = spectral_space(m, grid.config(), true);
    }
    const InteractionKernel kernel(m);

    HsResult hs;
    bool hs_ran = false;
    if (space.total_size() <= (1u << 13)) {
        hs = hs_norm_sq(kernel, space);
        hs_ran = true;
    }
    if ((screen.status == HsStatus::Violated || envelope_failed || (hs_ran && hs.diverging)) &&
        !force) {
        json diag;
        diag["error"] = "interaction kernel flagged NotHilbertSchmidt";
        diag["hs_screening"] = screening_json(screen);
        if (hs_ran) diag["hs"] = hs_json(hs);
        ctx.write_text("spectrum.json", diag.dump(2) + "\n");
        ctx.finish();
        std::cerr << diag.dump(2) << "\n";
        return 4;
    }

    PowerConfig pc;
    pc.tol = tol;
    pc.max_iter = max_iter;
    SpectralResult res;
    try {
        DiscretizedOperator op(kernel, space);
        res = power_iterate(op, pc);

        json report;
        report["r"] = res.r;
        report["lambda2_abs"] = res.lambda2_abs;
        report["iterations"] = res.iterations;
        report["residual"] = res.residual;
        report["grid_meta"] = grid_meta_json(space);
        report["hs_screening"] = screening_json(screen);
        if (hs_ran) report["hs"] = hs_json(hs);
        ctx.write_text("spectrum.json", report.dump(2) + "\n");

        std::string csv = "index";
        for (int k = 0; k < space.dim(); ++k) csv += ",x" + std::to_string(k + 1);
        csv += ",weight,v,w\n";
        for (std::size_t i = 0; i < op.size(); ++i) {
            csv += std::to_string(i);
            for (int k = 0; k < space.dim(); ++k) csv += "," + format_double(op.grid_points()(i, k));
            csv += "," + format_double(op.mu()[i]);
            csv += "," + format_double(res.v[i]);
            csv += "," + format_double(res.w[i]) + "\n";
        }
        ctx.write_text("vw.csv", csv);
        ctx.finish();
        std::cout << report.dump(2) << "\n";
    } catch (const NoConvergence& e) {
        json diag;
        diag["error"] = e.what();
        diag["iterations"] = e.iterations;
        diag["residual"] = e.residual;
        ctx.write_text("spectrum.json", diag.dump(2) + "\n");
        ctx.finish();
        std::cerr << diag.dump(2) << "\n";
        return 3;
    }
    return 0;
}

int cmd_simulate(const std::string& spec_path, const std::string& out_dir, const GridFlags& grid,
                 GibbsConfig cfg, int chains, bool auto_pad, double tv_target) {
    if (chains < 1) throw Error("--chains must be >= 1");
    const ValidatedModel m = load_and_validate(spec_path);
    RunContext ctx(out_dir.empty() ? "." : out_dir);
    ctx.command = "simulate";
    ctx.spec_path = spec_path;
    ctx.spec_hash = text_hash(model_spec_to_json(m.spec()));

    if (m.hs_screening().status == HsStatus::Violated) {
        std::cerr << "warning: HS screening violated (" << m.hs_screening().reason
                  << "); sampling anyway\n";
    }
    if (auto_pad) {
        DiscretizedSpace space = spectral_space(m, grid.config(), false);
        DiscretizedOperator op(InteractionKernel(m), space);
        const SpectralResult res = power_iterate(op);
        cfg.m = effective_pad(m, res.lambda2_abs, res.r, tv_target);
    }
    ctx.flags = {{"n", cfg.n},        {"m", cfg.m},
                 {"sweeps", cfg.sweeps}, {"burnin", cfg.burnin},
                 {"thin", cfg.thin},  {"seed", cfg.seed},
                 {"chains", chains},  {"auto_pad", auto_pad},
                 {"tv_target", tv_target}};

    std::vector<SamplePath> paths(chains);
    std::vector<std::thread> pool;
    const int budget = std::max(1, thread_budget());
    for (int c = 0; c < chains; ++c) {
        auto work = [&, c] {
            GibbsConfig chain_cfg = cfg;
            chain_cfg.seed = cfg.seed + 1000003ull * c;
            paths[c] = gibbs_run(m, chain_cfg);
        };
        if (budget > 1 && chains > 1) {
            pool.emplace_back(work);
            if (static_cast<int>(pool.size()) == budget) {
                for (auto& t : pool) t.join();
                pool.clear();
            }
        } else {
            work();
        }
    }
    for (auto& t : pool) t.join();

    for (int c = 0; c < chains; ++c) {
        std::string csv = "sweep,t,node,value\n";
        for (std::size_t k = 0; k < paths[c].kept.size(); ++k) {
            const Mat& kept = paths[c].kept[k];
            for (Eigen::Index t = 0; t < kept.rows(); ++t) {
                for (Eigen::Index a = 0; a < kept.cols(); ++a) {
                    csv += std::to_string(k) + "," + std::to_string(t) + "," +
                           std::to_string(a + 1) + "," + format_double(kept(t, a)) + "\n";
                }
            }
        }
        ctx.write_text("paths_" + std::to_string(c) + ".csv", csv);
    }
    json prov;
    prov["model_hash"] = paths[0].model_hash;
    prov["config"] = ctx.flags;
    prov["effective_m"] = cfg.m;
    ctx.write_text("provenance.json", prov.dump(2) + "\n");
    ctx.finish();
    std::cout << "wrote " << chains << " chain(s) to " << ctx.out_dir.string() << "\n";
    return 0;
}

std::vector<Mat> read_paths_csv(const fs::path& file, int p) {
    std::ifstream in(file);
    if (!in) throw Error("cannot read " + file.string());
    std::string line;
    std::getline(in, line);
    if (line != "sweep,t,node,value") throw ParseError("unexpected paths header: " + line);
    std::map<long, std::map<long, std::vector<double>>> by_sweep;
    while (std::getline(in, line)) {
        long sweep, t, node;
        double value;
        if (std::sscanf(line.c_str(), "%ld,%ld,%ld,%lf", &sweep, &t, &node, &value) != 4) {
            throw ParseError("bad paths row: " + line);
        }
        auto& row = by_sweep[sweep][t];
        row.resize(p, 0.0);
        row[node - 1] = value;
    }
    std::vector<Mat> kept;
    for (const auto& [sweep, rows] : by_sweep) {
        Mat path(rows.size(), p);
        for (const auto& [t, vals] : rows) {
            for (int a = 0; a < p; ++a) path(t, a) = vals[a];
        }
        kept.push_back(std::move(path));
    }
    return kept;
}

int cmd_diagnose(const std::string& paths_dir, const std::string& spec_path,
                 const std::string& out_dir, const GridFlags& grid) {
    const ValidatedModel m = load_and_validate(spec_path);
    std::vector<Mat> kept;
    for (const auto& entry : fs::directory_iterator(paths_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("paths_", 0) == 0 && entry.path().extension() == ".csv") {
            auto chain = read_paths_csv(entry.path(), m.p());
            kept.insert(kept.end(), chain.begin(), chain.end());
        }
    }
    if (kept.empty()) throw Error("no paths_*.csv found in " + paths_dir);

    RunContext ctx(out_dir.empty() ? "." : out_dir);
    ctx.command = "diagnose";
    ctx.spec_path = spec_path;
    ctx.spec_hash = text_hash(model_spec_to_json(m.spec()));

    json report;
    report["kept_sweeps"] = kept.size();
    report["path_length"] = kept[0].rows();

    // pooled per-node moments and lag-1 autocorrelation
    json nodes = json::array();
    for (int a = 0; a < m.p(); ++a) {
        double s1 = 0, s2 = 0, n = 0, c01 = 0, nc = 0;
        for (const auto& path : kept) {
            for (Eigen::Index t = 0; t < path.rows(); ++t) {
                s1 += path(t, a);
                s2 += path(t, a) * path(t, a);
                n += 1;
                if (t + 1 < path.rows()) {
                    c01 += path(t, a) * path(t + 1, a);
                    nc += 1;
                }
            }
        }
        const double mean = s1 / n;
        const double var = s2 / n - mean * mean;
        nodes.push_back({{"node", a + 1},
                         {"mean", mean},
                         {"variance", var},
                         {"lag1_autocorr", (c01 / nc - mean * mean) / var}});
    }
    report["nodes"] = nodes;

    // empirical beta(n) and, when the grid is tractable, the calibrated bound
    const int n_max = std::min<int>(10, static_cast<int>(kept[0].rows()) - 2);
    std::vector<double> beta_emp;
    for (int n = 1; n <= n_max; ++n) beta_emp.push_back(empirical_beta(kept, n));
    std::string curves = "n_or_m,value,bound\n";
    bool bounded = true;
    std::vector<double> bound;
    try {
        DiscretizedSpace space = spectral_space(m, grid.config(), false);
        if (space.total_size() > 1024) throw GridCapExceeded("diagnose grid too large");
        DiscretizedOperator op(InteractionKernel(m), space);
        const SpectralResult res = power_iterate(op);
        const MixingCurve curve = mixing_bound_curve(op, res, n_max);
        bound = curve.bound;
        report["spectral"] = {{"r", res.r}, {"lambda2_abs", res.lambda2_abs}};
        const double rho = curve.ratio;
        // rank-one models are iid: dominance is not asserted there
        if (rho > 1e-12) {
            bool dominated = true;
            for (int i = 0; i < n_max; ++i) {
                // statistical slack: empirical beta carries binning noise
                dominated = dominated && beta_emp[i] <= bound[i] + 0.02;
            }
            report["beta_below_bound"] = dominated;
        } else {
            report["iid_beta1_small"] = beta_emp[0] < 0.01;
        }

        // pooled marginal moments against p1 on the grid (single-node models),
        // with a batch-means standard error over the kept sweeps
        if (m.p() == 1 && m.d() == 1) {
            const DensityGrid p1 = marginal_p1(op, res);
            double mean = 0, second = 0;
            for (std::size_t i = 0; i < op.size(); ++i) {
                const double x = op.grid_points()(i, 0);
                mean += x * p1.values[i] * op.mu()[i];
                second += x * x * p1.values[i] * op.mu()[i];
            }
            const double want_var = second - mean * mean;
            report["expected_marginal"] = {{"mean", mean}, {"variance", want_var}};

            const int batches = std::min<int>(30, static_cast<int>(kept.size()));
            const int per = static_cast<int>(kept.size()) / batches;
            std::vector<double> var_b;
            for (int b = 0; b < batches; ++b) {
                double s1 = 0, s2 = 0, cnt = 0;
                for (int kk = b * per; kk < (b + 1) * per; ++kk) {
                    for (Eigen::Index t = 0; t < kept[kk].rows(); ++t) {
                        s1 += kept[kk](t, 0);
                        s2 += kept[kk](t, 0) * kept[kk](t, 0);
                        cnt += 1;
                    }
                }
                var_b.push_back(s2 / cnt - (s1 / cnt) * (s1 / cnt));
            }
            double vm = 0;
            for (double v : var_b) vm += v;
            vm /= var_b.size();
            double vv = 0;
            for (double v : var_b) vv += (v - vm) * (v - vm);
            const double se = std::sqrt(vv / (var_b.size() - 1) / var_b.size());
            report["marginal_variance_check"] = {{"measured", vm},
                                                 {"expected", want_var},
                                                 {"se", se},
                                                 {"pass", std::abs(vm - want_var) <= 4.0 * se}};
        }
    } catch (const Error&) {
        bounded = false;
    }
    for (int i = 0; i < n_max; ++i) {
        curves += std::to_string(i + 1) + "," + format_double(beta_emp[i]) + "," +
                  (bounded ? format_double(bound[i]) : "") + "\n";
    }
    report["beta_empirical"] = beta_emp;

    ctx.write_text("diagnostics.json", report.dump(2) + "\n");
    ctx.write_text("curves.csv", curves);
    ctx.finish();
    std::cout << report.dump(2) << "\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"conditionally specified exponential-family stationary time series toolkit", "cestgm"};
    app.require_subcommand(1);

    std::string spec_path, out_dir, paths_dir;
    GridFlags grid;
    double tol = 1e-10;
    int max_iter = 10000;
    bool force = false;
    GibbsConfig gibbs;
    int chains = 1;
    bool auto_pad = false;
    double tv_target = 1e-3;
    int unroll = 0;
    std::string dot_name;

    auto* validate_cmd = app.add_subcommand("validate", "check process-wide compatibility");
    validate_cmd->add_option("spec", spec_path, "model spec JSON")->required();
    validate_cmd->add_option("--out", out_dir, "output directory");

    auto* graph_cmd = app.add_subcommand("graph", "emit the conditional-independence graph");
    graph_cmd->add_option("spec", spec_path, "model spec JSON")->required();
    graph_cmd->add_option("--out", out_dir, "output directory");
    graph_cmd->add_option("--unroll", unroll, "also emit a time-unrolled graph over this window");
    graph_cmd->add_option("--dot", dot_name, "filename for the process-wide DOT inside --out");

    auto* spectrum_cmd = app.add_subcommand("spectrum", "dominant eigenpair of the interaction operator");
    spectrum_cmd->add_option("spec", spec_path, "model spec JSON")->required();
    spectrum_cmd->add_option("--out", out_dir, "output directory");
    add_grid_flags(spectrum_cmd, grid);
    spectrum_cmd->add_option("--tol", tol, "power-iteration residual tolerance");
    spectrum_cmd->add_option("--max-iter", max_iter, "power-iteration cap");
    spectrum_cmd->add_flag("--force", force, "proceed despite a NotHilbertSchmidt flag");

    auto* simulate_cmd = app.add_subcommand("simulate", "approximate Gibbs sampling of paths");
    simulate_cmd->add_option("spec", spec_path, "model spec JSON")->required();
    simulate_cmd->add_option("--out", out_dir, "output directory")->required();
    add_grid_flags(simulate_cmd, grid);
    simulate_cmd->add_option("--n", gibbs.n, "output path length minus 2");
    simulate_cmd->add_option("--m", gibbs.m, "pad width");
    simulate_cmd->add_option("--sweeps", gibbs.sweeps, "total Gibbs sweeps");
    simulate_cmd->add_option("--burnin", gibbs.burnin, "discarded sweeps");
    simulate_cmd->add_option("--thin", gibbs.thin, "keep every k-th sweep");
    simulate_cmd->add_option("--seed", gibbs.seed, "random seed");
    simulate_cmd->add_option("--chains", chains, "independent chains");
    simulate_cmd->add_flag("--auto-pad", auto_pad, "choose m from the subdominant ratio");
    simulate_cmd->add_option("--tv-target", tv_target, "target TV for --auto-pad");

    auto* diagnose_cmd = app.add_subcommand("diagnose", "path diagnostics against the model");
    diagnose_cmd->add_option("paths", paths_dir, "directory with paths_*.csv")->required();
    diagnose_cmd->add_option("spec", spec_path, "model spec JSON")->required();
    diagnose_cmd->add_option("--out", out_dir, "output directory");
    add_grid_flags(diagnose_cmd, grid);

    std::vector<std::string> argv_copy(args);
    try {
        // CLI11 parses argv-style reversed vectors
        std::vector<std::string> rev(argv_copy.rbegin(), argv_copy.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (app.got_subcommand(validate_cmd)) return cmd_validate(spec_path, out_dir);
        if (app.got_subcommand(graph_cmd)) return cmd_graph(spec_path, out_dir, unroll, dot_name);
        if (app.got_subcommand(spectrum_cmd))
            return cmd_spectrum(spec_path, out_dir, grid, tol, max_iter, force);
        if (app.got_subcommand(simulate_cmd))
            return cmd_simulate(spec_path, out_dir, grid, gibbs, chains, auto_pad, tv_target);
        if (app.got_subcommand(diagnose_cmd))
            return cmd_diagnose(paths_dir, spec_path, out_dir, grid);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NoConvergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    }
    return 0;
}

}  // namespace cestgm::cli
