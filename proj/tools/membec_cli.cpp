#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "membec/membec.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace membec;

namespace {

struct CliOptions {
    std::string config_path;
    std::string mode;
    std::string out_dir = ".";
    std::string grid_arg;
    std::string sweep_arg;
    bool deterministic = false;
    bool dump_functionals = false;
};

std::vector<double> parse_csv_doubles(const std::string& s, const char* what) {
    std::vector<double> vals;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        std::string tok = s.substr(pos, comma == std::string::npos ? comma : comma - pos);
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string(what) + ": cannot parse '" + tok + "'");
        }
        if (used != tok.size())
            throw std::invalid_argument(std::string(what) + ": trailing junk in '" + tok + "'");
        vals.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return vals;
}

void apply_cli_overrides(io::RunConfig& cfg, const CliOptions& opt) {
    if (!opt.grid_arg.empty()) {
        auto vals = parse_csv_doubles(opt.grid_arg, "--grid");
        if (vals.size() != 2 || vals[0] < 2 || vals[1] < 2 ||
            vals[0] != std::floor(vals[0]) || vals[1] != std::floor(vals[1]))
            throw std::invalid_argument("--grid expects NX,NP with integers >= 2");
        cfg.grid.nu = static_cast<int>(vals[0]);
        cfg.grid.nv = static_cast<int>(vals[1]);
        cfg.has_grid = true;
    }
    if (!opt.sweep_arg.empty()) {
        cfg.sweep = parse_csv_doubles(opt.sweep_arg, "--sweep");
        for (double m : cfg.sweep)
            if (!(m > 0)) throw std::invalid_argument("--sweep multipliers must be positive");
    }
}

void require_schedule(const io::RunConfig& cfg) {
    if (cfg.thetas.empty())
        throw std::invalid_argument("this mode requires a schedule (intervals and outcomes)");
    Schedule s{cfg.thetas, cfg.outcomes};
    s.validate();
}

std::string out_path(const CliOptions& opt, const std::string& stem, const char* ext) {
    return (fs::path(opt.out_dir) / (stem + ext)).string();
}

void emit(const CliOptions& opt, const std::string& stem, const json& summary) {
    io::write_text_file(out_path(opt, stem, ".json"), summary.dump(2) + "\n");
    std::cout << "wrote " << out_path(opt, stem, ".json") << "\n";
}

json grid_json(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const DerivedParams& d) {
    double p_zp = d.mass * d.omega_m * d.x_zp;
    return json{{"nu", u.size()},
                {"nv", v.size()},
                {"umin", u[0]},
                {"umax", u[u.size() - 1]},
                {"vmin", v[0]},
                {"vmax", v[v.size() - 1]},
                {"x_min", u[0] * d.x_zp},
                {"x_max", u[u.size() - 1] * d.x_zp},
                {"p_min", v[0] * p_zp},
                {"p_max", v[v.size() - 1] * p_zp}};
}

// Joint probabilities of every outcome sequence on the schedule (small n),
// or of the final outcome given the recorded prefix (large n).
json probability_table_thermal(const ScaledParams& sp, const io::RunConfig& cfg) {
    json out = json::object();
    if (cfg.thetas.size() <= 4) {
        auto seqs = enumerate_paths(cfg.thetas.size());
        auto probs = all_outcome_probabilities(sp, cfg.thetas, cfg.path_cap);
        json table = json::object();
        double sum = 0;
        for (std::size_t i = 0; i < seqs.size(); ++i) {
            table[io::sequence_token(seqs[i])] = probs[i];
            sum += probs[i];
        }
        out["all_sequences"] = table;
        out["sum"] = sum;
    }
    json fin = json::object();
    for (int g : {1, 0, -1}) {
        std::vector<int> seq(cfg.outcomes.begin(), cfg.outcomes.end() - 1);
        seq.push_back(g);
        std::vector<Mat3c> kraus;
        for (int o : seq) kraus.push_back(fy_projector(o));
        fin[io::outcome_token(g)] =
            outcome_probability(sp, cfg.thetas, kraus, false, cfg.path_cap).real();
    }
    out["final_outcome"] = fin;
    return out;
}

json probability_table_coherent(const ScaledParams& sp, const io::RunConfig& cfg) {
    json out = json::object();
    if (cfg.thetas.size() <= 4) {
        json table = json::object();
        double sum = 0;
        for (const auto& seq : enumerate_paths(cfg.thetas.size())) {
            std::vector<Mat3c> kraus;
            for (int o : seq) kraus.push_back(fy_projector(o));
            double p = coherent_norm(evolve_coherent(sp, cfg.thetas, kraus, cfg.a0, cfg.b0,
                                                     cfg.path_cap))
                           .real();
            table[io::sequence_token(seq)] = p;
            sum += p;
        }
        out["all_sequences"] = table;
        out["sum"] = sum;
    }
    json fin = json::object();
    for (int g : {1, 0, -1}) {
        std::vector<int> seq(cfg.outcomes.begin(), cfg.outcomes.end() - 1);
        seq.push_back(g);
        std::vector<Mat3c> kraus;
        for (int o : seq) kraus.push_back(fy_projector(o));
        fin[io::outcome_token(g)] =
            coherent_norm(evolve_coherent(sp, cfg.thetas, kraus, cfg.a0, cfg.b0, cfg.path_cap))
                .real();
    }
    out["final_outcome"] = fin;
    return out;
}

int mode_derive(const CliOptions& opt, const io::RunConfig& cfg, const DerivedParams& d) {
    json j = io::summary_base("derive", cfg, d, opt.deterministic);
    PhysicalConstants c;
    auto lin = linearized_field(c, cfg.params);
    j["linearized_field"] = {{"B_c", lin.B_c}, {"B_vprime", lin.B_vprime}};
    emit(opt, "derive_none_" + io::hash_hex(cfg.raw), j);
    return 0;
}

int mode_thermal_run(const CliOptions& opt, const io::RunConfig& cfg, const DerivedParams& d) {
    require_schedule(cfg);
    if (cfg.initial_type != "thermal")
        throw std::invalid_argument("thermal-run requires initial.type = thermal");
    ScaledParams sp = ScaledParams::from(d);
    Schedule sched{cfg.thetas, cfg.outcomes};
    auto kraus = sched.kraus_ops();

    auto terms = pair_terms(sp, cfg.thetas, kraus, cfg.path_cap);
    auto ax = thermal_axes(terms, sp, cfg.grid);
    auto res = wigner_post(sp, cfg.thetas, kraus, ax.u, ax.v, true, false, cfg.path_cap);
    if (!(res.prob > 1e-12))
        throw std::invalid_argument("outcome sequence probability vanishes; nothing to normalize");
    auto mom = analytic_moments(sp, cfg.thetas, kraus, cfg.path_cap);

    std::string stem = "thermal-run_" + io::sequence_token(cfg.outcomes) + "_" + io::hash_hex(cfg.raw);
    io::write_text_file(out_path(opt, stem, ".csv"), io::wigner_csv(ax.u, ax.v, res.w, d));
    if (opt.dump_functionals)
        io::write_text_file(out_path(opt, stem, "_functionals.csv"), io::functionals_csv(cfg.thetas));

    json j = io::summary_base("thermal-run", cfg, d, opt.deterministic);
    j["outcome_sequence"] = io::sequence_token(cfg.outcomes);
    j["probability"] = res.prob;
    j["norm_estimate"] = grid_mass(res.w, ax.u, ax.v);
    j["min_w"] = res.w.minCoeff();
    j["imag_residue"] = res.imag_residue;
    j["grid"] = grid_json(ax.u, ax.v, d);
    j["probabilities"] = probability_table_thermal(sp, cfg);
    j["moments"] = {{"mean_u", mom.mean_u},
                    {"mean_v", mom.mean_v},
                    {"var_u", mom.var_u()},
                    {"var_v", mom.var_v()},
                    {"mean_x", mom.mean_u * d.x_zp},
                    {"var_x", mom.var_u() * d.x_zp * d.x_zp}};
    j["files"] = {{"wigner_csv", stem + ".csv"}};
    emit(opt, stem, j);
    return 0;
}

int mode_coherent_run(const CliOptions& opt, const io::RunConfig& cfg, const DerivedParams& d) {
    require_schedule(cfg);
    if (cfg.initial_type == "thermal" && !(cfg.a0 == 0 && cfg.b0 == 0))
        throw std::invalid_argument("coherent-run requires initial.type = coherent");
    ScaledParams sp = ScaledParams::from(d);
    Schedule sched{cfg.thetas, cfg.outcomes};
    auto kraus = sched.kraus_ops();

    auto branches = evolve_coherent(sp, cfg.thetas, kraus, cfg.a0, cfg.b0, cfg.path_cap);
    auto ax = coherent_axes(branches, cfg.grid);
    auto res = wigner_coherent(branches, ax.u, ax.v, true);
    if (!(res.prob > 1e-12))
        throw std::invalid_argument("outcome sequence probability vanishes; nothing to normalize");

    std::string stem =
        "coherent-run_" + io::sequence_token(cfg.outcomes) + "_" + io::hash_hex(cfg.raw);
    io::write_text_file(out_path(opt, stem, ".csv"), io::wigner_csv(ax.u, ax.v, res.w, d));
    io::write_text_file(out_path(opt, stem, "_branches.csv"), io::branches_csv(branches));
    if (opt.dump_functionals)
        io::write_text_file(out_path(opt, stem, "_functionals.csv"), io::functionals_csv(cfg.thetas));

    double mass = grid_mass(res.w, ax.u, ax.v);
    double mean_u = grid_mean_u(res.w, ax.u, ax.v);
    Eigen::MatrixXd wt = res.w.transpose();
    double mean_v = grid_mean_u(wt, ax.v, ax.u);

    json j = io::summary_base("coherent-run", cfg, d, opt.deterministic);
    j["initial"] = {{"type", "coherent"}, {"a0", cfg.a0}, {"b0", cfg.b0}};
    j["outcome_sequence"] = io::sequence_token(cfg.outcomes);
    j["probability"] = res.prob;
    j["norm_estimate"] = mass;
    j["min_w"] = res.w.minCoeff();
    j["negative"] = res.w.minCoeff() < negativity_threshold;
    j["imag_residue"] = res.imag_residue;
    j["purity"] = grid_purity(res.w, ax.u, ax.v);
    j["branch_count"] = branches.size();
    j["grid"] = grid_json(ax.u, ax.v, d);
    j["probabilities"] = probability_table_coherent(sp, cfg);
    j["moments"] = {{"mean_u", mean_u}, {"mean_v", mean_v}, {"mean_x", mean_u * d.x_zp}};
    j["files"] = {{"wigner_csv", stem + ".csv"}, {"branches_csv", stem + "_branches.csv"}};
    emit(opt, stem, j);
    return 0;
}

int mode_sweep(const CliOptions& opt, const io::RunConfig& cfg, const DerivedParams& d) {
    require_schedule(cfg);
    if (cfg.sweep.empty())
        throw std::invalid_argument("sweep mode needs multipliers (config 'sweep' or --sweep)");
    ScaledParams base = ScaledParams::from(d);
    double theta1 = cfg.thetas.front();
    int outcome = cfg.outcomes.front();

    std::string csv = "multiplier,A_tilde,fringe_amplitude\n";
    json rows = json::array();
    for (double m : cfg.sweep) {
        ScaledParams sp = base;
        sp.At = m * base.At;
        double fr = fringe_amplitude(sp, theta1, outcome);
        csv += io::g17(m) + ',' + io::g17(sp.At) + ',' + io::g17(fr) + '\n';
        rows.push_back({{"multiplier", m}, {"A_tilde", sp.At}, {"fringe_amplitude", fr}});
    }

    std::string stem = "sweep_" + io::outcome_token(outcome) + "_" + io::hash_hex(cfg.raw);
    io::write_text_file(out_path(opt, stem, ".csv"), csv);
    json j = io::summary_base("sweep", cfg, d, opt.deterministic);
    j["theta1"] = theta1;
    j["outcome"] = io::outcome_token(outcome);
    j["points"] = rows;
    j["files"] = {{"sweep_csv", stem + ".csv"}};
    emit(opt, stem, j);
    return 0;
}

int mode_oracle_compare(const CliOptions& opt, const io::RunConfig& cfg, const DerivedParams& d) {
    require_schedule(cfg);
    ScaledParams sp = ScaledParams::from(d);
    bool coherent_initial = cfg.initial_type == "coherent";

    int n_planned = cfg.oracle_n_max > 0
                        ? cfg.oracle_n_max
                        : oracle::auto_n_max(coherent_initial ? 0.0 : d.nbar,
                                             coherent_initial ? std::hypot(cfg.a0, cfg.b0) : 0.0,
                                             sp.At, cfg.thetas.size(), 1e-13);
    if (n_planned > 3000)
        throw oracle::TruncationError(
            "reference basis would need " + std::to_string(n_planned) +
            " levels; compare on a scaled instance (overrides with small nbar) instead");

    GridSpec gs = cfg.grid;
    if (!cfg.has_grid) gs.nu = gs.nv = 33;
    oracle::FockConfig fc;
    fc.n_max = cfg.oracle_n_max;

    Schedule sched{cfg.thetas, cfg.outcomes};
    auto kraus = sched.kraus_ops();

    double prob_engine, prob_oracle;
    double rho_diff = 0;
    bool rho_checked = false;
    double wig_diff, wig_peak;
    Eigen::VectorXd u, v;
    int n_used;
    double top_occ;

    if (coherent_initial) {
        auto branches = evolve_coherent(sp, cfg.thetas, kraus, cfg.a0, cfg.b0, cfg.path_cap);
        auto ax = coherent_axes(branches, gs);
        u = ax.u;
        v = ax.v;
        auto res = wigner_coherent(branches, u, v, true);
        prob_engine = res.prob;
        auto orc = oracle::run_coherent(sp.At, cfg.a0, cfg.b0, sp.OmL, cfg.thetas, cfg.outcomes, fc);
        prob_oracle = orc.prob;
        n_used = orc.n_max;
        top_occ = orc.top_occupancy;
        Eigen::MatrixXd wo = oracle::wigner_numeric(orc.rho_mem, u, v, 1.0) / orc.prob;
        wig_diff = (res.w - wo).cwiseAbs().maxCoeff();
        wig_peak = res.w.cwiseAbs().maxCoeff();
    } else {
        auto terms = pair_terms(sp, cfg.thetas, kraus, cfg.path_cap);
        auto ax = thermal_axes(terms, sp, gs);
        u = ax.u;
        v = ax.v;
        auto res = wigner_post(sp, cfg.thetas, kraus, u, v, true, false, cfg.path_cap);
        prob_engine = res.prob;
        auto orc = oracle::run_thermal(sp.At, d.nbar, sp.OmL, cfg.thetas, cfg.outcomes, fc);
        prob_oracle = orc.prob;
        n_used = orc.n_max;
        top_occ = orc.top_occupancy;
        Eigen::MatrixXcd rho_e = rho_position(sp, cfg.thetas, kraus, u, u, cfg.path_cap);
        Eigen::MatrixXcd rho_o = oracle::position_density(orc.rho_mem, u, u);
        rho_diff = (rho_e - rho_o).cwiseAbs().maxCoeff();
        rho_checked = true;
        Eigen::MatrixXd wo = oracle::wigner_numeric(orc.rho_mem, u, v, sp.ch) / orc.prob;
        wig_diff = (res.w - wo).cwiseAbs().maxCoeff();
        wig_peak = res.w.cwiseAbs().maxCoeff();
    }

    double prob_diff = std::abs(prob_engine - prob_oracle);
    const double tol_prob = 1e-8, tol_rho = 1e-8, tol_wig_rel = 1e-6;
    bool pass = prob_diff <= tol_prob && wig_diff <= tol_wig_rel * wig_peak &&
                (!rho_checked || rho_diff <= tol_rho);

    std::string stem =
        "oracle-compare_" + io::sequence_token(cfg.outcomes) + "_" + io::hash_hex(cfg.raw);
    json j = io::summary_base("oracle-compare", cfg, d, opt.deterministic);
    j["probability"] = {{"engine", prob_engine}, {"oracle", prob_oracle}, {"abs_diff", prob_diff},
                        {"tolerance", tol_prob}};
    if (rho_checked) j["rho_position"] = {{"max_abs_diff", rho_diff}, {"tolerance", tol_rho}};
    j["wigner"] = {{"max_abs_diff", wig_diff},
                   {"peak", wig_peak},
                   {"tolerance_relative", tol_wig_rel}};
    j["oracle"] = {{"n_max", n_used}, {"top_occupancy", top_occ}};
    j["grid"] = grid_json(u, v, d);
    j["pass"] = pass;
    emit(opt, stem, j);
    std::cout << (pass ? "PASS" : "FAIL") << " max wigner diff " << wig_diff << " (peak "
              << wig_peak << "), probability diff " << prob_diff << "\n";
    return pass ? 0 : 4;
}

int mode_negativity_scan(const CliOptions& opt, const io::RunConfig& cfg, const DerivedParams& d) {
    if (cfg.initial_type == "thermal" && !(cfg.a0 == 0 && cfg.b0 == 0))
        throw std::invalid_argument("negativity-scan requires a coherent initial state");
    ScaledParams sp = ScaledParams::from(d);
    auto pts = negativity_scan(sp, cfg.a0, cfg.b0, cfg.scan.outcome, cfg.scan.tmin_pi,
                               cfg.scan.tmax_pi, cfg.scan.step_pi, cfg.scan.ngrid);

    std::string csv = "t_over_pi,min_w,probability\n";
    json rows = json::array();
    double first_neg = -1, last_neg = -1;
    for (const auto& pt : pts) {
        csv += io::g17(pt.t_over_pi) + ',' + io::g17(pt.min_w) + ',' + io::g17(pt.prob) + '\n';
        rows.push_back({{"t_over_pi", pt.t_over_pi},
                        {"min_w", pt.min_w},
                        {"probability", pt.prob},
                        {"negative", pt.negative()}});
        if (pt.negative()) {
            if (first_neg < 0) first_neg = pt.t_over_pi;
            last_neg = pt.t_over_pi;
        }
    }

    std::string stem =
        "negativity-scan_" + io::outcome_token(cfg.scan.outcome) + "_" + io::hash_hex(cfg.raw);
    io::write_text_file(out_path(opt, stem, ".csv"), csv);
    json j = io::summary_base("negativity-scan", cfg, d, opt.deterministic);
    j["initial"] = {{"type", "coherent"}, {"a0", cfg.a0}, {"b0", cfg.b0}};
    j["scan"] = {{"outcome", io::outcome_token(cfg.scan.outcome)},
                 {"tmin_pi", cfg.scan.tmin_pi},
                 {"tmax_pi", cfg.scan.tmax_pi},
                 {"step_pi", cfg.scan.step_pi},
                 {"ngrid", cfg.scan.ngrid}};
    j["points"] = rows;
    j["negative_window"] =
        first_neg < 0 ? json(nullptr)
                      : json{{"first_t_over_pi", first_neg}, {"last_t_over_pi", last_neg}};
    j["files"] = {{"scan_csv", stem + ".csv"}};
    emit(opt, stem, j);
    return 0;
}

int run(const CliOptions& opt) {
    io::RunConfig cfg = io::load_config(opt.config_path);
    apply_cli_overrides(cfg, opt);
    fs::create_directories(opt.out_dir);
    PhysicalConstants c;
    DerivedParams d = io::effective_derived(c, cfg);

    if (opt.mode == "derive") return mode_derive(opt, cfg, d);
    if (opt.mode == "thermal-run") return mode_thermal_run(opt, cfg, d);
    if (opt.mode == "coherent-run") return mode_coherent_run(opt, cfg, d);
    if (opt.mode == "sweep") return mode_sweep(opt, cfg, d);
    if (opt.mode == "oracle-compare") return mode_oracle_compare(opt, cfg, d);
    if (opt.mode == "negativity-scan") return mode_negativity_scan(opt, cfg, d);
    throw std::invalid_argument("unknown mode: " + opt.mode);
}

}  // namespace

int main(int argc, char** argv) {
    CliOptions opt;
    CLI::App app{"spin-1 condensate / membrane measurement-backaction simulator"};
    app.add_option("--config", opt.config_path, "JSON configuration file")->required();
    app.add_option("--mode", opt.mode, "derive | thermal-run | coherent-run | sweep | oracle-compare | negativity-scan")
        ->required()
        ->check(CLI::IsMember({"derive", "thermal-run", "coherent-run", "sweep", "oracle-compare",
                               "negativity-scan"}));
    app.add_option("--out", opt.out_dir, "output directory (default .)");
    app.add_option("--grid", opt.grid_arg, "grid override NX,NP");
    app.add_option("--sweep", opt.sweep_arg, "comma-separated backaction multipliers");
    app.add_flag("--deterministic", opt.deterministic,
                 "record the deterministic-reduction guarantee in summaries");
    app.add_flag("--dump-functionals", opt.dump_functionals,
                 "also write per-path functionals as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        return run(opt);
    } catch (const oracle::TruncationError& e) {
        std::cerr << "oracle failure: " << e.what() << "\n";
        return 4;
    } catch (const std::length_error& e) {
        std::cerr << "cap exceeded: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
