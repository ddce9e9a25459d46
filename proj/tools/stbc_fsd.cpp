// Command-line front end: load or select a code, analyze its R-factor zero
// structure, search symbol orderings, run decoder simulations.
//
// Exit codes: 0 ok, 2 schema/input error, 3 under-determined system,
// 4 ordering-search overflow.

#include "stbc/code.hpp"
#include "stbc/criteria.hpp"
#include "stbc/decoder.hpp"
#include "stbc/structure.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using nlohmann::json;

namespace {

struct RunConfig {
    std::string code = "abba";
    int n_r = 0;  // 0 = n_t
    int trials = 100;
    std::uint64_t seed = 42;
    int q = 4;
    std::string snr = "0:5:20";
    std::string format = "ascii";
    bool predicted = false;
    bool heuristic = false;
    bool oracle_check = false;
    bool unstructured = false;
    std::string out;
};

stbc::StbcCode resolve_code(const std::string& spec) {
    if (spec == "abba" || spec == "silver" || spec == "golden")
        return stbc::builtin_code(spec);
    return stbc::load_code(spec);
}

std::vector<double> parse_snr_grid(const std::string& s) {
    // "a:step:b" or a single value
    std::vector<double> parts;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(std::stod(tok));
    if (parts.size() == 1) return parts;
    if (parts.size() != 3 || parts[1] <= 0)
        throw stbc::SchemaError("--snr expects 'a:step:b' with positive step");
    std::vector<double> grid;
    for (double v = parts[0]; v <= parts[2] + 1e-9; v += parts[1]) grid.push_back(v);
    return grid;
}

void emit(const RunConfig& cfg, const std::string& text) {
    if (cfg.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(cfg.out);
        if (!f) throw std::runtime_error("cannot write '" + cfg.out + "'");
        f << text;
    }
}

std::string config_header(const RunConfig& cfg, const stbc::StbcCode& code, int n_r) {
    std::ostringstream os;
    os << "# code=" << code.name << " nt=" << code.n_t << " T=" << code.T
       << " kappa=" << code.kappa << " nr=" << n_r << " trials=" << cfg.trials
       << " seed=" << cfg.seed << " q=" << cfg.q << "\n";
    return os.str();
}

int cmd_analyze(const RunConfig& cfg) {
    const stbc::StbcCode code = resolve_code(cfg.code);
    const int n_r = cfg.n_r > 0 ? cfg.n_r : code.n_t;
    const stbc::ChannelModel channel{n_r, cfg.seed};

    const stbc::EmpiricalPattern emp = stbc::empirical_pattern(code, channel, cfg.trials);
    const stbc::ZeroPattern predicted = stbc::predicted_pattern_theorem4(code);
    const stbc::ZeroPattern hrqf_claim = stbc::hrqf_predicted_pattern(code);
    stbc::ClassificationReport rep = stbc::classify(code, emp.pattern, channel);
    const stbc::FsdComplexity fc = stbc::fsd_complexity(rep, cfg.q, code.kappa);
    rep.fsd_exponent = fc.exponent;
    rep.hrqf_mismatches = stbc::compare_hrqf(code, emp.pattern);

    const stbc::RMatrix u = stbc::hrqf_matrix(code);

    if (cfg.format == "json") {
        json j;
        j["config"] = {{"code", code.name}, {"nr", n_r},     {"trials", cfg.trials},
                       {"seed", cfg.seed},  {"q", cfg.q},    {"rank_warning", code.rank_warning}};
        j["pair_verdicts"] = stbc::verdicts_json(code);
        json uz = json::array();
        for (int i = 0; i < u.rows(); ++i)
            for (int jj = i + 1; jj < u.cols(); ++jj)
                if (stbc::hr_mutual_orthogonality(code, i, jj)) uz.push_back({i + 1, jj + 1});
        j["hrqf_zeros"] = std::move(uz);
        j["hrqf_matrix"] = json::array();
        for (int i = 0; i < u.rows(); ++i) {
            json row = json::array();
            for (int jj = 0; jj < u.cols(); ++jj) row.push_back(u(i, jj));
            j["hrqf_matrix"].push_back(std::move(row));
        }
        j["predicted_pattern"] = predicted.to_json();
        j["hrqf_pattern"] = hrqf_claim.to_json();
        j["empirical_pattern"] = emp.pattern.to_json();
        json stats;
        stats["mean_fro"] = emp.mean_fro;
        stats["redraws"] = emp.redraws;
        json mx = json::array();
        for (int i = 0; i < emp.max_abs.rows(); ++i) {
            json row = json::array();
            for (int jj = 0; jj < emp.max_abs.cols(); ++jj) row.push_back(emp.max_abs(i, jj));
            mx.push_back(std::move(row));
        }
        stats["max_abs"] = std::move(mx);
        j["empirical_stats"] = std::move(stats);
        j["report"] = stbc::report_to_json(rep);
        j["report"]["fsd_count"] = fc.count;
        j["report"]["exhaustive_exponent"] = fc.exhaustive_exponent;
        emit(cfg, j.dump(2) + "\n");
        return 0;
    }

    std::ostringstream os;
    os << config_header(cfg, code, n_r);
    if (code.rank_warning)
        os << "warning: generator matrix is numerically rank deficient\n";
    os << "pairwise conditions (B=c1&c2, 1=c1 only, 2=c2 only, .=neither):\n"
       << stbc::verdict_table_ascii(code);
    os << "HRQF zero pairs (U_ij = 0): ";
    bool first = true;
    for (int i = 0; i < code.num_real_symbols(); ++i)
        for (int jj = i + 1; jj < code.num_real_symbols(); ++jj)
            if (stbc::hr_mutual_orthogonality(code, i, jj)) {
                os << (first ? "" : " ") << "(" << i + 1 << "," << jj + 1 << ")";
                first = false;
            }
    os << (first ? "none" : "") << "\n";
    os << "predicted pattern (column-orthogonality propagation):\n" << predicted.ascii();
    os << "HRQF-claimed pattern:\n" << hrqf_claim.ascii();
    os << "empirical pattern (" << cfg.trials << " trials):\n" << emp.pattern.ascii();
    os << "classification: " << stbc::family_name(rep.family)
       << " g=" << rep.witness.groups() << " partition " << rep.witness.describe() << "\n";
    if (rep.fast)
        os << "fast structure: L=" << rep.fast->L << " groups " << rep.fast->groups.describe()
           << "\n";
    if (rep.bo_params)
        os << "block-orthogonal parameters: (" << rep.bo_params->Gamma << ","
           << rep.bo_params->k << "," << rep.bo_params->gamma << ")\n";
    os << "fsd complexity: exponent " << fc.exponent << " (count " << fc.count
       << ", exhaustive exponent " << fc.exhaustive_exponent << ")\n";
    if (rep.hrqf_mismatches.empty()) {
        os << "hrqf mismatches: none\n";
    } else {
        os << "hrqf mismatches:\n";
        for (const auto& m : rep.hrqf_mismatches)
            os << "  (" << m.i << "," << m.j << ") "
               << (m.direction == stbc::MismatchDirection::hrqf_unsound
                       ? "hrqf_unsound (HRQF zero, measured generic)"
                       : "hrqf_incomplete (measured zero missed by HRQF)")
               << "\n";
    }
    emit(cfg, os.str());
    return 0;
}

int cmd_pattern(const RunConfig& cfg) {
    const stbc::StbcCode code = resolve_code(cfg.code);
    const int n_r = cfg.n_r > 0 ? cfg.n_r : code.n_t;
    const stbc::ChannelModel channel{n_r, cfg.seed};
    const stbc::EmpiricalPattern emp = stbc::empirical_pattern(code, channel, cfg.trials);

    if (cfg.format == "json") {
        json j;
        j["config"] = {{"code", code.name}, {"nr", n_r}, {"trials", cfg.trials}, {"seed", cfg.seed}};
        json pat = emp.pattern.to_json();
        json mx = json::array();
        for (int i = 0; i < emp.max_abs.rows(); ++i) {
            json row = json::array();
            for (int jj = 0; jj < emp.max_abs.cols(); ++jj) row.push_back(emp.max_abs(i, jj));
            mx.push_back(std::move(row));
        }
        pat["stats"] = {{"max_abs", std::move(mx)},
                        {"mean_fro", emp.mean_fro},
                        {"trials", emp.trials},
                        {"redraws", emp.redraws}};
        j["empirical_pattern"] = std::move(pat);
        if (cfg.predicted) {
            j["predicted_pattern"] = stbc::predicted_pattern_theorem4(code).to_json();
            j["hrqf_pattern"] = stbc::hrqf_predicted_pattern(code).to_json();
        }
        emit(cfg, j.dump(2) + "\n");
        return 0;
    }

    std::ostringstream os;
    os << config_header(cfg, code, n_r);
    os << "empirical pattern:\n" << emp.pattern.ascii();
    if (cfg.predicted) {
        const stbc::ZeroPattern pred = stbc::predicted_pattern_theorem4(code);
        const stbc::ZeroPattern hq = stbc::hrqf_predicted_pattern(code);
        os << "predicted pattern (column-orthogonality propagation):\n" << pred.ascii();
        os << "HRQF-claimed pattern:\n" << hq.ascii();
        const auto mm = stbc::compare_hrqf(code, emp.pattern);
        int missed = 0, unsound = 0;
        for (const auto& m : mm)
            (m.direction == stbc::MismatchDirection::hrqf_incomplete ? missed : unsound)++;
        os << "diff: empirical zeros " << emp.pattern.zero_count() << ", predicted "
           << pred.zero_count() << ", hrqf " << hq.zero_count() << "; hrqf missed " << missed
           << ", hrqf unsound " << unsound << "\n";
    }
    emit(cfg, os.str());
    return 0;
}

int cmd_order_search(const RunConfig& cfg) {
    const stbc::StbcCode code = resolve_code(cfg.code);
    const int n_r = cfg.n_r > 0 ? cfg.n_r : code.n_t;
    const stbc::ChannelModel channel{n_r, cfg.seed};
    const stbc::OrderingSearchResult res =
        stbc::ordering_search(code, channel, cfg.q, cfg.heuristic);

    if (cfg.format == "json") {
        json j;
        j["config"] = {{"code", code.name},  {"nr", n_r},          {"seed", cfg.seed},
                       {"q", cfg.q},         {"heuristic", cfg.heuristic}};
        json perm = json::array();
        for (int p : res.ordering.perm) perm.push_back(p + 1);
        j["ordering"] = std::move(perm);
        j["exponent_before"] = res.exponent_before;
        j["exponent_after"] = res.exponent_after;
        j["objective_trace"] = res.objective_trace;
        j["orderings_evaluated"] = res.orderings_evaluated;
        j["report"] = stbc::report_to_json(res.report);
        emit(cfg, j.dump(2) + "\n");
        return 0;
    }

    std::ostringstream os;
    os << config_header(cfg, code, n_r);
    os << "best ordering (1-based slots of the original code):";
    for (int p : res.ordering.perm) os << " " << p + 1;
    os << "\n";
    os << "complexity exponent: before " << res.exponent_before << ", after "
       << res.exponent_after << "\n";
    os << "orderings evaluated: " << res.orderings_evaluated << "\n";
    os << "objective trace (best-so-far count):";
    for (double v : res.objective_trace) os << " " << v;
    os << "\n";
    os << "classification after reordering: " << stbc::family_name(res.report.family)
       << " partition " << res.report.witness.describe() << "\n";
    os << "resulting pattern:\n" << res.pattern_after.ascii();
    emit(cfg, os.str());
    return 0;
}

int cmd_decode_sim(const RunConfig& cfg) {
    const stbc::StbcCode code = resolve_code(cfg.code);
    const std::vector<double> grid = parse_snr_grid(cfg.snr);

    stbc::MonteCarloConfig mc;
    mc.trials = cfg.trials;
    mc.seed = cfg.seed;
    mc.n_r = cfg.n_r;
    mc.structured = !cfg.unstructured;
    if (cfg.oracle_check) {
        if (static_cast<long>(cfg.q) * code.kappa > 20) {
            std::cerr << "warning: codebook exceeds the oracle guard, skipping --oracle-check\n";
        } else {
            mc.oracle_check_every = 1;
        }
    }

    const stbc::Constellation cons = stbc::Constellation::qam(cfg.q);
    const auto rows = stbc::monte_carlo(code, cons, grid, mc);

    const bool csv = !cfg.out.empty() && cfg.out.size() > 4 &&
                     cfg.out.substr(cfg.out.size() - 4) == ".csv";
    std::ostringstream os;
    if (cfg.format == "json" && !csv) {
        json arr = json::array();
        for (const auto& r : rows) {
            json row = {{"snr_db", r.snr_db},          {"ber", r.ber},
                        {"ser", r.ser},                {"mean_nodes", r.mean_nodes},
                        {"p95_nodes", r.p95_nodes},    {"trials", r.trials}};
            if (mc.oracle_check_every > 0) {
                row["oracle_checked"] = r.oracle_checked;
                row["oracle_agree"] = r.oracle_agree;
            }
            arr.push_back(std::move(row));
        }
        emit(cfg, arr.dump(2) + "\n");
    } else {
        const char sep = csv ? ',' : ' ';
        if (csv)
            os << "snr_db,ber,ser,mean_nodes,p95_nodes,trials\n";
        else
            os << config_header(cfg, code, cfg.n_r > 0 ? cfg.n_r : code.n_t)
               << "snr_db ber ser mean_nodes p95_nodes trials\n";
        for (const auto& r : rows)
            os << r.snr_db << sep << r.ber << sep << r.ser << sep << r.mean_nodes << sep
               << r.p95_nodes << sep << r.trials << "\n";
        if (mc.oracle_check_every > 0) {
            long checked = 0, agree = 0;
            for (const auto& r : rows) {
                checked += r.oracle_checked;
                agree += r.oracle_agree;
            }
            os << "# oracle agreement: " << agree << "/" << checked << " ("
               << (checked ? 100.0 * agree / checked : 0.0) << "%)\n";
        }
        emit(cfg, os.str());
    }
    if (mc.oracle_check_every > 0) {
        long checked = 0, agree = 0;
        for (const auto& r : rows) {
            checked += r.oracle_checked;
            agree += r.oracle_agree;
        }
        if (agree != checked) {
            std::cerr << "error: sphere decoder disagreed with the ML oracle\n";
            return 1;
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"linear STBC fast-sphere-decoding structure analyzer"};
    app.require_subcommand(1);

    RunConfig cfg;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--code", cfg.code, "built-in name (abba|silver|golden) or JSON path");
        sub->add_option("--nr", cfg.n_r, "receive antennas (default n_t)")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--trials", cfg.trials, "channel draws")->check(CLI::PositiveNumber);
        sub->add_option("--seed", cfg.seed, "RNG seed");
        sub->add_option("--q", cfg.q, "bits per complex symbol (even)");
        sub->add_option("--format", cfg.format, "ascii|json")
            ->check(CLI::IsMember({"ascii", "json"}));
        sub->add_option("--out", cfg.out, "write output to file");
    };

    CLI::App* analyze = app.add_subcommand("analyze", "full structure report");
    add_common(analyze);

    CLI::App* pattern = app.add_subcommand("pattern", "empirical zero pattern");
    add_common(pattern);
    pattern->add_flag("--predicted", cfg.predicted, "also show predicted and HRQF masks");

    CLI::App* order = app.add_subcommand("order-search", "search symbol orderings");
    add_common(order);
    order->add_flag("--heuristic", cfg.heuristic, "greedy search for large codes");

    CLI::App* sim = app.add_subcommand("decode-sim", "Monte Carlo decoder simulation");
    add_common(sim);
    sim->add_option("--snr", cfg.snr, "SNR grid a:step:b in dB");
    sim->add_flag("--oracle-check", cfg.oracle_check, "cross-validate against the ML oracle");
    sim->add_flag("--unstructured", cfg.unstructured, "disable structure exploitation");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(analyze)) return cmd_analyze(cfg);
        if (app.got_subcommand(pattern)) return cmd_pattern(cfg);
        if (app.got_subcommand(order)) return cmd_order_search(cfg);
        if (app.got_subcommand(sim)) return cmd_decode_sim(cfg);
    } catch (const stbc::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const stbc::UnderDeterminedError& e) {
        std::cerr << "under-determined: " << e.what() << "\n";
        return 3;
    } catch (const stbc::SearchOverflowError& e) {
        std::cerr << "search overflow: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
