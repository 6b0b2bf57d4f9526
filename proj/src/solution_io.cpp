#include "qaoi/solution_io.hpp"

#include <fstream>

#include "qaoi/error.hpp"

namespace qaoi {

using nlohmann::json;

namespace {

constexpr int kVersion = 1;

json grids_json(const GridSets& g) {
    return {{"q_horizon", g.q_horizon}, {"wait_cap", g.wait_cap}, {"n_intervals", g.n_intervals},
            {"step", g.step()},         {"y_lo", g.y_lo},         {"y_hi", g.y_hi},
            {"z_max", g.z_max}};
}

void check_header(const json& doc, std::string_view format) {
    if (!doc.is_object() || doc.value("format", "") != format)
        throw ConfigError("not a " + std::string(format) + " document");
    if (doc.value("version", 0) != kVersion)
        throw ConfigError("unsupported " + std::string(format) + " version " + doc.value("version", json(0)).dump());
}

}  // namespace

json to_json(const SolverSolution& sol) {
    const auto ny = sol.ny();
    json gd = json::array(), dec = json::array(), tail = json::array();
    for (std::int64_t a = 0; a <= sol.n(); ++a) {
        auto first = sol.gd_table.begin() + a * ny;
        gd.push_back(std::vector<double>(first, first + ny));
        auto dfirst = sol.decision.begin() + a * ny;
        dec.push_back(std::vector<std::int32_t>(dfirst, dfirst + ny));
    }
    for (std::int64_t a = sol.grids.y_hi; a <= sol.n(); ++a) tail.push_back(sol.gr_tail(a));
    return {
        {"format", "qaoi-solution"},
        {"version", kVersion},
        {"direction", std::string(direction_name(sol.direction))},
        {"delay", sol.delay_spec},
        {"penalty", sol.penalty.spec()},
        {"grids", grids_json(sol.grids)},
        {"pmf", sol.pmf},
        {"gd_table", std::move(gd)},
        {"gr_tail_start", sol.grids.y_hi},
        {"gr_tail", std::move(tail)},
        {"decision", std::move(dec)},
        {"border_offset", sol.border_offset()},
        {"border_index", sol.border_index},
        {"anchor_index", sol.anchor_index},
        {"h_one", sol.h_one},
        {"evaluations", sol.evaluations},
        {"metadata",
         {{"effective_step", sol.step()},
          {"far_field", sol.far_field},
          {"zero_atom_promoted", sol.zero_atom_promoted}}},
    };
}

SolverSolution solution_from_json(const json& doc) {
    check_header(doc, "qaoi-solution");
    try {
        SolverSolution sol;
        const auto& g = doc.at("grids");
        sol.grids.q_horizon = g.at("q_horizon").get<double>();
        sol.grids.wait_cap = g.at("wait_cap").get<double>();
        sol.grids.n_intervals = g.at("n_intervals").get<std::int64_t>();
        sol.grids.y_lo = g.at("y_lo").get<std::int64_t>();
        sol.grids.y_hi = g.at("y_hi").get<std::int64_t>();
        sol.grids.z_max = g.at("z_max").get<std::int64_t>();
        sol.direction = doc.at("direction").get<std::string>() == "lower" ? QuantDirection::Lower : QuantDirection::Upper;
        sol.delay_spec = doc.value("delay", "");
        sol.penalty = parse_penalty(doc.at("penalty").get<std::string>());
        sol.pmf = doc.at("pmf").get<std::vector<double>>();

        const std::int64_t ny = sol.ny();
        const std::int64_t n = sol.n();
        if (n < 1 || ny < 1 || static_cast<std::int64_t>(sol.pmf.size()) != ny)
            throw ConfigError("solution grids and pmf disagree");
        const auto& gd = doc.at("gd_table");
        const auto& dec = doc.at("decision");
        if (static_cast<std::int64_t>(gd.size()) != n + 1 || static_cast<std::int64_t>(dec.size()) != n + 1)
            throw ConfigError("solution tables have the wrong number of rows");
        for (std::int64_t a = 0; a <= n; ++a) {
            auto row = gd[a].get<std::vector<double>>();
            auto drow = dec[a].get<std::vector<std::int32_t>>();
            if (static_cast<std::int64_t>(row.size()) != ny || static_cast<std::int64_t>(drow.size()) != ny)
                throw ConfigError("solution table row " + std::to_string(a) + " has the wrong width");
            sol.gd_table.insert(sol.gd_table.end(), row.begin(), row.end());
            sol.decision.insert(sol.decision.end(), drow.begin(), drow.end());
        }
        // Rebuild the delivery sums in the solver's summation order.
        sol.delivery_sum.assign(static_cast<std::size_t>(n + 1), 0.0);
        sol.pending_prob.assign(static_cast<std::size_t>(n + 1), 0.0);
        for (std::int64_t a = 0; a <= n; ++a) {
            double s = 0, p = 0;
            for (std::int64_t j = 0; j < ny; ++j) {
                const std::int64_t y = sol.grids.y_lo + j;
                if (y <= a)
                    s += sol.pmf[j] * sol.gd_table[(a - y) * ny + j];
                else
                    p += sol.pmf[j];
            }
            sol.delivery_sum[a] = s;
            sol.pending_prob[a] = p;
        }
        sol.border_index = doc.at("border_index").get<std::int64_t>();
        sol.anchor_index = doc.at("anchor_index").get<std::int64_t>();
        sol.h_one = doc.at("h_one").get<double>();
        sol.evaluations = doc.value("evaluations", std::int64_t{0});
        const auto& meta = doc.at("metadata");
        sol.far_field = meta.value("far_field", true);
        sol.zero_atom_promoted = meta.value("zero_atom_promoted", false);
        return sol;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed solution document: ") + e.what());
    }
}

json to_json(const RefinedSolution& ref) {
    json hist = json::array();
    for (const auto& h : ref.history)
        hist.push_back({{"n", h.n}, {"step", h.step}, {"lower", h.lower}, {"upper", h.upper}, {"evaluations", h.evaluations}});
    return {
        {"format", "qaoi-refined-solution"},
        {"version", kVersion},
        {"lower_bound", ref.lower_bound},
        {"upper_bound", ref.upper_bound},
        {"n_final", ref.n_final},
        {"tolerance", ref.tolerance},
        {"evaluations", ref.evaluations},
        {"converged", ref.converged},
        {"history", std::move(hist)},
        {"upper_solution", to_json(ref.upper_solution)},
        {"lower_solution", to_json(ref.lower_solution)},
    };
}

RefinedSolution refined_from_json(const json& doc) {
    check_header(doc, "qaoi-refined-solution");
    try {
        RefinedSolution ref;
        ref.lower_bound = doc.at("lower_bound").get<double>();
        ref.upper_bound = doc.at("upper_bound").get<double>();
        ref.n_final = doc.at("n_final").get<std::int64_t>();
        ref.tolerance = doc.at("tolerance").get<double>();
        ref.evaluations = doc.at("evaluations").get<std::int64_t>();
        ref.converged = doc.at("converged").get<bool>();
        for (const auto& h : doc.at("history"))
            ref.history.push_back({h.at("n").get<std::int64_t>(), h.at("step").get<double>(), h.at("lower").get<double>(),
                                   h.at("upper").get<double>(), h.at("evaluations").get<std::int64_t>()});
        ref.upper_solution = solution_from_json(doc.at("upper_solution"));
        ref.lower_solution = solution_from_json(doc.at("lower_solution"));
        return ref;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed refined solution document: ") + e.what());
    }
}

void write_json(const std::string& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << doc.dump(1) << '\n';
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

SolverSolution load_policy_solution(const std::string& path) {
    json doc = read_json(path);
    if (doc.value("format", "") == "qaoi-refined-solution") return refined_from_json(doc).upper_solution;
    return solution_from_json(doc);
}

}  // namespace qaoi
