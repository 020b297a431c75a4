#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrl/lifelong.hpp"

namespace lrl {

namespace detail {

inline std::string csv_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline void write_returns_csv(const RunRecord& rec, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "repeat,agent,task_idx,task_id,episode,return,relative_return\n";
    for (const EpisodeRow& r : rec.rows)
        out << r.repeat << ',' << rec.agent_names[r.agent] << ',' << r.task_idx << ','
            << r.task_id << ',' << r.episode << ',' << detail::csv_double(r.ret) << ','
            << detail::csv_double(r.rel_ret) << '\n';
}

/// One row per Lipschitz-variant agent, measured against the baseline.
inline void write_diagnostics_csv(const RunRecord& rec, const std::string& baseline,
                                  const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "agent,d_prior,rho_lip,rho_speedup,rho_return\n";
    for (int i = 0; i < rec.n_agents; ++i) {
        if (!uses_lipschitz(rec.agent_configs[i].variant)) continue;
        const Diagnostics d = diagnostics(rec, rec.agent_names[i], baseline);
        const auto& prior = rec.agent_configs[i].distance.d_prior;
        out << rec.agent_names[i] << ',' << (prior ? detail::csv_double(*prior) : "inf") << ','
            << detail::csv_double(d.rho_lip) << ',' << detail::csv_double(d.rho_speedup) << ','
            << detail::csv_double(d.rho_return) << '\n';
    }
}

inline void write_prior_use_csv(const RunRecord& rec, const std::string& baseline,
                                const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "agent,update_event,fraction\n";
    for (int i = 0; i < rec.n_agents; ++i) {
        if (!uses_lipschitz(rec.agent_configs[i].variant)) continue;
        if (!rec.agent_configs[i].distance.d_prior) continue;
        const Diagnostics d = diagnostics(rec, rec.agent_names[i], baseline);
        for (size_t e = 0; e < d.prior_use_curve.size(); ++e)
            out << rec.agent_names[i] << ',' << e << ','
                << detail::csv_double(d.prior_use_curve[e]) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Reading, for the plot command.

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw std::runtime_error("csv: missing column '" + name + "'");
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (line.back() == ',') fields.push_back("");
        if (first) {
            table.header = std::move(fields);
            first = false;
        } else {
            table.rows.push_back(std::move(fields));
        }
    }
    if (first) throw std::runtime_error("csv: empty file " + path);
    return table;
}

}  // namespace lrl
