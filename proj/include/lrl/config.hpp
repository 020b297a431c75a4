#pragma once

#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrl/lifelong.hpp"

namespace lrl {

/// Configuration problem with enough context for a useful message.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& msg, int line = 0, const std::string& field = "")
        : std::runtime_error(format(msg, line, field)), line_(line), field_(field) {}
    int line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    static std::string format(const std::string& msg, int line, const std::string& field) {
        std::string out = "config error";
        if (line > 0) out += " (line " + std::to_string(line) + ")";
        if (!field.empty()) out += " [" + field + "]";
        return out + ": " + msg;
    }
    int line_ = 0;
    std::string field_;
};

namespace detail {

struct KeyValue {
    std::string value;
    int line = 0;
    bool used = false;
};

struct Section {
    std::string name;  // empty for the global section
    int line = 0;
    std::map<std::string, KeyValue> entries;
};

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline std::vector<Section> parse_sections(const std::string& text) {
    std::vector<Section> sections(1);
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const size_t comment = raw.find_first_of("#;");
        std::string line = trim(comment == std::string::npos ? raw : raw.substr(0, comment));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
            Section sec;
            sec.name = trim(line.substr(1, line.size() - 2));
            sec.line = line_no;
            sections.push_back(std::move(sec));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line_no);
        auto [it, inserted] = sections.back().entries.insert({key, {value, line_no, false}});
        if (!inserted) throw ConfigError("duplicate key '" + key + "'", line_no, key);
    }
    return sections;
}

inline double parse_double(const KeyValue& kv, const std::string& field) {
    if (kv.value == "inf" || kv.value == "+inf")
        return std::numeric_limits<double>::infinity();
    try {
        size_t pos = 0;
        const double v = std::stod(kv.value, &pos);
        if (pos != kv.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("expected a number, got '" + kv.value + "'", kv.line, field);
    }
}

inline long parse_int(const KeyValue& kv, const std::string& field) {
    try {
        size_t pos = 0;
        const long v = std::stol(kv.value, &pos);
        if (pos != kv.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("expected an integer, got '" + kv.value + "'", kv.line, field);
    }
}

inline bool parse_bool(const KeyValue& kv, const std::string& field) {
    if (kv.value == "true" || kv.value == "1" || kv.value == "yes") return true;
    if (kv.value == "false" || kv.value == "0" || kv.value == "no") return false;
    throw ConfigError("expected a boolean, got '" + kv.value + "'", kv.line, field);
}

class SectionReader {
public:
    SectionReader(Section& sec, const std::string& scope) : sec_(sec), scope_(scope) {}

    const KeyValue* find(const std::string& key) {
        auto it = sec_.entries.find(key);
        if (it == sec_.entries.end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }
    std::string get_string(const std::string& key, const std::string& fallback) {
        const KeyValue* kv = find(key);
        return kv ? kv->value : fallback;
    }
    double get_double(const std::string& key, double fallback) {
        const KeyValue* kv = find(key);
        return kv ? parse_double(*kv, scope_ + key) : fallback;
    }
    long get_int(const std::string& key, long fallback) {
        const KeyValue* kv = find(key);
        return kv ? parse_int(*kv, scope_ + key) : fallback;
    }
    bool get_bool(const std::string& key, bool fallback) {
        const KeyValue* kv = find(key);
        return kv ? parse_bool(*kv, scope_ + key) : fallback;
    }

    void reject_unused() const {
        for (const auto& [key, kv] : sec_.entries)
            if (!kv.used) throw ConfigError("unknown key '" + key + "'", kv.line, scope_ + key);
    }

private:
    Section& sec_;
    std::string scope_;
};

inline Family parse_family(const std::string& name, int line) {
    if (name == "tight") return Family::tight;
    if (name == "corridor") return Family::corridor;
    if (name == "maze") return Family::maze;
    if (name == "heatmap") return Family::heatmap;
    throw ConfigError("unknown family '" + name + "'", line, "family");
}

inline Variant parse_variant(const std::string& name, int line) {
    if (name == "rmax") return Variant::rmax;
    if (name == "lrmax") return Variant::lrmax;
    if (name == "maxqinit") return Variant::maxqinit;
    if (name == "lrmaxqinit") return Variant::lrmaxqinit;
    throw ConfigError("unknown variant '" + name + "'", line, "variant");
}

}  // namespace detail

// Defaults: n_known = 10, delta = 0.05, epsilon = 0.01, gamma = 0.9.
inline constexpr double kDefaultGamma = 0.9;
inline constexpr int kDefaultNKnown = 10;
inline constexpr double kDefaultDelta = 0.05;
inline constexpr double kDefaultEpsilon = 0.01;
inline constexpr double kDefaultEpsQ = 1e-3;

/// Parses the experiment description: flat key = value lines for the
/// run, one [agent NAME] section per agent. Throws ConfigError with the
/// offending line and field.
inline LifelongConfig parse_config(const std::string& text) {
    std::vector<detail::Section> sections = detail::parse_sections(text);

    LifelongConfig cfg;
    detail::SectionReader global(sections.front(), "");
    const std::string family_name = global.get_string("family", "tight");
    const detail::KeyValue* family_kv = nullptr;
    {  // recover the line for family diagnostics
        auto it = sections.front().entries.find("family");
        if (it != sections.front().entries.end()) family_kv = &it->second;
    }
    const Family family = detail::parse_family(family_name, family_kv ? family_kv->line : 0);
    cfg.gamma = global.get_double("gamma", kDefaultGamma);
    cfg.seed = static_cast<uint64_t>(global.get_int("seed", 0));
    cfg.n_tasks = static_cast<int>(global.get_int("n_tasks", 15));
    cfg.n_episodes = static_cast<int>(global.get_int("n_episodes", 2000));
    cfg.episode_len = static_cast<int>(global.get_int("episode_len", 10));
    cfg.n_repeats = static_cast<int>(global.get_int("n_repeats", 10));
    cfg.jobs = static_cast<int>(global.get_int("jobs", 1));
    const int finite_support = static_cast<int>(global.get_int("finite_support", 0));
    if (cfg.gamma < 0.0 || cfg.gamma >= 1.0)
        throw ConfigError("gamma must satisfy 0 <= gamma < 1, got " + std::to_string(cfg.gamma),
                          0, "gamma");
    if (finite_support < 0) throw ConfigError("finite_support must be >= 0", 0, "finite_support");
    cfg.distribution = make_distribution(family, cfg.seed, finite_support);
    global.reject_unused();

    for (size_t i = 1; i < sections.size(); ++i) {
        detail::Section& sec = sections[i];
        if (sec.name.rfind("agent", 0) != 0)
            throw ConfigError("unknown section '" + sec.name + "'", sec.line);
        AgentConfig agent;
        agent.name = detail::trim(sec.name.substr(5));
        if (agent.name.empty()) throw ConfigError("agent section needs a name", sec.line);
        const std::string scope = "agent " + agent.name + ".";
        detail::SectionReader reader(sec, scope);
        const detail::KeyValue* variant_kv = reader.find("variant");
        if (!variant_kv)
            throw ConfigError("agent needs a variant", sec.line, scope + "variant");
        agent.variant = detail::parse_variant(variant_kv->value, variant_kv->line);
        agent.gamma = cfg.gamma;
        agent.n_known = static_cast<int>(reader.get_int("n_known", kDefaultNKnown));
        agent.eps_q = reader.get_double("eps_q", kDefaultEpsQ);
        agent.distance.epsilon = reader.get_double("epsilon", kDefaultEpsilon);
        agent.distance.delta = reader.get_double("delta", kDefaultDelta);
        if (const detail::KeyValue* kv = reader.find("d_prior")) {
            const double v = detail::parse_double(*kv, scope + "d_prior");
            if (!std::isinf(v)) agent.distance.d_prior = v;
        }
        if (const detail::KeyValue* kv = reader.find("p_min"))
            agent.distance.p_min = detail::parse_double(*kv, scope + "p_min");
        agent.distance.use_online_dmax = reader.get_bool("use_online_dmax", false);
        agent.distance.cheap_transition_bound = reader.get_bool("cheap_transition_bound", false);
        reader.reject_unused();
        try {
            agent.check();
        } catch (const std::exception& e) {
            throw ConfigError(e.what(), sec.line, "agent " + agent.name);
        }
        cfg.agents.push_back(std::move(agent));
    }

    try {
        cfg.check();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

namespace detail {

inline std::string format_double(double v) {
    if (std::isinf(v)) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// Serializes a resolved config (every default materialized) in the same
/// format parse_config reads.
inline std::string emit_config(const LifelongConfig& cfg) {
    std::ostringstream out;
    out << "# resolved experiment configuration\n";
    out << "family = " << to_string(cfg.distribution.family) << "\n";
    out << "finite_support = " << cfg.distribution.support.size() << "\n";
    out << "gamma = " << detail::format_double(cfg.gamma) << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "n_tasks = " << cfg.n_tasks << "\n";
    out << "n_episodes = " << cfg.n_episodes << "\n";
    out << "episode_len = " << cfg.episode_len << "\n";
    out << "n_repeats = " << cfg.n_repeats << "\n";
    out << "jobs = " << cfg.jobs << "\n";
    for (const AgentConfig& a : cfg.agents) {
        out << "\n[agent " << a.name << "]\n";
        out << "variant = " << to_string(a.variant) << "\n";
        out << "n_known = " << a.n_known << "\n";
        out << "eps_q = " << detail::format_double(a.eps_q) << "\n";
        out << "epsilon = " << detail::format_double(a.distance.epsilon) << "\n";
        out << "delta = " << detail::format_double(a.distance.delta) << "\n";
        if (a.distance.d_prior)
            out << "d_prior = " << detail::format_double(*a.distance.d_prior) << "\n";
        if (a.distance.p_min)
            out << "p_min = " << detail::format_double(*a.distance.p_min) << "\n";
        out << "use_online_dmax = " << (a.distance.use_online_dmax ? "true" : "false") << "\n";
        out << "cheap_transition_bound = "
            << (a.distance.cheap_transition_bound ? "true" : "false") << "\n";
    }
    return out.str();
}

}  // namespace lrl
