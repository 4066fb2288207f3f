#include "bnm/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

namespace bnm {

namespace {

struct Entry {
    std::string value;
    std::size_t line = 0;
};

using Section = std::map<std::string, Entry>;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"scenario",
         {"kind", "n_labeled", "n_unlabeled", "n_classes", "n_known", "priors", "shift_x", "shift_y",
          "shift_deg", "cluster_std"}},
        {"model", {"hidden", "prototypes", "head_scale"}},
        {"train",
         {"objective", "lambda", "b_labeled", "b_unlabeled", "lr", "steps", "eval_every", "seed",
          "rank_tol", "eval_batches"}},
        {"compare", {"methods", "seeds"}},
    };
    return keys;
}

class Reader {
public:
    Reader(std::map<std::string, Section> sections, std::string source)
        : sections_(std::move(sections)), source_(std::move(source)) {}

    const Entry* find(const std::string& section, const std::string& key) const {
        const auto s = sections_.find(section);
        if (s == sections_.end()) return nullptr;
        const auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }

    [[noreturn]] void fail(const std::string& section, const std::string& key, const Entry* e,
                           const std::string& why) const {
        std::string where = source_;
        if (e) where += ":" + std::to_string(e->line);
        throw ConfigError(where + ": field '" + section + "." + key + "': " + why);
    }

    std::optional<std::string> text(const std::string& section, const std::string& key) const {
        const Entry* e = find(section, key);
        if (!e) return std::nullopt;
        return e->value;
    }

    std::string required(const std::string& section, const std::string& key) const {
        const Entry* e = find(section, key);
        if (!e) {
            throw ConfigError(source_ + ": missing required field '" + section + "." + key + "'");
        }
        return e->value;
    }

    template <typename T>
    void read_unsigned(const std::string& section, const std::string& key, T& out) const {
        const Entry* e = find(section, key);
        if (!e) return;
        std::uint64_t v = 0;
        const auto& s = e->value;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
            fail(section, key, e, "expected a non-negative integer, got '" + s + "'");
        }
        out = static_cast<T>(v);
    }

    void read_real(const std::string& section, const std::string& key, double& out) const {
        const Entry* e = find(section, key);
        if (!e) return;
        out = parse_real(section, key, e, e->value);
    }

    double parse_real(const std::string& section, const std::string& key, const Entry* e,
                      const std::string& s) const {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
            fail(section, key, e, "expected a real number, got '" + s + "'");
        }
        return v;
    }

    std::vector<std::string> list(const std::string& section, const std::string& key) const {
        std::vector<std::string> out;
        const Entry* e = find(section, key);
        if (!e) return out;
        std::size_t pos = 0;
        const std::string& s = e->value;
        while (pos <= s.size()) {
            const auto comma = std::min(s.find(',', pos), s.size());
            std::string item = trim(s.substr(pos, comma - pos));
            if (item.empty()) fail(section, key, e, "empty list item");
            out.push_back(std::move(item));
            pos = comma + 1;
        }
        return out;
    }

    const Entry* entry(const std::string& section, const std::string& key) const {
        return find(section, key);
    }

private:
    std::map<std::string, Section> sections_;
    std::string source_;
};

std::map<std::string, Section> parse_sections(std::istream& is, const std::string& source) {
    std::map<std::string, Section> sections;
    std::string current;
    std::string raw;
    std::size_t lineno = 0;
    const auto fail = [&](const std::string& why) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": " + why);
    };
    while (std::getline(is, raw)) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("unterminated section header");
            current = trim(line.substr(1, line.size() - 2));
            if (!known_keys().count(current)) fail("unknown section '" + current + "'");
            if (sections.count(current)) fail("duplicate section '" + current + "'");
            sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected 'key = value'");
        if (current.empty()) fail("key outside of any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail("empty key");
        if (!known_keys().at(current).count(key)) {
            fail("unknown field '" + current + "." + key + "'");
        }
        if (sections[current].count(key)) fail("duplicate field '" + current + "." + key + "'");
        sections[current][key] = {value, lineno};
    }
    return sections;
}

} // namespace

MethodSpec parse_method(const std::string& token, const TrainConfig& base) {
    MethodSpec m{token, base};
    const auto at = token.find('@');
    const std::string name = token.substr(0, at);
    const auto kind = parse_objective(name);
    if (!kind) throw ConfigError("unknown objective '" + name + "' in method '" + token + "'");
    m.config.objective = *kind;
    if (at != std::string::npos) {
        const std::string lam = token.substr(at + 1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(lam.data(), lam.data() + lam.size(), v);
        if (ec != std::errc{} || ptr != lam.data() + lam.size() || lam.empty() || !(v >= 0.0)) {
            throw ConfigError("bad lambda '" + lam + "' in method '" + token + "'");
        }
        m.config.lambda = v;
    }
    return m;
}

RunConfig parse_config(std::istream& is, ConfigPurpose purpose, const std::string& source) {
    const Reader r(parse_sections(is, source), source);
    RunConfig cfg;

    const std::string kind_name = r.required("scenario", "kind");
    const auto kind = parse_scenario_kind(kind_name);
    if (!kind) r.fail("scenario", "kind", r.entry("scenario", "kind"), "unknown kind '" + kind_name + "'");
    ScenarioSpec& sc = cfg.setup.scenario;
    sc = ScenarioSpec::defaults(*kind);
    r.read_unsigned("scenario", "n_labeled", sc.n_labeled);
    r.read_unsigned("scenario", "n_unlabeled", sc.n_unlabeled);
    r.read_unsigned("scenario", "n_classes", sc.n_classes);
    if (r.entry("scenario", "n_known")) {
        r.read_unsigned("scenario", "n_known", sc.n_known);
    } else if (*kind != ScenarioKind::OpenSet) {
        sc.n_known = sc.n_classes;
    }
    if (const Entry* e = r.entry("scenario", "priors")) {
        sc.class_priors.clear();
        for (const auto& item : r.list("scenario", "priors"))
            sc.class_priors.push_back(r.parse_real("scenario", "priors", e, item));
    }
    r.read_real("scenario", "shift_x", sc.shift.dx);
    r.read_real("scenario", "shift_y", sc.shift.dy);
    if (r.entry("scenario", "shift_deg")) {
        double deg = 0.0;
        r.read_real("scenario", "shift_deg", deg);
        sc.shift.angle = deg * std::numbers::pi / 180.0;
    }
    r.read_real("scenario", "cluster_std", sc.cluster_std);
    try {
        sc.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(source + ": [scenario]: " + e.what());
    }

    r.read_unsigned("model", "hidden", cfg.setup.model.hidden);
    r.read_unsigned("model", "prototypes", cfg.setup.model.prototypes);
    r.read_real("model", "head_scale", cfg.setup.model.head_scale);

    TrainConfig& t = cfg.train;
    if (purpose == ConfigPurpose::Train) {
        const std::string obj = r.required("train", "objective");
        const auto k = parse_objective(obj);
        if (!k) r.fail("train", "objective", r.entry("train", "objective"), "unknown objective '" + obj + "'");
        t.objective = *k;
    } else if (const auto obj = r.text("train", "objective")) {
        r.fail("train", "objective", r.entry("train", "objective"),
               "not used by compare; list objectives in [compare] methods");
    }
    r.read_real("train", "lambda", t.lambda);
    r.read_unsigned("train", "b_labeled", t.b_labeled);
    r.read_unsigned("train", "b_unlabeled", t.b_unlabeled);
    r.read_real("train", "lr", t.lr);
    r.read_unsigned("train", "steps", t.steps);
    r.read_unsigned("train", "eval_every", t.eval_every);
    r.read_real("train", "rank_tol", t.rank_tol);
    r.read_unsigned("train", "eval_batches", t.eval_batches);
    if (r.entry("train", "seed")) {
        std::uint64_t seed = 0;
        r.read_unsigned("train", "seed", seed);
        cfg.seed = seed;
    }
    try {
        t.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(source + ": [train]: " + e.what());
    }

    if (purpose == ConfigPurpose::Compare) {
        const auto tokens = r.list("compare", "methods");
        if (tokens.size() < 2) {
            throw ConfigError(source + ": field 'compare.methods' must list at least two methods");
        }
        for (const auto& tok : tokens) {
            try {
                cfg.methods.push_back(parse_method(tok, t));
            } catch (const ConfigError& e) {
                r.fail("compare", "methods", r.entry("compare", "methods"), e.what());
            }
        }
        if (r.entry("compare", "seeds")) {
            std::size_t n = 0;
            r.read_unsigned("compare", "seeds", n);
            if (n == 0) r.fail("compare", "seeds", r.entry("compare", "seeds"), "must be positive");
            cfg.seeds = n;
        }
    } else if (r.entry("compare", "methods") || r.entry("compare", "seeds")) {
        throw ConfigError(source + ": [compare] section is not used by train");
    }
    return cfg;
}

RunConfig load_config(const std::string& path, ConfigPurpose purpose) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    return parse_config(in, purpose, path);
}

} // namespace bnm
