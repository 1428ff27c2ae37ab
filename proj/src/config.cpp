#include "levyhedge/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "levyhedge/errors.hpp"

namespace levyhedge {

namespace {

struct SectionSchema {
    std::set<std::string> keys;
    std::set<std::string> repeatable;
};

const std::map<std::string, SectionSchema>& schema() {
    static const std::map<std::string, SectionSchema> s{
        {"levy", {{"atom"}, {"atom"}}},
        {"market", {{"phi", "alpha", "horizon", "log_price0"}, {}}},
        {"spread", {{"b", "B", "Sigma", "gamma_Xi", "xi0"}, {}}},
        {"claim", {{"type", "coeff", "offset", "a", "w", "v"}, {}}},
        {"generator", {{"c_y", "c_z", "c_u", "c"}, {}}},
        {"constraint", {{"lower", "upper"}, {}}},
        {"mc",
         {{"n_paths", "n_steps", "seed", "threads", "checkpoints", "perturbations", "x0",
           "save_paths"},
          {}}},
        {"solver", {{"grid_nodes", "grad_tol", "width_tol", "max_iter"}, {}}},
        {"output", {{"dir"}, {}}},
    };
    return s;
}

class LineParser {
public:
    LineParser(std::string_view text, int line) : s_(text), line_(line) {}

    ConfigValue value() {
        skip_ws();
        if (eof()) fail("missing value");
        const char c = s_[pos_];
        if (c == '"') return string_value();
        if (c == '[') return array_value();
        if (c == '{') return table_value();
        return scalar_value();
    }

    void expect_end() {
        skip_ws();
        if (!eof()) fail("unexpected text '" + std::string(s_.substr(pos_)) + "'");
    }

    std::string key() {
        skip_ws();
        const std::size_t start = pos_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
                          s_[pos_] == '-'))
            ++pos_;
        if (start == pos_) fail("expected a key");
        return std::string(s_.substr(start, pos_ - start));
    }

    void expect(char c) {
        skip_ws();
        if (eof() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(msg, line_); }

private:
    bool eof() const { return pos_ >= s_.size(); }
    void skip_ws() {
        while (!eof() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }

    ConfigValue make(ConfigValue::Kind k) const {
        ConfigValue v;
        v.kind = k;
        v.line = line_;
        return v;
    }

    ConfigValue string_value() {
        ConfigValue v = make(ConfigValue::Kind::String);
        ++pos_;
        while (true) {
            if (eof()) fail("unterminated string");
            const char c = s_[pos_++];
            if (c == '"') break;
            if (c == '\\') {
                if (eof()) fail("unterminated string");
                const char e = s_[pos_++];
                switch (e) {
                    case 'n': v.text += '\n'; break;
                    case 't': v.text += '\t'; break;
                    case '"': v.text += '"'; break;
                    case '\\': v.text += '\\'; break;
                    default: fail(std::string("unknown escape \\") + e);
                }
            } else {
                v.text += c;
            }
        }
        return v;
    }

    ConfigValue array_value() {
        ConfigValue v = make(ConfigValue::Kind::Array);
        ++pos_;
        skip_ws();
        if (!eof() && s_[pos_] == ']') {
            ++pos_;
            return v;
        }
        while (true) {
            v.items.push_back(value());
            skip_ws();
            if (eof()) fail("unterminated array (arrays must fit on one line)");
            if (s_[pos_] == ',') {
                ++pos_;
                skip_ws();
                if (!eof() && s_[pos_] == ']') {
                    ++pos_;
                    return v;
                }
                continue;
            }
            if (s_[pos_] == ']') {
                ++pos_;
                return v;
            }
            fail("expected ',' or ']' in array");
        }
    }

    ConfigValue table_value() {
        ConfigValue v = make(ConfigValue::Kind::Table);
        ++pos_;
        skip_ws();
        if (!eof() && s_[pos_] == '}') {
            ++pos_;
            return v;
        }
        while (true) {
            std::string k = key();
            if (v.field(k)) fail("duplicate key '" + k + "' in inline table");
            expect('=');
            v.fields.emplace_back(std::move(k), value());
            skip_ws();
            if (eof()) fail("unterminated inline table");
            if (s_[pos_] == ',') {
                ++pos_;
                continue;
            }
            if (s_[pos_] == '}') {
                ++pos_;
                return v;
            }
            fail("expected ',' or '}' in inline table");
        }
    }

    ConfigValue scalar_value() {
        const std::size_t start = pos_;
        while (!eof() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '}' &&
               s_[pos_] != ' ' && s_[pos_] != '\t')
            ++pos_;
        const std::string tok(s_.substr(start, pos_ - start));
        if (tok == "true" || tok == "false") {
            ConfigValue v = make(ConfigValue::Kind::Bool);
            v.boolean = tok == "true";
            return v;
        }
        ConfigValue v = make(ConfigValue::Kind::Number);
        v.text = tok;
        if (tok == "inf" || tok == "+inf") {
            v.number = std::numeric_limits<double>::infinity();
            return v;
        }
        if (tok == "-inf") {
            v.number = -std::numeric_limits<double>::infinity();
            return v;
        }
        const char* first = tok.data();
        if (!tok.empty() && tok[0] == '+') ++first;
        const auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), v.number);
        if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
            fail("invalid value '" + tok + "'");
        return v;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    int line_;
};

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '\\' && in_string) {
            ++i;
            continue;
        }
        if (c == '"') in_string = !in_string;
        if (c == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Typed access with line-numbered errors.

double as_number(const ConfigValue& v, const std::string& what) {
    if (v.kind != ConfigValue::Kind::Number)
        throw ConfigError(what + " must be a number", v.line);
    return v.number;
}

double as_finite(const ConfigValue& v, const std::string& what) {
    const double x = as_number(v, what);
    if (!std::isfinite(x)) throw ConfigError(what + " must be finite", v.line);
    return x;
}

// Numbers, or the strings "inf" / "-inf".
double as_extended(const ConfigValue& v, const std::string& what) {
    if (v.kind == ConfigValue::Kind::String) {
        if (v.text == "inf" || v.text == "+inf") return std::numeric_limits<double>::infinity();
        if (v.text == "-inf") return -std::numeric_limits<double>::infinity();
        throw ConfigError(what + ": expected a number, \"inf\" or \"-inf\"", v.line);
    }
    const double x = as_number(v, what);
    if (std::isnan(x)) throw ConfigError(what + " must not be nan", v.line);
    return x;
}

std::uint64_t as_uint(const ConfigValue& v, const std::string& what) {
    if (v.kind != ConfigValue::Kind::Number)
        throw ConfigError(what + " must be a nonnegative integer", v.line);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
    if (ec != std::errc() || ptr != v.text.data() + v.text.size())
        throw ConfigError(what + " must be a nonnegative integer", v.line);
    return out;
}

std::string as_string(const ConfigValue& v, const std::string& what) {
    if (v.kind != ConfigValue::Kind::String) throw ConfigError(what + " must be a string", v.line);
    return v.text;
}

std::vector<double> as_numbers(const ConfigValue& v, const std::string& what) {
    if (v.kind != ConfigValue::Kind::Array)
        throw ConfigError(what + " must be an array of numbers", v.line);
    std::vector<double> out;
    for (const auto& item : v.items) out.push_back(as_finite(item, what + " entry"));
    return out;
}

Vec2 as_vec2(const ConfigValue& v, const std::string& what) {
    const auto xs = as_numbers(v, what);
    if (xs.size() != 2) throw ConfigError(what + " must have two entries", v.line);
    return {xs[0], xs[1]};
}

TimeFunction as_time_function(const ConfigValue& v, const std::string& what) {
    if (v.kind == ConfigValue::Kind::Number) return TimeFunction(as_finite(v, what));
    if (v.kind != ConfigValue::Kind::Table)
        throw ConfigError(what + " must be a number or {t = [...], v = [...]}", v.line);
    for (const auto& [k, _] : v.fields)
        if (k != "t" && k != "v") throw ConfigError(what + ": unknown key '" + k + "'", v.line);
    const auto* t = v.field("t");
    const auto* vals = v.field("v");
    if (!t || !vals) throw ConfigError(what + ": tabulated form needs both t and v", v.line);
    try {
        return TimeFunction::tabulated(as_numbers(*t, what + ".t"), as_numbers(*vals, what + ".v"));
    } catch (const InvalidArgument& e) {
        throw ConfigError(what + ": " + e.what(), v.line);
    }
}

class SectionReader {
public:
    explicit SectionReader(const ConfigSection* s) : s_(s) {}

    const ConfigValue* get(const std::string& key) const {
        if (!s_) return nullptr;
        const auto* e = s_->find(key);
        return e ? &e->value : nullptr;
    }

    const ConfigValue& need(const std::string& key) const {
        const auto* v = get(key);
        if (!v) throw ConfigError("[" + s_->name + "] is missing '" + key + "'", s_->line);
        return *v;
    }

    std::string name(const std::string& key) const { return s_->name + "." + key; }

    double number(const std::string& key, double fallback) const {
        const auto* v = get(key);
        return v ? as_finite(*v, name(key)) : fallback;
    }

    double number(const std::string& key) const { return as_finite(need(key), name(key)); }

    std::uint64_t uint(const std::string& key, std::uint64_t fallback) const {
        const auto* v = get(key);
        return v ? as_uint(*v, name(key)) : fallback;
    }

private:
    const ConfigSection* s_;
};

}  // namespace

const ConfigValue* ConfigValue::field(const std::string& key) const {
    for (const auto& [k, v] : fields)
        if (k == key) return &v;
    return nullptr;
}

const ConfigEntry* ConfigSection::find(const std::string& key) const {
    for (const auto& e : entries)
        if (e.key == key) return &e;
    return nullptr;
}

ConfigDocument ConfigDocument::parse(const std::string& text) {
    ConfigDocument doc;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    ConfigSection* current = nullptr;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("malformed section header", line_no);
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (!schema().count(name)) throw ConfigError("unknown section [" + name + "]", line_no);
            if (doc.section(name)) throw ConfigError("duplicate section [" + name + "]", line_no);
            doc.sections_.push_back({name, line_no, {}});
            current = &doc.sections_.back();
            continue;
        }
        LineParser p(line, line_no);
        std::string key = p.key();
        p.expect('=');
        ConfigValue value = p.value();
        p.expect_end();
        if (!current) throw ConfigError("key '" + key + "' appears before any [section]", line_no);
        const auto& sch = schema().at(current->name);
        if (!sch.keys.count(key))
            throw ConfigError("unknown key '" + key + "' in [" + current->name + "]", line_no);
        if (current->find(key) && !sch.repeatable.count(key))
            throw ConfigError("duplicate key '" + key + "' in [" + current->name + "]", line_no);
        current->entries.push_back({std::move(key), std::move(value), line_no});
    }
    return doc;
}

ConfigDocument ConfigDocument::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const ConfigSection* ConfigDocument::section(const std::string& name) const {
    for (const auto& s : sections_)
        if (s.name == name) return &s;
    return nullptr;
}

bool RunConfig::has(const std::string& section) const {
    return std::find(present.begin(), present.end(), section) != present.end();
}

void RunConfig::require(const std::string& section) const {
    if (!has(section)) throw ConfigError("missing [" + section + "] section");
}

const MarketModel& RunConfig::require_market() const {
    require("levy");
    require("market");
    return *market;
}

AffineForward RunConfig::forward() const {
    const auto& m = require_market();
    require("spread");
    return AffineForward::from_market(m, *spread, r0);
}

std::vector<double> default_perturbations() {
    std::vector<double> out;
    for (int j = 1; j <= 10; ++j) {
        out.push_back(0.1 * j);
        out.push_back(-0.1 * j);
    }
    return out;
}

RunConfig build_config(const ConfigDocument& doc) {
    RunConfig cfg;
    for (const auto& s : doc.sections()) cfg.present.push_back(s.name);

    // Atoms are sorted by mark inside LevyMeasure; keep file order -> sorted order.
    std::vector<std::size_t> order;
    if (const auto* levy = doc.section("levy")) {
        std::vector<JumpAtom> atoms;
        std::vector<double> psi;
        std::vector<int> lines;
        for (const auto& e : levy->entries) {
            const auto& v = e.value;
            if (v.kind != ConfigValue::Kind::Table)
                throw ConfigError("atom must be an inline table { x = ..., mass = ... }", e.line);
            for (const auto& [k, _] : v.fields)
                if (k != "x" && k != "mass" && k != "psi")
                    throw ConfigError("unknown atom key '" + k + "'", e.line);
            const auto* x = v.field("x");
            const auto* mass = v.field("mass");
            if (!x || !mass) throw ConfigError("atom needs both x and mass", e.line);
            atoms.push_back({as_finite(*x, "atom.x"), as_finite(*mass, "atom.mass")});
            const auto* p = v.field("psi");
            psi.push_back(p ? as_finite(*p, "atom.psi") : atoms.back().x);
            lines.push_back(e.line);
        }
        if (atoms.empty()) throw ConfigError("[levy] has no atoms", levy->line);
        order.resize(atoms.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return atoms[a].x < atoms[b].x; });
        for (std::size_t k = 1; k < order.size(); ++k)
            if (atoms[order[k]].x == atoms[order[k - 1]].x)
                throw ConfigError("duplicate atom mark", lines[order[k]]);
        std::vector<JumpAtom> sorted_atoms;
        std::vector<double> sorted_psi;
        for (std::size_t i : order) {
            sorted_atoms.push_back(atoms[i]);
            sorted_psi.push_back(psi[i]);
        }
        LevyMeasure nu;
        try {
            nu = LevyMeasure(std::move(sorted_atoms));
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what(), levy->line);
        }

        if (const auto* ms = doc.section("market")) {
            SectionReader r(ms);
            try {
                cfg.market.emplace(nu, MarkFunction(sorted_psi), r.number("phi"),
                                   r.number("alpha"), r.number("horizon", 1.0));
            } catch (const InvalidArgument& e) {
                throw ConfigError(e.what(), ms->line);
            }
            cfg.r0[0] = r.number("log_price0", 0.0);
        }
    }

    if (const auto* ss = doc.section("spread")) {
        SectionReader r(ss);
        SpreadDynamics sp;
        sp.b = r.number("b", 0.0);
        sp.mean_reversion = r.number("B", 0.0);
        sp.sigma = r.number("Sigma", 0.0);
        if (sp.sigma < 0.0) throw ConfigError("spread.Sigma must be nonnegative", ss->line);
        cfg.r0[1] = r.number("xi0", 0.0);
        if (const auto* g = r.get("gamma_Xi")) {
            const auto vals = as_numbers(*g, "spread.gamma_Xi");
            if (vals.size() != order.size())
                throw ConfigError("spread.gamma_Xi needs one value per [levy] atom", g->line);
            std::vector<double> sorted;
            for (std::size_t i : order) sorted.push_back(vals[i]);
            sp.gamma_xi = MarkFunction(std::move(sorted));
        } else {
            sp.gamma_xi = MarkFunction::constant(order.size(), 0.0);
        }
        cfg.spread = sp;
    }

    if (const auto* cs = doc.section("claim")) {
        SectionReader r(cs);
        ClaimSpec c;
        c.line = cs->line;
        const std::string type = as_string(r.need("type"), "claim.type");
        auto reject = [&](std::initializer_list<const char*> keys) {
            for (const char* k : keys)
                if (const auto* v = r.get(k))
                    throw ConfigError(std::string("claim.") + k + " is not used by type \"" +
                                          type + "\"",
                                      v->line);
        };
        if (type == "log") {
            reject({"a", "w", "v"});
            c.kind = ClaimSpec::Kind::Log;
            c.affine = claim_from_log(r.number("coeff", 1.0), r.number("offset", 0.0));
        } else if (type == "exp") {
            reject({"coeff", "offset"});
            c.kind = ClaimSpec::Kind::Exp;
            c.exp = {as_vec2(r.need("a"), "claim.a"), r.number("w", 1.0), r.number("v", 0.0)};
        } else {
            throw ConfigError("claim.type must be \"log\" or \"exp\"", r.need("type").line);
        }
        cfg.claim = c;
    }

    if (const auto* gs = doc.section("generator")) {
        SectionReader r(gs);
        LinearGenerator g;
        auto fn = [&](const char* key) {
            const auto* v = r.get(key);
            return v ? as_time_function(*v, std::string("generator.") + key) : TimeFunction(0.0);
        };
        g.c_y = fn("c_y");
        g.c_z = fn("c_z");
        g.c_u = fn("c_u");
        g.c = fn("c");
        cfg.generator = g;
    }

    if (const auto* cs = doc.section("constraint")) {
        SectionReader r(cs);
        const auto* lo = r.get("lower");
        const auto* hi = r.get("upper");
        const double lower = lo ? as_extended(*lo, "constraint.lower")
                                : -std::numeric_limits<double>::infinity();
        const double upper = hi ? as_extended(*hi, "constraint.upper")
                                : std::numeric_limits<double>::infinity();
        try {
            cfg.constraint = ConstraintSet::interval(lower, upper);
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what(), cs->line);
        }
    }

    if (const auto* ss = doc.section("solver")) {
        SectionReader r(ss);
        cfg.solver.grid_nodes = r.uint("grid_nodes", cfg.solver.grid_nodes);
        if (cfg.solver.grid_nodes < 3)
            throw ConfigError("solver.grid_nodes must be at least 3", r.need("grid_nodes").line);
        cfg.solver.minimize.grad_tol = r.number("grad_tol", cfg.solver.minimize.grad_tol);
        cfg.solver.minimize.width_tol = r.number("width_tol", cfg.solver.minimize.width_tol);
        cfg.solver.minimize.max_iter =
            static_cast<int>(r.uint("max_iter", static_cast<std::uint64_t>(cfg.solver.minimize.max_iter)));
        if (!(cfg.solver.minimize.grad_tol > 0.0) || !(cfg.solver.minimize.width_tol > 0.0) ||
            cfg.solver.minimize.max_iter < 1)
            throw ConfigError("solver tolerances must be positive", ss->line);
    }

    cfg.mc.perturbations = default_perturbations();
    if (const auto* ms = doc.section("mc")) {
        SectionReader r(ms);
        auto& p = cfg.mc.paths;
        p.n_paths = r.uint("n_paths", p.n_paths);
        p.n_steps = r.uint("n_steps", p.n_steps);
        p.seed = r.uint("seed", p.seed);
        p.threads = static_cast<unsigned>(r.uint("threads", p.threads));
        cfg.mc.checkpoints = r.uint("checkpoints", cfg.mc.checkpoints);
        cfg.mc.x0 = r.number("x0", cfg.mc.x0);
        cfg.mc.save_paths = r.uint("save_paths", cfg.mc.save_paths);
        if (const auto* v = r.get("perturbations"))
            cfg.mc.perturbations = as_numbers(*v, "mc.perturbations");
        if (p.n_paths < 1 || p.n_steps < 1 || cfg.mc.checkpoints < 1)
            throw ConfigError("mc: n_paths, n_steps and checkpoints must be at least 1", ms->line);
        if (p.threads < 1) p.threads = 1;
    }
    if (cfg.market) cfg.mc.paths.horizon = cfg.market->horizon();

    if (const auto* os = doc.section("output")) {
        SectionReader r(os);
        if (const auto* d = r.get("dir")) cfg.output_dir = as_string(*d, "output.dir");
    }
    return cfg;
}

RunConfig load_config(const std::string& path) { return build_config(ConfigDocument::load(path)); }

}  // namespace levyhedge
