#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "levyhedge/affine_solver.hpp"
#include "levyhedge/exp_ansatz.hpp"
#include "levyhedge/generator_opt.hpp"
#include "levyhedge/market_model.hpp"
#include "levyhedge/mc_engine.hpp"

namespace levyhedge {

// Small TOML subset: [section] headers, `key = value` lines, # comments.
// Values are numbers, "strings", true/false, one-line [arrays] and {inline tables}.
struct ConfigValue {
    enum class Kind { Number, String, Bool, Array, Table };

    Kind kind = Kind::Number;
    double number = 0.0;
    std::string text;  // string contents, or the literal spelling of a number
    bool boolean = false;
    std::vector<ConfigValue> items;
    std::vector<std::pair<std::string, ConfigValue>> fields;
    int line = 0;

    const ConfigValue* field(const std::string& key) const;
};

struct ConfigEntry {
    std::string key;
    ConfigValue value;
    int line = 0;
};

struct ConfigSection {
    std::string name;
    int line = 0;
    std::vector<ConfigEntry> entries;

    const ConfigEntry* find(const std::string& key) const;
};

class ConfigDocument {
public:
    /// Parses and checks every section and key against the known schema.
    static ConfigDocument parse(const std::string& text);
    static ConfigDocument load(const std::string& path);

    const ConfigSection* section(const std::string& name) const;
    const std::vector<ConfigSection>& sections() const noexcept { return sections_; }

private:
    std::vector<ConfigSection> sections_;
};

struct SolverSettings {
    std::size_t grid_nodes = 2001;
    MinimizeOptions minimize;
};

struct McSettings {
    PathConfig paths;
    std::size_t checkpoints = 20;
    std::vector<double> perturbations;  // offsets added to pi*
    double x0 = 0.0;
    std::size_t save_paths = 5;
};

struct ClaimSpec {
    enum class Kind { Log, Exp };
    Kind kind = Kind::Log;
    AffineClaim affine{};
    ExpClaim exp{};
    int line = 0;
};

struct RunConfig {
    std::optional<MarketModel> market;  // needs [levy] and [market]
    std::optional<SpreadDynamics> spread;
    Vec2 r0{0.0, 0.0};
    std::optional<ClaimSpec> claim;
    std::optional<LinearGenerator> generator;
    ConstraintSet constraint = ConstraintSet::all_reals();
    SolverSettings solver;
    McSettings mc;
    std::string output_dir = ".";
    std::vector<std::string> present;  // section names found in the file

    bool has(const std::string& section) const;
    /// Throws ConfigError("missing [name] section") when absent.
    void require(const std::string& section) const;
    const MarketModel& require_market() const;
    AffineForward forward() const;
};

RunConfig build_config(const ConfigDocument& doc);
RunConfig load_config(const std::string& path);

/// Default offsets: +-0.1, +-0.2, ..., +-1.0.
std::vector<double> default_perturbations();

}  // namespace levyhedge
