#pragma once

// Command line and config-file parsing for the benchmark driver.
//
// Config files hold `key = value` lines; `#` starts a comment. Keys match the
// long flag names with '-' or '_' separators. Flags override file values.

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "scpic/config.hpp"
#include "scpic/simulation.hpp"

namespace scpic {

class CliError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CliOptions {
  SimulationConfig config;
  double dt_fraction = 0.5;
  std::string report_path;
  std::string snapshot_path;
  std::string sweep;  // "", "workers", "supercell"
  int diag_every = 100;
  std::vector<int> sweep_sizes{1, 2, 3, 4, 5, 6};
  std::vector<std::pair<int, int>> sweep_combos{{1, 8}, {2, 4}, {4, 2}, {8, 1}};  // subdomains x workers
  int threads_per_core = 4;
  std::int64_t l1_budget = 32768;
  bool help = false;
  std::string help_text;
};

namespace detail {

inline std::string trim(std::string s) {
  auto issp = [](unsigned char ch) { return std::isspace(ch) != 0; };
  while (!s.empty() && issp(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && issp(static_cast<unsigned char>(s[b]))) ++b;
  return s.substr(b);
}

inline std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw CliError("malformed value for '" + key + "': '" + text + "'");
  return v;
}

inline Layout parse_layout(const std::string& key, const std::string& v) {
  if (v == "naive") return Layout::naive;
  if (v == "supercell") return Layout::supercell;
  throw CliError("malformed value for '" + key + "': '" + v + "' (expected naive|supercell)");
}

inline Interpolation parse_interp(const std::string& key, const std::string& v) {
  if (v == "scalar") return Interpolation::scalar;
  if (v == "chunked") return Interpolation::chunked;
  throw CliError("malformed value for '" + key + "': '" + v + "' (expected scalar|chunked)");
}

inline std::string parse_sweep(const std::string& key, const std::string& v) {
  if (v == "workers" || v == "supercell" || v == "none" || v.empty()) return v == "none" ? "" : v;
  throw CliError("malformed value for '" + key + "': '" + v + "' (expected workers|supercell)");
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  if (out.empty()) throw CliError("empty list for '" + key + "'");
  return out;
}

/// "1x8,2x4" -> {(1,8),(2,4)}
inline std::vector<std::pair<int, int>> parse_combos(const std::string& key, const std::string& v) {
  std::vector<std::pair<int, int>> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    const auto x = item.find('x');
    if (x == std::string::npos) throw CliError("malformed value for '" + key + "': '" + item + "' (expected PxT)");
    out.emplace_back(parse_number<int>(key, item.substr(0, x)), parse_number<int>(key, item.substr(x + 1)));
  }
  if (out.empty()) throw CliError("empty list for '" + key + "'");
  return out;
}

/// Applies one setting; `key` uses '_' separators.
inline void apply_setting(CliOptions& o, const std::string& key, const std::string& value) {
  auto& c = o.config;
  if (key == "grid") {
    const auto w = split_words(value);
    if (w.size() != 3) throw CliError("malformed value for 'grid': expected NX NY NZ");
    for (int a = 0; a < 3; ++a) c.dims[a] = parse_number<int>(key, w[static_cast<std::size_t>(a)]);
  } else if (key == "spacing") {
    const auto w = split_words(value);
    if (w.size() != 1 && w.size() != 3) throw CliError("malformed value for 'spacing': expected H or HX HY HZ");
    for (int a = 0; a < 3; ++a) c.spacing[a] = parse_number<double>(key, w[w.size() == 1 ? 0 : static_cast<std::size_t>(a)]);
  } else if (key == "ppc") {
    c.particles_per_cell = parse_number<int>(key, value);
  } else if (key == "steps") {
    c.steps = parse_number<int>(key, value);
  } else if (key == "dt_frac") {
    o.dt_fraction = parse_number<double>(key, value);
  } else if (key == "supercell_size") {
    c.supercell_size = parse_number<int>(key, value);
  } else if (key == "layout") {
    c.layout = parse_layout(key, value);
  } else if (key == "interp") {
    c.interpolation = parse_interp(key, value);
  } else if (key == "chunk_size") {
    c.chunk_size = parse_number<int>(key, value);
  } else if (key == "workers") {
    c.workers = parse_number<int>(key, value);
  } else if (key == "subdomains") {
    c.subdomains = parse_number<int>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "c") {
    c.c = parse_number<double>(key, value);
  } else if (key == "density") {
    c.density = parse_number<double>(key, value);
  } else if (key == "temperature") {
    c.thermal_momentum = parse_number<double>(key, value);
  } else if (key == "report") {
    o.report_path = value;
  } else if (key == "snapshot") {
    o.snapshot_path = value;
  } else if (key == "sweep") {
    o.sweep = parse_sweep(key, value);
  } else if (key == "diag_every") {
    o.diag_every = parse_number<int>(key, value);
  } else if (key == "sweep_sizes") {
    o.sweep_sizes = parse_int_list(key, value);
  } else if (key == "sweep_combos") {
    o.sweep_combos = parse_combos(key, value);
  } else if (key == "threads_per_core") {
    o.threads_per_core = parse_number<int>(key, value);
  } else if (key == "l1_budget") {
    o.l1_budget = parse_number<std::int64_t>(key, value);
  } else {
    throw CliError("unknown key '" + key + "'");
  }
}

inline std::string normalize_key(std::string key) {
  for (char& ch : key)
    if (ch == '-') ch = '_';
  return key;
}

}  // namespace detail

/// Parses `key = value` text into an ordered list of settings.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text,
                                                                          const std::string& origin = "config") {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CliError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = detail::normalize_key(detail::trim(line.substr(0, eq)));
    if (key.empty()) throw CliError(origin + ":" + std::to_string(lineno) + ": missing key");
    out.emplace_back(std::move(key), detail::trim(line.substr(eq + 1)));
  }
  return out;
}

inline constexpr const char* kConfigKeysHelp =
    "Config file keys (key = value, # comments): grid, spacing, ppc, steps, dt_frac, supercell_size,\n"
    "layout, interp, chunk_size, workers, subdomains, seed, c, density, temperature, report, snapshot,\n"
    "sweep, diag_every, sweep_sizes, sweep_combos, threads_per_core, l1_budget.\n";

/// Builds options from argv (argv[0] is the program name). Throws CliError for
/// malformed input and ConfigError when the resulting configuration is invalid.
/// `--help` returns with help set and the usage text filled in.
inline CliOptions parse_config(const std::vector<std::string>& args) {
  CLI::App app{"Supercell particle-in-cell benchmark", args.empty() ? "pic_bench" : args[0]};
  app.footer(kConfigKeysHelp);
  app.set_help_flag();
  bool help = false;
  app.add_flag("-h,--help", help, "Print this help and exit");

  // Every option is collected as raw text and applied after the config file,
  // so flags win over file values and share one parser.
  std::vector<std::pair<std::string, CLI::Option*>> opts;
  std::map<std::string, std::vector<std::string>> raw;
  auto add = [&](const std::string& name, const std::string& desc, int nargs = 1) {
    auto* opt = app.add_option("--" + name, raw[name], desc);
    opt->expected(nargs);
    opts.emplace_back(name, opt);
    return opt;
  };
  add("grid", "Grid size in cells: NX NY NZ", 3);
  add("spacing", "Cell size in cm (one or three values)")->expected(1, 3);
  add("ppc", "Macro-particles per cell");
  add("steps", "Number of time steps");
  add("dt-frac", "Time step as a fraction of the CFL limit (default 0.5)");
  add("supercell-size", "Supercell edge length in cells");
  add("layout", "naive|supercell");
  add("interp", "scalar|chunked");
  add("chunk-size", "Particles per gather chunk");
  add("workers", "Worker threads per subdomain");
  add("subdomains", "Number of z-slab subdomains");
  add("seed", "Random seed for particle placement");
  add("c", "Speed of light (cm/s)");
  add("density", "Electron density (1/cm^3)");
  add("temperature", "Thermal momentum spread in units of m c (0 = frozen plasma)");
  add("report", "Write the CSV report to PATH");
  add("snapshot", "Write a final state snapshot to PATH");
  add("sweep", "workers|supercell");
  add("diag-every", "Diagnostics sampling interval in steps (0 = off)");
  add("sweep-sizes", "Supercell sizes for --sweep supercell, e.g. 1,2,3");
  add("sweep-combos", "SUBDOMAINSxWORKERS list for --sweep workers, e.g. 1x8,2x4");
  add("threads-per-core", "Threads per core for the cache model");
  add("l1-budget", "L1 budget in bytes for the supercell recommendation");
  std::vector<std::string> config_path;
  app.add_option("--config", config_path, "Read settings from a key = value file")->expected(1);

  std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    throw CliError(e.what());
  }

  CliOptions o;
  if (help) {
    o.help = true;
    o.help_text = app.help();
    return o;
  }
  if (!config_path.empty()) {
    std::ifstream f(config_path.front());
    if (!f) throw CliError("cannot read config file '" + config_path.front() + "'");
    const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    for (const auto& [k, v] : parse_config_text(text, config_path.front())) detail::apply_setting(o, k, v);
  }
  for (const auto& [name, opt] : opts) {
    if (opt->count() == 0) continue;
    std::string joined;
    for (const auto& w : raw[name]) joined += (joined.empty() ? "" : " ") + w;
    detail::apply_setting(o, detail::normalize_key(name), joined);
  }

  const auto& g = o.config;
  const bool geometry_ok = g.spacing.x > 0 && g.spacing.y > 0 && g.spacing.z > 0 && g.c > 0 &&
                           std::isfinite(g.c) && is_finite(g.spacing);
  o.config.dt = geometry_ok ? o.dt_fraction * cfl_max_dt(g.geometry(), g.c) : 0.0;
  if (!(o.dt_fraction > 0.0)) o.config.dt = 0.0;

  auto v = validate_config(o.config);
  if (!v.ok()) throw ConfigError(std::move(v.errors));
  if (o.diag_every < 0) throw CliError("diag_every must be >= 0");
  if (o.threads_per_core < 1) throw CliError("threads_per_core must be >= 1");
  return o;
}

inline CliOptions parse_config(int argc, const char* const* argv) {
  return parse_config(std::vector<std::string>(argv, argv + argc));
}

}  // namespace scpic
