#include "vsl/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "vsl/errors.hpp"

namespace vsl {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (std::isspace(static_cast<unsigned char>(s[i])) || s[i] == ',')) ++i;
    const std::size_t j = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != ',') ++i;
    if (i > j) out.push_back(s.substr(j, i - j));
  }
  return out;
}

double to_real(std::string_view key, std::string_view value, std::size_t line) {
  const std::string text(trim(value));
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (text.empty() || used != text.size())
    throw ConfigError("key '" + std::string(key) + "': expected a number, got '" + text + "'", line);
  return out;
}

std::uint64_t to_unsigned(std::string_view key, std::string_view value, std::size_t line) {
  const auto v = trim(value);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError(
        "key '" + std::string(key) + "': expected a nonnegative integer, got '" + std::string(v) + "'",
        line);
  return out;
}

int to_int(std::string_view key, std::string_view value, std::size_t line) {
  const auto v = trim(value);
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError("key '" + std::string(key) + "': expected an integer, got '" + std::string(v) + "'",
                      line);
  return out;
}

Vec3 to_vec3(std::string_view key, std::string_view value, std::size_t line) {
  const auto parts = split_ws(value);
  if (parts.size() != 3)
    throw ConfigError("key '" + std::string(key) + "': expected three components", line);
  return {to_real(key, parts[0], line), to_real(key, parts[1], line), to_real(key, parts[2], line)};
}

[[noreturn]] void bad_choice(std::string_view key, std::string_view value, std::size_t line,
                             const char* choices) {
  throw ConfigError("key '" + std::string(key) + "': unknown value '" + std::string(value) +
                        "' (expected " + choices + ")",
                    line);
}

void set_species_key(SpeciesSpec& s, std::string_view key, std::string_view value, std::size_t line) {
  auto& r = s.init;
  if (key == "name") {
    s.name = std::string(value);
  } else if (key == "charge") {
    s.charge = to_real(key, value, line);
  } else if (key == "mass") {
    s.mass = to_real(key, value, line);
  } else if (key == "count") {
    s.count = to_unsigned(key, value, line);
  } else if (key == "seed") {
    s.seed = to_unsigned(key, value, line);
  } else if (key == "kind") {
    if (value == "uniform-ball") r.kind = RecipeKind::UniformBall;
    else if (value == "truncated-gaussian") r.kind = RecipeKind::TruncatedGaussian;
    else if (value == "shifted-beam") r.kind = RecipeKind::ShiftedBeam;
    else if (value == "spherical-shellset") r.kind = RecipeKind::SphericalShellset;
    else bad_choice(key, value, line, "uniform-ball, truncated-gaussian, shifted-beam, spherical-shellset");
  } else if (key == "center_x") {
    r.center_x = to_vec3(key, value, line);
  } else if (key == "center_v") {
    r.center_v = to_vec3(key, value, line);
  } else if (key == "radius_x") {
    r.radius_x = to_real(key, value, line);
  } else if (key == "radius_v") {
    r.radius_v = to_real(key, value, line);
  } else if (key == "sigma_v") {
    r.sigma_v = to_real(key, value, line);
  } else if (key == "total_number") {
    r.total_number = to_real(key, value, line);
  } else {
    throw ConfigError("unknown key '" + std::string(key) + "' in [species] block", line);
  }
}

void set_top_key(SimulationConfig& c, std::string_view key, std::string_view value, std::size_t line) {
  if (key == "engine") {
    if (value == "spherical-shell") c.engine = EngineKind::SphericalShell;
    else if (value == "direct-3d") c.engine = EngineKind::Direct3d;
    else bad_choice(key, value, line, "spherical-shell, direct-3d");
  } else if (key == "force_sign") {
    if (value == "plasma") c.force_sign = ForceSign::Plasma;
    else if (value == "gravitational") c.force_sign = ForceSign::Gravitational;
    else bad_choice(key, value, line, "plasma, gravitational");
  } else if (key == "softening") {
    if (value == "auto") c.softening.reset();
    else c.softening = to_real(key, value, line);
  } else if (key == "dt_initial") {
    c.dt_initial = to_real(key, value, line);
  } else if (key == "t_end") {
    c.t_end = to_real(key, value, line);
  } else if (key == "snapshot_times") {
    if (value == "dyadic") {
      c.schedule = SnapshotSchedule::Dyadic;
    } else if (value == "half-dyadic") {
      c.schedule = SnapshotSchedule::HalfDyadic;
    } else {
      c.schedule = SnapshotSchedule::Explicit;
      c.snapshot_times.clear();
      for (auto part : split_ws(value)) c.snapshot_times.push_back(to_real(key, part, line));
    }
  } else if (key == "thread_hint") {
    c.thread_hint = to_int(key, value, line);
  } else if (key == "courant") {
    c.courant = to_real(key, value, line);
  } else if (key == "velocity_bandwidth") {
    if (value == "auto") c.velocity_bandwidth.reset();
    else c.velocity_bandwidth = to_real(key, value, line);
  } else if (key == "limit_softening") {
    if (value == "auto") c.limit_softening.reset();
    else c.limit_softening = to_real(key, value, line);
  } else if (key == "z_prefactor") {
    if (value == "charge-over-mass") c.z_prefactor = ZPrefactor::ChargeOverMass;
    else if (value == "charge") c.z_prefactor = ZPrefactor::Charge;
    else bad_choice(key, value, line, "charge-over-mass, charge");
  } else if (key == "probe_grid") {
    c.probe_grid = to_int(key, value, line);
  } else if (key == "velocity_cells") {
    c.velocity_cells = to_int(key, value, line);
  } else {
    throw ConfigError("unknown key '" + std::string(key) + "'", line);
  }
}

std::string fmt_real(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string fmt_vec(const Vec3& v) {
  return fmt_real(v.x) + " " + fmt_real(v.y) + " " + fmt_real(v.z);
}

}  // namespace

SimulationConfig parse_config_text(std::string_view text) {
  SimulationConfig config;
  std::set<std::string> seen;
  bool in_species = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line != "[species]")
        throw ConfigError("unknown section '" + std::string(line) + "' (only [species] is allowed)",
                          line_no);
      config.species.emplace_back();
      in_species = true;
      seen.clear();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("expected 'key = value', got '" + std::string(line) + "'", line_no);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line_no);
    if (value.empty()) throw ConfigError("key '" + std::string(key) + "' has no value", line_no);
    if (!seen.insert(std::string(key)).second)
      throw ConfigError("duplicate key '" + std::string(key) + "'", line_no);
    if (in_species) set_species_key(config.species.back(), key, value, line_no);
    else set_top_key(config, key, value, line_no);
    if (end == text.size()) break;
  }
  return config;
}

void apply_override(SimulationConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("override '" + std::string(assignment) + "' is not KEY=VALUE");
  const auto key = trim(assignment.substr(0, eq));
  const auto value = trim(assignment.substr(eq + 1));
  if (key.rfind("species.", 0) == 0) {
    const auto rest = key.substr(8);
    const auto dot = rest.find('.');
    if (dot == std::string_view::npos)
      throw ConfigError("override '" + std::string(key) + "' must be species.<index>.<key>");
    const auto index = rest.substr(0, dot);
    const auto field = rest.substr(dot + 1);
    if (index == "*") {
      for (auto& s : config.species) set_species_key(s, field, value, 0);
      return;
    }
    const auto i = to_unsigned(key, index, 0);
    if (i >= config.species.size())
      throw ConfigError("override '" + std::string(key) + "': no species with index " + std::string(index));
    set_species_key(config.species[i], field, value, 0);
    return;
  }
  set_top_key(config, key, value, 0);
}

SimulationConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
  auto config = parse_config_text(text);
  for (const auto& o : overrides) apply_override(config, o);
  finalize_config(config);
  return config;
}

SimulationConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), overrides);
}

std::string to_config_text(const SimulationConfig& c) {
  std::ostringstream os;
  os << "engine = " << to_string(c.engine) << "\n";
  os << "force_sign = " << to_string(c.force_sign) << "\n";
  os << "softening = " << (c.softening ? fmt_real(*c.softening) : std::string("auto")) << "\n";
  os << "dt_initial = " << fmt_real(c.dt_initial) << "\n";
  os << "t_end = " << fmt_real(c.t_end) << "\n";
  if (c.schedule == SnapshotSchedule::Explicit) {
    os << "snapshot_times =";
    for (double t : c.snapshot_times) os << " " << fmt_real(t);
    os << "\n";
  } else {
    os << "snapshot_times = " << to_string(c.schedule) << "\n";
  }
  os << "thread_hint = " << c.thread_hint << "\n";
  os << "courant = " << fmt_real(c.courant) << "\n";
  os << "velocity_bandwidth = "
     << (c.velocity_bandwidth ? fmt_real(*c.velocity_bandwidth) : std::string("auto")) << "\n";
  os << "limit_softening = "
     << (c.limit_softening ? fmt_real(*c.limit_softening) : std::string("auto")) << "\n";
  os << "z_prefactor = " << to_string(c.z_prefactor) << "\n";
  os << "probe_grid = " << c.probe_grid << "\n";
  os << "velocity_cells = " << c.velocity_cells << "\n";
  for (const auto& s : c.species) {
    const auto& r = s.init;
    os << "\n[species]\n";
    os << "name = " << s.name << "\n";
    os << "charge = " << fmt_real(s.charge) << "\n";
    os << "mass = " << fmt_real(s.mass) << "\n";
    os << "count = " << s.count << "\n";
    os << "seed = " << s.seed << "\n";
    os << "kind = " << to_string(r.kind) << "\n";
    os << "center_x = " << fmt_vec(r.center_x) << "\n";
    os << "center_v = " << fmt_vec(r.center_v) << "\n";
    os << "radius_x = " << fmt_real(r.radius_x) << "\n";
    if (r.radius_v) os << "radius_v = " << fmt_real(*r.radius_v) << "\n";
    if (r.sigma_v) os << "sigma_v = " << fmt_real(*r.sigma_v) << "\n";
    os << "total_number = " << fmt_real(r.total_number) << "\n";
  }
  return os.str();
}

}  // namespace vsl
