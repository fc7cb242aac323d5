#include "vsl/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "vsl/errors.hpp"

namespace vsl {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  return out;
}

void check_written(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw RuntimeFailure("write failed: " + path.string());
}

std::string comment_value(const CsvTable& table, const std::string& key) {
  for (const auto& c : table.comments) {
    const auto eq = c.find('=');
    if (eq != std::string::npos && trim(c.substr(0, eq)) == key) return trim(c.substr(eq + 1));
  }
  throw FormatError("missing comment field '" + key + "'");
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  const std::string s = trim(text);
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw FormatError("not a number: '" + s + "'");
  return value;
}

bool CsvTable::has(const std::string& name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::size_t CsvTable::index(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw FormatError("missing column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> CsvTable::column(const std::string& name) const {
  const std::size_t k = index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[k]);
  return out;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  bool schema = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      if (t == kSchemaLine) schema = true;
      else table.comments.push_back(trim(std::string_view(t).substr(1)));
      continue;
    }
    if (!schema) throw FormatError(path.string() + ": missing '" + kSchemaLine + "' header");
    const auto fields = split(t, ',');
    if (table.columns.empty()) {
      table.columns = fields;
      continue;
    }
    if (fields.size() != table.columns.size())
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(table.columns.size()) + " fields, found " +
                        std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    try {
      for (const auto& f : fields) row.push_back(parse_double(f));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    table.rows.push_back(std::move(row));
  }
  if (table.columns.empty()) throw FormatError(path.string() + ": no header row");
  return table;
}

void write_csv(const fs::path& path, const CsvTable& table) {
  auto out = open_out(path);
  out << kSchemaLine << '\n';
  for (const auto& c : table.comments) out << "# " << c << '\n';
  for (std::size_t k = 0; k < table.columns.size(); ++k) out << (k ? "," : "") << table.columns[k];
  out << '\n';
  for (const auto& r : table.rows) {
    for (std::size_t k = 0; k < r.size(); ++k) out << (k ? "," : "") << format_double(r[k]);
    out << '\n';
  }
  check_written(out, path);
}

// ---------------------------------------------------------------------------

void write_snapshot(const fs::path& path, const Snapshot& snap, EngineKind engine) {
  CsvTable table;
  const bool shell = engine == EngineKind::SphericalShell;
  table.comments.push_back("engine = " + to_string(engine));
  table.comments.push_back("species_count = " + std::to_string(snap.ensemble.species.size()));
  table.comments.push_back("t = " + format_double(snap.t));
  table.columns = {"t", "species", "id"};
  if (shell) table.columns.insert(table.columns.end(), {"r", "w", "ell", "weight"});
  table.columns.insert(table.columns.end(), {"x1", "x2", "x3", "v1", "v2", "v3"});
  if (!shell) table.columns.push_back("weight");
  for (std::size_t a = 0; a < snap.ensemble.species.size(); ++a) {
    const auto& s = snap.ensemble.species[a];
    const auto sc = shell ? shell_coordinates(s) : ShellCoordinates{};
    for (std::size_t i = 0; i < s.size(); ++i) {
      std::vector<double> row{snap.t, static_cast<double>(a), static_cast<double>(s.id[i])};
      if (shell) row.insert(row.end(), {sc.r[i], sc.w[i], sc.ell[i], s.weight[i]});
      row.insert(row.end(), {s.x[i].x, s.x[i].y, s.x[i].z, s.v[i].x, s.v[i].y, s.v[i].z});
      if (!shell) row.push_back(s.weight[i]);
      table.rows.push_back(std::move(row));
    }
  }
  write_csv(path, table);
}

Snapshot read_snapshot(const fs::path& path) {
  const auto table = read_csv(path);
  const std::size_t count = static_cast<std::size_t>(parse_double(comment_value(table, "species_count")));
  Snapshot snap;
  snap.ensemble.species.resize(count);
  const std::size_t it = table.index("t"), is = table.index("species"), iid = table.index("id"),
                    iw = table.index("weight"), ix = table.index("x1"), iv = table.index("v1");
  snap.t = parse_double(comment_value(table, "t"));
  for (const auto& r : table.rows) {
    if (r[it] != snap.t) throw FormatError(path.string() + ": row time differs from snapshot time");
    const double sp = r[is];
    if (!(sp >= 0.0) || sp >= static_cast<double>(count) || sp != std::floor(sp))
      throw FormatError(path.string() + ": bad species index");
    auto& s = snap.ensemble.species[static_cast<std::size_t>(sp)];
    s.id.push_back(static_cast<std::uint64_t>(r[iid]));
    s.x.push_back({r[ix], r[ix + 1], r[ix + 2]});
    s.v.push_back({r[iv], r[iv + 1], r[iv + 2]});
    s.weight.push_back(r[iw]);
  }
  return snap;
}

std::string snapshot_filename(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%04zu.csv", index);
  return buf;
}

std::vector<Snapshot> read_snapshots(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FormatError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("snap_", 0) == 0 && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Snapshot> out;
  for (const auto& f : files) out.push_back(read_snapshot(f));
  std::stable_sort(out.begin(), out.end(), [](const Snapshot& a, const Snapshot& b) { return a.t < b.t; });
  if (out.empty()) throw FormatError("no snapshot files in " + dir.string());
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> diagnostics_columns(const DiagnosticsSeries& series) {
  std::vector<std::string> cols{"t",     "sup_E",     "sup_rho", "sup_j", "sup_gradE", "mu",
                                "vel_diam", "res_E", "res_gradE", "res_rho", "res_j", "M",
                                "J1",    "J2",        "J3",      "E_kin", "E_pot",     "E_vp"};
  for (const auto& name : series.species_names) cols.push_back("M_" + name);
  return cols;
}

std::string conservation_comment(const ConservationRecord& c) {
  std::ostringstream os;
  os << "initial = " << format_double(c.t) << ' ' << format_double(c.net_charge) << ' '
     << format_double(c.momentum.x) << ' ' << format_double(c.momentum.y) << ' '
     << format_double(c.momentum.z) << ' ' << format_double(c.kinetic) << ' '
     << format_double(c.potential) << ' ' << format_double(c.total);
  for (double m : c.species_number) os << ' ' << format_double(m);
  return os.str();
}

ConservationRecord parse_conservation_comment(const std::string& text) {
  std::istringstream is(text);
  std::vector<double> v;
  std::string tok;
  while (is >> tok) v.push_back(parse_double(tok));
  if (v.size() < 8) throw FormatError("malformed initial conservation record");
  ConservationRecord c;
  c.t = v[0];
  c.net_charge = v[1];
  c.momentum = {v[2], v[3], v[4]};
  c.kinetic = v[5];
  c.potential = v[6];
  c.total = v[7];
  c.species_number.assign(v.begin() + 8, v.end());
  return c;
}

}  // namespace

void write_diagnostics(const fs::path& path, const DiagnosticsSeries& series) {
  CsvTable table;
  std::string names = "species =";
  for (const auto& n : series.species_names) names += " " + n;
  table.comments.push_back(names);
  table.comments.push_back(conservation_comment(series.initial));
  table.comments.push_back("max_limit_field = " + format_double(series.max_limit_field));
  table.columns = diagnostics_columns(series);
  for (const auto& r : series.rows) {
    const auto& c = r.conservation;
    std::vector<double> row{r.t,     r.sup_E,     r.sup_rho,  r.sup_j,   r.sup_gradE,  r.mu,
                            r.vel_diam, r.res_E,  r.res_gradE, r.res_rho, r.res_j,     c.net_charge,
                            c.momentum.x, c.momentum.y, c.momentum.z, c.kinetic, c.potential, c.total};
    row.insert(row.end(), c.species_number.begin(), c.species_number.end());
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

void write_cauchy(const fs::path& path, const DiagnosticsSeries& series) {
  CsvTable table;
  table.columns = {"t", "d_V", "d_Y", "d_Z", "scatter", "F_dev", "P_sup"};
  for (const auto& c : series.convergence)
    table.rows.push_back({c.t, c.d_V, c.d_Y, c.d_Z, c.scatter, c.F_dev, c.P_sup});
  write_csv(path, table);
}

DiagnosticsSeries read_diagnostics(const fs::path& path) {
  const auto table = read_csv(path);
  DiagnosticsSeries s;
  {
    std::istringstream is(comment_value(table, "species"));
    std::string n;
    while (is >> n) s.species_names.push_back(n);
  }
  s.initial = parse_conservation_comment(comment_value(table, "initial"));
  s.max_limit_field = parse_double(comment_value(table, "max_limit_field"));
  const auto cols = diagnostics_columns(s);
  std::vector<std::size_t> idx;
  for (const auto& c : cols) idx.push_back(table.index(c));
  for (const auto& r : table.rows) {
    DiagnosticsRow d;
    auto at = [&](std::size_t k) { return r[idx[k]]; };
    d.t = at(0);
    d.sup_E = at(1);
    d.sup_rho = at(2);
    d.sup_j = at(3);
    d.sup_gradE = at(4);
    d.mu = at(5);
    d.vel_diam = at(6);
    d.res_E = at(7);
    d.res_gradE = at(8);
    d.res_rho = at(9);
    d.res_j = at(10);
    d.conservation.t = d.t;
    d.conservation.net_charge = at(11);
    d.conservation.momentum = {at(12), at(13), at(14)};
    d.conservation.kinetic = at(15);
    d.conservation.potential = at(16);
    d.conservation.total = at(17);
    for (std::size_t k = 18; k < cols.size(); ++k) d.conservation.species_number.push_back(at(k));
    s.rows.push_back(std::move(d));
  }
  const auto cauchy = path.parent_path() / "cauchy.csv";
  if (fs::exists(cauchy)) {
    const auto ct = read_csv(cauchy);
    const std::size_t it = ct.index("t"), iv = ct.index("d_V"), iy = ct.index("d_Y"), iz = ct.index("d_Z"),
                      isc = ct.index("scatter"), iF = ct.index("F_dev"), iP = ct.index("P_sup");
    for (const auto& r : ct.rows)
      s.convergence.push_back({r[it], r[iv], r[iy], r[iz], r[isc], r[iF], r[iP]});
  }
  return s;
}

// ---------------------------------------------------------------------------

void write_fits(const fs::path& path, const std::vector<NamedFit>& fits) {
  auto out = open_out(path);
  out << kSchemaLine << '\n' << "quantity,model,p_hat,m_hat,amplitude,t_a,t_b,rms,ci\n";
  for (const auto& f : fits) {
    const auto& r = f.fit;
    out << f.quantity << ',' << to_string(r.model) << ',' << format_double(r.exponent) << ','
        << format_double(r.log_power) << ',' << format_double(r.amplitude) << ',' << format_double(r.t_a)
        << ',' << format_double(r.t_b) << ',' << format_double(r.rms) << ',' << format_double(r.confidence)
        << '\n';
  }
  check_written(out, path);
}

std::vector<NamedFit> read_fits(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != kSchemaLine)
    throw FormatError(path.string() + ": missing '" + kSchemaLine + "' header");
  if (!std::getline(in, line) || trim(line) != "quantity,model,p_hat,m_hat,amplitude,t_a,t_b,rms,ci")
    throw FormatError(path.string() + ": unexpected fits header");
  std::vector<NamedFit> out;
  while (std::getline(in, line)) {
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto f = split(line, ',');
    if (f.size() != 9) throw FormatError(path.string() + ": expected 9 fields in fits row");
    NamedFit nf;
    nf.quantity = f[0];
    nf.fit.model = fit_model_from_string(f[1]);
    nf.fit.exponent = parse_double(f[2]);
    nf.fit.log_power = parse_double(f[3]);
    nf.fit.amplitude = parse_double(f[4]);
    nf.fit.t_a = parse_double(f[5]);
    nf.fit.t_b = parse_double(f[6]);
    nf.fit.rms = parse_double(f[7]);
    nf.fit.confidence = parse_double(f[8]);
    out.push_back(std::move(nf));
  }
  return out;
}

void write_profile(const fs::path& path, const AsymptoticProfile& profile,
                   const ParticleEnsemble& final_ensemble) {
  CsvTable table;
  table.comments.push_back("t_end = " + format_double(profile.t_end));
  table.comments.push_back("eps_v = " + format_double(profile.eps_v));
  table.comments.push_back("h_v = " + format_double(profile.h_v));
  table.comments.push_back(std::string("mode = ") +
                           (profile.mode == LimitFieldMode::Spherical ? "spherical" : "softened"));
  table.comments.push_back("charge_sum = " + format_double(profile.charge_sum()));
  table.columns = {"species", "id", "v1", "v2", "v3", "charge", "z1", "z2", "z3"};
  for (std::size_t a = 0; a < profile.v_inf.size(); ++a)
    for (std::size_t i = 0; i < profile.v_inf[a].size(); ++i) {
      const Vec3 v = profile.v_inf[a][i];
      const Vec3 z = a < profile.z_inf.size() ? profile.z_inf[a][i] : Vec3{};
      table.rows.push_back({static_cast<double>(a), static_cast<double>(final_ensemble.species[a].id[i]), v.x,
                            v.y, v.z, profile.charge[a][i], z.x, z.y, z.z});
    }
  write_csv(path, table);
}

}  // namespace vsl
