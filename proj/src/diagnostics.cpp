#include "vsl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "vsl/errors.hpp"

namespace vsl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::ptrdiff_t as_signed(std::size_t n) { return static_cast<std::ptrdiff_t>(n); }

double max_pairwise_distance(std::span<const Vec3> v) {
  double best = 0.0;
  const auto n = as_signed(v.size());
#pragma omp parallel for schedule(dynamic, 64) reduction(max : best)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    for (std::ptrdiff_t j = i + 1; j < n; ++j)
      best = std::max(best, norm2(v[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)]));
  return std::sqrt(best);
}

std::vector<SourceBlock> snapshot_blocks(const Snapshot& snap, std::span<const SpeciesSpec> species,
                                         std::vector<std::vector<double>>& charges) {
  return charge_blocks(snap.ensemble, species, charges);
}

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

}  // namespace

// ---------------------------------------------------------------------------

Vec3 VelocityGrid::center(std::size_t i, std::size_t j, std::size_t k) const {
  return origin + h * Vec3{static_cast<double>(i) + 0.5, static_cast<double>(j) + 0.5,
                           static_cast<double>(k) + 0.5};
}

VelocityGrid covering_velocity_grid(std::span<const ParticleEnsemble* const> ensembles, int cells) {
  std::vector<Vec3> all;
  for (const auto* e : ensembles)
    for (const auto& s : e->species) all.insert(all.end(), s.v.begin(), s.v.end());
  if (all.empty()) throw DomainError("velocity grid needs at least one particle");
  const Box box = bounding_box(all);
  double extent = 0.0;
  for (std::size_t k = 0; k < 3; ++k) extent = std::max(extent, box.hi[k] - box.lo[k]);
  if (!(extent > 0.0)) extent = 1.0;
  VelocityGrid grid;
  grid.h = extent / cells;
  grid.origin = box.lo - Vec3{grid.h, grid.h, grid.h};
  for (std::size_t k = 0; k < 3; ++k)
    grid.dims[k] = static_cast<std::size_t>(std::floor((box.hi[k] - box.lo[k]) / grid.h)) + 3;
  return grid;
}

double VelocityDensity::species_mass(std::size_t species) const {
  double total = 0.0;
  for (double n : number[species]) total += n;
  return total;
}

VelocityDensity spatial_average(const ParticleEnsemble& ensemble, std::span<const SpeciesSpec> species,
                                const VelocityGrid& grid, Deposit deposit) {
  VelocityDensity d;
  d.grid = grid;
  d.number.assign(ensemble.species.size(), std::vector<double>(grid.cells(), 0.0));
  const double inv_h = 1.0 / grid.h;
  auto off_grid = [&](const Vec3& v) {
    std::ostringstream os;
    os.precision(6);
    os << "velocity (" << v.x << ", " << v.y << ", " << v.z << ") outside grid ["
       << grid.origin.x << ", " << grid.origin.x + grid.h * static_cast<double>(grid.dims[0]) << "] x ["
       << grid.origin.y << ", " << grid.origin.y + grid.h * static_cast<double>(grid.dims[1]) << "] x ["
       << grid.origin.z << ", " << grid.origin.z + grid.h * static_cast<double>(grid.dims[2]) << "]";
    throw DomainError(os.str());
  };
  for (std::size_t a = 0; a < ensemble.species.size(); ++a) {
    const auto& s = ensemble.species[a];
    auto& cells = d.number[a];
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Vec3 u = inv_h * (s.v[i] - grid.origin);
      if (deposit == Deposit::NearestCell) {
        std::array<std::size_t, 3> c{};
        for (std::size_t k = 0; k < 3; ++k) {
          const double f = std::floor(u[k]);
          if (!(f >= 0.0 && f < static_cast<double>(grid.dims[k]))) off_grid(s.v[i]);
          c[k] = static_cast<std::size_t>(f);
        }
        cells[grid.flat(c[0], c[1], c[2])] += s.weight[i];
      } else {
        std::array<std::size_t, 3> c{};
        std::array<double, 3> frac{};
        for (std::size_t k = 0; k < 3; ++k) {
          const double shifted = u[k] - 0.5;
          const double f = std::floor(shifted);
          if (!(f >= 0.0 && f + 1.0 < static_cast<double>(grid.dims[k]))) off_grid(s.v[i]);
          c[k] = static_cast<std::size_t>(f);
          frac[k] = shifted - f;
        }
        for (std::size_t corner = 0; corner < 8; ++corner) {
          double w = s.weight[i];
          std::array<std::size_t, 3> idx = c;
          for (std::size_t k = 0; k < 3; ++k) {
            const bool up = (corner >> k) & 1U;
            w *= up ? frac[k] : 1.0 - frac[k];
            idx[k] += up ? 1 : 0;
          }
          cells[grid.flat(idx[0], idx[1], idx[2])] += w;
        }
      }
    }
  }
  const double inv_vol = inv_h * inv_h * inv_h;
  d.net.assign(grid.cells(), 0.0);
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    double p = 0.0;
    for (std::size_t a = 0; a < d.number.size(); ++a) p += species[a].charge * d.number[a][c];
    d.net[c] = p * inv_vol;
  }
  return d;
}

double max_species_deviation(const VelocityDensity& a, const VelocityDensity& b) {
  if (a.grid.dims != b.grid.dims || a.number.size() != b.number.size())
    throw std::invalid_argument("velocity densities on different grids");
  double best = 0.0;
  for (std::size_t s = 0; s < a.number.size(); ++s)
    for (std::size_t c = 0; c < a.grid.cells(); ++c) best = std::max(best, std::abs(a.F(s, c) - b.F(s, c)));
  return best;
}

double max_cross_species_deviation(const VelocityDensity& d, std::size_t s1, std::size_t s2) {
  double best = 0.0;
  for (std::size_t c = 0; c < d.grid.cells(); ++c) best = std::max(best, std::abs(d.F(s1, c) - d.F(s2, c)));
  return best;
}

// ---------------------------------------------------------------------------

Box bounding_box(std::span<const Vec3> points) {
  Box b;
  if (points.empty()) return b;
  b.lo = b.hi = points.front();
  for (const auto& p : points)
    for (std::size_t k = 0; k < 3; ++k) {
      b.lo[k] = std::min(b.lo[k], p[k]);
      b.hi[k] = std::max(b.hi[k], p[k]);
    }
  return b;
}

std::vector<SourceBlock> AsymptoticProfile::blocks() const {
  std::vector<SourceBlock> out;
  for (std::size_t a = 0; a < v_inf.size(); ++a) out.push_back({v_inf[a], charge[a]});
  return out;
}

double AsymptoticProfile::charge_sum() const {
  double total = 0.0;
  for (std::size_t a = 0; a < weight.size(); ++a) {
    double w = 0.0;
    for (double x : weight[a]) w += x;
    total += species_charge[a] * w;
  }
  return total;
}

Box AsymptoticProfile::velocity_box() const {
  Box box = omega_v.empty() ? Box{} : omega_v.front();
  for (const auto& b : omega_v)
    for (std::size_t k = 0; k < 3; ++k) {
      box.lo[k] = std::min(box.lo[k], b.lo[k]);
      box.hi[k] = std::max(box.hi[k], b.hi[k]);
    }
  return box;
}

std::vector<Vec3> AsymptoticProfile::softened_field(std::span<const Vec3> v) const {
  return limiting_field(v, blocks(), eps_v);
}

std::vector<Mat3> AsymptoticProfile::softened_gradient(std::span<const Vec3> v) const {
  return softened_gradient_sum(v, blocks(), eps_v);
}

std::vector<double> AsymptoticProfile::smoothed_density(std::span<const Vec3> v) const {
  return density_estimate(v, blocks(), h_v);
}

std::vector<Vec3> AsymptoticProfile::field(std::span<const Vec3> v) const {
  if (mode == LimitFieldMode::Softened) return softened_field(v);
  std::vector<double> radii, charges;
  for (std::size_t a = 0; a < v_inf.size(); ++a)
    for (std::size_t i = 0; i < v_inf[a].size(); ++i) {
      radii.push_back(norm(v_inf[a][i]));
      charges.push_back(charge[a][i]);
    }
  const RadialCharge shells(radii, charges);
  std::vector<Vec3> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double s = norm(v[k]);
    if (s > 0.0) out[k] = (shells.enclosed(s) * kInvFourPi / (s * s * s)) * v[k];
  }
  return out;
}

std::vector<Vec3> AsymptoticProfile::field_excluding_self(std::size_t species,
                                                          std::span<const Vec3> v) const {
  if (species >= v_inf.size() || v.size() != v_inf[species].size())
    throw std::invalid_argument("field_excluding_self: one query per atom of the species");
  auto out = field(v);
  const double eps2 = mode == LimitFieldMode::Softened ? eps_v * eps_v : 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double c = charge[species][i];
    if (mode == LimitFieldMode::Softened) {
      const Vec3 d = v[i] - v_inf[species][i];
      const double s2 = norm2(d) + eps2;
      if (s2 > 0.0) out[i] -= (kInvFourPi * c / (s2 * std::sqrt(s2))) * d;
    } else {
      const double s = norm(v[i]);
      if (s > 0.0 && norm(v_inf[species][i]) <= s) out[i] -= (c * kInvFourPi / (s * s * s)) * v[i];
    }
  }
  return out;
}

AsymptoticProfile build_profile(const Snapshot& final_snapshot, const SimulationConfig& config) {
  const auto& e = final_snapshot.ensemble;
  AsymptoticProfile p;
  p.t_end = final_snapshot.t;
  p.mode = config.engine == EngineKind::SphericalShell ? LimitFieldMode::Spherical
                                                       : LimitFieldMode::Softened;
  for (std::size_t a = 0; a < e.species.size(); ++a) {
    const auto& s = e.species[a];
    p.v_inf.push_back(s.v);
    std::vector<double> c(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) c[i] = config.species[a].charge * s.weight[i];
    p.charge.push_back(std::move(c));
    p.weight.push_back(s.weight);
    p.species_charge.push_back(config.species[a].charge);
    p.omega_v.push_back(bounding_box(s.v));
    p.charge_over_mass.push_back(config.species[a].charge_over_mass());
    p.z_prefactor.push_back(z_prefactor(config.species[a], config.z_prefactor));
  }
  const double diameter = p.velocity_box().diameter();
  const double scale = diameter > 0.0 ? diameter : 1.0;
  p.eps_v = config.limit_softening.value_or(0.05 * scale);
  p.h_v = config.velocity_bandwidth.value_or(0.15 * scale);

  if (p.t_end >= 1.0) {
    for (std::size_t a = 0; a < e.species.size(); ++a) {
      const auto& s = e.species[a];
      const auto field = p.field_excluding_self(a, s.v);
      std::vector<Vec3> z(s.size());
      for (std::size_t i = 0; i < s.size(); ++i)
        z[i] = compute_Y(p.t_end, s.x[i], s.v[i]) + (p.z_prefactor[a] * std::log(p.t_end)) * field[i];
      p.omega_z.push_back(bounding_box(z));
      p.z_inf.push_back(std::move(z));
    }
  }
  return p;
}

// ---------------------------------------------------------------------------

std::vector<Vec3> probe_grid(const Box& box, int n) {
  if (n < 2) throw DomainError("probe grid needs n >= 2");
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(n) * n * n);
  const double dn = static_cast<double>(n - 1);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        out.push_back({box.lo.x + (box.hi.x - box.lo.x) * i / dn, box.lo.y + (box.hi.y - box.lo.y) * j / dn,
                       box.lo.z + (box.hi.z - box.lo.z) * k / dn});
  return out;
}

std::vector<Vec3> sup_query_points(const ParticleEnsemble& ensemble, int grid_n, std::size_t max_particles) {
  std::vector<Vec3> all;
  for (const auto& s : ensemble.species) all.insert(all.end(), s.x.begin(), s.x.end());
  auto points = probe_grid(bounding_box(all), grid_n);
  const std::size_t stride = std::max<std::size_t>(1, (all.size() + max_particles - 1) / max_particles);
  for (std::size_t i = 0; i < all.size(); i += stride) points.push_back(all[i]);
  return points;
}

FieldSnapshot evaluate_fields(const Snapshot& snap, const ForceModel& force,
                              std::span<const Vec3> query_points, double eps_v, double h_v) {
  FieldSnapshot f;
  f.t = snap.t;
  f.query_points.assign(query_points.begin(), query_points.end());
  const double scale = std::max(1.0, snap.t);
  f.softening = scale * eps_v;
  f.bandwidth = scale * h_v;
  std::vector<std::vector<double>> charges;
  const auto blocks = snapshot_blocks(snap, force.species(), charges);
  if (const auto* direct = dynamic_cast<const DirectSoftenedForce*>(&force))
    f.E = softened_field_sum(query_points, blocks, std::max(direct->softening(), f.softening));
  else
    f.E = force.field_at(snap.ensemble, query_points);
  f.gradE = softened_gradient_sum(query_points, blocks, f.softening);
  f.rho = density_estimate(query_points, blocks, f.bandwidth);
  f.j = current_estimate(query_points, blocks, f.bandwidth);
  return f;
}

SupNorms sup_norms(const FieldSnapshot& fields) {
  SupNorms s;
  for (const auto& e : fields.E) s.E = std::max(s.E, norm(e));
  for (const auto& g : fields.gradE) s.gradE = std::max(s.gradE, norm(g));
  for (double r : fields.rho) s.rho = std::max(s.rho, std::abs(r));
  for (const auto& j : fields.j) s.j = std::max(s.j, norm(j));
  return s;
}

Residuals self_similar_residuals(const Snapshot& snap, std::span<const SpeciesSpec> species,
                                 const AsymptoticProfile& profile, std::span<const Vec3> probes_v) {
  if (probes_v.empty()) throw DomainError("self-similar residuals need a nonempty probe set");
  const double t = snap.t;
  if (!(t >= 1.0)) throw DomainError("self-similar residuals need t >= 1");
  std::vector<Vec3> x(probes_v.size());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = t * probes_v[k];

  std::vector<std::vector<double>> charges;
  const auto blocks = snapshot_blocks(snap, species, charges);
  const double t2 = t * t;
  const double t3 = t2 * t;
  const auto E = softened_field_sum(x, blocks, t * profile.eps_v);
  const auto G = softened_gradient_sum(x, blocks, t * profile.eps_v);
  const auto rho = density_estimate(x, blocks, t * profile.h_v);
  const auto j = current_estimate(x, blocks, t * profile.h_v);

  const auto E_inf = profile.softened_field(probes_v);
  const auto G_inf = profile.softened_gradient(probes_v);
  const auto P_inf = profile.smoothed_density(probes_v);

  Residuals r;
  for (std::size_t k = 0; k < x.size(); ++k) {
    r.E = std::max(r.E, norm(t2 * E[k] - E_inf[k]));
    Mat3 g = G[k];
    g *= t3;
    r.gradE = std::max(r.gradE, norm(g - G_inf[k]));
    r.rho = std::max(r.rho, std::abs(t3 * rho[k] - P_inf[k]));
    r.j = std::max(r.j, norm(t3 * j[k] - P_inf[k] * probes_v[k]));
  }
  return r;
}

// ---------------------------------------------------------------------------

ConservationRecord conservation_report(const Snapshot& snap, std::span<const SpeciesSpec> species,
                                       const ForceModel& force) {
  ConservationRecord c;
  c.t = snap.t;
  const auto& e = snap.ensemble;
  for (std::size_t a = 0; a < e.species.size(); ++a) {
    const auto& s = e.species[a];
    c.species_number.push_back(species_number(s));
    Vec3 momentum;
    double kinetic = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      momentum += s.weight[i] * s.v[i];
      kinetic += s.weight[i] * norm2(s.v[i]);
    }
    c.momentum += species[a].mass * momentum;
    c.kinetic += 0.5 * species[a].mass * kinetic;
  }
  c.net_charge = net_charge(e, species);
  c.potential = e.total_count() > 1 ? force.potential_energy(e) : 0.0;
  c.total = c.kinetic + c.potential;
  return c;
}

SupportExtents support_extents(const Snapshot& snap) {
  SupportExtents out;
  std::vector<Vec3> y;
  for (const auto& s : snap.ensemble.species) {
    out.vel_diameter = std::max(out.vel_diameter, max_pairwise_distance(s.v));
    for (std::size_t i = 0; i < s.size(); ++i) y.push_back(compute_Y(snap.t, s.x[i], s.v[i]));
  }
  out.mu = y.empty() ? 0.0 : bounding_box(y).volume();
  return out;
}

// ---------------------------------------------------------------------------

TrajectoryFrame make_frame(const Snapshot& snap, const AsymptoticProfile& profile) {
  if (!(snap.t >= 1.0)) throw DomainError("trajectory frames need t >= 1");
  TrajectoryFrame f;
  f.t = snap.t;
  const double lt = std::log(snap.t);
  for (std::size_t a = 0; a < snap.ensemble.species.size(); ++a) {
    const auto& s = snap.ensemble.species[a];
    std::vector<Vec3> Y(s.size()), Z(s.size());
    const auto field = profile.field_excluding_self(a, s.v);
    for (std::size_t i = 0; i < s.size(); ++i) {
      Y[i] = compute_Y(snap.t, s.x[i], s.v[i]);
      Z[i] = Y[i] + (profile.z_prefactor[a] * lt) * field[i];
    }
    f.X.push_back(s.x);
    f.V.push_back(s.v);
    f.Y.push_back(std::move(Y));
    f.Z.push_back(std::move(Z));
  }
  return f;
}

TrajectoryRecord trajectory_record(std::span<const TrajectoryFrame> frames, std::size_t species,
                                   std::size_t index, std::uint64_t id) {
  TrajectoryRecord r;
  r.id = id;
  for (const auto& f : frames) {
    r.times.push_back(f.t);
    r.X.push_back(f.X.at(species).at(index));
    r.V.push_back(f.V[species][index]);
    r.Y.push_back(f.Y[species][index]);
    r.Z.push_back(f.Z[species][index]);
  }
  return r;
}

namespace {

double max_increment(const std::vector<std::vector<Vec3>>& later, const std::vector<std::vector<Vec3>>& earlier) {
  double best = 0.0;
  for (std::size_t a = 0; a < later.size(); ++a)
    for (std::size_t i = 0; i < later[a].size(); ++i)
      best = std::max(best, norm(later[a][i] - earlier[a][i]));
  return best;
}

std::size_t doubling_pairs(std::span<const TrajectoryFrame> frames) {
  std::size_t n = 0;
  for (std::size_t k = 0; k < frames.size(); ++k)
    for (std::size_t m = k + 1; m < frames.size(); ++m)
      if (same_time(frames[m].t, 2.0 * frames[k].t)) {
        ++n;
        break;
      }
  return n;
}

}  // namespace

CauchyTable convergence_probe(std::span<const TrajectoryFrame> frames, double t_min) {
  if (frames.size() < 4) throw DomainError("convergence probe needs at least 4 dyadic times");
  CauchyTable table;
  for (std::size_t k = 0; k < frames.size(); ++k)
    for (std::size_t m = k + 1; m < frames.size(); ++m)
      if (same_time(frames[m].t, 2.0 * frames[k].t)) {
        table.rows.push_back({frames[k].t, max_increment(frames[m].V, frames[k].V),
                              max_increment(frames[m].Y, frames[k].Y), max_increment(frames[m].Z, frames[k].Z)});
        break;
      }
  if (table.rows.size() < 3) throw DomainError("convergence probe needs at least 4 dyadic times");
  std::vector<double> t, dv, dy, dz;
  for (const auto& r : table.rows) {
    t.push_back(r.t);
    dv.push_back(r.d_V);
    dy.push_back(r.d_Y);
    dz.push_back(r.d_Z);
  }
  const double inf = std::numeric_limits<double>::infinity();
  table.slope_V = log_log_slope(t, dv, t_min, inf);
  table.slope_Y = log_log_slope(t, dy, t_min, inf);
  table.slope_Z = log_log_slope(t, dz, t_min, inf);
  return table;
}

std::vector<ScatteringRow> scattering_residual(std::span<const TrajectoryFrame> frames) {
  if (frames.empty()) throw DomainError("scattering residual needs trajectory records");
  const auto& last = frames.back();
  std::vector<ScatteringRow> rows;
  for (const auto& f : frames) {
    ScatteringRow row;
    row.t = f.t;
    for (std::size_t a = 0; a < f.Z.size(); ++a) {
      double best = 0.0;
      for (std::size_t i = 0; i < f.Z[a].size(); ++i) {
        const double d2 = norm2(f.Z[a][i] - last.Z[a][i]) + norm2(f.V[a][i] - last.V[a][i]);
        best = std::max(best, std::sqrt(d2));
      }
      row.per_species.push_back(best);
      row.combined = std::max(row.combined, best);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------

RunAnalysis analyze_run(const SimulationConfig& config, std::span<const Snapshot> snapshots) {
  std::vector<const Snapshot*> sorted;
  for (const auto& s : snapshots) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(), [](const Snapshot* a, const Snapshot* b) { return a->t < b->t; });
  std::vector<const Snapshot*> late;
  for (const auto* s : sorted)
    if (s->t >= 1.0) late.push_back(s);
  if (late.empty()) throw DomainError("analysis needs at least one snapshot with t >= 1");

  RunAnalysis out;
  const auto force = make_force_model(config);
  out.profile = build_profile(*late.back(), config);
  const auto& profile = out.profile;

  auto& series = out.series;
  for (const auto& s : config.species) series.species_names.push_back(s.name);
  series.initial = conservation_report(*sorted.front(), config.species, *force);

  std::vector<const ParticleEnsemble*> ensembles;
  for (const auto* s : late) ensembles.push_back(&s->ensemble);
  const auto grid = covering_velocity_grid(ensembles, config.velocity_cells);
  out.final_density = spatial_average(late.back()->ensemble, config.species, grid, Deposit::CloudInCell);

  const auto probes_v = probe_grid(profile.velocity_box(), config.probe_grid);
  for (const auto& e : profile.softened_field(probes_v))
    series.max_limit_field = std::max(series.max_limit_field, norm(e));

  std::vector<TrajectoryFrame> frames;
  for (const auto* snap : late) {
    DiagnosticsRow row;
    row.t = snap->t;
    const auto queries = sup_query_points(snap->ensemble, config.probe_grid);
    const auto fields = evaluate_fields(*snap, *force, queries, profile.eps_v, profile.h_v);
    const auto sup = sup_norms(fields);
    row.sup_E = sup.E;
    row.sup_gradE = sup.gradE;
    row.sup_rho = sup.rho;
    row.sup_j = sup.j;
    const auto extents = support_extents(*snap);
    row.mu = extents.mu;
    row.vel_diam = extents.vel_diameter;
    const auto res = self_similar_residuals(*snap, config.species, profile, probes_v);
    row.res_E = res.E;
    row.res_gradE = res.gradE;
    row.res_rho = res.rho;
    row.res_j = res.j;
    row.conservation = conservation_report(*snap, config.species, *force);
    series.rows.push_back(std::move(row));

    const auto density = spatial_average(snap->ensemble, config.species, grid, Deposit::CloudInCell);
    ConvergenceRow conv;
    conv.t = snap->t;
    conv.d_V = conv.d_Y = conv.d_Z = kNaN;
    conv.F_dev = max_species_deviation(density, out.final_density);
    for (double p : density.net) conv.P_sup = std::max(conv.P_sup, std::abs(p));
    series.convergence.push_back(conv);

    frames.push_back(make_frame(*snap, profile));
  }

  const auto scattering = scattering_residual(frames);
  for (std::size_t k = 0; k < frames.size(); ++k) series.convergence[k].scatter = scattering[k].combined;
  if (doubling_pairs(frames) >= 3) {
    out.cauchy = convergence_probe(frames);
    for (const auto& r : out.cauchy.rows)
      for (auto& c : series.convergence)
        if (same_time(c.t, r.t)) {
          c.d_V = r.d_V;
          c.d_Y = r.d_Y;
          c.d_Z = r.d_Z;
        }
  }
  return out;
}

double relative_energy_drift(const DiagnosticsSeries& series) {
  const double e0 = series.initial.total;
  double worst = 0.0;
  for (const auto& r : series.rows) worst = std::max(worst, std::abs(r.conservation.total - e0));
  return e0 != 0.0 ? worst / std::abs(e0) : worst;
}

}  // namespace vsl
