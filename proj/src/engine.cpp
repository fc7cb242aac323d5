#include "vsl/engine.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vsl/config.hpp"
#include "vsl/errors.hpp"
#include "vsl/io.hpp"

namespace vsl {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'V', 'S', 'L', 'C', 'K', 'P', 'T', '\0'};
constexpr char kEndMarker[8] = {'V', 'S', 'L', 'E', 'N', 'D', '\0', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

double max_speed(const ParticleEnsemble& e) {
  double best = 0.0;
  for (const auto& s : e.species)
    for (const auto& v : s.v) best = std::max(best, norm2(v));
  return std::sqrt(best);
}

struct Speeding {
  std::size_t species{0};
  std::uint64_t id{0};
  double speed{0.0};
};

Speeding fastest(const ParticleEnsemble& e) {
  Speeding out;
  for (std::size_t a = 0; a < e.species.size(); ++a)
    for (std::size_t i = 0; i < e.species[a].size(); ++i) {
      const double s = norm(e.species[a].v[i]);
      if (s > out.speed || !std::isfinite(s)) {
        out = {a, e.species[a].id[i], s};
        if (!std::isfinite(s)) return out;
      }
    }
  return out;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void f64(double v) { bytes(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void vec3s(const std::vector<Vec3>& v) {
    u64(v.size());
    for (const auto& p : v) {
      f64(p.x);
      f64(p.y);
      f64(p.z);
    }
  }
  void f64s(const std::vector<double>& v) {
    u64(v.size());
    for (double d : v) f64(d);
  }
  void u64s(const std::vector<std::uint64_t>& v) {
    u64(v.size());
    for (auto d : v) u64(d);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::uint64_t file_size) : in_(in), remaining_(file_size) {}
  void bytes(void* p, std::size_t n) {
    if (n > remaining_) throw FormatError("checkpoint truncated");
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw FormatError("checkpoint truncated");
    remaining_ -= n;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, sizeof v);
    return v;
  }
  std::size_t count(std::size_t element_size) {
    const std::uint64_t n = u64();
    if (element_size > 0 && n > remaining_ / element_size) throw FormatError("checkpoint truncated");
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    std::string s(count(1), '\0');
    bytes(s.data(), s.size());
    return s;
  }
  std::vector<Vec3> vec3s() {
    std::vector<Vec3> v(count(24));
    for (auto& p : v) p = {f64(), f64(), f64()};
    return v;
  }
  std::vector<double> f64s() {
    std::vector<double> v(count(8));
    for (auto& d : v) d = f64();
    return v;
  }
  std::vector<std::uint64_t> u64s() {
    std::vector<std::uint64_t> v(count(8));
    for (auto& d : v) d = u64();
    return v;
  }
  std::uint64_t remaining() const { return remaining_; }

 private:
  std::istream& in_;
  std::uint64_t remaining_;
};

void write_record(Writer& w, const ConservationRecord& c) {
  w.f64(c.t);
  w.f64s(c.species_number);
  w.f64(c.net_charge);
  w.f64(c.momentum.x);
  w.f64(c.momentum.y);
  w.f64(c.momentum.z);
  w.f64(c.kinetic);
  w.f64(c.potential);
  w.f64(c.total);
}

ConservationRecord read_record(Reader& r) {
  ConservationRecord c;
  c.t = r.f64();
  c.species_number = r.f64s();
  c.net_charge = r.f64();
  c.momentum.x = r.f64();
  c.momentum.y = r.f64();
  c.momentum.z = r.f64();
  c.kinetic = r.f64();
  c.potential = r.f64();
  c.total = r.f64();
  return c;
}

void write_run_outputs(const fs::path& dir, const RunAnalysis& analysis, const Snapshot& final_snapshot) {
  write_diagnostics(dir / "diagnostics.csv", analysis.series);
  write_cauchy(dir / "cauchy.csv", analysis.series);
  write_profile(dir / "profile.csv", analysis.profile, final_snapshot.ensemble);
}

}  // namespace

void configure_threads(const SimulationConfig& config) {
  int threads = config.thread_hint;
  if (const char* env = std::getenv("VSL_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) threads = static_cast<int>(n);
  }
  if (threads > 0) omp_set_num_threads(threads);
}

// ---------------------------------------------------------------------------

Simulation::Simulation(SimulationConfig config) {
  state_.config = std::move(config);
  for (const auto& s : state_.config.species) state_.rng_seeds.push_back(s.seed);
  state_.ensemble = sample_initial(state_.config);
  state_.initial_max_speed = max_speed(state_.ensemble);
  force_ = make_force_model(state_.config);
  record_conservation();
}

Simulation::Simulation(RunState state) : state_(std::move(state)) {
  force_ = make_force_model(state_.config);
}

void Simulation::record_conservation() {
  state_.conservation.push_back(conservation_report(snapshot(), state_.config.species, *force_));
}

Snapshot Simulation::advance() {
  if (done()) throw std::logic_error("simulation already reached t_end");
  const auto start = std::chrono::steady_clock::now();
  const double t_b = state_.config.snapshot_times[state_.next_snapshot];
  const double limit = kBlowUpFactor * std::max(state_.initial_max_speed, 1e-300);
  LeapfrogIntegrator integrator(*force_);
  const StepPlan plan = plan_interval(state_.config, *force_, state_.ensemble, state_.t, t_b);
  for (std::size_t k = 0; k < plan.steps; ++k) {
    integrator.step(state_.ensemble, {}, plan.dt);
    ++state_.steps;
    state_.t = k + 1 == plan.steps ? t_b : state_.t + plan.dt;
    const auto worst = fastest(state_.ensemble);
    if (!(worst.speed <= limit)) {
      std::ostringstream os;
      os << "blow-up guard: |v| = " << worst.speed << " exceeds " << kBlowUpFactor
         << " x initial max speed (" << state_.initial_max_speed << ") at t = " << state_.t
         << " (species " << worst.species << ", id " << worst.id << ", step " << state_.steps << ")";
      throw RuntimeFailure(os.str());
    }
  }
  state_.t = t_b;
  ++state_.next_snapshot;
  record_conservation();
  state_.wall_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return snapshot();
}

// ---------------------------------------------------------------------------

namespace {

RunResult drive(Simulation& sim, const RunOptions& options, bool emit_current) {
  RunResult result;
  const auto& config = sim.state().config;
  configure_threads(config);
  if (options.out_dir) {
    fs::create_directories(*options.out_dir);
    std::ofstream cfg(*options.out_dir / "config.cfg");
    cfg << to_config_text(config);
    if (!cfg) throw RuntimeFailure("cannot write config copy");
  }
  auto emit = [&](const Snapshot& snap) {
    if (options.out_dir) {
      const std::size_t index = sim.state().next_snapshot;
      write_snapshot(*options.out_dir / snapshot_filename(index), snap, config.engine);
    }
    if (options.checkpoint) checkpoint_save(sim.state(), *options.checkpoint);
    if (options.on_snapshot) options.on_snapshot(snap, sim.state());
    result.snapshots.push_back(snap);
  };
  if (emit_current) emit(sim.snapshot());
  while (!sim.done()) {
    if (options.stop_after && sim.state().t >= *options.stop_after) break;
    Snapshot snap;
    try {
      snap = sim.advance();
    } catch (const RuntimeFailure&) {
      if (options.out_dir)
        write_snapshot(*options.out_dir / "blowup_dump.csv", sim.snapshot(), config.engine);
      throw;
    }
    emit(snap);
  }
  result.final_state = sim.state();
  if (sim.done()) {
    std::vector<Snapshot> all;
    if (options.out_dir) all = read_snapshots(*options.out_dir);
    else all = result.snapshots;
    result.analysis = analyze_run(config, all);
    if (options.out_dir) write_run_outputs(*options.out_dir, *result.analysis, all.back());
  }
  return result;
}

}  // namespace

RunResult run_simulation(const SimulationConfig& config, const RunOptions& options) {
  Simulation sim(config);
  return drive(sim, options, true);
}

RunResult resume_simulation(const RunState& state, const RunOptions& options) {
  Simulation sim(state);
  return drive(sim, options, false);
}

// ---------------------------------------------------------------------------

void checkpoint_save(const RunState& state, const fs::path& path) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write checkpoint " + tmp.string());
    Writer w(out);
    w.bytes(kMagic, sizeof kMagic);
    w.bytes(&kCheckpointVersion, sizeof kCheckpointVersion);
    w.str(to_config_text(state.config));
    w.f64(state.t);
    w.u64(state.next_snapshot);
    w.u64(state.steps);
    w.f64(state.wall_seconds);
    w.f64(state.initial_max_speed);
    w.u64s(state.rng_seeds);
    w.u64(state.ensemble.species.size());
    for (const auto& s : state.ensemble.species) {
      w.u64s(s.id);
      w.vec3s(s.x);
      w.vec3s(s.v);
      w.f64s(s.weight);
    }
    w.u64(state.conservation.size());
    for (const auto& c : state.conservation) write_record(w, c);
    w.bytes(kEndMarker, sizeof kEndMarker);
    out.flush();
    if (!out) throw RuntimeFailure("checkpoint write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

RunState checkpoint_load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  Reader r(in, fs::file_size(path));
  char magic[sizeof kMagic];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw FormatError("not a checkpoint: wrong magic header");
  std::uint32_t version = 0;
  r.bytes(&version, sizeof version);
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  RunState s;
  try {
    s.config = parse_config(r.str());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
  s.t = r.f64();
  s.next_snapshot = r.u64();
  s.steps = r.u64();
  s.wall_seconds = r.f64();
  s.initial_max_speed = r.f64();
  s.rng_seeds = r.u64s();
  s.ensemble.species.resize(r.count(32));
  for (auto& sp : s.ensemble.species) {
    sp.id = r.u64s();
    sp.x = r.vec3s();
    sp.v = r.vec3s();
    sp.weight = r.f64s();
    if (sp.x.size() != sp.id.size() || sp.v.size() != sp.id.size() || sp.weight.size() != sp.id.size())
      throw FormatError("checkpoint arrays have inconsistent lengths");
  }
  s.conservation.resize(r.count(64));
  for (auto& c : s.conservation) c = read_record(r);
  char end[sizeof kEndMarker];
  r.bytes(end, sizeof end);
  if (std::memcmp(end, kEndMarker, sizeof kEndMarker) != 0 || r.remaining() != 0)
    throw FormatError("checkpoint end marker missing");
  if (s.ensemble.species.size() != s.config.species.size() ||
      s.next_snapshot > s.config.snapshot_times.size())
    throw FormatError("checkpoint state inconsistent with its configuration");
  return s;
}

}  // namespace vsl
