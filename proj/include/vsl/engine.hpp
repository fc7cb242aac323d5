#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vsl/core_model.hpp"
#include "vsl/diagnostics.hpp"
#include "vsl/dynamics.hpp"

namespace vsl {

/// Everything needed to continue a run. Checkpoints are taken at snapshot times only,
/// where the integrator cache is dropped anyway, so a resumed run is bitwise identical.
struct RunState {
  SimulationConfig config;
  double t{0.0};
  std::size_t next_snapshot{0};  // index into config.snapshot_times
  ParticleEnsemble ensemble;
  std::vector<ConservationRecord> conservation;  // one per emitted snapshot, t = 0 first
  std::vector<std::uint64_t> rng_seeds;          // sampling is the only consumer of randomness
  std::uint64_t steps{0};
  double wall_seconds{0.0};
  double initial_max_speed{0.0};

  friend bool operator==(const RunState&, const RunState&) = default;
};

/// Blow-up guard factor on max |v| relative to the initial maximum.
inline constexpr double kBlowUpFactor = 1e3;

class Simulation {
 public:
  /// Samples the initial ensemble; state() is at t = 0.
  explicit Simulation(SimulationConfig config);
  /// Continues from a loaded state.
  explicit Simulation(RunState state);

  bool done() const { return state_.next_snapshot >= state_.config.snapshot_times.size(); }
  /// Integrates to the next snapshot time and returns the snapshot there.
  /// Throws RuntimeFailure if the blow-up guard trips; state() is then the offending state.
  Snapshot advance();
  Snapshot snapshot() const { return {state_.t, state_.ensemble}; }
  const RunState& state() const { return state_; }
  const ForceModel& force() const { return *force_; }

 private:
  void record_conservation();

  RunState state_;
  std::unique_ptr<ForceModel> force_;
};

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // snapshot, diagnostics and profile files
  std::optional<std::filesystem::path> checkpoint;  // written after every snapshot
  std::optional<double> stop_after;  // stop at the first snapshot time >= stop_after
  std::function<void(const Snapshot&, const RunState&)> on_snapshot;
};

struct RunResult {
  std::vector<Snapshot> snapshots;  // t = 0 first
  std::optional<RunAnalysis> analysis;  // present when the run reached t_end
  RunState final_state;
};

RunResult run_simulation(const SimulationConfig& config, const RunOptions& options = {});
/// Continues a checkpointed run; snapshots before state.t are not re-emitted.
RunResult resume_simulation(const RunState& state, const RunOptions& options = {});

void checkpoint_save(const RunState& state, const std::filesystem::path& path);
/// Throws FormatError on wrong magic, version mismatch or truncation; nothing is returned
/// unless the whole file parsed.
RunState checkpoint_load(const std::filesystem::path& path);

/// Applies VSL_THREADS (else thread_hint when positive) to the OpenMP runtime.
void configure_threads(const SimulationConfig& config);

}  // namespace vsl
