#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "arw/graph.hpp"
#include "arw/paths.hpp"
#include "arw/rng.hpp"

namespace arw::engine {

using ParticleId = std::uint32_t;

enum class Mode : std::uint8_t { Active, Sleeping, Exited };

/// Label (v, i): the i-th particle starting at vertex v.
struct Origin {
  VertexId vertex = 0;
  std::uint32_t index = 0;

  auto operator<=>(const Origin&) const = default;
};

/// Law of the initial particle count N_v, i.i.d. over non-sink vertices.
struct InitialLaw {
  enum class Kind { Poisson, Bernoulli, Deterministic };
  Kind kind = Kind::Poisson;
  double parameter = 0.5;

  static InitialLaw poisson(double mean);
  static InitialLaw bernoulli(double p);
  static InitialLaw deterministic(int k);
  /// Parses `poisson:z`, `bern:p`, `det:k`.
  static InitialLaw parse(std::string_view text);
  std::string to_string() const;

  void validate() const;
  double mean() const noexcept { return parameter; }
  std::uint32_t sample(Rng& rng) const;
};

/// Occupancy of one site as seen by an interaction rule.
struct LocalSite {
  VertexId vertex;
  int distance;
  std::uint32_t active;
  bool sleeping;
};

using RateFunction = std::function<double(std::span<const LocalSite> view, double mark)>;

/// Sets the rate at which an Active particle advances along its putative
/// path, from the occupancy within `radius` of it and its U[0,1] mark.
/// Lone Active particles fall asleep at `sleep_rate` in real time.
class InteractionRule {
 public:
  static constexpr double kMaxRateCeiling = 1e6;

  /// Classical ARW: progression rate 1 while Active.
  static InteractionRule standard(double sleep_rate);

  /// A user-supplied local rule. `max_rate` is the declared bound r_max and
  /// must not exceed kMaxRateCeiling.
  static InteractionRule custom(int radius, RateFunction rate, double sleep_rate,
                                double max_rate = kMaxRateCeiling);

  /// Rate 1 / (1 + strength * m), m = other Active particles within `radius`.
  static InteractionRule crowding(double sleep_rate, int radius, double strength);

  int radius() const noexcept { return radius_; }
  double sleep_rate() const noexcept { return sleep_rate_; }
  double max_rate() const noexcept { return max_rate_; }
  bool is_constant() const noexcept { return !rate_; }

  /// Evaluates the rule; throws std::domain_error if the result leaves [0, max_rate].
  double rate(std::span<const LocalSite> view, double mark) const;

  /// Same rule with a different sleep rate.
  InteractionRule with_sleep_rate(double sleep_rate) const;

 private:
  InteractionRule(int radius, RateFunction rate, double sleep_rate, double max_rate);

  int radius_ = 0;
  RateFunction rate_;
  double sleep_rate_ = 0.0;
  double max_rate_ = 1.0;
};

struct ParticleState {
  Origin origin;
  VertexId position = 0;
  Mode mode = Mode::Active;
  paths::PutativePath path{0};
  std::size_t cursor = 0;            // path[cursor].vertex == position
  double remaining_inner = 0.0;      // inner hold left at anchor_time
  double anchor_time = 0.0;
  double rate = 1.0;
  double mark = 0.0;
  std::uint64_t jumps_made = 0;
  double slept_at = 0.0;             // last time the particle fell asleep
  Rng path_rng;
  std::uint32_t jump_generation = 0;
  std::uint32_t sleep_generation = 0;
};

enum class EventKind : std::uint8_t { Jump = 0, SleepAttempt = 1 };

struct ScheduledEvent {
  double time;
  ParticleId particle;
  EventKind kind;
  std::uint32_t generation;
};

enum class Outcome : std::uint8_t { Moved, Exited, FellAsleep, SleepNoOp };

struct EventRecord {
  double time = 0.0;
  ParticleId particle = 0;
  EventKind kind = EventKind::Jump;
  Outcome outcome = Outcome::Moved;
  VertexId from = 0;
  VertexId to = 0;
  std::optional<ParticleId> woken;
};

struct VertexOccupancy {
  std::uint32_t active = 0;
  std::optional<ParticleId> sleeper;

  std::uint32_t total() const noexcept { return active + (sleeper ? 1u : 0u); }
};

enum class StopReason { Absorbed, TimeLimit, EventBudget, Frozen };
std::string_view to_string(StopReason reason);

/// Stops at the first satisfied condition. Absorption always stops a run
/// since an absorbed state has no pending events.
struct StopCondition {
  std::optional<double> time;
  std::optional<std::uint64_t> max_events;

  static StopCondition at_time(double t) { return {t, std::nullopt}; }
  static StopCondition absorbed(std::uint64_t max_events) { return {std::nullopt, max_events}; }
  static StopCondition events(std::uint64_t m) { return {std::nullopt, m}; }
  /// Parses `time:T`, `absorbed`, `events:M`; `absorbed` keeps `fallback_budget`.
  static StopCondition parse(std::string_view text, std::uint64_t fallback_budget);
};

struct ParticleRecord {
  Origin origin;
  VertexId position;
  Mode mode;
  std::uint64_t jumps;
  std::optional<double> fixation_time;  // set iff Sleeping at stop
};

struct RunReport {
  bool absorbed = false;
  StopReason stop_reason = StopReason::Frozen;
  double final_time = 0.0;
  std::optional<double> absorption_time;
  std::uint64_t events = 0;
  std::size_t n_particles = 0;
  std::size_t n_active = 0;
  std::size_t n_sleeping = 0;
  std::size_t n_exited = 0;
  /// Last time an Active particle occupied v, for vertices with no Active
  /// occupant at stop; empty otherwise.
  std::vector<std::optional<double>> vertex_fixation_time;
  std::vector<ParticleRecord> particles;
  std::vector<std::uint64_t> odometer;
  std::uint64_t max_odometer = 0;
};

/// One replica of the generalized ARW. Strictly single-threaded; movable
/// between threads.
class Simulation {
 public:
  /// `counts[v]` particles start at v, all Active. `key` seeds every random
  /// source of the replica: the initial marks, the sleep clocks, and one
  /// stream per particle for its putative path.
  Simulation(GraphPtr graph, std::span<const std::uint32_t> counts,
             paths::PathDistribution dist, InteractionRule rule, std::uint64_t key);

  /// N_v i.i.d. from `law` on non-sink vertices, zero on sinks.
  static std::vector<std::uint32_t> sample_counts(const FiniteGraph& g, const InitialLaw& law,
                                                  Rng& rng);

  /// Executes the next live event; nullopt if none is pending.
  std::optional<EventRecord> step();
  RunReport run_until(const StopCondition& stop);
  bool is_absorbed() const noexcept { return active_total_ == 0; }

  /// Time-changes the particle's remaining inner hold to the new rate from
  /// now on. Rate 0 removes its Jump event until a later change.
  void rate_change_resample(ParticleId id, double new_rate);

  /// First n distinct vertices of the particle's putative path.
  paths::DistinctPrefix putative_first_distinct(ParticleId id, std::size_t n);

  /// Id of particle (v, i), if present.
  std::optional<ParticleId> find(Origin origin) const;

  RunReport report(StopReason reason) const;

  /// Throws std::logic_error describing the first broken invariant.
  void check_invariants() const;

  /// Deterministic text dump of the full state, including RNG states.
  std::string serialize() const;

  double now() const noexcept { return now_; }
  std::uint64_t events() const noexcept { return events_; }
  std::size_t particle_count() const noexcept { return particles_.size(); }
  std::size_t active_count() const noexcept { return active_total_; }
  const std::vector<ParticleState>& particles() const noexcept { return particles_; }
  const VertexOccupancy& occupancy(VertexId v) const { return occupancy_.at(v); }
  const std::vector<std::uint64_t>& odometer() const noexcept { return odometer_; }
  const FiniteGraph& graph() const noexcept { return *graph_; }
  const InteractionRule& rule() const noexcept { return rule_; }
  std::size_t pending_events() const noexcept { return queue_.size(); }

 private:
  bool is_live(const ScheduledEvent& e) const noexcept;
  void push(const ScheduledEvent& e);
  void drop_stale_top();
  void compact_queue();
  void schedule_jump(ParticleId id);
  void schedule_sleep(ParticleId id);
  void ensure_next_step(ParticleState& p);
  double evaluate_rate(const ParticleState& p);
  void refresh_rates_near(VertexId v);
  void remove_from_list(VertexId v, ParticleId id);
  EventRecord execute_jump(ParticleId id);
  EventRecord execute_sleep(ParticleId id);

  GraphPtr graph_;
  paths::PathDistribution dist_;
  InteractionRule rule_;
  std::uint64_t key_;
  Rng clock_rng_;

  std::vector<ParticleState> particles_;
  std::vector<VertexOccupancy> occupancy_;
  std::vector<std::vector<ParticleId>> residents_;  // maintained only for non-constant rules
  std::vector<std::vector<BallEntry>> balls_;
  std::vector<LocalSite> view_buffer_;
  std::vector<ScheduledEvent> queue_;
  std::vector<std::uint64_t> odometer_;
  std::vector<double> last_active_;
  std::size_t active_total_ = 0;
  std::size_t exited_total_ = 0;
  double now_ = 0.0;
  std::uint64_t events_ = 0;
};

/// Samples N_v from `law` with the replica's init stream and builds the system.
Simulation init_system(GraphPtr graph, const InitialLaw& law, paths::PathDistribution dist,
                       InteractionRule rule, std::uint64_t key);

/// Places one particle at each listed vertex (repeats allowed).
Simulation init_with_placement(GraphPtr graph, std::span<const VertexId> placement,
                               paths::PathDistribution dist, InteractionRule rule,
                               std::uint64_t key);

}  // namespace arw::engine
