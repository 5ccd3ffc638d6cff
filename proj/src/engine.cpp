#include "arw/engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace arw::engine {

namespace {

double parse_number(std::string_view text, std::string_view what) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw std::invalid_argument(std::string(what) + ": not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::string format_number(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

// Min-heap order on (time, particle, kind).
bool later(const ScheduledEvent& a, const ScheduledEvent& b) noexcept {
  return std::tie(a.time, a.particle, a.kind) > std::tie(b.time, b.particle, b.kind);
}

void hex(std::ostream& os, double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", x);
  os << buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// InitialLaw

InitialLaw InitialLaw::poisson(double mean) {
  InitialLaw law{Kind::Poisson, mean};
  law.validate();
  return law;
}

InitialLaw InitialLaw::bernoulli(double p) {
  InitialLaw law{Kind::Bernoulli, p};
  law.validate();
  return law;
}

InitialLaw InitialLaw::deterministic(int k) {
  InitialLaw law{Kind::Deterministic, static_cast<double>(k)};
  law.validate();
  return law;
}

InitialLaw InitialLaw::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("law: expected 'poisson:z', 'bern:p' or 'det:k', got '" +
                                std::string(text) + "'");
  }
  const auto kind = text.substr(0, colon);
  const double value = parse_number(text.substr(colon + 1), "law");
  if (kind == "poisson") return poisson(value);
  if (kind == "bern") return bernoulli(value);
  if (kind == "det") {
    if (value != std::floor(value)) throw std::invalid_argument("law: det:k needs an integer k");
    return deterministic(static_cast<int>(value));
  }
  throw std::invalid_argument("law: unknown kind '" + std::string(kind) + "'");
}

std::string InitialLaw::to_string() const {
  switch (kind) {
    case Kind::Poisson: return "poisson:" + format_number(parameter);
    case Kind::Bernoulli: return "bern:" + format_number(parameter);
    case Kind::Deterministic: return "det:" + format_number(parameter);
  }
  return {};
}

void InitialLaw::validate() const {
  switch (kind) {
    case Kind::Poisson:
      if (!(parameter > 0.0) || parameter > 500.0) {
        throw std::invalid_argument("law: poisson mean must be in (0, 500]");
      }
      break;
    case Kind::Bernoulli:
      if (!(parameter > 0.0) || parameter > 1.0) {
        throw std::invalid_argument("law: bernoulli p must be in (0, 1]");
      }
      break;
    case Kind::Deterministic:
      if (!(parameter >= 0.0) || parameter != std::floor(parameter) || parameter > 1e6) {
        throw std::invalid_argument("law: det:k needs an integer k >= 0");
      }
      break;
  }
}

std::uint32_t InitialLaw::sample(Rng& rng) const {
  switch (kind) {
    case Kind::Poisson: return static_cast<std::uint32_t>(rng.poisson(parameter));
    case Kind::Bernoulli: return rng.bernoulli(parameter) ? 1u : 0u;
    case Kind::Deterministic: return static_cast<std::uint32_t>(parameter);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// InteractionRule

InteractionRule::InteractionRule(int radius, RateFunction rate, double sleep_rate, double max_rate)
    : radius_(radius), rate_(std::move(rate)), sleep_rate_(sleep_rate), max_rate_(max_rate) {
  if (radius_ < 0) throw std::invalid_argument("rule: locality radius must be >= 0");
  if (!(sleep_rate_ >= 0.0) || !std::isfinite(sleep_rate_)) {
    throw std::invalid_argument("rule: sleep rate must be finite and >= 0");
  }
  if (!(max_rate_ > 0.0) || max_rate_ > kMaxRateCeiling) {
    throw std::invalid_argument("rule: max rate must be in (0, 1e6]");
  }
}

InteractionRule InteractionRule::standard(double sleep_rate) {
  return InteractionRule(0, nullptr, sleep_rate, 1.0);
}

InteractionRule InteractionRule::custom(int radius, RateFunction rate, double sleep_rate,
                                        double max_rate) {
  if (!rate) throw std::invalid_argument("rule: custom rule needs a rate function");
  return InteractionRule(radius, std::move(rate), sleep_rate, max_rate);
}

InteractionRule InteractionRule::crowding(double sleep_rate, int radius, double strength) {
  if (!(strength >= 0.0)) throw std::invalid_argument("rule: crowding strength must be >= 0");
  return custom(
      radius,
      [strength](std::span<const LocalSite> view, double) {
        std::uint32_t active = 0;
        for (const auto& site : view) active += site.active;
        const double others = active > 0 ? static_cast<double>(active - 1) : 0.0;
        return 1.0 / (1.0 + strength * others);
      },
      sleep_rate, 1.0);
}

double InteractionRule::rate(std::span<const LocalSite> view, double mark) const {
  if (!rate_) return 1.0;
  const double r = rate_(view, mark);
  if (!(r >= 0.0) || r > max_rate_) {
    throw std::domain_error("rule: progression rate " + format_number(r) + " outside [0, " +
                            format_number(max_rate_) + "]");
  }
  return r;
}

InteractionRule InteractionRule::with_sleep_rate(double sleep_rate) const {
  return InteractionRule(radius_, rate_, sleep_rate, max_rate_);
}

// ---------------------------------------------------------------------------
// StopCondition

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Absorbed: return "absorbed";
    case StopReason::TimeLimit: return "time";
    case StopReason::EventBudget: return "events";
    case StopReason::Frozen: return "frozen";
  }
  return "unknown";
}

StopCondition StopCondition::parse(std::string_view text, std::uint64_t fallback_budget) {
  if (text == "absorbed") return absorbed(fallback_budget);
  if (text.starts_with("time:")) {
    const double t = parse_number(text.substr(5), "stop");
    if (!(t >= 0.0)) throw std::invalid_argument("stop: time must be >= 0");
    StopCondition s = at_time(t);
    s.max_events = fallback_budget;
    return s;
  }
  if (text.starts_with("events:")) {
    const double m = parse_number(text.substr(7), "stop");
    if (!(m >= 1.0) || m != std::floor(m)) {
      throw std::invalid_argument("stop: events:M needs an integer M >= 1");
    }
    return events(static_cast<std::uint64_t>(m));
  }
  throw std::invalid_argument("stop: expected 'time:T', 'absorbed' or 'events:M', got '" +
                              std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Simulation

Simulation::Simulation(GraphPtr graph, std::span<const std::uint32_t> counts,
                       paths::PathDistribution dist, InteractionRule rule, std::uint64_t key)
    : graph_(std::move(graph)),
      dist_(std::move(dist)),
      rule_(std::move(rule)),
      key_(key),
      clock_rng_(derive_key(key, {stream_tag::clock})) {
  if (!graph_) throw std::invalid_argument("simulation: null graph");
  const FiniteGraph& g = *graph_;
  const std::size_t n = g.vertex_count();
  dist_.validate_for(g);
  if (counts.size() != n) {
    throw std::invalid_argument("simulation: counts has " + std::to_string(counts.size()) +
                                " entries for " + std::to_string(n) + " vertices");
  }

  occupancy_.resize(n);
  odometer_.assign(n, 0);
  last_active_.assign(n, 0.0);
  if (!rule_.is_constant()) {
    residents_.resize(n);
    balls_ = balls(g, rule_.radius());
  }

  Rng mark_rng(derive_key(key, {stream_tag::init, 1}));
  for (VertexId v = 0; v < n; ++v) {
    if (counts[v] > 0 && g.is_sink(v)) {
      throw std::invalid_argument("simulation: particles placed on sink vertex " +
                                  std::to_string(v));
    }
    for (std::uint32_t i = 0; i < counts[v]; ++i) {
      ParticleState p;
      p.origin = {v, i};
      p.position = v;
      p.path = paths::PutativePath(v);
      p.path_rng = Rng(derive_key(key, {stream_tag::path, v, i}));
      p.mark = mark_rng.uniform();
      particles_.push_back(std::move(p));
      occupancy_[v].active += 1;
      if (!rule_.is_constant()) residents_[v].push_back(static_cast<ParticleId>(particles_.size() - 1));
    }
  }
  active_total_ = particles_.size();

  queue_.reserve(2 * particles_.size() + 16);
  for (ParticleId id = 0; id < particles_.size(); ++id) {
    auto& p = particles_[id];
    ensure_next_step(p);
    p.remaining_inner = p.path[1].entry_time - p.path[0].entry_time;
    p.anchor_time = 0.0;
    p.rate = evaluate_rate(p);
    schedule_jump(id);
    schedule_sleep(id);
  }
}

std::vector<std::uint32_t> Simulation::sample_counts(const FiniteGraph& g, const InitialLaw& law,
                                                     Rng& rng) {
  law.validate();
  std::vector<std::uint32_t> counts(g.vertex_count(), 0);
  for (VertexId v = 0; v < counts.size(); ++v) {
    if (!g.is_sink(v)) counts[v] = law.sample(rng);
  }
  return counts;
}

bool Simulation::is_live(const ScheduledEvent& e) const noexcept {
  const auto& p = particles_[e.particle];
  if (p.mode != Mode::Active) return false;
  return e.kind == EventKind::Jump ? e.generation == p.jump_generation
                                   : e.generation == p.sleep_generation;
}

void Simulation::push(const ScheduledEvent& e) {
  queue_.push_back(e);
  std::push_heap(queue_.begin(), queue_.end(), later);
  if (queue_.size() > 4 * particles_.size() + 1024) compact_queue();
}

void Simulation::compact_queue() {
  std::erase_if(queue_, [this](const ScheduledEvent& e) { return !is_live(e); });
  std::make_heap(queue_.begin(), queue_.end(), later);
}

void Simulation::drop_stale_top() {
  while (!queue_.empty() && !is_live(queue_.front())) {
    std::pop_heap(queue_.begin(), queue_.end(), later);
    queue_.pop_back();
  }
}

void Simulation::schedule_jump(ParticleId id) {
  auto& p = particles_[id];
  ++p.jump_generation;
  if (p.rate > 0.0) {
    push({now_ + p.remaining_inner / p.rate, id, EventKind::Jump, p.jump_generation});
  }
}

void Simulation::schedule_sleep(ParticleId id) {
  auto& p = particles_[id];
  ++p.sleep_generation;
  const double lambda = rule_.sleep_rate();
  if (lambda > 0.0) {
    push({now_ + clock_rng_.exponential(lambda), id, EventKind::SleepAttempt, p.sleep_generation});
  }
}

void Simulation::ensure_next_step(ParticleState& p) {
  while (p.path.size() <= p.cursor + 1) {
    if (paths::sample_next_step(dist_, *graph_, p.path, p.path_rng) == paths::StepOutcome::Exited) {
      throw std::logic_error("simulation: path extended from a sink");
    }
  }
}

double Simulation::evaluate_rate(const ParticleState& p) {
  if (rule_.is_constant()) return 1.0;
  view_buffer_.clear();
  for (const auto& entry : balls_[p.position]) {
    const auto& occ = occupancy_[entry.vertex];
    view_buffer_.push_back({entry.vertex, entry.distance, occ.active, occ.sleeper.has_value()});
  }
  return rule_.rate(view_buffer_, p.mark);
}

void Simulation::refresh_rates_near(VertexId v) {
  for (const auto& entry : balls_[v]) {
    for (const ParticleId id : residents_[entry.vertex]) {
      if (particles_[id].mode != Mode::Active) continue;
      const double r = evaluate_rate(particles_[id]);
      rate_change_resample(id, r);
    }
  }
}

void Simulation::remove_from_list(VertexId v, ParticleId id) {
  auto& list = residents_[v];
  list.erase(std::find(list.begin(), list.end(), id));
}

void Simulation::rate_change_resample(ParticleId id, double new_rate) {
  if (id >= particles_.size()) throw std::out_of_range("rate_change_resample: bad particle id");
  if (!(new_rate >= 0.0) || new_rate > rule_.max_rate()) {
    throw std::invalid_argument("rate_change_resample: rate " + format_number(new_rate) +
                                " outside [0, " + format_number(rule_.max_rate()) + "]");
  }
  auto& p = particles_[id];
  if (p.mode != Mode::Active) {
    p.rate = new_rate;
    return;
  }
  if (new_rate == p.rate) return;
  p.remaining_inner = std::max(0.0, p.remaining_inner - p.rate * (now_ - p.anchor_time));
  p.anchor_time = now_;
  p.rate = new_rate;
  schedule_jump(id);
}

paths::DistinctPrefix Simulation::putative_first_distinct(ParticleId id, std::size_t n) {
  auto& p = particles_.at(id);
  return paths::first_n_distinct(dist_, *graph_, p.path, n, p.path_rng);
}

std::optional<ParticleId> Simulation::find(Origin origin) const {
  auto it = std::lower_bound(particles_.begin(), particles_.end(), origin,
                             [](const ParticleState& p, const Origin& o) { return p.origin < o; });
  if (it == particles_.end() || it->origin != origin) return std::nullopt;
  return static_cast<ParticleId>(it - particles_.begin());
}

EventRecord Simulation::execute_jump(ParticleId id) {
  const FiniteGraph& g = *graph_;
  const bool local = !rule_.is_constant();
  auto& p = particles_[id];
  EventRecord rec;
  rec.time = now_;
  rec.particle = id;
  rec.kind = EventKind::Jump;
  rec.from = p.position;

  const VertexId from = p.position;
  const VertexId to = p.path[p.cursor + 1].vertex;
  rec.to = to;
  ++p.cursor;
  p.position = to;
  ++p.jumps_made;
  ++odometer_[from];

  auto& src = occupancy_[from];
  --src.active;
  if (src.active == 0) last_active_[from] = now_;
  if (local) remove_from_list(from, id);

  if (g.is_sink(to)) {
    p.mode = Mode::Exited;
    ++p.jump_generation;
    ++p.sleep_generation;
    --active_total_;
    ++exited_total_;
    rec.outcome = Outcome::Exited;
    if (local) refresh_rates_near(from);
    return rec;
  }

  auto& dst = occupancy_[to];
  ++dst.active;
  if (local) residents_[to].push_back(id);
  std::optional<ParticleId> woken;
  if (dst.sleeper) {
    woken = *dst.sleeper;
    dst.sleeper.reset();
    ++dst.active;
    ++active_total_;
    auto& s = particles_[*woken];
    s.mode = Mode::Active;
    s.anchor_time = now_;
  }
  rec.woken = woken;
  rec.outcome = Outcome::Moved;

  ensure_next_step(p);
  p.remaining_inner = p.path[p.cursor + 1].entry_time - p.path[p.cursor].entry_time;
  p.anchor_time = now_;
  p.rate = evaluate_rate(p);
  schedule_jump(id);

  if (woken) {
    auto& s = particles_[*woken];
    s.rate = evaluate_rate(s);
    schedule_jump(*woken);
    schedule_sleep(*woken);
  }

  if (local) {
    refresh_rates_near(from);
    refresh_rates_near(to);
  }
  return rec;
}

EventRecord Simulation::execute_sleep(ParticleId id) {
  auto& p = particles_[id];
  EventRecord rec;
  rec.time = now_;
  rec.particle = id;
  rec.kind = EventKind::SleepAttempt;
  rec.from = rec.to = p.position;

  auto& occ = occupancy_[p.position];
  if (occ.total() != 1) {
    rec.outcome = Outcome::SleepNoOp;
    schedule_sleep(id);
    return rec;
  }
  p.remaining_inner = std::max(0.0, p.remaining_inner - p.rate * (now_ - p.anchor_time));
  p.anchor_time = now_;
  p.mode = Mode::Sleeping;
  p.slept_at = now_;
  ++p.jump_generation;
  ++p.sleep_generation;
  occ.active = 0;
  occ.sleeper = id;
  last_active_[p.position] = now_;
  --active_total_;
  rec.outcome = Outcome::FellAsleep;
  if (!rule_.is_constant()) refresh_rates_near(p.position);
  return rec;
}

std::optional<EventRecord> Simulation::step() {
  drop_stale_top();
  if (queue_.empty()) return std::nullopt;
  std::pop_heap(queue_.begin(), queue_.end(), later);
  const ScheduledEvent e = queue_.back();
  queue_.pop_back();
  now_ = e.time;
  ++events_;
  return e.kind == EventKind::Jump ? execute_jump(e.particle) : execute_sleep(e.particle);
}

RunReport Simulation::run_until(const StopCondition& stop) {
  StopReason reason;
  while (true) {
    if (is_absorbed()) {
      reason = StopReason::Absorbed;
      break;
    }
    if (stop.max_events && events_ >= *stop.max_events) {
      reason = StopReason::EventBudget;
      break;
    }
    drop_stale_top();
    if (queue_.empty()) {
      reason = StopReason::Frozen;
      break;
    }
    if (stop.time && queue_.front().time > *stop.time) {
      now_ = std::max(now_, *stop.time);
      reason = StopReason::TimeLimit;
      break;
    }
    step();
  }
  return report(reason);
}

RunReport Simulation::report(StopReason reason) const {
  RunReport r;
  r.absorbed = is_absorbed();
  r.stop_reason = reason;
  r.final_time = now_;
  if (r.absorbed) r.absorption_time = now_;
  r.events = events_;
  r.n_particles = particles_.size();
  r.n_active = active_total_;
  r.n_exited = exited_total_;
  r.n_sleeping = particles_.size() - active_total_ - exited_total_;
  r.vertex_fixation_time.resize(occupancy_.size());
  for (std::size_t v = 0; v < occupancy_.size(); ++v) {
    if (occupancy_[v].active == 0) r.vertex_fixation_time[v] = last_active_[v];
  }
  r.particles.reserve(particles_.size());
  for (const auto& p : particles_) {
    ParticleRecord rec{p.origin, p.position, p.mode, p.jumps_made, std::nullopt};
    if (p.mode == Mode::Sleeping) rec.fixation_time = p.slept_at;
    r.particles.push_back(rec);
  }
  r.odometer = odometer_;
  r.max_odometer = odometer_.empty() ? 0 : *std::max_element(odometer_.begin(), odometer_.end());
  return r;
}

void Simulation::check_invariants() const {
  const FiniteGraph& g = *graph_;
  std::vector<std::uint32_t> active(occupancy_.size(), 0);
  std::vector<std::uint32_t> sleeping(occupancy_.size(), 0);
  std::size_t active_total = 0;
  std::size_t exited = 0;
  for (ParticleId id = 0; id < particles_.size(); ++id) {
    const auto& p = particles_[id];
    if (p.path[p.cursor].vertex != p.position) {
      throw std::logic_error("particle " + std::to_string(id) + " is off its putative path");
    }
    switch (p.mode) {
      case Mode::Active:
        ++active[p.position];
        ++active_total;
        if (p.remaining_inner < 0.0) throw std::logic_error("negative remaining inner hold");
        break;
      case Mode::Sleeping:
        ++sleeping[p.position];
        if (occupancy_[p.position].sleeper != id) {
          throw std::logic_error("sleeper bookkeeping mismatch at vertex " +
                                 std::to_string(p.position));
        }
        break;
      case Mode::Exited:
        ++exited;
        if (g.descriptor().boundary != Boundary::Absorbing) {
          throw std::logic_error("particle exited a periodic graph");
        }
        break;
    }
  }
  for (std::size_t v = 0; v < occupancy_.size(); ++v) {
    if (active[v] != occupancy_[v].active) {
      throw std::logic_error("active count mismatch at vertex " + std::to_string(v));
    }
    if (sleeping[v] > 1) throw std::logic_error("two sleepers at vertex " + std::to_string(v));
    if (sleeping[v] == 1 && active[v] > 0) {
      throw std::logic_error("sleeper shares vertex " + std::to_string(v));
    }
    if ((sleeping[v] == 1) != occupancy_[v].sleeper.has_value()) {
      throw std::logic_error("stale sleeper slot at vertex " + std::to_string(v));
    }
  }
  if (active_total != active_total_ || exited != exited_total_) {
    throw std::logic_error("particle totals out of sync");
  }
}

std::string Simulation::serialize() const {
  std::ostringstream os;
  os << "key " << key_ << " now ";
  hex(os, now_);
  os << " events " << events_ << " active " << active_total_ << " exited " << exited_total_ << '\n';
  const auto rng_line = [&os](const Rng& r) {
    for (const auto w : r.state()) os << ' ' << w;
  };
  os << "clock";
  rng_line(clock_rng_);
  os << '\n';
  for (const auto& p : particles_) {
    os << "p " << p.origin.vertex << ':' << p.origin.index << " at " << p.position << " mode "
       << static_cast<int>(p.mode) << " cursor " << p.cursor << " rem ";
    hex(os, p.remaining_inner);
    os << " anchor ";
    hex(os, p.anchor_time);
    os << " rate ";
    hex(os, p.rate);
    os << " mark ";
    hex(os, p.mark);
    os << " jumps " << p.jumps_made << " gen " << p.jump_generation << '/' << p.sleep_generation
       << " rng";
    rng_line(p.path_rng);
    os << " path";
    for (const auto& s : p.path.steps()) {
      os << ' ' << s.vertex << '@';
      hex(os, s.entry_time);
    }
    os << '\n';
  }
  for (std::size_t v = 0; v < occupancy_.size(); ++v) {
    os << "v " << v << ' ' << occupancy_[v].active << ' '
       << (occupancy_[v].sleeper ? static_cast<long long>(*occupancy_[v].sleeper) : -1LL) << ' '
       << odometer_[v] << ' ';
    hex(os, last_active_[v]);
    os << '\n';
  }
  auto pending = queue_;
  std::sort(pending.begin(), pending.end(),
            [](const ScheduledEvent& a, const ScheduledEvent& b) { return later(b, a); });
  for (const auto& e : pending) {
    if (!is_live(e)) continue;
    os << "e ";
    hex(os, e.time);
    os << ' ' << e.particle << ' ' << static_cast<int>(e.kind) << '\n';
  }
  return os.str();
}

Simulation init_system(GraphPtr graph, const InitialLaw& law, paths::PathDistribution dist,
                       InteractionRule rule, std::uint64_t key) {
  Rng init_rng(derive_key(key, {stream_tag::init}));
  const auto counts = Simulation::sample_counts(*graph, law, init_rng);
  return Simulation(std::move(graph), counts, std::move(dist), std::move(rule), key);
}

Simulation init_with_placement(GraphPtr graph, std::span<const VertexId> placement,
                               paths::PathDistribution dist, InteractionRule rule,
                               std::uint64_t key) {
  std::vector<std::uint32_t> counts(graph->vertex_count(), 0);
  for (const VertexId v : placement) {
    if (v >= counts.size()) throw std::out_of_range("placement vertex out of range");
    ++counts[v];
  }
  return Simulation(std::move(graph), counts, std::move(dist), std::move(rule), key);
}

}  // namespace arw::engine
