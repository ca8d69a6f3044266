#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsp/placement.hpp"
#include "nsp/slice.hpp"

namespace nsp {

__extension__ using Int128 = __int128;

/// Exact fraction over int64 with 128-bit intermediates. Always stored in
/// lowest terms with a positive denominator. Throws std::overflow_error if
/// a reduced result does not fit.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

 private:
  static Rational reduce(Int128 num, Int128 den);
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

std::string to_string(const Rational& r);

/// Load a class puts on one resource: (1/C) * (lambda / mu) * A, with
/// lambda / mu = rate * mean_lifespan.
template <class T>
T class_load(T capacity, T rate, T mean_lifespan, T units) {
  if (!(capacity > T(0))) throw std::domain_error("capacity must be > 0");
  return rate * mean_lifespan * units / capacity;
}

/// Arrival rate that makes `class_load` return `target`.
template <class T>
T solve_arrival_rate(T target, T capacity, T mean_lifespan, T units) {
  if (!(mean_lifespan > T(0)) || !(units > T(0))) throw std::domain_error("lifespan and units must be > 0");
  if (!(capacity > T(0))) throw std::domain_error("capacity must be > 0");
  if (target < T(0)) throw std::domain_error("target load must be >= 0");
  return target * capacity / (mean_lifespan * units);
}

template <class T>
T global_load(std::span<const T> class_loads) {
  T total = T(0);
  for (const auto& l : class_loads) total = total + l;
  return total;
}

inline bool overloaded(double global) { return global > 1.0; }

/// Piece of a load schedule: from `start_episode` (arrival index) on, the
/// CPU load target is `load`, split across classes by `shares`.
struct LoadSegment {
  std::int64_t start_episode = 0;
  double load = 0.0;
  std::vector<double> shares;
};

struct LoadSchedule {
  std::vector<LoadSegment> segments;

  /// Baseline load from episode 0, plus one instantaneous step of `delta` at
  /// `rupture_episode` when delta != 0.
  static LoadSchedule stair_step(double baseline, std::vector<double> shares, std::int64_t rupture_episode,
                                 double delta);

  const LoadSegment& at(std::int64_t episode) const;
  std::vector<std::string> validate() const;
};

enum class EventKind : std::uint8_t { Departure, Arrival };

struct ArrivalEvent {
  double time = 0.0;
  EventKind kind = EventKind::Arrival;
  std::int64_t nspr_id = 0;
  int class_index = 0;
  double lifespan = 0.0;
};

/// Per-class arrival rates hitting a segment's CPU load target.
std::vector<double> segment_rates(const LoadSegment& seg, std::span<const NsprClass> classes, Units cpu_capacity);

/// Merged arrival/departure stream for `horizon` arrivals. Arrivals are the
/// superposition of per-class Poisson processes whose rates follow the
/// schedule segment of the current arrival index; lifespans are exponential
/// with the class mean. Sorted by time, departures before arrivals on ties,
/// then by NSPR id. A segment with all rates zero ends arrivals early.
std::vector<ArrivalEvent> generate_events(const LoadSchedule& schedule, std::span<const NsprClass> classes,
                                          Units cpu_capacity, std::int64_t horizon, std::uint64_t seed);

/// Time average over [t_begin, t_end) of the CPU units held by every
/// arrived NSPR (no admission control), divided by `capacity`.
double measured_cpu_load(std::span<const ArrivalEvent> events, std::span<const NsprClass> classes, double capacity,
                         double t_begin, double t_end);

}  // namespace nsp
