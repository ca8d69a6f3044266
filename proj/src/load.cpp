#include "nsp/load.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nsp/rng.hpp"

namespace nsp {

namespace {

Int128 gcd128(Int128 a, Int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const Int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  *this = reduce(num, den);
}

Rational Rational::reduce(Int128 num, Int128 den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const Int128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  constexpr Int128 lo = std::numeric_limits<std::int64_t>::min();
  constexpr Int128 hi = std::numeric_limits<std::int64_t>::max();
  if (num < lo || num > hi || den > hi) throw std::overflow_error("rational overflow");
  Rational r;
  r.num_ = static_cast<std::int64_t>(num);
  r.den_ = static_cast<std::int64_t>(den);
  return r;
}

Rational operator+(const Rational& a, const Rational& b) {
  return Rational::reduce(static_cast<Int128>(a.num_) * b.den_ + static_cast<Int128>(b.num_) * a.den_,
                          static_cast<Int128>(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
  return Rational::reduce(static_cast<Int128>(a.num_) * b.den_ - static_cast<Int128>(b.num_) * a.den_,
                          static_cast<Int128>(a.den_) * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
  return Rational::reduce(static_cast<Int128>(a.num_) * b.num_, static_cast<Int128>(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) throw std::domain_error("rational division by zero");
  return Rational::reduce(static_cast<Int128>(a.num_) * b.den_, static_cast<Int128>(a.den_) * b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  const Int128 lhs = static_cast<Int128>(a.num_) * b.den_;
  const Int128 rhs = static_cast<Int128>(b.num_) * a.den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::string to_string(const Rational& r) {
  return std::to_string(r.num()) + "/" + std::to_string(r.den());
}

LoadSchedule LoadSchedule::stair_step(double baseline, std::vector<double> shares, std::int64_t rupture_episode,
                                      double delta) {
  LoadSchedule s;
  s.segments.push_back(LoadSegment{0, baseline, shares});
  if (delta != 0.0) s.segments.push_back(LoadSegment{rupture_episode, baseline + delta, std::move(shares)});
  return s;
}

const LoadSegment& LoadSchedule::at(std::int64_t episode) const {
  if (segments.empty()) throw std::logic_error("empty load schedule");
  const LoadSegment* current = &segments.front();
  for (const auto& seg : segments) {
    if (seg.start_episode <= episode) current = &seg;
  }
  return *current;
}

std::vector<std::string> LoadSchedule::validate() const {
  std::vector<std::string> errors;
  if (segments.empty()) {
    errors.emplace_back("schedule: no segments");
    return errors;
  }
  if (segments.front().start_episode != 0) errors.emplace_back("schedule: first segment must start at episode 0");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    const std::string prefix = "schedule.segments[" + std::to_string(i) + "]";
    if (i > 0 && seg.start_episode <= segments[i - 1].start_episode) {
      errors.push_back(prefix + ": segments must start at strictly increasing episodes");
    }
    if (!(seg.load >= 0.0) || !std::isfinite(seg.load)) errors.push_back(prefix + ".load: must be finite and >= 0");
    double sum = 0.0;
    for (const double share : seg.shares) {
      if (!(share >= 0.0)) errors.push_back(prefix + ".shares: negative share");
      sum += share;
    }
    if (std::abs(sum - 1.0) > 1e-9) errors.push_back(prefix + ".shares: must sum to 1");
  }
  return errors;
}

std::vector<double> segment_rates(const LoadSegment& seg, std::span<const NsprClass> classes, Units cpu_capacity) {
  if (seg.shares.size() != classes.size()) throw std::invalid_argument("one load share per class is required");
  std::vector<double> rates(classes.size(), 0.0);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    rates[k] = solve_arrival_rate(seg.load * seg.shares[k], static_cast<double>(cpu_capacity),
                                  classes[k].mean_lifespan, static_cast<double>(classes[k].total_cpu()));
  }
  return rates;
}

std::vector<ArrivalEvent> generate_events(const LoadSchedule& schedule, std::span<const NsprClass> classes,
                                          Units cpu_capacity, std::int64_t horizon, std::uint64_t seed) {
  if (auto errors = schedule.validate(); !errors.empty()) throw std::invalid_argument(errors.front());

  Rng rng(seed);
  std::vector<ArrivalEvent> events;
  events.reserve(static_cast<std::size_t>(std::max<std::int64_t>(horizon, 0)) * 2);

  double now = 0.0;
  const LoadSegment* cached_seg = nullptr;
  std::vector<double> rates;
  double total_rate = 0.0;
  for (std::int64_t i = 0; i < horizon; ++i) {
    const LoadSegment& seg = schedule.at(i);
    if (&seg != cached_seg) {
      cached_seg = &seg;
      rates = segment_rates(seg, classes, cpu_capacity);
      total_rate = std::accumulate(rates.begin(), rates.end(), 0.0);
    }
    if (!(total_rate > 0.0)) break;

    now += rng.exponential(1.0 / total_rate);
    const double pick = rng.uniform() * total_rate;
    std::size_t k = 0;
    double acc = rates[0];
    while (pick >= acc && k + 1 < rates.size()) acc += rates[++k];
    while (rates[k] == 0.0 && k > 0) --k;  // pick landed on float slack past the last non-zero rate

    const double lifespan = rng.exponential(classes[k].mean_lifespan);
    events.push_back(ArrivalEvent{now, EventKind::Arrival, i, static_cast<int>(k), lifespan});
    events.push_back(ArrivalEvent{now + lifespan, EventKind::Departure, i, static_cast<int>(k), lifespan});
  }

  std::sort(events.begin(), events.end(), [](const ArrivalEvent& a, const ArrivalEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.nspr_id < b.nspr_id;
  });
  return events;
}

double measured_cpu_load(std::span<const ArrivalEvent> events, std::span<const NsprClass> classes, double capacity,
                         double t_begin, double t_end) {
  if (!(t_end > t_begin)) throw std::invalid_argument("empty measurement window");
  if (!(capacity > 0.0)) throw std::invalid_argument("capacity must be > 0");

  double held = 0.0;
  double last = t_begin;
  double area = 0.0;
  for (const auto& ev : events) {
    const double t = std::clamp(ev.time, t_begin, t_end);
    area += held * (t - last);
    last = t;
    const auto units = static_cast<double>(classes[static_cast<std::size_t>(ev.class_index)].total_cpu());
    held += ev.kind == EventKind::Arrival ? units : -units;
  }
  area += held * (t_end - last);
  return area / (capacity * (t_end - t_begin));
}

}  // namespace nsp
