#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "nsp/load.hpp"
#include "nsp/rng.hpp"
#include "nsp/slice.hpp"

using namespace nsp;

TEST_SUITE("slice") {
  TEST_CASE("reference classes") {
    const auto v = volatile_class();
    CHECK(v.vnf_count == 5);
    CHECK(v.vl_count() == 4);
    CHECK(v.cpu == 25);
    CHECK(v.ram == 150);
    CHECK(v.bw == 2 * kMbpsPerGbps);
    CHECK(v.mean_lifespan == 20.0);
    const auto l = long_term_class();
    CHECK(l.vnf_count == 10);
    CHECK(l.vl_count() == 9);
    CHECK(l.mean_lifespan == 500.0);
  }

  TEST_CASE("single VNF chain has no links") {
    NsprClass c{"one", 1, 10, 10, 100, 1.0, 1.0};
    const Nspr n = make_nspr(c, 0, 7, 0.0, 2.0);
    CHECK(n.vl_count() == 0);
    CHECK(n.incident_bw(0) == 0);
  }

  TEST_CASE("incident bandwidth of chain members") {
    const Nspr n = make_nspr(volatile_class(), 0, 1, 0.0, 3.0);
    CHECK(n.incident_bw(0) == 2000);
    CHECK(n.incident_bw(2) == 4000);
    CHECK(n.incident_bw(4) == 2000);
    CHECK(n.vl_endpoints(3) == std::pair{3, 4});
  }

  TEST_CASE("CPU demand matches the load module's A") {
    for (const auto& c : {volatile_class(), long_term_class()}) {
      const Nspr n = make_nspr(c, 0, 1, 0.0, 1.0);
      Units sum = 0;
      for (int v = 0; v < n.vnf_count; ++v) sum += n.cpu;
      CHECK(sum == c.total_cpu());
      CHECK(n.total_cpu() == c.total_cpu());
    }
  }

  TEST_CASE("bad lifespan rejected") {
    CHECK_THROWS_AS(make_nspr(volatile_class(), 0, 1, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_nspr(volatile_class(), 0, 1, 0.0, -1.0), std::invalid_argument);
  }
}

TEST_SUITE("load") {
  TEST_CASE("class load examples") {
    CHECK(class_load(Rational(100), Rational(2), Rational(10), Rational(5)) == Rational(1));
    CHECK(class_load(Rational(100), Rational(0), Rational(10), Rational(5)) == Rational(0));
    CHECK(class_load(Rational(6300), Rational(504, 1000), Rational(20), Rational(125)) == Rational(1, 5));
    CHECK(class_load(100.0, 2.0, 10.0, 5.0) == doctest::Approx(1.0));
  }

  TEST_CASE("global load examples") {
    const std::vector<Rational> two{Rational(1, 5), Rational(1, 5)};
    CHECK(global_load<Rational>(two) == Rational(2, 5));
    CHECK(global_load<Rational>(std::span<const Rational>{}) == Rational(0));
    const std::vector<double> heavy{0.6, 0.6};
    CHECK(global_load<double>(heavy) == doctest::Approx(1.2));
    CHECK(overloaded(global_load<double>(heavy)));
    CHECK_FALSE(overloaded(1.0));
  }

  TEST_CASE("arrival rates of the reference classes") {
    // 0.2 * 6300 / (20 * 125) and 0.2 * 6300 / (500 * 250)
    CHECK(solve_arrival_rate(Rational(1, 5), Rational(6300), Rational(20), Rational(125)) == Rational(504, 1000));
    CHECK(solve_arrival_rate(Rational(1, 5), Rational(6300), Rational(500), Rational(250)) == Rational(1008, 100000));
    CHECK(solve_arrival_rate(Rational(0), Rational(6300), Rational(20), Rational(125)) == Rational(0));
  }

  TEST_CASE("rational arithmetic") {
    CHECK(Rational(2, 4) == Rational(1, 2));
    CHECK(Rational(1, -2) == Rational(-1, 2));
    CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
    CHECK(Rational(1, 3) * Rational(3, 7) == Rational(1, 7));
    CHECK(Rational(1, 3) < Rational(1, 2));
    CHECK_THROWS(Rational(1, 0));
  }

  TEST_CASE("round trip on random rationals") {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
      const Rational target(static_cast<std::int64_t>(rng.below(1000)), 1 + static_cast<std::int64_t>(rng.below(999)));
      const Rational cap(1 + static_cast<std::int64_t>(rng.below(100000)));
      const Rational life(1 + static_cast<std::int64_t>(rng.below(1000)), 1 + static_cast<std::int64_t>(rng.below(9)));
      const Rational units(1 + static_cast<std::int64_t>(rng.below(500)));
      const Rational rate = solve_arrival_rate(target, cap, life, units);
      CHECK(class_load(cap, rate, life, units) == target);
    }
  }

  TEST_CASE("domain errors") {
    CHECK_THROWS_AS(class_load(0.0, 1.0, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(solve_arrival_rate(-0.1, 1.0, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(solve_arrival_rate(0.1, 1.0, 0.0, 1.0), std::domain_error);
  }

  TEST_CASE("stair-step schedule") {
    const auto s = LoadSchedule::stair_step(0.4, {0.5, 0.5}, 6000, 0.6);
    REQUIRE(s.segments.size() == 2);
    CHECK(s.at(0).load == doctest::Approx(0.4));
    CHECK(s.at(5999).load == doctest::Approx(0.4));
    CHECK(s.at(6000).load == doctest::Approx(1.0));
    CHECK(s.validate().empty());
    const auto flat = LoadSchedule::stair_step(0.4, {0.5, 0.5}, 6000, 0.0);
    CHECK(flat.segments.size() == 1);
  }

  TEST_CASE("segment rates match the closed form") {
    const std::vector<NsprClass> classes{volatile_class(), long_term_class()};
    const auto s = LoadSchedule::stair_step(0.4, {0.5, 0.5}, 10, 0.0);
    const auto rates = segment_rates(s.segments[0], classes, 6300);
    CHECK(rates[0] == doctest::Approx(0.504).epsilon(1e-12));
    CHECK(rates[1] == doctest::Approx(0.01008).epsilon(1e-12));
  }

  TEST_CASE("event stream shape") {
    const std::vector<NsprClass> classes{volatile_class(), long_term_class()};
    const auto s = LoadSchedule::stair_step(0.4, {0.5, 0.5}, 300, 0.6);
    const auto ev = generate_events(s, classes, 6300, 1000, 9);
    std::map<std::int64_t, int> arrivals;
    std::map<std::int64_t, int> departures;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      if (i > 0) {
        const auto& p = ev[i - 1];
        const auto& e = ev[i];
        const bool ordered = p.time < e.time ||
                             (p.time == e.time && (p.kind < e.kind || (p.kind == e.kind && p.nspr_id < e.nspr_id)));
        CHECK(ordered);
      }
      (ev[i].kind == EventKind::Arrival ? arrivals : departures)[ev[i].nspr_id]++;
    }
    CHECK(arrivals.size() == 1000);
    CHECK(departures.size() == 1000);
    for (const auto& [id, n] : arrivals) {
      CHECK(n == 1);
      CHECK(departures[id] == 1);
    }
    CHECK(generate_events(s, classes, 6300, 1000, 9).size() == ev.size());
    const auto again = generate_events(s, classes, 6300, 1000, 9);
    for (std::size_t i = 0; i < ev.size(); ++i) {
      CHECK(again[i].time == ev[i].time);
      CHECK(again[i].nspr_id == ev[i].nspr_id);
    }
  }

  TEST_CASE("zero-rate segment yields departures only") {
    const std::vector<NsprClass> classes{volatile_class()};
    const auto s = LoadSchedule::stair_step(0.4, {1.0}, 50, -0.4);
    const auto ev = generate_events(s, classes, 6300, 200, 1);
    std::size_t arrivals = 0;
    for (const auto& e : ev) arrivals += e.kind == EventKind::Arrival ? 1 : 0;
    CHECK(arrivals == 50);
    CHECK(ev.size() == 100);
    const auto none = LoadSchedule::stair_step(0.0, {1.0}, 50, 0.0);
    CHECK(generate_events(none, classes, 6300, 200, 1).empty());
  }

  TEST_CASE("mean inter-arrival at 0.504") {
    const std::vector<NsprClass> classes{volatile_class()};
    // all load on one class: 0.2 of 6300 CPU at A = 125, lifespan 20
    const auto s = LoadSchedule::stair_step(0.2, {1.0}, 1 << 30, 0.0);
    double mean_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto ev = generate_events(s, classes, 6300, 10000, seed);
      double last = 0.0;
      for (const auto& e : ev) {
        if (e.kind == EventKind::Arrival) last = e.time;
      }
      mean_sum += last / 10000.0;
    }
    const double mean = mean_sum / 5.0;
    CHECK(std::abs(mean - 1.0 / 0.504) <= 0.02 / 0.504);
  }

  TEST_CASE("offered load follows the stair step") {
    const std::vector<NsprClass> classes{volatile_class(), long_term_class()};
    const auto s = LoadSchedule::stair_step(0.4, {0.5, 0.5}, 15000, 0.6);
    double before = 0.0;
    double after = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto ev = generate_events(s, classes, 6300, 40000, seed);
      double t_change = 0.0;
      double t_end = 0.0;
      std::int64_t n = 0;
      for (const auto& e : ev) {
        if (e.kind != EventKind::Arrival) continue;
        if (n == 15000) t_change = e.time;
        ++n;
        t_end = e.time;
      }
      // skip the warm-up of each segment: long-term requests live 500
      before += measured_cpu_load(ev, classes, 6300, 2000.0, t_change);
      after += measured_cpu_load(ev, classes, 6300, t_change + 2000.0, t_end);
    }
    CHECK(std::abs(before / 5 - 0.4) <= 0.05);
    CHECK(std::abs(after / 5 - 1.0) <= 0.05);
  }
}
