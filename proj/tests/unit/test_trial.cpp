#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "oracles.hpp"
#include "wristhap/errors.hpp"
#include "wristhap/trial.hpp"
#include "wristhap/wilcoxon.hpp"

using namespace wristhap;
using namespace wristhap::trial;
using wristhap::stats::wilcoxon_signed_rank;
using wristhap::testing::brute_force_p;

namespace {

std::vector<ForceSample> ramp_then_hold(double target, double settle, double dt, double until) {
  std::vector<ForceSample> out;
  for (std::size_t k = 1; k * dt <= until + 1e-12; ++k) {
    const double t = static_cast<double>(k) * dt;
    out.push_back({t, t < settle ? target * t / settle : target});
  }
  return out;
}

}  // namespace

TEST_CASE("wilcoxon: reference values") {
  const std::vector<double> all_pos{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto r = wilcoxon_signed_rank(all_pos);
  CHECK(r.exact);
  CHECK(r.w_plus == 55.0);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == doctest::Approx(2.0 / 1024.0).epsilon(1e-12));

  const std::vector<double> five{0.5, 1.5, 2.5, 3.5, 4.5};
  CHECK(wilcoxon_signed_rank(five).p_value == doctest::Approx(0.0625));

  // Classic textbook example (n = 9 after dropping one zero): W = 6.5? check against enumeration.
  const std::vector<double> mixed{1.2, -0.4, 3.1, 0.0, 2.2, -0.9, 1.8, 0.7, 2.9, 1.1};
  const auto m = wilcoxon_signed_rank(mixed);
  CHECK(m.n == 9);
  CHECK(m.p_value == doctest::Approx(brute_force_p(mixed)).epsilon(1e-12));
}

TEST_CASE("wilcoxon: exact path equals 2^n enumeration, with ties") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 14;
    std::vector<double> d(n);
    std::uniform_int_distribution<int> coarse(-4, 4);
    std::normal_distribution<double> fine(0.2, 1.0);
    const bool tied = trial % 2 == 0;
    for (double& x : d) x = tied ? coarse(rng) * 0.5 : fine(rng);
    if (std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; })) continue;
    const auto r = wilcoxon_signed_rank(d);
    CHECK(r.exact);
    CHECK(r.p_value == doctest::Approx(brute_force_p(d)).epsilon(1e-12));
    CHECK(r.p_value > 0.0);
    CHECK(r.p_value <= 1.0);
  }
}

TEST_CASE("wilcoxon: symmetry and degenerate inputs") {
  std::vector<double> d{0.3, -1.2, 2.0, 0.8, 1.1, -0.2};
  std::vector<double> neg(d.size());
  std::transform(d.begin(), d.end(), neg.begin(), [](double x) { return -x; });
  CHECK(wilcoxon_signed_rank(d).p_value == wilcoxon_signed_rank(neg).p_value);

  const std::vector<double> zeros(8, 0.0);
  const auto z = wilcoxon_signed_rank(zeros);
  CHECK(z.degenerate);
  CHECK(z.p_value == 1.0);
  CHECK_THROWS_AS(wilcoxon_signed_rank(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(wilcoxon_signed_rank(std::vector<double>{1.0, NAN}), std::invalid_argument);
}

TEST_CASE("wilcoxon: normal approximation above the exact limit") {
  std::vector<double> d;
  for (int k = 1; k <= 30; ++k) d.push_back(k % 3 == 0 ? -k : k);
  const auto r = wilcoxon_signed_rank(d);
  CHECK_FALSE(r.exact);
  // n = 30: mean 232.5, sd sqrt(2363.75)
  const double z = (r.statistic - 232.5) / std::sqrt(2363.75);
  CHECK(r.p_value == doctest::Approx(std::erfc(std::abs(z) / std::sqrt(2.0))).epsilon(1e-12));

  // At n = 25 the exact value and the approximation are close.
  std::vector<double> e;
  for (int k = 1; k <= 25; ++k) e.push_back(k % 4 == 0 ? -k : k);
  const auto ex = wilcoxon_signed_rank(e);
  CHECK(ex.exact);
  const double z2 = (ex.statistic - 162.5) / std::sqrt(25.0 * 26.0 * 51.0 / 24.0);
  CHECK(ex.p_value == doctest::Approx(std::erfc(std::abs(z2) / std::sqrt(2.0))).epsilon(0.1));
}

TEST_CASE("schedule: 20 trials, 5 per condition, seeded") {
  const TrialSchedule a = build_schedule(42);
  const TrialSchedule b = build_schedule(42);
  const TrialSchedule c = build_schedule(43);
  REQUIRE(a.entries.size() == 20);
  std::map<std::pair<double, HapticMode>, int> count;
  for (const auto& e : a.entries) ++count[{e.target_force, e.mode}];
  CHECK(count.size() == 4);
  for (const auto& [k, v] : count) CHECK(v == 5);
  bool same = true, differs = false;
  for (std::size_t i = 0; i < 20; ++i) {
    same = same && a.entries[i].target_force == b.entries[i].target_force && a.entries[i].mode == b.entries[i].mode;
    differs = differs || a.entries[i].target_force != c.entries[i].target_force || a.entries[i].mode != c.entries[i].mode;
  }
  CHECK(same);
  CHECK(differs);
  for (const auto& e : a.entries) {
    CHECK(e.tolerance_fraction == 0.10);
    CHECK(e.hold_duration == 1.0);
    CHECK(e.max_duration == 12.0);
  }
}

TEST_CASE("schedule: distinct seeds give distinct orders over 100 pairs") {
  // 20!/(5!)^4 orders; a collision among 100 pairs is vanishingly unlikely.
  for (std::uint64_t s = 0; s < 100; ++s) {
    const TrialSchedule a = build_schedule(2 * s + 1);
    const TrialSchedule b = build_schedule(2 * s + 2);
    bool differs = false;
    for (std::size_t i = 0; i < 20; ++i) {
      differs = differs || a.entries[i].target_force != b.entries[i].target_force || a.entries[i].mode != b.entries[i].mode;
    }
    CHECK(differs);
  }
}

TEST_CASE("TrialConfig band edges are inclusive") {
  TrialConfig c;
  c.target_force = 1.2;
  CHECK(c.in_band(c.band_low()));
  CHECK(c.in_band(c.band_high()));
  CHECK_FALSE(c.in_band(std::nextafter(c.band_low(), 0.0)));
  CHECK_FALSE(c.in_band(std::nextafter(c.band_high(), 10.0)));
  CHECK(target_label(0.6) == "GENTLE");
  CHECK(target_label(1.2) == "FIRM");
}

TEST_CASE("evaluator: success after a 1 s unbroken hold") {
  TrialConfig c;
  c.target_force = 0.6;
  const auto stream = ramp_then_hold(0.6, 0.5, 0.001, 12.0);
  const TrialRecord r = evaluate_trial(stream, c);
  CHECK(r.outcome == Outcome::kSuccess);
  // Band entry is at 0.9 of the target, 0.45 s into the ramp.
  REQUIRE(r.tct);
  CHECK(*r.tct == doctest::Approx(1.45).epsilon(1e-9));
  CHECK(r.samples.back().t == *r.tct);
}

TEST_CASE("evaluator: a run of 1 s minus one tick is not enough") {
  TrialConfig c;
  c.target_force = 1.0;
  std::vector<ForceSample> s;
  for (int k = 1; k <= 12000; ++k) {
    const double t = k * 0.001;
    // in band for ticks 1000..1999 (999 ms), then out for one tick, repeated
    const int phase = k % 1000;
    s.push_back({t, phase == 0 ? 2.0 : 1.0});
  }
  const TrialRecord r = evaluate_trial(s, c);
  CHECK(r.outcome == Outcome::kTimeout);
  CHECK_FALSE(r.tct);
  CHECK(r.samples.back().t == doctest::Approx(12.0));
}

TEST_CASE("evaluator matches a brute-force sliding window") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    TrialConfig c;
    c.target_force = trial % 2 ? 0.6 : 1.2;
    std::vector<ForceSample> s;
    std::normal_distribution<double> noise(0.0, 0.03 + 0.01 * (trial % 5));
    double f = 0.0;
    const double dt = 0.002;
    for (int k = 1; k * dt <= 12.0 + 1e-12; ++k) {
      f += 0.05 * (c.target_force - f) + noise(rng);
      s.push_back({k * dt, f});
    }
    // Oracle: first index i where all samples with t in [t_j, t_i] are in band
    // and t_i - t_j >= 1 s for the start j of the run.
    std::optional<double> expect;
    for (std::size_t i = 0; i < s.size() && !expect; ++i) {
      std::size_t j = i;
      while (j > 0 && c.in_band(s[j - 1].force)) --j;
      if (c.in_band(s[i].force) && s[i].t - s[j].t >= 1.0 - 1e-9) expect = s[i].t;
    }
    const TrialRecord r = evaluate_trial(s, c);
    CHECK(r.tct.has_value() == expect.has_value());
    if (expect && r.tct) CHECK(*r.tct == *expect);

    double ss = 0, mx = 0;
    for (const auto& x : r.samples) {
      ss += (x.force - c.target_force) * (x.force - c.target_force);
      mx = std::max(mx, std::abs(x.force - c.target_force));
    }
    CHECK(r.rmse == doctest::Approx(std::sqrt(ss / r.samples.size())).epsilon(1e-12));
    CHECK(r.max_ae == mx);
  }
}

TEST_CASE("evaluator: malformed streams") {
  TrialEvaluator ev(TrialConfig{});
  CHECK_THROWS_AS(ev.finish(), MalformedTrialError);
  ev.push(0.1, 0.2);
  CHECK_THROWS_AS(ev.push(0.1, 0.2), MalformedTrialError);
  CHECK_THROWS_AS(ev.push(0.2, NAN), MalformedTrialError);
  CHECK_THROWS_AS(evaluate_trial({}, TrialConfig{}), MalformedTrialError);
}

TEST_CASE("error metrics: constant offset") {
  std::vector<ForceSample> s;
  for (int k = 0; k < 101; ++k) s.push_back({k * 0.01, 0.7});
  const ErrorMetrics m = error_metrics(s, 0.6);
  CHECK(m.rmse == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(m.max_ae == doctest::Approx(0.1).epsilon(1e-12));
}

namespace {

TrialRecord fake(double target, HapticMode mode, bool ok, double rmse, double tct = 3.0) {
  TrialRecord r;
  r.config.target_force = target;
  r.config.mode = mode;
  r.outcome = ok ? Outcome::kSuccess : Outcome::kTimeout;
  if (ok) r.tct = tct;
  r.rmse = rmse;
  r.max_ae = 2 * rmse;
  return r;
}

}  // namespace

TEST_CASE("summarize: per-condition counts and paired tests") {
  std::vector<ParticipantRecords> ps;
  for (int p = 0; p < 10; ++p) {
    ParticipantRecords rec{"P" + std::to_string(p), {}};
    for (double target : {kGentleN, kFirmN}) {
      for (int k = 0; k < 5; ++k) {
        rec.trials.push_back(fake(target, HapticMode::kOff, k < 3, 0.3 + 0.01 * p));
        rec.trials.push_back(fake(target, HapticMode::kOn, k < 4 + (p % 2), 0.2 + 0.005 * p, 2.0));
      }
    }
    ps.push_back(rec);
  }
  const StudySummary s = summarize(ps);
  CHECK(s.participants == 10);
  CHECK(s.by_condition.size() == 4);
  CHECK(s.by_condition.at({kGentleN, HapticMode::kOff}).trials == 50);
  CHECK(s.by_condition.at({kGentleN, HapticMode::kOff}).successes == 30);
  CHECK(s.by_mode.at(HapticMode::kOff).overall.success_rate() == doctest::Approx(0.6));
  CHECK(s.by_mode.at(HapticMode::kOn).overall.success_rate() == doctest::Approx(0.9));
  CHECK(*s.by_mode.at(HapticMode::kOn).mean_tct == doctest::Approx(2.0));
  CHECK(s.tests.at("rmse").p_value == doctest::Approx(2.0 / 1024.0));
  CHECK(s.tests.at("success_rate").p_value < 0.05);

  ps[3].trials.erase(std::remove_if(ps[3].trials.begin(), ps[3].trials.end(),
                                    [](const TrialRecord& r) { return r.config.mode == HapticMode::kOn; }),
                     ps[3].trials.end());
  CHECK_THROWS_AS(summarize(ps), PairingError);
}
