#include <cmath>
#include <random>

#include "doctest.h"
#include "therif/core/error.hpp"
#include "therif/stats/hypothesis.hpp"
#include "therif/stats/reading.hpp"
#include "therif/stats/special_functions.hpp"

using namespace therif;
using namespace therif::stats;

// Reference values below were computed once with scipy 1.x
// (scipy.stats.ttest_ind / ttest_rel / f_oneway / chi2_contingency(correction=False),
// scipy.special.betainc / gammainc / gammaincc) and frozen here.

namespace {
const std::vector<double> kA2 = {2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8};
const std::vector<double> kB2 = {5.5, 6.1, 4.9, 7.2, 6.6, 5.8, 8.1, 6.9, 7.7};
const std::vector<double> kC = {1.2, 2.3, 3.1, 4.8, 5.0, 6.7, 7.1};
const std::vector<double> kD = {1.0, 2.9, 2.8, 5.1, 5.9, 6.2, 8.0};
}  // namespace

TEST_CASE("special functions match reference values") {
  CHECK(incomplete_beta(2.5, 1.5, 0.3) == doctest::Approx(0.08894372317066562).epsilon(1e-12));
  CHECK(incomplete_beta(0.5, 0.5, 0.9) == doctest::Approx(0.7951672353008665).epsilon(1e-12));
  CHECK(incomplete_beta(10, 20, 0.4) == doctest::Approx(0.7853183897628262).epsilon(1e-12));
  CHECK(incomplete_beta(0.1, 100, 0.001) == doctest::Approx(0.8272491543033139).epsilon(1e-12));
  CHECK(gamma_p(0.5, 0.2) == doctest::Approx(0.47291074313446196).epsilon(1e-12));
  CHECK(gamma_p(3, 2.5) == doctest::Approx(0.45618688411667035).epsilon(1e-12));
  CHECK(gamma_q(10, 15) == doctest::Approx(0.06985366069940986).epsilon(1e-12));
  CHECK(gamma_q(100, 90) == doctest::Approx(0.84177901081357).epsilon(1e-12));
  CHECK(student_t_two_sided_p(2.0, 5) == doctest::Approx(0.10193947882985828).epsilon(1e-12));
  CHECK(student_t_two_sided_p(5.51, 422.1) == doctest::Approx(6.25280446631457e-08).epsilon(1e-9));
  CHECK(student_t_two_sided_p(0.5, 1.5) == doctest::Approx(0.68056711066994).epsilon(1e-12));
  CHECK(f_sf(3.49, 4, 480) == doctest::Approx(0.007998371443855404).epsilon(1e-11));
  CHECK(f_sf(0.5, 2, 3) == doctest::Approx(0.649519052838329).epsilon(1e-12));
  CHECK(chi_square_sf(66.6, 21) == doctest::Approx(1.2196250900793614e-06).epsilon(1e-9));
  CHECK(chi_square_sf(8.9, 7) == doctest::Approx(0.2599156307898345).epsilon(1e-12));
  CHECK(chi_square_sf(21.6, 28) == doctest::Approx(0.799464396225068).epsilon(1e-12));
  CHECK_THROWS_AS(incomplete_beta(0.0, 1.0, 0.5), StatsError);
}

TEST_CASE("distribution functions are monotone and bounded") {
  double prev_t = -1, prev_f = -1, prev_c = -1;
  for (int i = 0; i <= 1000; ++i) {
    const double x = -20.0 + 40.0 * i / 1000.0;
    const double t = student_t_cdf(x, 7.3);
    const double f = f_cdf(std::fabs(x), 3, 17);
    const double c = chi_square_cdf(std::fabs(x) * 2, 5);
    CHECK(t >= 0.0);
    CHECK(t <= 1.0);
    CHECK(t >= prev_t);
    if (x >= 0) {
      CHECK(f >= prev_f);
      CHECK(c >= prev_c);
      prev_f = f;
      prev_c = c;
    }
    prev_t = t;
  }
}

TEST_CASE("welch_t") {
  const std::vector<double> a = {1, 2, 3, 4, 5}, b = {2, 3, 4, 5, 6};
  auto r = welch_t(a, b);
  CHECK(r.statistic == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(r.df == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(std::fabs(r.p_value - 0.34659350708733416) < 1e-8);

  r = welch_t(kA2, kB2);
  CHECK(std::fabs(r.statistic - -5.261478030589729) < 1e-8);
  CHECK(std::fabs(r.df - 11.446238291170081) < 1e-8);
  CHECK(std::fabs(r.p_value - 0.00023467885926495305) < 1e-8);

  r = welch_t(a, a);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == 1.0);

  const std::vector<double> flat = {3, 3, 3};
  CHECK_THROWS_AS(welch_t(flat, flat), StatsError);
  CHECK_THROWS_AS(welch_t(std::vector<double>{1}, a), StatsError);
}

TEST_CASE("student_t") {
  auto r = student_t(kA2, kB2, false);
  CHECK(std::fabs(r.statistic - -5.410491213856126) < 1e-8);
  CHECK(r.df == 14.0);
  CHECK(std::fabs(r.p_value - 9.185959348599071e-05) < 1e-8);

  r = student_t(kC, kD, true);
  CHECK(std::fabs(r.statistic - -1.1027188126642469) < 1e-8);
  CHECK(r.df == 6.0);
  CHECK(std::fabs(r.p_value - 0.3124036274401515) < 1e-8);

  r = student_t(kC, kC, true);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == 1.0);

  CHECK_THROWS_AS(student_t(kC, kB2, true), StatsError);
}

TEST_CASE("welch reduces to student for equal sizes and variances") {
  const std::vector<double> a = {1, 2, 3, 4, 5}, b = {3, 4, 5, 6, 7};
  const auto w = welch_t(a, b);
  const auto s = student_t(a, b, false);
  CHECK(std::fabs(w.statistic - s.statistic) < 1e-9);
  CHECK(std::fabs(w.df - s.df) < 1e-9);
  CHECK(std::fabs(w.p_value - s.p_value) < 1e-9);
}

TEST_CASE("cohens_d") {
  CHECK(std::fabs(cohens_d(kA2, kB2, false) - -2.7266312804882467) < 1e-8);
  CHECK(std::fabs(cohens_d(kC, kD, true) - -0.4167885349060028) < 1e-8);
  CHECK(cohens_d(kC, kC, false) == 0.0);
  CHECK(cohens_d(kC, kC, true) == 0.0);
  CHECK(cohens_d(kB2, kA2, false) > 0.0);
  const std::vector<double> flat = {1, 1, 1}, flat2 = {2, 2, 2};
  CHECK_THROWS_AS(cohens_d(flat, flat2, false), StatsError);

  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n1(1.0, 1.0), n0(0.0, 1.0);
  std::vector<double> a(100000), b(100000);
  for (auto& x : a) x = n1(rng);
  for (auto& x : b) x = n0(rng);
  CHECK(std::fabs(cohens_d(a, b, false) - 1.0) < 0.02);
}

TEST_CASE("one_way_anova") {
  const std::vector<std::vector<double>> groups = {
      {4.2, 5.1, 3.9, 4.8, 5.5}, {6.1, 5.9, 6.8, 7.2, 6.4, 5.7}, {4.9, 5.3, 5.0, 6.1}};
  const auto r = one_way_anova(groups);
  CHECK(std::fabs(r.statistic - 10.91754907792981) < 1e-8);
  CHECK(std::fabs(r.p_value - 0.0019901363491245465) < 1e-8);
  CHECK(r.df == 2.0);
  CHECK(r.df2 == 12.0);
  CHECK(std::fabs(r.effect_size - 0.6453386969731073) < 1e-8);

  const auto same = one_way_anova({{2, 2, 2}, {2, 2}, {2, 2, 2, 2}});
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);

  const auto shifted = one_way_anova({{1, 2, 3}, {1, 2, 3}});
  CHECK(shifted.statistic == doctest::Approx(0.0));
  CHECK(shifted.p_value == doctest::Approx(1.0));

  CHECK_THROWS_AS(one_way_anova({{1, 2}, {3}}), StatsError);
  CHECK_THROWS_AS(one_way_anova({{1, 2}}), StatsError);
}

TEST_CASE("chi_square") {
  auto r = chi_square({{10, 20}, {20, 10}});
  CHECK(std::fabs(r.statistic - 6.666666666666667) < 1e-8);
  CHECK(std::fabs(r.p_value - 0.009823274507519235) < 1e-8);
  CHECK(r.df == 1.0);
  CHECK(std::fabs(r.effect_size - 0.33333333333333337) < 1e-8);

  r = chi_square({{12, 5, 9}, {7, 14, 6}, {3, 8, 15}});
  CHECK(std::fabs(r.statistic - 14.407097086726717) < 1e-8);
  CHECK(std::fabs(r.p_value - 0.0061029578400623175) < 1e-8);
  CHECK(r.df == 4.0);
  CHECK(std::fabs(r.effect_size - 0.30196714850584555) < 1e-8);

  r = chi_square({{2, 4, 6}, {3, 6, 9}});
  CHECK(r.statistic == doctest::Approx(0.0));
  CHECK(r.p_value == doctest::Approx(1.0));

  CHECK_THROWS_AS(chi_square({{0, 0}, {1, 2}}), StatsError);
  CHECK_THROWS_AS(chi_square({{0, 1}, {0, 2}}), StatsError);
  CHECK_THROWS_AS(chi_square({{-1, 1}, {1, 2}}), StatsError);
}

TEST_CASE("filter_wpm keeps the inclusive range and is idempotent") {
  const std::vector<double> v = {49.9, 50, 300, 650, 650.1};
  CHECK(filter_wpm(v) == std::vector<double>{50, 300, 650});
  CHECK(filter_wpm(std::vector<double>{}).empty());
  const std::vector<double> ok = {51, 120, 649};
  CHECK(filter_wpm(ok) == ok);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 800.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> xs(rng() % 20);
    for (auto& x : xs) x = u(rng);
    const auto once = filter_wpm(xs);
    CHECK(filter_wpm(once) == once);
  }
}

TEST_CASE("composite score") {
  const CompositeWeights w;
  CHECK(w.total() == 100);
  CHECK(w.comprehension_weight() + w.comfort_weight() + w.speed_weight() == 1.0);

  ReadingMeasurement m{"p", "t", 3, 0.75, {200.0}};
  const auto s = composite_score(m, CohortBounds{100.0, 300.0});
  CHECK(std::fabs(s.score - 0.605) < 1e-12);

  ReadingMeasurement best{"p", "t", 5, 1.0, {300.0}};
  CHECK(composite_score(best, CohortBounds{100.0, 300.0}).score == 1.0);
  ReadingMeasurement worst{"p", "t", 1, 0.0, {100.0}};
  CHECK(composite_score(worst, CohortBounds{100.0, 300.0}).score == 0.0);

  const auto degenerate = composite_score(m, CohortBounds{200.0, 200.0});
  CHECK(degenerate.degenerate_speed);
  CHECK(degenerate.speed == 0.5);

  ReadingMeasurement bad{"p", "t", 6, 0.75, {200.0}};
  CHECK_THROWS_AS(composite_score(bad, CohortBounds{100.0, 300.0}), RangeError);
  ReadingMeasurement bad2{"p", "t", 3, 0.3, {200.0}};
  CHECK_THROWS_AS(composite_score(bad2, CohortBounds{100.0, 300.0}), RangeError);
}

TEST_CASE("composite score is monotone in each raw metric") {
  const CohortBounds bounds{80.0, 400.0};
  for (int comfort = 1; comfort <= 5; ++comfort) {
    for (int q = 0; q <= 4; ++q) {
      double prev = -1.0;
      for (double wpm = 60.0; wpm <= 640.0; wpm += 20.0) {
        const double s = composite_score(ReadingMeasurement{"p", "t", comfort, q / 4.0, {wpm}}, bounds).score;
        CHECK(s >= prev);
        prev = s;
        if (comfort < 5) {
          CHECK(composite_score(ReadingMeasurement{"p", "t", comfort + 1, q / 4.0, {wpm}}, bounds).score >= s);
        }
        if (q < 4) {
          CHECK(composite_score(ReadingMeasurement{"p", "t", comfort, (q + 1) / 4.0, {wpm}}, bounds).score >= s);
        }
      }
    }
  }
}

TEST_CASE("score_trial") {
  const std::vector<ScreenTiming> one = {{0, 60000}};
  const std::vector<int> words = {200};
  const std::vector<int> key = {1, 2, 3, 0};
  auto s = score_trial(one, words, key, key);
  CHECK(s.screen_wpm == std::vector<double>{200.0});
  CHECK(s.comprehension == 1.0);

  // 150 words in 40s, 160 in 48s, 170 in 34s, 155 in 62s.
  const std::vector<ScreenTiming> four = {{1000, 41000}, {41500, 89500}, {90000, 124000}, {125000, 187000}};
  const std::vector<int> counts = {150, 160, 170, 155};
  const std::vector<int> answers = {1, 0, 3, 1};
  s = score_trial(four, counts, answers, key);
  REQUIRE(s.screen_wpm.size() == 4);
  CHECK(s.screen_wpm[0] == doctest::Approx(225.0));
  CHECK(s.screen_wpm[1] == doctest::Approx(200.0));
  CHECK(s.screen_wpm[2] == doctest::Approx(300.0));
  CHECK(s.screen_wpm[3] == doctest::Approx(150.0));
  CHECK(s.comprehension == 0.5);

  const std::vector<ScreenTiming> backwards = {{1000, 900}};
  CHECK_THROWS_AS(score_trial(backwards, words, key, key), StatsError);
  const std::vector<ScreenTiming> overlap = {{0, 5000}, {4000, 9000}};
  const std::vector<int> two = {10, 10};
  CHECK_THROWS_AS(score_trial(overlap, two, key, key), StatsError);
}

TEST_CASE("consistency across studies") {
  std::vector<ReadingMeasurement> s1 = {
      {"p1", "control", 3, 0.5, {200}}, {"p1", "open", 4, 0.75, {220}}, {"p1", "relaxed", 2, 0.25, {180}},
      {"p2", "control", 2, 0.5, {150}}, {"p2", "open", 3, 0.75, {170}}, {"p3", "control", 3, 0.5, {150}},
      {"p3", "open", 4, 0.25, {160}}};
  auto same = consistency(s1, s1, "control");
  CHECK(same.speed == 1.0);
  CHECK(same.comprehension == 1.0);
  CHECK(same.comfort == 1.0);
  CHECK(same.compared == 4);

  // Flip every difference relative to control.
  std::vector<ReadingMeasurement> s2;
  for (const auto& m : s1) {
    if (m.theme_id == "control") {
      s2.push_back(m);
      continue;
    }
    const auto ctrl = std::find_if(s1.begin(), s1.end(),
                                   [&](const auto& c) { return c.participant_id == m.participant_id && c.theme_id == "control"; });
    ReadingMeasurement f = m;
    f.comfort = 2 * ctrl->comfort - m.comfort;
    f.comprehension = 2 * ctrl->comprehension - m.comprehension;
    f.screen_wpm = {2 * ctrl->screen_wpm[0] - m.screen_wpm[0]};
    s2.push_back(f);
  }
  auto anti = consistency(s1, s2, "control");
  CHECK(anti.speed == 0.0);
  CHECK(anti.comprehension == 0.0);
  CHECK(anti.comfort == 0.0);
  s2.erase(std::remove_if(s2.begin(), s2.end(), [](const auto& m) { return m.participant_id == "p3"; }), s2.end());
  auto partial = consistency(s1, s2, "control");
  CHECK(partial.skipped == 1);
  CHECK(partial.compared == 3);
}

TEST_CASE("trial csv and markdown report") {
  std::vector<ReadingMeasurement> ms = {{"p1", "control", 3, 0.5, {200, 210}}, {"p1", "open", 4, 0.75, {240, 700}}};
  const auto csv = trial_results_csv(ms);
  CHECK(csv.find("participant,theme,comfort,comprehension,mean_wpm,composite\n") == 0);
  CHECK(csv.find("p1,open,4,0.75,240.00,") != std::string::npos);
  const auto md = performance_report_markdown(ms, {{"all", {"p1"}}});
  CHECK(md.find("| theme | composite | comfort | comprehension | speed (wpm) |") != std::string::npos);
  CHECK(md.find("| open |") != std::string::npos);
}
