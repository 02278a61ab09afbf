// Acceptance run at the reference parameters a = 1/2, b = 1/32, E = 8.
// Prints one PASS/FAIL line per criterion with the measured values; exit
// status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nhse.hpp"

using namespace nhse;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) ok = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (cond ? "" : " [x]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ModelParams ref(double g) { return ModelParams::reference(g); }

// Shared across criteria: the numeric fold from the default pipeline.
double g_gamma_c = std::nan("");

Check fold_threshold() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const FoldPoint f = fold_by_continuation(ref(0.0));
  g_gamma_c = f.gamma_c;
  const double dt = seconds_since(t0);
  c.require(std::abs(f.gamma_c + 1.0) <= 0.05, "gamma_c = " + fmt("%.10f", f.gamma_c));
  c.require(dt < 300.0, "runtime " + fmt("%.2f s", dt));
  return c;
}

Check branch_agreement() {
  Check c;
  double worst_out = 0.0, worst_in = 0.0;
  int n_out = 0, n_in = 0;
  for (int i = 0; i <= 28; ++i) {
    const double g = -0.9 + 1.4 * i / 28.0;
    const auto p = ref(g);
    const double a_th = *branch_amplitudes(p).a_out;
    const auto lc = find_cycle(p, p.omega() * a_th);
    worst_out = std::max(worst_out, std::abs(lc.amplitude - a_th) / a_th);
    ++n_out;
  }
  for (int i = 0; i <= 20; ++i) {
    const double g = -0.9 + 0.85 * i / 20.0;
    const auto p = ref(g);
    const double a_th = *branch_amplitudes(p).a_in;
    const auto lc = find_cycle(p, p.omega() * a_th);
    worst_in = std::max(worst_in, std::abs(lc.amplitude - a_th) / a_th);
    ++n_in;
  }
  c.require(worst_out <= 0.10, "outer max rel dev " + fmt("%.4f", worst_out) + " over " + std::to_string(n_out));
  c.require(worst_in <= 0.10, "inner max rel dev " + fmt("%.4f", worst_in) + " over " + std::to_string(n_in));
  return c;
}

Check separatrix_golden() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = separatrix_threshold(ref(-0.5), 1e-6, ClassifierConfig{});
  const double dt = seconds_since(t0);
  c.require(r.s_star >= 8.69755 - 1e-3 && r.s_star <= 8.69756 + 1e-3, "s* = " + fmt("%.9f", r.s_star));
  c.require(dt < 120.0, "runtime " + fmt("%.2f s", dt));
  return c;
}

Check classifier_golden() {
  Check c;
  struct Case {
    double g, s;
    Outcome want;
  };
  const std::vector<Case> cases = {
      {-1.2, 6.0, Outcome::Skin}, {-0.5, 7.0, Outcome::Skin}, {-0.5, 10.0, Outcome::Extended}, {0.2, 2.0, Outcome::Extended}};
  std::vector<double> transit;
  for (const auto& k : cases) {
    const auto r = classify(ref(k.g), k.s, ClassifierConfig{});
    c.require(r.outcome == k.want, "(" + fmt("%g", k.g) + ", " + fmt("%g", k.s) + ") " + to_string(r.outcome));
    transit.push_back(r.transit_length);
  }
  std::sort(transit.begin(), transit.end());
  const double median = 0.5 * (transit[1] + transit[2]);
  const auto lo = classify(ref(-0.5), 8.69755, ClassifierConfig{});
  const auto hi = classify(ref(-0.5), 8.69756, ClassifierConfig{});
  c.require(lo.outcome == Outcome::Skin, "8.69755 " + std::string(to_string(lo.outcome)));
  c.require(hi.outcome == Outcome::Extended, "8.69756 " + std::string(to_string(hi.outcome)));
  c.require(lo.transit_length > 5.0 * median, "transit ratio " + fmt("%.2f", lo.transit_length / median) + " (skin)");
  c.require(hi.transit_length > 5.0 * median, "transit ratio " + fmt("%.2f", hi.transit_length / median) + " (extended)");
  return c;
}

Check basin_structure() {
  Check c;
  BasinConfig cfg;
  cfg.fold_gamma = g_gamma_c;
  std::vector<double> grid;
  for (int i = 0; i < 65; ++i) grid.push_back(-1.3 + 1.6 * i / 64.0);
  const double s0 = std::sqrt(2.0 * 8.0);
  const auto rho = SlopeDensity::cauchy(s0);
  const auto scan = basin_scan(ref(0.0), grid, rho, cfg, true);
  bool below = true, above = true, mono = true;
  double prev = 2.0;
  for (const auto& pt : scan.points) {
    if (pt.gamma < g_gamma_c - 0.05 && pt.p_skin != 1.0) below = false;
    if (pt.gamma > 0.02 && pt.p_skin != 0.0) above = false;
    if (pt.gamma > g_gamma_c && pt.gamma < 0.0) {
      if (!(pt.p_skin < prev)) mono = false;
      prev = pt.p_skin;
    }
  }
  c.require(below, "p_skin = 1 below gamma_c - 0.05");
  c.require(above, "p_skin = 0 above 0.02");
  c.require(mono, "strictly decreasing in window");
  c.require(scan.jump && scan.jump->delta_p >= 0.05,
            "jump " + (scan.jump ? fmt("%.4f", scan.jump->delta_p) : std::string("missing")));
  double worst = 0.0;
  for (double s : {0.1, 1.0, 4.0, 8.6976, 16.0, 40.0, 1e3}) worst = std::max(worst, std::abs(p_skin_cauchy(s, s0) - p_skin_numeric(s, rho)));
  c.require(worst <= 1e-8, "closed form vs quadrature " + fmt("%.2e", worst));
  return c;
}

Check global_stability() {
  Check c;
  const auto p = ref(-2.5);
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  IntegratorConfig ic;
  ic.store_dense = false;
  double worst_V = 0.0, worst_rate = -INFINITY;
  for (int n = 0; n < 50; ++n) {
    const PhaseState y0{10.0 * u(rng), 40.0 * u(rng)};
    std::vector<EventRecord> log;
    const auto run = integrate_observed(p, y0, 0.0, 60.0, ic, {}, log,
                                        [&](const DenseSegment& seg, double x, std::span<const EventRecord>) {
                                          worst_rate = std::max(worst_rate, lyapunov_rate(p, seg.eval(x)));
                                          return true;
                                        });
    worst_V = std::max(worst_V, lyapunov_value(p, run.end));
  }
  c.require(worst_V < 1e-12, "max final V " + fmt("%.2e", worst_V));
  c.require(worst_rate <= 1e-12, "max V' " + fmt("%.2e", worst_rate));
  return c;
}

Check lienard_uniqueness() {
  Check c;
  const auto p = ref(0.2);
  std::vector<double> fixed;
  double worst_m = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto lc = find_cycle(p, 4.0 + 4.0 * i);
    fixed.push_back(lc.s_fixed);
    worst_m = std::max(worst_m, std::abs(lc.multiplier));
  }
  const auto [mn, mx] = std::minmax_element(fixed.begin(), fixed.end());
  c.require(*mx - *mn <= 1e-8, "spread " + fmt("%.2e", *mx - *mn));
  c.require(worst_m < 1.0, "|multiplier| " + fmt("%.3e", worst_m));
  const auto roots = scan_cycle_roots(p, 0.05, 60.0, 200, CycleSolverConfig{});
  c.require(roots.size() == 1, std::to_string(roots.size()) + " root(s)");
  return c;
}

Check at_most_two() {
  Check c;
  const std::vector<std::pair<double, std::size_t>> want = {{-0.9, 2}, {-0.5, 2}, {-0.1, 2}, {0.2, 1}, {0.5, 1}};
  for (const auto& [g, n] : want) {
    const auto roots = scan_cycle_roots(ref(g), 0.05, 60.0, 200, CycleSolverConfig{});
    c.require(roots.size() == n, fmt("gamma %g: ", g) + std::to_string(roots.size()));
  }
  return c;
}

Check hopf_scaling() {
  Check c;
  const double g = -0.001;
  const double ain = *branch_amplitudes(ref(g)).a_in;
  const double ratio = ain * ain * 0.5 / (-4.0 * g);
  c.require(ratio >= 0.98 && ratio <= 1.02, "theory ratio " + fmt("%.5f", ratio));
  const auto p = ref(-0.01);
  const double want = std::sqrt(-4.0 * -0.01 / 0.5);
  const auto lc = find_cycle(p, p.omega() * want);
  const double dev = std::abs(lc.amplitude - want) / want;
  c.require(dev <= 0.10, "numeric inner amplitude " + fmt("%.5f", lc.amplitude) + " rel dev " + fmt("%.4f", dev));
  return c;
}

Check hysteresis() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = ref(0.0);
  const double L = 50.0 * p.period();
  const auto p_hi = ref(0.5);
  const PhaseState ext{0.0, find_cycle(p_hi, p_hi.omega() * *branch_amplitudes(p_hi).a_out).s_fixed};
  const auto down = quasi_static_sweep(p, 0.5, -1.5, 200, L, ext);
  const auto up = quasi_static_sweep(p, -1.5, 0.5, 200, L, {0.0, 1e-3 * p.omega()});
  const double dt = seconds_since(t0);
  c.require(down.switch_gamma && std::abs(*down.switch_gamma - g_gamma_c) <= 0.05,
            "down switch " + (down.switch_gamma ? fmt("%.4f", *down.switch_gamma) : std::string("none")));
  c.require(up.switch_gamma && std::abs(*up.switch_gamma) <= 0.05,
            "up switch " + (up.switch_gamma ? fmt("%.4f", *up.switch_gamma) : std::string("none")));
  c.require(dt < 600.0, "runtime " + fmt("%.2f s", dt));
  return c;
}

Check hygiene() {
  Check c;
  auto avg = [](auto f) { return adaptive_lobatto(f, 0.0, 2.0 * M_PI, 1e-14, 1.0) / (2.0 * M_PI); };
  const double e1 = std::abs(avg([](double t) { return std::cos(t) * std::cos(t); }) - 0.5);
  const double e2 = std::abs(avg([](double t) { return std::pow(std::cos(t) * std::sin(t), 2); }) - 0.125);
  const double e3 = std::abs(avg([](double t) { return std::pow(std::cos(t), 4) * std::pow(std::sin(t), 2); }) - 0.0625);
  c.require(std::max({e1, e2, e3}) <= 1e-12, "trig averages " + fmt("%.1e", std::max({e1, e2, e3})));

  const auto h = ModelParams::linear_limit(0.0, 8.0);
  const PhaseState s0{0.0, 7.0};
  const auto t = integrate(h, s0, {0.0, 100.0 * h.period()}, IntegratorConfig{}, {});
  double drift = 0.0;
  for (const auto& s : t.states) drift = std::max(drift, std::abs(lyapunov_value(h, s) / lyapunov_value(h, s0) - 1.0));
  c.require(drift <= 1e-8, "Hermitian V drift " + fmt("%.1e", drift));

  double eig = 0.0;
  for (double g : {-2.5, -1.0, -0.5, 0.0, 0.2, 0.5, 4.5}) {
    const auto sp = origin_eigenvalues(ref(g));
    eig = std::max(eig, std::abs(sp.lambda_plus + sp.lambda_minus - 2.0 * g));
    eig = std::max(eig, std::abs(sp.lambda_plus * sp.lambda_minus - 16.0) / 16.0);
  }
  c.require(eig <= 1e-12, "eigenvalue identities " + fmt("%.1e", eig));

  CycleSolverConfig half;
  half.integrator = half.integrator.scaled_tolerances(0.5);
  const double gc_half = fold_by_continuation(ref(0.0), 0.5, half).gamma_c;
  c.require(std::abs(gc_half - g_gamma_c) < 1e-3, "tolerance halving shifts gamma_c by " + fmt("%.2e", std::abs(gc_half - g_gamma_c)));
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"fold threshold", fold_threshold},
      {"branch agreement", branch_agreement},
      {"separatrix golden value", separatrix_golden},
      {"classifier golden cases", classifier_golden},
      {"basin-fraction structure", basin_structure},
      {"global stability at gamma = -2.5", global_stability},
      {"Lienard uniqueness at gamma = 0.2", lienard_uniqueness},
      {"at most two cycles", at_most_two},
      {"Hopf scaling", hopf_scaling},
      {"hysteresis", hysteresis},
      {"numerics hygiene", hygiene},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c = criteria[i].second();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    if (!c.ok) ++failed;
    std::printf("%s %2zu %s (%.1f s): %s\n", c.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                seconds_since(t0), c.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
