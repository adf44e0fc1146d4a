// Acceptance suite: one PASS/FAIL line per criterion.
//
//   dpbl_acceptance [--known-failure ACn]...
//
// Exit status is 0 when every failing criterion was listed as a known
// failure. Known failures that pass are reported but do not fail the run.

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dpbl/bilevel.hpp"
#include "dpbl/cli/commands.hpp"
#include "dpbl/dcopf.hpp"
#include "dpbl/laplace.hpp"
#include "dpbl/solver.hpp"
#include "support/dcopf_oracle.hpp"
#include "support/lp_oracles.hpp"

namespace {

using namespace dpbl;
using testing::BruteForceFollower;
using Clock = std::chrono::steady_clock;

constexpr double kBandTol = 1e-6;
constexpr double kRatioTol = 1e-9;
constexpr double kMonoTol = 1e-6;
constexpr double kSolverTol = 1e-6;
constexpr int kCallBudget = 60;
constexpr double kRuntimeBudgetS = 60.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Fixture {
  std::string name;
  std::string file;
  Case c;
};

std::vector<Fixture> fixtures_list() {
  return {{"onebus-2gen", "onebus_2gen.m", fixtures::onebus_2gen()},
          {"tri-3bus", "tri_3bus.m", fixtures::tri_3bus()}};
}

// One seeded end-to-end release with the inputs needed to re-check it.
struct Run {
  std::string fixture;
  double beta_pct = 0.0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double f_tilde = 0.0;
  double beta = 0.0;
  PrivacyParams params;
  DemandVector d_orig;
  ObfuscationRun run;
  const Network* network = nullptr;
  const BruteForceFollower* oracle = nullptr;
};

struct Campaign {
  std::vector<Fixture> fixtures;
  std::map<std::string, BruteForceFollower> oracles;
  std::vector<Run> runs;
  double seconds = 0.0;
};

const std::vector<double> kBetaPct{10.0, 1.0, 0.1};
const std::vector<double> kAlpha{0.1, 1.0};
constexpr int kSeeds = 50;

Campaign run_campaign() {
  Campaign k;
  k.fixtures = fixtures_list();
  for (const Fixture& f : k.fixtures) k.oracles.emplace(f.name, BruteForceFollower(f.c.network));
  const auto t0 = Clock::now();
  for (const Fixture& f : k.fixtures) {
    const BruteForceFollower& oracle = k.oracles.at(f.name);
    const double f_tilde = *oracle.value(f.c.demand.values());
    for (double bp : kBetaPct) {
      const double beta = bp / 100.0 * f_tilde;
      const DcOpfProblem problem(DcOpfInstance{f.c.network, CostTarget{f_tilde}, beta});
      for (double alpha : kAlpha) {
        for (int s = 0; s < kSeeds; ++s) {
          Run r;
          r.fixture = f.name;
          r.beta_pct = bp;
          r.alpha = alpha;
          r.seed = static_cast<std::uint64_t>(s);
          r.f_tilde = f_tilde;
          r.beta = beta;
          r.params.alpha = alpha;
          r.params.beta = beta;
          r.params.seed = r.seed;
          r.d_orig = f.c.demand;
          r.network = &f.c.network;
          r.oracle = &oracle;
          r.run = run_obfuscation(problem, f.c.demand, r.params);
          k.runs.push_back(std::move(r));
        }
      }
    }
  }
  k.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return k;
}

std::string tag(const Run& r) {
  return fmt::format("{} beta={}% alpha={} seed={}", r.fixture, r.beta_pct, r.alpha, r.seed);
}

double norm_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

Outcome ac1(const Campaign& k) {
  int released = 0, violations = 0;
  std::map<std::string, int> other;
  std::string first;
  for (const Run& r : k.runs) {
    const BilevelResult& res = r.run.result;
    if (!res.released()) {
      ++other[to_string(res.status)];
      continue;
    }
    ++released;
    const auto o = r.oracle->value(res.d_star.values());
    if (!o || std::abs(*o - r.f_tilde) > r.beta + kBandTol) {
      if (first.empty()) first = tag(r);
      ++violations;
    }
  }
  std::string rest;
  for (const auto& [status, n] : other) rest += fmt::format(", {} {}", n, status);
  Outcome out;
  out.pass = violations == 0 && k.seconds < kRuntimeBudgetS;
  out.detail = fmt::format("{} runs, {} released{}, {} outside band (tol {}), runtime {:.2f} s (< {} s)",
                           k.runs.size(), released, rest, violations, kBandTol, k.seconds,
                           kRuntimeBudgetS);
  if (!first.empty()) out.detail += "; first: " + first;
  return out;
}

Outcome ac2(const Campaign& k) {
  double worst = 0.0, sum = 0.0;
  int n = 0, closer = 0;
  for (const Run& r : k.runs) {
    const BilevelResult& res = r.run.result;
    if (!res.released()) continue;
    const double denom = norm_diff(r.run.d_tilde.values(), r.d_orig.values());
    if (denom == 0.0) continue;
    const double ratio = norm_diff(res.d_star.values(), r.d_orig.values()) / denom;
    worst = std::max(worst, ratio);
    sum += ratio;
    ++n;
    if (ratio < 1.0) ++closer;
  }
  Outcome out;
  out.pass = n > 0 && worst <= 2.0 + kRatioTol;
  out.detail = fmt::format("max ratio {:.6f} (<= 2 + {}), mean {:.4f}, {}/{} runs closer to d_orig than d_tilde",
                           worst, kRatioTol, n ? sum / n : 0.0, closer, n);
  return out;
}

// Grid resolution per fixture for the equivalence check.
double grid_step(const Run& r) { return r.d_orig.size() == 1 ? 1e-4 : 1e-3; }

// Over-estimate of the true optimum by the grid at this step.
double grid_slack(double delta, double step) {
  return 2.0 * std::sqrt(2.0 * delta) * step + 2.0 * step * step + 1e-9;
}

Outcome ac3(const Campaign& k) {
  int checked = 0, bad = 0;
  double worst = 0.0;
  std::string first;
  for (const Run& r : k.runs) {
    if (r.beta_pct != 1.0 || r.alpha != 0.1 || r.seed >= 20) continue;
    const BilevelResult& res = r.run.result;
    if (!res.released()) {
      ++bad;
      if (first.empty()) first = tag(r) + " not released";
      continue;
    }
    const auto grid = testing::grid_optimum(*r.oracle, r.run.d_tilde.values(), r.d_orig.values(),
                                            r.f_tilde, r.beta, grid_step(r));
    ++checked;
    if (!grid) {
      ++bad;
      if (first.empty()) first = tag(r) + " grid found nothing";
      continue;
    }
    const double gap = std::abs(res.delta_star - grid->delta);
    worst = std::max(worst, gap);
    if (gap > 2.0 * r.params.eta) {
      ++bad;
      if (first.empty()) first = fmt::format("{} delta*={} grid={}", tag(r), res.delta_star, grid->delta);
    }
  }
  Outcome out;
  out.pass = bad == 0 && checked == 40;
  out.detail = fmt::format("{} runs (20 seeds x 2 fixtures, beta=1%, alpha=0.1), max |delta* - grid| {:.3g} (<= 2 eta = {})",
                           checked, worst, 2e-3);
  if (!first.empty()) out.detail += "; first: " + first;
  return out;
}

// Smallest squared distance of a BL-feasible grid point to d_tilde within
// the given radius, or nullopt when the disk holds none.
std::optional<testing::GridOptimum> feasible_within(const Run& r, double radius, double step) {
  const auto& dt = r.run.d_tilde.values();
  if (dt.size() == 1) {
    return testing::grid_search_1d(*r.oracle, dt[0], r.f_tilde, r.beta, radius, step);
  }
  return testing::grid_search_2d(*r.oracle, dt, r.f_tilde, r.beta, radius, step);
}

Outcome ac4(const Campaign& k) {
  int upper = 0, lower = 0, l1 = 0, l2 = 0, explained = 0;
  std::map<std::string, int> l2_by_fixture;
  std::string first;
  for (const Run& r : k.runs) {
    const BilevelResult& res = r.run.result;
    double deepest = 0.0;
    std::vector<const IterationRecord*> lowers;
    auto visit = [&](const IterationRecord& it) {
      if (it.branch == Branch::UpperUpdated) {
        ++upper;
        if (it.d_up.empty() ||
            !testing::bl_feasible(*r.oracle, it.d_up, r.f_tilde, r.beta, kBandTol)) {
          ++l1;
          if (first.empty()) first = fmt::format("upper update not BL-feasible: {} iter {}", tag(r), it.iter);
        }
      } else {
        ++lower;
        lowers.push_back(&it);
        deepest = std::max(deepest, it.delta_mid);
      }
    };
    for (const IterationRecord& it : res.probes) visit(it);
    for (const IterationRecord& it : res.trace) visit(it);
    if (lowers.empty() || deepest <= 0.0) continue;
    // Fine grid where the disk is small, otherwise about 800 points across.
    const double radius = std::sqrt(deepest);
    const double base = r.d_orig.size() == 1 ? 1e-4 : 1e-3;
    const double step = std::max(base, 2.0 * radius / 800.0);
    const auto grid = feasible_within(r, radius, step);
    if (!grid) continue;
    for (const IterationRecord* it : lowers) {
      if (grid->delta <= it->delta_mid - grid_slack(grid->delta, step)) {
        ++l2;
        ++l2_by_fixture[r.fixture];
        // The push-up maximized the proxy over a ball holding the grid point,
        // yet its own point misses the floor: cost is not monotone in the proxy.
        double m = 0.0;
        for (double v : grid->point) m += v;
        const auto o_up = r.oracle->value(it->d_up);
        if (m <= it->pushup_objective + 1e-6 && (!o_up || *o_up < r.f_tilde - r.beta)) ++explained;
        if (first.empty()) {
          first = fmt::format("lower update skipped a BL-feasible point: {} iter {} delta_mid={} grid point at delta={}",
                              tag(r), it->iter, it->delta_mid, grid->delta);
        }
      }
    }
  }
  Outcome out;
  out.pass = l1 == 0 && l2 == 0;
  std::string split;
  for (const Fixture& f : k.fixtures) split += fmt::format(" {} {}", f.name, l2_by_fixture[f.name]);
  out.detail = fmt::format(
      "{} upper updates, {} not BL-feasible; {} lower updates, {} with a grid-feasible point inside "
      "(by fixture:{}; {} of them at a higher-proxy push-up point below the floor)",
      upper, l1, lower, l2, split, explained);
  if (!first.empty()) out.detail += "; first: " + first;
  return out;
}

Outcome ac5(const Campaign& k) {
  int worst = 0, over = 0, capped = 0;
  for (const Run& r : k.runs) {
    const BilevelResult& res = r.run.result;
    worst = std::max(worst, res.oracle_calls);
    if (res.oracle_calls > kCallBudget) ++over;
    if (res.status == BilevelStatus::OracleCapHit) ++capped;
  }
  Outcome out;
  out.pass = over == 0 && capped == 0;
  out.detail = fmt::format("max oracle calls {} (<= {}), {} runs over budget, {} hit the cap", worst,
                           kCallBudget, over, capped);
  return out;
}

// Onebus with d_tilde forced to 0.3. O(d) = d on [0, 1], so the relaxation
// lands on 0.3 and the bilevel point on the band floor.
Outcome ac6() {
  const double f = 0.5, beta = 0.01, floor = f - beta;
  const Case c = fixtures::onebus_2gen();
  const DcOpfProblem problem(DcOpfInstance{c.network, CostTarget{f}, beta});
  const BruteForceFollower oracle(c.network);
  PrivacyParams params;
  params.beta = beta;
  const DemandVector d_tilde(std::vector<double>{0.3}, DemandRole::Noisy);
  const BilevelResult res = solve_bilevel(problem, d_tilde, params);
  Outcome out;
  if (!res.released() || !res.hpr_point) {
    out.detail = fmt::format("not released: {} {}", to_string(res.status), res.message);
    return out;
  }
  const double o_hpr = *oracle.value(res.hpr_point->values());
  const double o_bl = *oracle.value(res.d_star.values());
  const double hpr_err = (o_hpr - f) / f;
  const double hpr_below_floor = (o_hpr - floor) / f;
  const double bl_err = (o_bl - f) / f;
  const double bl_outside = (o_bl < floor ? o_bl - floor : o_bl > f + beta ? o_bl - f - beta : 0.0) / f;
  out.pass = std::abs(o_hpr - 0.3) <= 1e-6 && std::abs(hpr_below_floor + 0.38) <= 1e-6 &&
             std::abs(hpr_err + 0.40) <= 1e-6 && std::abs(bl_outside) <= 0.01 + 1e-6 &&
             std::abs(bl_err) <= beta / f + 1e-6;
  out.detail = fmt::format(
      "O(d_hpr)={:.7f}, HPR below floor {:.4f}% (-38%), HPR error vs f {:.4f}% (-40%), BL O(d*)={:.7f}, "
      "BL outside band {:.4f}% (within 1%), BL error vs f {:.4f}%",
      o_hpr, 100 * hpr_below_floor, 100 * hpr_err, o_bl, 100 * bl_outside, 100 * bl_err);
  return out;
}

std::vector<double> probe_grid() {
  std::set<double> g{0.0};
  for (int k = 0; k <= 40; ++k) g.insert(1e-5 * std::pow(2.0, k / 2.0));
  for (int k = 1; k <= 40; ++k) g.insert(0.01 * k);
  return {g.begin(), g.end()};
}

Outcome ac7(const std::filesystem::path& data) {
  const std::vector<double> grid = probe_grid();
  int curves = 0, bad = 0;
  std::string first;
  auto check = [&](const cli::RunConfig& cfg, const std::string& what) {
    const auto rows = cli::run_probe(cfg);
    ++curves;
    if (const auto d = cli::first_decrease(rows, kMonoTol)) {
      ++bad;
      if (first.empty()) {
        first = fmt::format("{}: O(d_up) {} at delta={} then {} at delta={}", what,
                            rows[d->first].follower_cost, rows[d->first].delta,
                            rows[d->second].follower_cost, rows[d->second].delta);
      }
    }
  };
  for (const Fixture& f : fixtures_list()) {
    for (double alpha : kAlpha) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        cli::RunConfig cfg;
        cfg.case_path = data / f.file;
        cfg.beta_percent = 1.0;
        cfg.privacy.alpha = alpha;
        cfg.privacy.seed = seed;
        cfg.delta_grid = grid;
        check(cfg, fmt::format("{} alpha={} seed={}", f.name, alpha, seed));
      }
    }
  }
  cli::RunConfig cfg;
  cfg.case_path = data / "onebus_2gen.m";
  cfg.f_tilde = 0.5;
  cfg.beta = 0.01;
  cfg.d_tilde = std::vector<double>{0.3};
  cfg.delta_grid = grid;
  check(cfg, "onebus-2gen d_tilde=0.3");
  Outcome out;
  out.pass = bad == 0;
  out.detail = fmt::format("{} curves over {} delta values, {} with a drop above {}", curves, grid.size(),
                           bad, kMonoTol);
  if (!first.empty()) out.detail += "; first: " + first;
  return out;
}

// Laplace(0, b) CDF written out here so the check does not reuse the library.
double reference_cdf(double x, double b) {
  return x < 0 ? 0.5 * std::exp(x / b) : 1.0 - 0.5 * std::exp(-x / b);
}

Outcome ac8() {
  constexpr int n = 100000;
  constexpr double b = 0.1;
  LaplaceNoise noise(b, 2024);
  std::vector<double> xs(n);
  for (double& x : xs) x = noise.sample();
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double F = reference_cdf(xs[i], b);
    d = std::max({d, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
  }
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= n - 1;
  const double critical = 1.62762 / std::sqrt(static_cast<double>(n));  // alpha = 1%
  const double var_err = std::abs(var - 2 * b * b) / (2 * b * b);
  Outcome out;
  out.pass = d < critical && var_err <= 0.05;
  out.detail = fmt::format("KS D={:.5f} (< {:.5f}), variance {:.6f} vs 0.02 ({:.2f}% off, <= 5%)", d,
                           critical, var, 100 * var_err);
  return out;
}

ConvexProgram from_random(const testing::RandomProgram& rp) {
  ConvexProgram p(static_cast<int>(rp.c.size()));
  p.Q = rp.Q;
  p.c = rp.c;
  p.Aeq = rp.A;
  p.beq = rp.b;
  p.Ain = rp.G;
  p.bin = rp.h;
  p.lb = rp.lb;
  p.ub = rp.ub;
  return p;
}

Outcome ac9() {
  std::mt19937_64 rng(90);
  std::uniform_int_distribution<int> nd_lp(1, 5), md_lp(1, 6), nd_qp(1, 3), md_qp(1, 4);
  int programs = 0, bad = 0;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const bool quadratic = t % 2 == 1;
    const auto rp = quadratic ? testing::random_program(rng, nd_qp(rng), md_qp(rng), true, t % 8 == 1)
                              : testing::random_program(rng, nd_lp(rng), md_lp(rng), false, t % 6 == 0);
    const auto oracle =
        quadratic ? testing::enumerate_active_sets(rp.Q, rp.c, rp.A, rp.b, rp.all_rows(), rp.all_rhs())
                  : testing::enumerate_vertices(rp.c, rp.A, rp.b, rp.all_rows(), rp.all_rhs());
    ++programs;
    const ProgramSolution sol = solve(from_random(rp));
    if (!oracle || sol.status != SolveStatus::Optimal) {
      ++bad;
      continue;
    }
    double err = std::abs(sol.objective - oracle->objective);
    if (quadratic) err = std::max(err, (sol.x - oracle->x).lpNorm<Eigen::Infinity>());
    worst = std::max(worst, err);
    if (err > kSolverTol) ++bad;
  }
  std::uniform_real_distribution<double> unit(-1.0, 1.0), rad(1e-4, 4.0);
  int balls = 0, ball_bad = 0;
  double ball_worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + t % 5;
    Eigen::VectorXd c(n), z(n);
    for (int j = 0; j < n; ++j) {
      c[j] = unit(rng);
      z[j] = unit(rng);
    }
    const double delta = rad(rng);
    ConvexProgram p(n);
    p.c = c;
    p.sense = Sense::Maximize;
    BallConstraint ball;
    for (int j = 0; j < n; ++j) ball.indices.push_back(j);
    ball.center = z;
    ball.radius_sq = delta;
    p.ball = ball;
    ++balls;
    const ProgramSolution sol = solve(p);
    if (sol.status != SolveStatus::Optimal) {
      ++ball_bad;
      continue;
    }
    const Eigen::VectorXd expected = z + std::sqrt(delta) * c / c.norm();
    const double err = (sol.x - expected).lpNorm<Eigen::Infinity>();
    ball_worst = std::max(ball_worst, err);
    if (err > kSolverTol) ++ball_bad;
  }
  Outcome out;
  out.pass = bad == 0 && ball_bad == 0;
  out.detail = fmt::format("{} LP/QP, {} mismatched, max err {:.2g}; {} ball programs, {} mismatched, max err {:.2g} (tol {})",
                           programs, bad, worst, balls, ball_bad, ball_worst, kSolverTol);
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome ac10(const std::filesystem::path& cli, const std::filesystem::path& data) {
  const auto root = std::filesystem::temp_directory_path() /
                    fmt::format("dpbl_acceptance_{}", std::chrono::system_clock::now().time_since_epoch().count());
  Outcome out;
  std::vector<std::string> reports;
  for (const char* sub : {"a", "b"}) {
    const auto dir = root / sub;
    const std::string cmd = fmt::format(
        "\"{}\" benchmark --case \"{}\" --beta-pct 1 --seed 42 --runs 50 --out \"{}\" > /dev/null 2>&1",
        cli.string(), (data / "tri_3bus.m").string(), dir.string());
    const int rc = std::system(cmd.c_str());
    if (rc != 0) {
      out.detail = fmt::format("invocation failed with status {}", rc);
      std::filesystem::remove_all(root);
      return out;
    }
    reports.push_back(slurp(dir / "report.csv"));
  }
  std::filesystem::remove_all(root);
  out.pass = !reports[0].empty() && reports[0] == reports[1];
  out.detail = fmt::format("two `dp-bilevel benchmark --seed 42 --runs 50` runs on tri-3bus: report.csv {} bytes, {}",
                           reports[0].size(), out.pass ? "identical" : "different");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> known;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--known-failure" && i + 1 < argc) {
      known.insert(argv[++i]);
    } else {
      fmt::print(stderr, "usage: {} [--known-failure ACn]...\n", argv[0]);
      return 64;
    }
  }
  const std::filesystem::path data = DPBL_DATA_DIR;
  const std::filesystem::path cli = DPBL_CLI_PATH;

  spdlog::set_level(spdlog::level::warn);
  const Campaign k = run_campaign();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1", [&] { return ac1(k); }},
      {"AC2", [&] { return ac2(k); }},
      {"AC3", [&] { return ac3(k); }},
      {"AC4", [&] { return ac4(k); }},
      {"AC5", [&] { return ac5(k); }},
      {"AC6", [] { return ac6(); }},
      {"AC7", [&] { return ac7(data); }},
      {"AC8", [] { return ac8(); }},
      {"AC9", [] { return ac9(); }},
      {"AC10", [&] { return ac10(cli, data); }},
  };
  int unexpected = 0;
  for (const auto& [id, check] : criteria) {
    const auto t0 = Clock::now();
    const Outcome o = check();
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool listed = known.count(id) > 0;
    std::string note;
    if (!o.pass && listed) note = " [known failure]";
    if (o.pass && listed) note = " [listed as known failure but passed]";
    fmt::print("{} {}  {}{} [{:.1f} s]\n", id, o.pass ? "PASS" : "FAIL", o.detail, note, secs);
    if (!o.pass && !listed) ++unexpected;
  }
  std::fflush(stdout);
  return unexpected == 0 ? 0 : 1;
}
