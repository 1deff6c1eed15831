// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dmsync/bench.hpp"
#include "dmsync/casync.hpp"
#include "dmsync/verify.hpp"
#include "dmsync/zipf.hpp"

using namespace dmsync;

namespace {

struct Verdict {
  bool ok = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<Verdict()> check;
};

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

Verdict retry_law() {
  std::ostringstream d;
  bool ok = true;
  for (std::uint32_t n : {2u, 4u, 8u, 16u}) {
    const DrillResult r = lockstep_drill(ModeName::OSync, n);
    const std::uint64_t law = std::uint64_t{n} * (n - 1) / 2;
    ok = ok && r.cas_failures == law;
    d << "n=" << n << ":" << r.cas_failures << "/" << law << " ";
  }
  return {ok, d.str()};
}

Verdict single_writer_batch() {
  std::ostringstream d;
  bool ok = true;
  for (std::uint32_t k : {2u, 3u, 5u, 8u}) {
    const BatchAccounting b = measure_batch(k);
    ok = ok && b.matches();
    d << "k=" << k << ":w" << b.kv_writes << "/cas" << b.pointer_cas << "/rd" << b.entry_reads << "/msg"
      << b.notify + b.handback << "/wave" << b.wave << " ";
  }
  return {ok, d.str()};
}

Verdict last_writer_wins() {
  std::uint64_t batches = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const LwwCheck c = check_last_writer_wins(seed);
    batches += c.batches;
    if (!c.passed) return {false, "seed " + std::to_string(seed) + ": " + c.detail};
  }
  return {batches > 0, "200 schedules, " + std::to_string(batches) + " batches"};
}

Verdict linearizability_sweep() {
  VerifyOptions o;
  o.runs = 500;
  const SuiteResult lin = verify_linearizability(o);
  VerifyOptions m;
  m.skip_version_bump = true;
  const SuiteResult mutated = verify_fencing(m);
  std::string d = std::to_string(lin.cases) + " runs, " + std::to_string(lin.failures) + " failed; mutation: " +
                  std::to_string(mutated.failures) + "/" + std::to_string(mutated.cases) + " fencing cases fail";
  if (!lin.passed && !lin.details.empty()) d += "; " + lin.details.front();
  return {lin.passed && !mutated.passed, d};
}

Verdict version_fencing() {
  const auto cases = fencing_cases();
  std::uint64_t failed = 0;
  std::string first;
  for (const FencingCase& c : cases) {
    if (c.passed) continue;
    if (failed++ == 0) first = c.name + ": " + c.detail;
  }
  std::string d = std::to_string(cases.size()) + " scripted interleavings, " + std::to_string(failed) + " failed";
  if (failed) d += "; " + first;
  return {failed == 0 && !cases.empty(), d};
}

// Hand-computed traces: a starting cell, then rows of (episode, argument,
// expected credit, expected record, expected mode on decide rows).
Verdict credit_replay() {
  enum Ep { D, O, P };
  struct Row {
    Ep ep;
    std::uint64_t arg, credit, record;
    SyncMode mode;
  };
  struct Trace {
    CreditCell start;
    std::vector<Row> rows;
  };
  constexpr auto Opt = SyncMode::Optimistic, Pes = SyncMode::Pessimistic;
  const std::vector<Trace> traces = {
      {{0, 0}, {{D, 0, 0, 0, Opt}}},
      {{1, 0}, {{D, 0, 0, 0, Pes}}},
      {{5, 0}, {{P, 3, 7, 0, Opt}}},
      {{5, 0}, {{P, 1, 2, 0, Opt}}},
      {{0, 0}, {{P, 1, 0, 0, Opt}}},
      // Two consecutive hot commits trigger +36, one does not.
      {{0, 0}, {{D, 0, 0, 0, Opt}, {O, 2, 0, 2, Opt}, {D, 0, 0, 2, Opt}, {O, 2, 36, 2, Opt}, {D, 0, 35, 2, Pes}}},
      // The conjunction needs both: 0 then 5, 5 then 1, 1 then 2, 2 then 3.
      {{0, 0}, {{O, 0, 0, 0, Opt}, {O, 5, 0, 5, Opt}, {O, 1, 0, 1, Opt}, {O, 2, 0, 2, Opt}, {O, 3, 36, 3, Opt}}},
      // +2 on batch > 1, halving on batch == 1.
      {{0, 0},
       {{O, 2, 0, 2, Opt}, {O, 2, 36, 2, Opt}, {D, 0, 35, 2, Pes}, {P, 3, 37, 2, Opt}, {D, 0, 36, 2, Pes},
        {P, 1, 18, 2, Opt}, {D, 0, 17, 2, Pes}, {P, 1, 8, 2, Opt}, {D, 0, 7, 2, Pes}, {P, 2, 9, 2, Opt}}},
  };
  const SyncParams params;
  int rows = 0;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    CreditCell c = traces[t].start;
    for (std::size_t i = 0; i < traces[t].rows.size(); ++i) {
      const Row& r = traces[t].rows[i];
      SyncMode got = Opt;
      switch (r.ep) {
        case D: got = c.decide(); break;
        case O: c.after_optimistic(r.arg, params); break;
        case P: c.after_pessimistic(r.arg, params); break;
      }
      ++rows;
      if (c.credit != r.credit || c.retry_record != r.record || (r.ep == D && got != r.mode))
        return {false, "trace " + std::to_string(t) + " row " + std::to_string(i) + ": credit " +
                           std::to_string(c.credit) + " record " + std::to_string(c.retry_record)};
    }
  }
  return {true, std::to_string(traces.size()) + " traces, " + std::to_string(rows) + " episodes exact"};
}

RunResult contention_run(double theta, std::uint64_t seed) {
  WorkloadSpec w;
  w.mix = Mix::WriteIntensive;
  w.theta = theta;
  w.key_count = 1'000'000;
  w.ops_per_client = 2000;
  w.seed = seed;
  RunOptions o;
  o.mode = Mode{ModeName::Cider, false};
  o.clients = 64;
  return run(w, o);
}

Verdict contention_awareness() {
  const MetricsReport u = contention_run(0.0, 1).report;
  const MetricsReport z = contention_run(0.99, 1).report;
  const double concentration =
      z.pessimistic ? static_cast<double>(z.pessimistic_top_decile) / static_cast<double>(z.pessimistic) : 0.0;
  const bool ok = u.status == "completed" && z.status == "completed" && u.pessimistic_ratio < 0.05 &&
                  z.pessimistic > 0 && concentration >= 0.9 && z.pessimistic_wc_rate >= 0.5;
  return {ok, "uniform pessimistic_ratio " + fmt(u.pessimistic_ratio, 4) + "; skewed: " +
                  std::to_string(z.pessimistic_top_decile) + "/" + std::to_string(z.pessimistic) +
                  " pessimistic in top decile, pessimistic wc_rate " + fmt(z.pessimistic_wc_rate)};
}

double verbs_per_op(ModeName m, double theta, std::uint64_t seed) {
  WorkloadSpec w;
  w.mix = Mix::WriteOnly;
  w.theta = theta;
  w.key_count = 1000;
  w.ops_per_client = 500;
  w.seed = seed;
  RunOptions o;
  o.mode = Mode{m, false};
  o.clients = 64;
  o.policy = Policy::RoundRobin;
  return run(w, o).report.verbs_per_committed_op;
}

Verdict throughput_proxy() {
  int skewed = 0, uniform = 0;
  std::ostringstream d;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const double c = verbs_per_op(ModeName::Cider, 0.99, seed), m = verbs_per_op(ModeName::Mcs, 0.99, seed),
                 o = verbs_per_op(ModeName::OSync, 0.99, seed);
    skewed += c < m && m < o;
    if (seed == 1) d << "theta .99 seed 1: cider " << fmt(c, 2) << " < mcs " << fmt(m, 2) << " < osync " << fmt(o, 2);
    const double o0 = verbs_per_op(ModeName::OSync, 0.0, seed), m0 = verbs_per_op(ModeName::Mcs, 0.0, seed);
    uniform += o0 <= m0;
    if (seed == 1) d << "; theta 0: osync " << fmt(o0, 2) << " <= mcs " << fmt(m0, 2);
  }
  d << "; seeds ordered " << skewed << "/10 skewed, " << uniform << "/10 uniform";
  return {skewed >= 9 && uniform >= 9, d.str()};
}

Verdict epoch_recovery() {
  std::ostringstream d;
  bool ok = true;
  for (ModeName m : {ModeName::Mcs, ModeName::Cider}) {
    const EpochDrill e = epoch_drill(m, 4);
    ok = ok && e.passed;
    std::uint64_t worst = 0;
    for (std::uint64_t s : e.stall_delay) worst = std::max(worst, s);
    d << to_string(m) << ": " << (e.passed ? "ok" : e.detail) << " (window " << e.window << ", worst stall delay "
      << worst << ", repairs " << e.repairs_applied << ") ";
  }
  return {ok, d.str()};
}

Verdict zipf_fidelity() {
  const std::uint64_t n = 10, draws = 1'000'000;
  const double theta = 0.99;
  double z = 0;
  for (std::uint64_t r = 1; r <= n; ++r) z += std::pow(static_cast<double>(r), -theta);
  const double analytic = 1.0 / z;
  ZipfGenerator g(n, theta, 1);
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < draws; ++i) hits += g.next() == 0;
  const double empirical = static_cast<double>(hits) / static_cast<double>(draws);
  return {std::abs(empirical - analytic) <= 0.01,
          "rank-1 frequency " + fmt(empirical, 4) + " vs analytic " + fmt(analytic, 4)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "worst-case retry law", 1, retry_law},
      {2, "single-writer batch", 1, single_writer_batch},
      {3, "last-writer-wins", 10, last_writer_wins},
      {4, "linearizability sweep", 60, linearizability_sweep},
      {5, "version fencing", 5, version_fencing},
      {6, "credit ledger replay", 1, credit_replay},
      {7, "contention awareness", 300, contention_awareness},
      {8, "throughput-proxy ordering", 300, throughput_proxy},
      {9, "epoch recovery", 5, epoch_recovery},
      {10, "zipfian fidelity", 10, zipf_fidelity},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool ok = v.ok && in_time;
    failed += !ok;
    std::cout << (ok ? "PASS" : "FAIL") << " " << c.id << " " << c.title << ": " << v.detail << " [" << fmt(secs, 2)
              << "s of " << c.budget_s << "s" << (in_time ? "" : ", over budget") << "]" << std::endl;
  }
  return failed;
}
