#include "dmsync/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <stdexcept>

#include <CLI11.hpp>

#include "dmsync/bench.hpp"
#include "dmsync/verify.hpp"

namespace dmsync::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

struct BenchArgs {
  std::string mode = "cider";
  std::uint32_t clients = 64;
  std::uint32_t nodes = 0;
  std::uint64_t keys = 1'000'000;
  double theta = 0.99;
  std::string mix = "write_intensive";
  std::uint64_t ops = 100'000;
  std::uint64_t seed = 1;
  bool deterministic = true;
  std::string policy = "random";
  bool local_wc = false;
  std::uint64_t aimd_factor = 2;
  std::uint64_t initial_credit = 36;
  std::uint64_t hotness_threshold = 2;
  std::string out;
  std::string history;
};

struct VerifyArgs {
  std::vector<std::string> suites;
  std::uint64_t seed = 1;
  std::uint32_t runs = 500;
  std::string mutation;
};

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  WorkloadSpec w;
  w.mix = *parse_mix(a.mix);
  w.theta = a.theta;
  w.key_count = a.keys;
  w.ops_per_client = a.ops;
  w.seed = a.seed;
  RunOptions o;
  o.mode = Mode{*parse_mode(a.mode), a.local_wc};
  o.clients = a.clients;
  o.nodes = a.nodes;
  o.deterministic = a.deterministic;
  o.policy = a.policy == "round_robin" ? Policy::RoundRobin : Policy::Random;
  o.sync.aimd_factor = a.aimd_factor;
  o.sync.initial_credit = a.initial_credit;
  o.sync.hotness_threshold = a.hotness_threshold;
  o.record_history = !a.history.empty();
  try {
    w.validate();
    o.validate();
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  const RunResult r = run(w, o);
  const MetricsReport& m = r.report;
  out << "mode " << m.mode << (m.local_wc ? "+local_wc" : "") << ", " << m.clients << " clients on " << m.nodes
      << " nodes, " << m.mix << ", theta " << m.theta << ", " << m.keys << " keys\n";
  out << "  status            " << m.status << "\n";
  out << "  issued            " << m.issued << " (committed " << m.committed << ", invalid " << m.invalid
      << ", fenced " << m.fenced << ")\n";
  out << std::fixed << std::setprecision(3);
  out << "  verbs/op          " << m.verbs_per_committed_op << "\n";
  out << "  ptr cas failures  " << m.cas_failures << "\n";
  out << "  pessimistic ratio " << m.pessimistic_ratio << "\n";
  out << "  wc rate           " << m.wc_rate << " (pessimistic " << m.pessimistic_wc_rate << ", avg batch "
      << m.avg_batch << ")\n";
  out << "  latency p50/p99   " << m.latency_p50 << " / " << m.latency_p99 << " " << m.latency_unit << "\n";
  out << std::defaultfloat;

  try {
    if (a.out.empty()) {
      for (std::size_t i = 0; i < csv_columns().size(); ++i) out << (i ? "," : "") << csv_columns()[i];
      out << "\n" << csv_row(m) << "\n";
    } else {
      export_csv(m, a.out);
    }
    if (!a.history.empty()) {
      std::ofstream h(a.history);
      if (!h) throw std::runtime_error("cannot open " + a.history);
      write_history_jsonl(h, r.history);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return m.status == "completed" ? kOk : kVerifyFailed;
}

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  VerifyOptions o;
  o.seed = a.seed;
  o.runs = a.runs;
  o.skip_version_bump = a.mutation == "skip_version_bump";
  const std::vector<std::string> suites = a.suites.empty() ? suite_names() : a.suites;
  bool ok = true;
  for (const auto& name : suites) {
    const SuiteResult r = *run_suite(name, o);
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.cases << " cases, " << r.failures << " failed)\n";
    for (const auto& d : r.details) out << "  " << d << "\n";
    ok = ok && r.passed;
  }
  return ok ? kOk : kVerifyFailed;
}

int cmd_microtest(std::uint32_t n, std::ostream& out) {
  const DrillResult o = lockstep_drill(ModeName::OSync, n);
  const DrillResult c = lockstep_drill(ModeName::Cider, n);
  const std::uint64_t law = std::uint64_t{n} * (n - 1) / 2;
  out << "lockstep drill, " << n << " clients, 1 key\n";
  out << std::fixed << std::setprecision(3);
  out << "  osync  ptr cas failures " << o.cas_failures << " (n(n-1)/2 = " << law << "), verbs/op "
      << o.verbs_per_committed_op << "\n";
  out << "  cider  ptr cas failures " << c.cas_failures << ", verbs/op " << c.verbs_per_committed_op << ", wc rate "
      << c.wc_rate << "\n";
  out << "  verb ratio osync/cider " << (c.verbs_per_committed_op > 0 ? o.verbs_per_committed_op / c.verbs_per_committed_op : 0.0)
      << "\n";
  out << std::defaultfloat;
  return o.cas_failures == law && c.cas_failures == 0 ? kOk : kVerifyFailed;
}

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  for (int no = 1; std::getline(in, line); ++no) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || trim(line.substr(0, eq)).empty())
      throw std::runtime_error(path + ":" + std::to_string(no) + ": expected key=value");
    kv.emplace_back(flag_name(trim(line.substr(0, eq))), trim(line.substr(eq + 1)));
  }
  return kv;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pessimistic synchronization simulator for disaggregated-memory KV stores", "dmsim"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config;
  app.add_option("--config", config, "Flat key=value file; explicit flags override it");

  BenchArgs b;
  CLI::App* bench = app.add_subcommand("bench", "Run one workload and export a CSV row");
  bench->add_option("--mode", b.mode, "osync | cas_backoff | mcs | cider")
      ->check(CLI::IsMember({"osync", "cas_backoff", "mcs", "cider"}))
      ->capture_default_str();
  bench->add_option("--clients", b.clients)->check(CLI::Range(1, 4096))->capture_default_str();
  bench->add_option("--nodes", b.nodes, "Compute nodes (default: 4 clients each)");
  bench->add_option("--keys", b.keys)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--theta", b.theta, "Zipfian skew")->check(CLI::Range(0.0, 0.999999))->capture_default_str();
  bench->add_option("--mix", b.mix)
      ->check(CLI::IsMember({"write_intensive", "read_intensive", "write_only"}))
      ->capture_default_str();
  bench->add_option("--ops", b.ops, "Operations per client")->capture_default_str();
  bench->add_option("--seed", b.seed)->capture_default_str();
  bench->add_flag("--deterministic,!--free-running", b.deterministic, "Deterministic scheduler (default) or threads");
  bench->add_option("--policy", b.policy, "Deterministic schedule: random | round_robin")
      ->check(CLI::IsMember({"random", "round_robin"}))
      ->capture_default_str();
  bench->add_flag("--local-wc", b.local_wc, "Enable local write combining");
  bench->add_option("--aimd-factor", b.aimd_factor)->check(CLI::Range(2, 1 << 20))->capture_default_str();
  bench->add_option("--initial-credit", b.initial_credit)->capture_default_str();
  bench->add_option("--hotness-threshold", b.hotness_threshold)->capture_default_str();
  bench->add_option("--out", b.out, "Append the CSV row here (default: print to stdout)");
  bench->add_option("--history", b.history, "Write the operation history as JSON lines");

  VerifyArgs v;
  CLI::App* verify = app.add_subcommand("verify", "Run deterministic verification suites");
  verify->add_option("suites", v.suites, "linearizability | fencing | gwc | epoch (default: all)")
      ->check(CLI::IsMember(suite_names()));
  verify->add_option("--seed", v.seed, "First seed of the seeded suites")->capture_default_str();
  verify->add_option("--runs", v.runs, "Linearizability runs per mode")->check(CLI::PositiveNumber)->capture_default_str();
  verify->add_option("--mutation", v.mutation)->check(CLI::IsMember({"skip_version_bump"}))->group("");

  std::uint32_t n = 4;
  CLI::App* micro = app.add_subcommand("microtest", "Lockstep single-key drill in osync and cider");
  micro->add_option("-n,--clients", n)->check(CLI::Range(2, 1024))->capture_default_str();

  // Config entries become flags placed right after the subcommand name.
  std::vector<std::string> argv = args;
  for (std::size_t i = 0; i < argv.size(); ++i) {
    std::string path;
    if (argv[i] == "--config" && i + 1 < argv.size()) {
      path = argv[i + 1];
      argv.erase(argv.begin() + static_cast<std::ptrdiff_t>(i), argv.begin() + static_cast<std::ptrdiff_t>(i) + 2);
    } else if (argv[i].rfind("--config=", 0) == 0) {
      path = argv[i].substr(9);
      argv.erase(argv.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      continue;
    }
    auto sub = std::find_if(argv.begin(), argv.end(),
                            [&app](const std::string& s) { return app.get_subcommand_no_throw(s) != nullptr; });
    if (sub == argv.end()) {
      err << "error: --config needs a subcommand\n";
      return kUsage;
    }
    CLI::App* target = app.get_subcommand(*sub);
    std::vector<std::string> injected;
    try {
      for (const auto& [key, value] : read_config(path)) {
        bool known = false;
        for (CLI::App* s : {bench, verify, micro}) known = known || s->get_option_no_throw("--" + key) != nullptr;
        if (!known) throw std::runtime_error(path + ": unknown key '" + key + "'");
        if (target->get_option_no_throw("--" + key)) injected.push_back("--" + key + "=" + value);
      }
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kUsage;
    }
    argv.insert(sub + 1, injected.begin(), injected.end());
    i = static_cast<std::size_t>(-1);  // rescan for further --config flags
  }

  try {
    std::vector<std::string> rev(argv.rbegin(), argv.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  if (*bench) return cmd_bench(b, out, err);
  if (*verify) return cmd_verify(v, out);
  return cmd_microtest(n, out);
}

}  // namespace dmsync::cli
