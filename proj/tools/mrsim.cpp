#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mrsim/bruteforce.hpp"
#include "mrsim/bsp.hpp"
#include "mrsim/fifoqueue.hpp"
#include "mrsim/multisearch.hpp"
#include "mrsim/pram.hpp"
#include "mrsim/prefix.hpp"
#include "mrsim/report.hpp"
#include "mrsim/samplesort.hpp"
#include "mrsim/verify.hpp"
#include "mrsim/wordcount.hpp"

using namespace mrsim;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitBudget = 2;
constexpr int kExitRoundLimit = 3;
constexpr int kExitUsage = 64;
constexpr int kExitParse = 65;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::string alg;
  std::uint64_t n = 1024;
  std::uint64_t m = 64;
  std::uint64_t seed = 42;
  std::string mode = "strict";
  double latency = 1;
  double bandwidth = 1024;
  std::string input, pivots, queries, report, program;
};

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    line = trim(line);
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

json parse_record(const std::string& line, const std::string& where) {
  try {
    auto j = json::parse(line);
    if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
}

// Newline-delimited integers or JSON-lines records with an integer "value".
std::vector<std::int64_t> read_numbers(const std::string& path) {
  std::vector<std::int64_t> out;
  std::size_t no = 0;
  for (auto& line : read_lines(path)) {
    const std::string where = path + ":" + std::to_string(++no);
    if (line.front() == '{') {
      auto j = parse_record(line, where);
      if (!j.contains("value") || !j["value"].is_number_integer()) throw ParseError(where + ": missing integer value");
      out.push_back(j["value"].get<std::int64_t>());
      continue;
    }
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc() || p != line.data() + line.size()) throw ParseError(where + ": not an integer");
    out.push_back(v);
  }
  return out;
}

// Whitespace-separated words, or JSON-lines records whose "key" is one token.
std::vector<std::string> read_tokens(const std::string& path) {
  std::vector<std::string> out;
  std::size_t no = 0;
  for (auto& line : read_lines(path)) {
    const std::string where = path + ":" + std::to_string(++no);
    if (line.front() == '{') {
      auto j = parse_record(line, where);
      if (!j.contains("key") || !j["key"].is_string()) throw ParseError(where + ": missing string key");
      out.push_back(j["key"].get<std::string>());
      continue;
    }
    std::istringstream ss(line);
    for (std::string w; ss >> w;) out.push_back(w);
  }
  for (auto& w : out)
    if (w.size() > kMaxWordBytes) throw ParseError("word longer than " + std::to_string(kMaxWordBytes) + " bytes");
  return out;
}

std::vector<std::int64_t> numbers_or_random(const std::string& path, std::uint64_t n, std::uint64_t seed) {
  if (!path.empty()) return read_numbers(path);
  Rng rng(seed);
  std::vector<std::int64_t> v(n);
  for (auto& x : v) x = rng.range(-1000000, 1000000);
  return v;
}

void line(const json& j) { std::cout << j.dump() << '\n'; }

void print_ranks(const std::vector<std::uint64_t>& ranks) {
  for (std::size_t i = 0; i < ranks.size(); ++i) line({{"index", i}, {"rank", ranks[i]}});
}

ExecutionReport run_alg(const RunOptions& o, const EngineConfig& cfg, bool& oracle_ok) {
  const std::string& a = o.alg;
  if (a == "wordcount") {
    std::vector<std::string> tokens;
    if (!o.input.empty()) {
      tokens = read_tokens(o.input);
    } else {
      Rng rng(o.seed);
      const std::uint64_t vocab = std::max<std::uint64_t>(1, pivot_count(o.n));
      for (std::uint64_t i = 0; i < o.n; ++i) tokens.push_back("w" + std::to_string(rng.below(vocab)));
    }
    auto r = word_count(tokens, cfg);
    for (auto& [w, c] : r.counts) line({{"key", w}, {"count", c}});
    return r.report;
  }
  if (a == "prefix") {
    auto v = numbers_or_random(o.input, o.n, o.seed);
    auto r = prefix_sums(v, cfg);
    for (std::size_t i = 0; i < r.sums.size(); ++i) line({{"index", i}, {"sum", r.sums[i]}});
    return r.report;
  }
  if (a == "index") {
    auto r = random_indexing(o.n, o.n, cfg);
    print_ranks(r.ranks);
    return r.report;
  }
  if (a == "bsp-demo") {
    const std::string prog = o.program.empty() ? "ring" : o.program;
    BspProgram p;
    if (prog == "ring")
      p = ring_shift_program(o.n);
    else if (prog == "broadcast")
      p = tree_broadcast_program(o.n, 4, static_cast<std::int64_t>(o.seed));
    else
      throw UsageError("bsp-demo programs: ring, broadcast");
    auto r = simulate_bsp(p, cfg);
    oracle_ok = r.states == bsp_oracle(p, cfg.seed).states;
    line({{"program", prog}, {"processors", p.P}, {"supersteps", p.supersteps}, {"oracle", oracle_ok ? "match" : "mismatch"}});
    return r.report;
  }
  if (a == "pram-demo") {
    const std::string prog = o.program.empty() ? "sum-reduce" : o.program;
    PramProgram p;
    if (prog == "sum-reduce")
      p = sum_reduce_program(numbers_or_random(o.input, o.n, o.seed));
    else if (prog == "histogram")
      p = histogram_program(o.n, std::max<std::uint64_t>(1, o.n / 16));
    else if (prog == "max-scan")
      p = max_scan_program(numbers_or_random(o.input, o.n, o.seed));
    else
      throw UsageError("pram-demo programs: sum-reduce, histogram, max-scan");
    auto r = simulate_pram(p, cfg);
    auto ref = pram_oracle(p);
    oracle_ok = r.memory == ref.memory && r.states == ref.states;
    line({{"program", prog}, {"processors", p.P}, {"steps", p.T}, {"oracle", oracle_ok ? "match" : "mismatch"}});
    for (std::size_t i = 0; i < r.memory.size(); ++i) line({{"cell", i}, {"value", r.memory[i]}});
    return r.report;
  }
  if (a == "multisearch") {
    std::vector<std::int64_t> P, Q;
    if (!o.pivots.empty()) {
      P = read_numbers(o.pivots);
    } else {
      P = numbers_or_random("", std::max<std::uint64_t>(1, o.n / 8), o.seed ^ 0x5eed);
      std::sort(P.begin(), P.end());
      P.erase(std::unique(P.begin(), P.end()), P.end());
    }
    Q = numbers_or_random(o.queries, o.n, o.seed);
    MultiSearchResult r;
    try {
      r = multi_search(P, Q, cfg, o.mode == "queued");
    } catch (const UnsortedPivots& e) {
      throw ParseError(e.what());
    }
    for (std::size_t i = 0; i < Q.size(); ++i) line({{"query", Q[i]}, {"rank", r.ranks[i]}});
    return r.report;
  }
  if (a == "brutesort") {
    auto r = brute_sort(numbers_or_random(o.input, o.n, o.seed), cfg);
    print_ranks(r.ranks);
    return r.report;
  }
  if (a == "sort") {
    auto r = sample_sort(numbers_or_random(o.input, o.n, o.seed), cfg);
    print_ranks(r.ranks);
    return r.report;
  }
  throw UsageError("unknown algorithm: " + a);
}

void write_report(const RunOptions& o, const ExecutionReport& rep) {
  if (o.report.empty()) return;
  std::ofstream out(o.report);
  if (!out) throw UsageError("cannot write " + o.report);
  out << report_json(rep, {o.latency, o.bandwidth}).dump(2) << '\n';
}

int cmd_run(const RunOptions& o) {
  static const std::vector<std::string> algs{"wordcount", "prefix",      "index",     "bsp-demo",
                                             "pram-demo", "multisearch", "brutesort", "sort"};
  try {
    if (std::find(algs.begin(), algs.end(), o.alg) == algs.end()) throw UsageError("unknown algorithm: " + o.alg);
    if (o.m < 4) throw UsageError("--m must be at least 4");
    if (o.mode != "strict" && o.mode != "modified" && o.mode != "queued")
      throw UsageError("--mode must be strict, modified or queued");
    if (o.mode == "queued" && o.alg != "multisearch") throw UsageError("queued mode is only supported by multisearch");
    EngineConfig cfg;
    cfg.M = o.m;
    cfg.seed = o.seed;
    cfg.mode = o.mode == "modified" ? Mode::Modified : Mode::Strict;
    if (const char* env = std::getenv("MRSIM_ROUND_LIMIT")) {
      std::string s(env);
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), cfg.round_limit);
      if (ec != std::errc() || p != s.data() + s.size()) throw UsageError("MRSIM_ROUND_LIMIT must be an integer");
    }
    bool oracle_ok = true;
    auto rep = run_alg(o, cfg, oracle_ok);
    write_report(o, rep);
    std::cout << summary_line(rep, {o.latency, o.bandwidth}) << '\n';
    return oracle_ok ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitParse;
  } catch (const BudgetViolation& e) {
    write_report(o, e.report);
    std::cerr << "budget violation: " << e.what() << '\n';
    return kExitBudget;
  } catch (const CopyOverload& e) {
    write_report(o, e.report);
    std::cerr << "budget violation: " << e.what() << '\n';
    return kExitBudget;
  } catch (const LeafOverflow& e) {
    write_report(o, e.report);
    std::cerr << "budget violation: " << e.what() << '\n';
    return kExitBudget;
  } catch (const BspBudgetViolation& e) {
    std::cerr << "budget violation: " << e.what() << '\n';
    return kExitBudget;
  } catch (const SenderCountExceeded& e) {
    std::cerr << "budget violation: " << e.what() << '\n';
    return kExitBudget;
  } catch (const RoundLimitExceeded& e) {
    std::cerr << "round limit: " << e.what() << '\n';
    return kExitRoundLimit;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_verify(const std::string& suite, std::uint64_t seeds, const std::string& combine) {
  VerifyOptions opt;
  opt.seeds = seeds;
  if (!combine.empty()) {
    opt.combine = parse_combine(combine);
    if (!opt.combine) {
      std::cerr << "usage error: --combine must be sum, min or max\n";
      return kExitUsage;
    }
  }
  std::vector<std::string> names;
  if (suite == "all") {
    names = suite_names();
  } else if (auto c = canonical_suite(suite)) {
    names = {*c};
  } else {
    std::cerr << "usage error: unknown suite " << suite << '\n';
    return kExitUsage;
  }
  std::uint64_t failed = 0;
  for (auto& n : names) {
    auto r = run_suite(n, opt);
    failed += r.passed() ? 0 : 1;
    std::cout << suite_json(r) << '\n';
  }
  std::cout << (failed == 0 ? "PASS" : "FAIL") << " suites=" << names.size() << " failed=" << failed << '\n';
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator of the I/O-memory-bound MapReduce model"};
  app.require_subcommand(1);

  RunOptions ro;
  auto* run = app.add_subcommand("run", "Run one algorithm and report its round and communication complexity");
  run->add_option("alg", ro.alg, "wordcount, prefix, index, bsp-demo, pram-demo, multisearch, brutesort or sort")
      ->required();
  run->add_option("--n", ro.n, "Instance size when no input file is given");
  run->add_option("--m", ro.m, "Per-node budget M");
  run->add_option("--seed", ro.seed, "Random seed");
  run->add_option("--mode", ro.mode, "strict, modified or queued");
  run->add_option("--latency", ro.latency, "Cost model latency L");
  run->add_option("--bandwidth", ro.bandwidth, "Cost model bandwidth B");
  run->add_option("--input", ro.input, "Input file");
  run->add_option("--pivots", ro.pivots, "Pivot file (multisearch)");
  run->add_option("--queries", ro.queries, "Query file (multisearch)");
  run->add_option("--report", ro.report, "Write the JSON report here");
  run->add_option("--program", ro.program, "bsp-demo: ring|broadcast; pram-demo: sum-reduce|histogram|max-scan");

  std::string suite, combine;
  std::uint64_t seeds = 3;
  auto* ver = app.add_subcommand("verify", "Run oracle suites");
  ver->add_option("suite", suite, "Suite name or all")->required();
  ver->add_option("--seeds", seeds, "Seeds 1..k");
  ver->add_option("--combine", combine, "pram suite: sum, min or max");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (*run) return cmd_run(ro);
  return cmd_verify(suite, seeds, combine);
}
