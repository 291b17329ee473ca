#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "tsync/config.hpp"
#include "tsync/error.hpp"
#include "tsync/simulation.hpp"

namespace tsync {

struct ErrorStats {
  std::size_t count{0};
  double mean{0.0};  // signed
  double mean_abs{0.0};
  double max_abs{0.0};

  void add(double x) {
    ++count;
    const double n = static_cast<double>(count);
    mean += (x - mean) / n;
    mean_abs += (std::abs(x) - mean_abs) / n;
    max_abs = std::max(max_abs, std::abs(x));
  }
};

struct NodeSummary {
  std::string name;
  Role role{Role::sensor};
  std::uint64_t tx_count{0};
  std::uint64_t rx_count{0};
  double energy{0.0};
  std::uint64_t lost_tx{0};
  std::uint64_t reports_sent{0};
  std::uint64_t reports_without_sync{0};
  std::uint64_t sync_requests{0};
  std::uint64_t sync_completed{0};
  std::uint64_t sync_aborted{0};
  std::uint64_t scfr_samples{0};
  std::uint64_t scfr_rejections{0};
  std::int64_t scfr_baseline_ns{0};
  std::optional<long double> ratio;
  std::optional<double> ratio_error_ppb;          // against the parent's beacon clock
  std::optional<double> ratio_error_vs_root_ppb;  // against the head's raw clock
  ErrorStats offset_error_ns;
  ErrorStats ratio_error_series_ppb;
  ErrorStats event_error_ns;
  std::uint64_t stale_echoes{0};
  std::uint64_t relay_drops{0};
  std::uint64_t untranslated{0};
};

struct RoleAggregate {
  Role role{Role::sensor};
  std::size_t nodes{0};
  std::uint64_t tx_count{0};
  std::uint64_t rx_count{0};
  double energy{0.0};
  std::uint64_t lost_tx{0};
  std::uint64_t stale_echoes{0};
  std::uint64_t relay_drops{0};
  ErrorStats offset_error_ns;
};

struct RunSummary {
  Scheme scheme{Scheme::proposed};
  std::uint64_t seed{0};
  double duration_s{0.0};
  std::size_t events_processed{0};
  std::vector<NodeSummary> nodes;
  std::vector<RoleAggregate> roles;  // head, gateway, sensor
  RoleAggregate all;
};

struct RunResult {
  RunSummary summary;
  Simulation sim;
};

/// Statistics over a run. Error statistics skip updates inside the warm-up window.
inline RunSummary summarize(const Simulation& sim) {
  const auto& cfg = sim.config();
  const auto& topo = sim.topology();
  const TrueTime warmup = TrueTime::from_seconds(cfg.warmup_s);
  RunSummary s;
  s.scheme = cfg.scheme;
  s.seed = cfg.seed;
  s.duration_s = cfg.duration_s;
  s.events_processed = sim.events_processed();

  for (NodeId i = 0; i < topo.size(); ++i) {
    NodeSummary n;
    n.name = topo.node(i).name;
    n.role = topo.node(i).role;
    n.tx_count = sim.ledger().tx_count(i);
    n.rx_count = sim.ledger().rx_count(i);
    n.energy = sim.ledger().energy_of(i);
    const auto& c = sim.counters(i);
    n.lost_tx = c.lost_tx;
    n.reports_sent = c.reports_sent;
    n.reports_without_sync = c.reports_without_sync;
    n.untranslated = c.untranslated;
    if (const auto* t = sim.tpsn(i)) {
      n.sync_requests = t->requests();
      n.sync_completed = t->completed();
      n.sync_aborted = t->aborted();
    }
    if (const auto* up = sim.sensor_persona(i)) {
      const auto& est = up->estimator();
      n.scfr_samples = est.count();
      n.scfr_rejections = est.rejected();
      n.scfr_baseline_ns = est.baseline_ns();
      if (est.has_estimate()) {
        n.ratio = est.frequency_ratio().ratio;
        n.ratio_error_ppb = sim.ratio_error_ppb(i);
        const long double truth = static_cast<long double>(sim.clock_params(i).rate()) /
                                  static_cast<long double>(sim.clock_params(topo.root()).rate());
        n.ratio_error_vs_root_ppb = static_cast<double>((*n.ratio / truth - 1.0L) * 1e9L);
      }
    }
    if (const auto* h = sim.head_persona(i)) n.stale_echoes = h->stale_echoes();
    n.relay_drops = sim.relay_drops(i);
    s.nodes.push_back(std::move(n));
  }

  for (const auto& row : sim.series()) {
    if (row.time < warmup) continue;
    auto& n = s.nodes[row.node];
    n.offset_error_ns.add(static_cast<double>(row.estimated_offset_ns - row.true_offset_ns));
    n.ratio_error_series_ppb.add(row.ratio_error_ppb);
  }
  for (const auto& d : sim.delivered())
    if (d.event_time >= warmup) s.nodes[d.origin].event_error_ns.add(static_cast<double>(d.error_ns));

  auto fold = [](RoleAggregate& a, const NodeSummary& n) {
    ++a.nodes;
    a.tx_count += n.tx_count;
    a.rx_count += n.rx_count;
    a.energy += n.energy;
    a.lost_tx += n.lost_tx;
    a.stale_echoes += n.stale_echoes;
    a.relay_drops += n.relay_drops;
  };
  for (Role r : {Role::head, Role::gateway, Role::sensor}) {
    RoleAggregate a;
    a.role = r;
    for (const auto& n : s.nodes)
      if (n.role == r) fold(a, n);
    s.roles.push_back(a);
  }
  for (const auto& n : s.nodes) fold(s.all, n);
  for (const auto& row : sim.series()) {
    if (row.time < warmup) continue;
    const double e = static_cast<double>(row.estimated_offset_ns - row.true_offset_ns);
    s.roles[static_cast<std::size_t>(s.nodes[row.node].role)].offset_error_ns.add(e);
    s.all.offset_error_ns.add(e);
  }
  return s;
}

inline RunResult simulate(const ExperimentConfig& cfg, bool record_trace = false) {
  Simulation sim(cfg, record_trace);
  sim.run();
  auto summary = summarize(sim);
  return RunResult{std::move(summary), std::move(sim)};
}

// ---------------------------------------------------------------------------
// Flat-file artifacts

namespace detail {

inline std::string opt_ppb(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : std::string(); }

inline std::ofstream open_out(const std::filesystem::path& p, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(p, mode);
  if (!f) throw SyncError(Errc::io_error, "cannot write '" + p.string() + "'");
  return f;
}

inline void check_written(std::ofstream& f, const std::filesystem::path& p) {
  f.flush();
  if (!f) throw SyncError(Errc::io_error, "write failed for '" + p.string() + "'");
}

}  // namespace detail

inline constexpr const char* kTimeSeriesHeader = "node,time_ps,true_offset_ns,estimated_offset_ns,ratio_error_ppb";
inline constexpr const char* kTraceHeader = "time_ps,src,dst,variant,seq,ts_fields";
inline constexpr const char* kSummaryHeader =
    "node,role,tx_count,rx_count,energy,lost_tx,reports_sent,reports_without_sync,sync_requests,sync_completed,"
    "sync_aborted,scfr_samples,scfr_rejections,scfr_baseline_ns,ratio,ratio_error_ppb,ratio_error_vs_root_ppb,"
    "offset_updates,mean_abs_offset_error_ns,max_abs_offset_error_ns,mean_offset_error_ns,mean_abs_ratio_error_ppb,"
    "max_abs_ratio_error_ppb,delivered_events,mean_abs_event_error_ns,max_abs_event_error_ns,stale_echoes,relay_drops,"
    "untranslated";

inline std::string time_series_csv(const Simulation& sim) {
  std::string out = std::string(kTimeSeriesHeader) + "\n";
  for (const auto& r : sim.series())
    out += fmt::format("{},{},{},{},{:.6f}\n", sim.topology().node(r.node).name, r.time.ps, r.true_offset_ns,
                       r.estimated_offset_ns, r.ratio_error_ppb);
  return out;
}

inline std::string trace_csv(const Simulation& sim) {
  std::string out = std::string(kTraceHeader) + "\n";
  for (const auto& l : sim.trace_lines()) out += l + "\n";
  return out;
}

inline std::string summary_csv(const RunSummary& s) {
  std::string out = std::string(kSummaryHeader) + "\n";
  for (const auto& n : s.nodes) {
    out += fmt::format(
        "{},{},{},{},{:.6f},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.3f},{:.3f},{:.3f},{:.6f},{:.6f},{},{:.3f},{:.3f},{},{},{}\n",
        n.name, to_string(n.role), n.tx_count, n.rx_count, n.energy, n.lost_tx, n.reports_sent, n.reports_without_sync,
        n.sync_requests, n.sync_completed, n.sync_aborted, n.scfr_samples, n.scfr_rejections, n.scfr_baseline_ns,
        n.ratio ? fmt::format("{:.15f}", static_cast<double>(*n.ratio)) : std::string(), detail::opt_ppb(n.ratio_error_ppb),
        detail::opt_ppb(n.ratio_error_vs_root_ppb), n.offset_error_ns.count, n.offset_error_ns.mean_abs,
        n.offset_error_ns.max_abs, n.offset_error_ns.mean, n.ratio_error_series_ppb.mean_abs,
        n.ratio_error_series_ppb.max_abs, n.event_error_ns.count, n.event_error_ns.mean_abs, n.event_error_ns.max_abs,
        n.stale_echoes, n.relay_drops, n.untranslated);
  }
  auto aggregate_row = [&out](const std::string& name, const RoleAggregate& a) {
    out += fmt::format("{},{},{},{},{:.6f},{},,,,,,,,,,,,{},{:.3f},{:.3f},{:.3f},,,,,,{},{},\n", name, "aggregate",
                       a.tx_count, a.rx_count, a.energy, a.lost_tx, a.offset_error_ns.count, a.offset_error_ns.mean_abs,
                       a.offset_error_ns.max_abs, a.offset_error_ns.mean, a.stale_echoes, a.relay_drops);
  };
  for (const auto& a : s.roles) aggregate_row(fmt::format("role:{}", to_string(a.role)), a);
  aggregate_row("all", s.all);
  return out;
}

inline std::string summary_table(const RunSummary& s) {
  std::string out = fmt::format("scheme={} seed={} duration={}s events={}\n", to_string(s.scheme), s.seed, s.duration_s,
                                s.events_processed);
  out += fmt::format("{:<12} {:<8} {:>8} {:>8} {:>12} {:>8} {:>14} {:>14} {:>12}\n", "node", "role", "tx", "rx", "energy",
                     "updates", "mean|err| ns", "max|err| ns", "ratio ppb");
  for (const auto& n : s.nodes)
    out += fmt::format("{:<12} {:<8} {:>8} {:>8} {:>12.1f} {:>8} {:>14.1f} {:>14.1f} {:>12}\n", n.name, to_string(n.role),
                       n.tx_count, n.rx_count, n.energy, n.offset_error_ns.count, n.offset_error_ns.mean_abs,
                       n.offset_error_ns.max_abs, n.ratio_error_ppb ? fmt::format("{:.3f}", *n.ratio_error_ppb) : "-");
  for (const auto& a : s.roles)
    if (a.nodes)
      out += fmt::format("{:<12} {:<8} {:>8} {:>8} {:>12.1f} {:>8} {:>14.1f} {:>14.1f}\n", "role:" + std::string(to_string(a.role)),
                         "", a.tx_count, a.rx_count, a.energy, a.offset_error_ns.count, a.offset_error_ns.mean_abs,
                         a.offset_error_ns.max_abs);
  out += fmt::format("lost={} stale_echoes={} relay_drops={}\n", s.all.lost_tx, s.all.stale_echoes, s.all.relay_drops);
  return out;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  auto f = detail::open_out(p);
  f << content;
  detail::check_written(f, p);
}

/// Writes timeseries.csv, summary.csv, summary.txt and, with tracing, trace.csv and trace.bin.
inline void write_artifacts(const RunResult& r, const std::filesystem::path& dir, bool with_trace) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw SyncError(Errc::io_error, "cannot create '" + dir.string() + "': " + ec.message());
  write_file(dir / "timeseries.csv", time_series_csv(r.sim));
  write_file(dir / "summary.csv", summary_csv(r.summary));
  write_file(dir / "summary.txt", summary_table(r.summary));
  if (with_trace) {
    write_file(dir / "trace.csv", trace_csv(r.sim));
    auto f = detail::open_out(dir / "trace.bin", std::ios::out | std::ios::binary);
    const auto& bin = r.sim.trace_binary();
    f.write(reinterpret_cast<const char*>(bin.data()), static_cast<std::streamsize>(bin.size()));
    detail::check_written(f, dir / "trace.bin");
  }
}

/// Runs the configured experiment and writes its artifacts to cfg.out_dir (skipped when empty).
inline RunResult run_experiment(const ExperimentConfig& cfg) {
  auto r = simulate(cfg, cfg.trace);
  if (!cfg.out_dir.empty()) write_artifacts(r, cfg.out_dir, cfg.trace);
  return r;
}

// ---------------------------------------------------------------------------
// Paired-seed scheme comparison

struct SchemeMetrics {
  double sensor_energy{0.0};
  double sensor_tx{0.0};
  double mean_offset_error_ns{0.0};
  double max_offset_error_ns{0.0};
};

struct ComparisonRow {
  std::uint64_t seed{0};
  SchemeMetrics a;
  SchemeMetrics b;
};

struct Comparison {
  Scheme scheme_a{Scheme::proposed};
  Scheme scheme_b{Scheme::baseline};
  std::vector<ComparisonRow> rows;
  SchemeMetrics mean_a;
  SchemeMetrics mean_b;
};

/// Leaf-sensor metrics: summed energy and transmissions, averaged and worst offset error.
inline SchemeMetrics sensor_metrics(const RunSummary& s) {
  SchemeMetrics m;
  std::size_t sensors = 0;
  for (const auto& n : s.nodes) {
    if (n.role != Role::sensor) continue;
    ++sensors;
    m.sensor_energy += n.energy;
    m.sensor_tx += static_cast<double>(n.tx_count);
    m.mean_offset_error_ns += n.offset_error_ns.mean_abs;
    m.max_offset_error_ns = std::max(m.max_offset_error_ns, n.offset_error_ns.max_abs);
  }
  if (sensors) m.mean_offset_error_ns /= static_cast<double>(sensors);
  return m;
}

inline Comparison compare(const ExperimentConfig& a, const ExperimentConfig& b, const std::vector<std::uint64_t>& seeds,
                          unsigned workers = std::max(1u, std::thread::hardware_concurrency())) {
  if (a.scheme == b.scheme) throw SyncError(Errc::invalid_config, "compare needs two different schemes");
  if (!a.same_except_scheme(b)) throw SyncError(Errc::invalid_config, "configs differ in more than the scheme");
  if (seeds.empty()) throw SyncError(Errc::invalid_config, "compare needs at least one seed");

  auto run_one = [](ExperimentConfig cfg, std::uint64_t seed) {
    cfg.seed = seed;
    return sensor_metrics(simulate(cfg).summary);
  };

  Comparison out;
  out.scheme_a = a.scheme;
  out.scheme_b = b.scheme;
  out.rows.resize(seeds.size());
  // Runs share nothing, so they can go out to worker threads in batches.
  for (std::size_t start = 0; start < seeds.size(); start += workers) {
    const std::size_t end = std::min(seeds.size(), start + workers);
    std::vector<std::future<std::pair<SchemeMetrics, SchemeMetrics>>> jobs;
    for (std::size_t i = start; i < end; ++i)
      jobs.push_back(std::async(std::launch::async, [&, i] { return std::pair{run_one(a, seeds[i]), run_one(b, seeds[i])}; }));
    for (std::size_t i = start; i < end; ++i) {
      auto [ma, mb] = jobs[i - start].get();
      out.rows[i] = ComparisonRow{seeds[i], ma, mb};
    }
  }
  auto accumulate = [n = static_cast<double>(seeds.size())](SchemeMetrics& acc, const SchemeMetrics& m) {
    acc.sensor_energy += m.sensor_energy / n;
    acc.sensor_tx += m.sensor_tx / n;
    acc.mean_offset_error_ns += m.mean_offset_error_ns / n;
    acc.max_offset_error_ns += m.max_offset_error_ns / n;
  };
  for (const auto& r : out.rows) {
    accumulate(out.mean_a, r.a);
    accumulate(out.mean_b, r.b);
  }
  return out;
}

inline constexpr const char* kCompareHeader = "seed,scheme,sensor_energy,sensor_tx,mean_abs_offset_error_ns,max_abs_offset_error_ns";

inline std::string comparison_csv(const Comparison& c) {
  std::string out = std::string(kCompareHeader) + "\n";
  auto row = [&out](const std::string& seed, Scheme s, const SchemeMetrics& m) {
    out += fmt::format("{},{},{:.6f},{:.3f},{:.3f},{:.3f}\n", seed, to_string(s), m.sensor_energy, m.sensor_tx,
                       m.mean_offset_error_ns, m.max_offset_error_ns);
  };
  for (const auto& r : c.rows) {
    row(std::to_string(r.seed), c.scheme_a, r.a);
    row(std::to_string(r.seed), c.scheme_b, r.b);
  }
  row("mean", c.scheme_a, c.mean_a);
  row("mean", c.scheme_b, c.mean_b);
  return out;
}

inline std::string comparison_table(const Comparison& c) {
  std::string out = fmt::format("{:>8} | {:>12} {:>8} {:>12} {:>12} | {:>12} {:>8} {:>12} {:>12}\n", "seed",
                                std::string(to_string(c.scheme_a)) + " E", "tx", "mean|err|", "max|err|",
                                std::string(to_string(c.scheme_b)) + " E", "tx", "mean|err|", "max|err|");
  auto line = [&out](const std::string& seed, const SchemeMetrics& a, const SchemeMetrics& b) {
    out += fmt::format("{:>8} | {:>12.1f} {:>8.1f} {:>12.1f} {:>12.1f} | {:>12.1f} {:>8.1f} {:>12.1f} {:>12.1f}\n", seed,
                       a.sensor_energy, a.sensor_tx, a.mean_offset_error_ns, a.max_offset_error_ns, b.sensor_energy,
                       b.sensor_tx, b.mean_offset_error_ns, b.max_offset_error_ns);
  };
  for (const auto& r : c.rows) line(std::to_string(r.seed), r.a, r.b);
  line("mean", c.mean_a, c.mean_b);
  return out;
}

}  // namespace tsync
