#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsync/clock.hpp"
#include "tsync/error.hpp"
#include "tsync/hierarchy.hpp"
#include "tsync/netsim.hpp"

namespace tsync {

enum class Scheme { proposed, baseline };

inline std::string_view to_string(Scheme s) { return s == Scheme::proposed ? "proposed" : "baseline"; }

inline std::optional<Scheme> parse_scheme(std::string_view s) {
  if (s == "proposed") return Scheme::proposed;
  if (s == "baseline") return Scheme::baseline;
  return std::nullopt;
}

struct Uniform {
  double lo{0.0};
  double hi{0.0};
  friend bool operator==(const Uniform&, const Uniform&) = default;
};

struct Normal {
  double mean{0.0};
  double stddev{0.0};
  friend bool operator==(const Normal&, const Normal&) = default;
};

/// A configured number: a constant or a distribution sampled once per run.
using Quantity = std::variant<double, Uniform, Normal>;

inline double sample(const Quantity& q, std::mt19937_64& rng) {
  if (const auto* c = std::get_if<double>(&q)) return *c;
  if (const auto* u = std::get_if<Uniform>(&q)) return std::uniform_real_distribution<double>(u->lo, u->hi)(rng);
  const auto& n = std::get<Normal>(q);
  return n.stddev > 0 ? std::normal_distribution<double>(n.mean, n.stddev)(rng) : n.mean;
}

struct ClockSpec {
  Quantity offset_ns{0.0};
  Quantity skew_ppm{0.0};
  Quantity jitter_std_ns{0.0};
  Quantity granularity_ns{1.0};

  ClockParams sample(std::mt19937_64& rng) const {
    ClockParams p;
    p.offset_ns = std::llround(tsync::sample(offset_ns, rng));
    p.skew_ppm = tsync::sample(skew_ppm, rng);
    p.jitter_std_ns = tsync::sample(jitter_std_ns, rng);
    p.granularity_ns = std::llround(tsync::sample(granularity_ns, rng));
    return p;
  }

  friend bool operator==(const ClockSpec&, const ClockSpec&) = default;
};

struct NodeSpec {
  std::string id;
  Role role{Role::sensor};
  std::string parent;
  ClockSpec clock;
  ChannelParams link;  // link to the parent; unused for the head

  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

struct ExperimentConfig {
  Scheme scheme{Scheme::proposed};
  std::uint64_t seed{1};
  double duration_s{3600.0};
  double warmup_s{100.0};
  double min_baseline_s{100.0};

  double beacon_interval_s{1.0};
  double beacon_aperiodicity{0.0};
  std::size_t beacon_log_depth{64};
  double max_echo_age_intervals{10.0};

  double report_interval_s{60.0};
  std::optional<double> report_offset_s;
  double resync_interval_s{60.0};
  std::optional<double> resync_offset_s;

  double offset_smoothing{0.25};
  double schedule_lead_s{0.0};  // 0 disables scheduled actions
  EnergyWeights energy;
  double max_skew_ppm{kDefaultMaxSkewPpm};
  std::int64_t frame_tolerance_ns{10'000'000};

  std::vector<NodeSpec> nodes;

  // Output options; not part of what makes two experiments comparable.
  std::string out_dir{"out"};
  bool trace{false};

  Topology topology() const {
    std::vector<TopologyNode> t;
    std::map<std::string, NodeId> ids;
    for (NodeId i = 0; i < nodes.size(); ++i) ids.emplace(nodes[i].id, i);
    for (const auto& n : nodes) {
      TopologyNode tn{n.id, n.role, std::nullopt};
      if (!n.parent.empty()) {
        auto it = ids.find(n.parent);
        tn.parent = it == ids.end() ? static_cast<NodeId>(nodes.size()) : it->second;
      }
      t.push_back(tn);
    }
    return Topology(std::move(t));
  }

  /// True when the two configs describe the same experiment apart from the scheme.
  bool same_except_scheme(const ExperimentConfig& other) const {
    auto a = *this;
    auto b = other;
    a.scheme = b.scheme = Scheme::proposed;
    a.out_dir = b.out_dir = "";
    a.trace = b.trace = false;
    return a == b;
  }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Every problem found in a config, each prefixed with a JSON path.
class ConfigError : public SyncError {
 public:
  explicit ConfigError(std::vector<std::string> errors)
      : SyncError(Errc::invalid_config, join(errors)), errors_(std::move(errors)) {}

  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& e) {
    std::string out = std::to_string(e.size()) + " error(s)";
    for (const auto& s : e) out += "\n  " + s;
    return out;
  }
  std::vector<std::string> errors_;
};

namespace detail {

using nlohmann::json;

class ConfigParser {
 public:
  std::vector<std::string> errors;

  void error(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  bool object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      error(path, "expected an object");
      return false;
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
      if (!ok.count(k)) error(path + "." + k, "unknown key");
    return true;
  }

  void number(const json& j, const char* key, const std::string& path, double& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_number()) return error(path + "." + key, "expected a number");
    out = v.get<double>();
  }

  void number(const json& j, const char* key, const std::string& path, std::optional<double>& out) {
    if (!j.contains(key)) return;
    double v = 0;
    number(j, key, path, v);
    out = v;
  }

  template <typename Int>
  void integer(const json& j, const char* key, const std::string& path, Int& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_number_integer()) return error(path + "." + key, "expected an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.is_number_unsigned() || v.get<std::int64_t>() >= 0)
        out = v.get<Int>();
      else
        error(path + "." + key, "expected a non-negative integer");
    } else {
      out = v.get<Int>();
    }
  }

  void boolean(const json& j, const char* key, const std::string& path, bool& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_boolean()) return error(path + "." + key, "expected true or false");
    out = j.at(key).get<bool>();
  }

  void string(const json& j, const char* key, const std::string& path, std::string& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_string()) return error(path + "." + key, "expected a string");
    out = j.at(key).get<std::string>();
  }

  void quantity(const json& j, const char* key, const std::string& path, Quantity& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    const std::string p = path + "." + key;
    if (v.is_number()) {
      out = v.get<double>();
      return;
    }
    if (!v.is_object() || v.size() != 1) return error(p, "expected a number, {\"uniform\": [lo, hi]} or {\"normal\": [mean, std]}");
    const auto& [kind, args] = *v.items().begin();
    if (!args.is_array() || args.size() != 2 || !args[0].is_number() || !args[1].is_number())
      return error(p + "." + kind, "expected a two-element numeric array");
    const double a = args[0].get<double>(), b = args[1].get<double>();
    if (kind == "uniform") {
      if (a > b) return error(p + ".uniform", "lo must be <= hi");
      out = Uniform{a, b};
    } else if (kind == "normal") {
      if (b < 0) return error(p + ".normal", "std must be >= 0");
      out = Normal{a, b};
    } else {
      error(p + "." + kind, "unknown distribution (use uniform or normal)");
    }
  }

  void clock(const json& j, const std::string& path, ClockSpec& c) {
    if (!object(j, path, {"offset_ns", "skew_ppm", "jitter_std_ns", "granularity_ns"})) return;
    quantity(j, "offset_ns", path, c.offset_ns);
    quantity(j, "skew_ppm", path, c.skew_ppm);
    quantity(j, "jitter_std_ns", path, c.jitter_std_ns);
    quantity(j, "granularity_ns", path, c.granularity_ns);
  }

  void link(const json& j, const std::string& path, ChannelParams& c) {
    if (!object(j, path, {"delay_ns", "forward_delay_ns", "reverse_delay_ns", "jitter_std_ns", "loss_prob"})) return;
    std::int64_t both = -1;
    integer(j, "delay_ns", path, both);
    if (j.contains("delay_ns")) c.forward_delay_ns = c.reverse_delay_ns = both;
    integer(j, "forward_delay_ns", path, c.forward_delay_ns);
    integer(j, "reverse_delay_ns", path, c.reverse_delay_ns);
    number(j, "jitter_std_ns", path, c.jitter_std_ns);
    number(j, "loss_prob", path, c.loss_prob);
  }

  // Range checks for each constituent of a clock spec.
  void check_clock_spec(const ClockSpec& c, double max_skew, const std::string& path) {
    auto bounds = [](const Quantity& q) -> std::pair<double, double> {
      if (const auto* v = std::get_if<double>(&q)) return {*v, *v};
      if (const auto* u = std::get_if<Uniform>(&q)) return {u->lo, u->hi};
      const auto& n = std::get<Normal>(q);
      return {n.mean, n.mean};  // tails are checked when sampled
    };
    auto [slo, shi] = bounds(c.skew_ppm);
    if (std::abs(slo) > max_skew || std::abs(shi) > max_skew)
      error(path + ".skew_ppm", "|skew_ppm| must be <= max_skew_ppm (" + std::to_string(max_skew) + ")");
    if (bounds(c.granularity_ns).first < 1) error(path + ".granularity_ns", "must be >= 1");
    if (bounds(c.jitter_std_ns).first < 0) error(path + ".jitter_std_ns", "must be >= 0");
  }
};

}  // namespace detail

/// Semantic checks on a parsed (or programmatically edited) config. Collected, never
/// short-circuited.
inline std::vector<std::string> check_config(const ExperimentConfig& cfg) {
  detail::ConfigParser p;
  if (cfg.duration_s < 0) p.error("$.duration_s", "must be >= 0");
  else if (cfg.duration_s > 0 && cfg.duration_s <= cfg.warmup_s)
    p.error("$.duration_s", "must exceed warmup_s (or be 0 for an empty run)");
  if (cfg.warmup_s < 0) p.error("$.warmup_s", "must be >= 0");
  if (cfg.min_baseline_s < 0) p.error("$.min_baseline_s", "must be >= 0");
  if (!(cfg.beacon_interval_s > 0)) p.error("$.beacon.interval_s", "must be > 0");
  if (!(cfg.beacon_aperiodicity >= 0 && cfg.beacon_aperiodicity < 1)) p.error("$.beacon.aperiodicity", "must be in [0, 1)");
  if (cfg.beacon_log_depth < 1) p.error("$.beacon.log_depth", "must be >= 1");
  if (cfg.max_echo_age_intervals < 0) p.error("$.beacon.max_age_intervals", "must be >= 0 (0 disables)");
  if (!(cfg.report_interval_s > 0)) p.error("$.report.interval_s", "must be > 0");
  if (cfg.report_offset_s && *cfg.report_offset_s < 0) p.error("$.report.offset_s", "must be >= 0");
  if (!(cfg.resync_interval_s > 0)) p.error("$.baseline.resync_interval_s", "must be > 0");
  if (cfg.resync_offset_s && *cfg.resync_offset_s < 0) p.error("$.baseline.offset_s", "must be >= 0");
  if (!(cfg.offset_smoothing > 0 && cfg.offset_smoothing <= 1)) p.error("$.offset_smoothing", "must be in (0, 1]");
  if (cfg.schedule_lead_s < 0) p.error("$.schedule.lead_s", "must be >= 0");
  for (const auto& e : check_energy(cfg.energy)) p.error("$.energy", e);
  if (cfg.frame_tolerance_ns <= 0) p.error("$.frame_tolerance_ns", "must be > 0");

  for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
    const auto& n = cfg.nodes[i];
    const std::string path = "$.nodes[" + std::to_string(i) + "]";
    p.check_clock_spec(n.clock, cfg.max_skew_ppm, path + ".clock");
    if (n.role != Role::head) {
      for (const auto& e : check_channel(n.link)) p.error(path + ".link", e);
      if (n.parent.empty()) p.error(path + ".parent", "missing for a non-head node (orphan, not a tree)");
      else if (std::none_of(cfg.nodes.begin(), cfg.nodes.end(), [&](const NodeSpec& o) { return o.id == n.parent; }))
        p.error(path + ".parent", "references undefined node '" + n.parent + "'");
    }
  }
  if (!cfg.nodes.empty())
    for (const auto& e : cfg.topology().check()) p.error("$.nodes", e);

  return p.errors;
}

inline void validate_config(const ExperimentConfig& cfg) {
  if (auto e = check_config(cfg); !e.empty()) throw ConfigError(std::move(e));
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using nlohmann::json;
  detail::ConfigParser p;
  ExperimentConfig cfg;
  if (!p.object(j, "$", {"scheme", "seed", "duration_s", "warmup_s", "min_baseline_s", "beacon", "report", "baseline",
                         "offset_smoothing", "schedule", "energy", "max_skew_ppm", "frame_tolerance_ns", "defaults",
                         "nodes", "output"}))
    throw ConfigError(p.errors);

  if (j.contains("scheme")) {
    std::string s;
    p.string(j, "scheme", "$", s);
    if (auto sc = parse_scheme(s)) cfg.scheme = *sc;
    else if (j.at("scheme").is_string()) p.error("$.scheme", "must be \"proposed\" or \"baseline\"");
  }
  p.integer(j, "seed", "$", cfg.seed);
  p.number(j, "duration_s", "$", cfg.duration_s);
  p.number(j, "warmup_s", "$", cfg.warmup_s);
  p.number(j, "min_baseline_s", "$", cfg.min_baseline_s);
  p.number(j, "offset_smoothing", "$", cfg.offset_smoothing);
  p.number(j, "max_skew_ppm", "$", cfg.max_skew_ppm);
  p.integer(j, "frame_tolerance_ns", "$", cfg.frame_tolerance_ns);

  if (j.contains("beacon") && p.object(j["beacon"], "$.beacon", {"interval_s", "aperiodicity", "log_depth", "max_age_intervals"})) {
    const auto& b = j["beacon"];
    p.number(b, "interval_s", "$.beacon", cfg.beacon_interval_s);
    p.number(b, "aperiodicity", "$.beacon", cfg.beacon_aperiodicity);
    p.integer(b, "log_depth", "$.beacon", cfg.beacon_log_depth);
    p.number(b, "max_age_intervals", "$.beacon", cfg.max_echo_age_intervals);
  }
  if (j.contains("report") && p.object(j["report"], "$.report", {"interval_s", "offset_s"})) {
    p.number(j["report"], "interval_s", "$.report", cfg.report_interval_s);
    p.number(j["report"], "offset_s", "$.report", cfg.report_offset_s);
  }
  if (j.contains("baseline") && p.object(j["baseline"], "$.baseline", {"resync_interval_s", "offset_s"})) {
    p.number(j["baseline"], "resync_interval_s", "$.baseline", cfg.resync_interval_s);
    p.number(j["baseline"], "offset_s", "$.baseline", cfg.resync_offset_s);
  }
  if (j.contains("schedule") && p.object(j["schedule"], "$.schedule", {"lead_s"}))
    p.number(j["schedule"], "lead_s", "$.schedule", cfg.schedule_lead_s);
  if (j.contains("energy") && p.object(j["energy"], "$.energy", {"e_tx", "e_rx"})) {
    p.number(j["energy"], "e_tx", "$.energy", cfg.energy.e_tx);
    p.number(j["energy"], "e_rx", "$.energy", cfg.energy.e_rx);
  }
  if (j.contains("output") && p.object(j["output"], "$.output", {"dir", "trace"})) {
    p.string(j["output"], "dir", "$.output", cfg.out_dir);
    p.boolean(j["output"], "trace", "$.output", cfg.trace);
  }

  ClockSpec default_clock;
  ChannelParams default_link;
  if (j.contains("defaults") && p.object(j["defaults"], "$.defaults", {"clock", "link"})) {
    if (j["defaults"].contains("clock")) p.clock(j["defaults"]["clock"], "$.defaults.clock", default_clock);
    if (j["defaults"].contains("link")) p.link(j["defaults"]["link"], "$.defaults.link", default_link);
  }

  if (!j.contains("nodes")) {
    p.error("$.nodes", "missing");
  } else if (!j["nodes"].is_array()) {
    p.error("$.nodes", "expected an array");
  } else {
    std::size_t idx = 0;
    for (const auto& jn : j["nodes"]) {
      const std::string path = "$.nodes[" + std::to_string(idx++) + "]";
      if (!p.object(jn, path, {"id", "role", "parent", "clock", "link"})) continue;
      NodeSpec n;
      n.clock = default_clock;
      n.link = default_link;
      if (!jn.contains("id")) p.error(path + ".id", "missing");
      p.string(jn, "id", path, n.id);
      std::string role;
      if (!jn.contains("role")) p.error(path + ".role", "missing");
      p.string(jn, "role", path, role);
      if (auto r = parse_role(role)) n.role = *r;
      else if (jn.contains("role")) p.error(path + ".role", "must be head, gateway or sensor");
      p.string(jn, "parent", path, n.parent);
      if (jn.contains("clock")) p.clock(jn["clock"], path + ".clock", n.clock);
      if (jn.contains("link")) p.link(jn["link"], path + ".link", n.link);
      cfg.nodes.push_back(std::move(n));
    }
  }

  for (auto& e : check_config(cfg)) p.errors.push_back(std::move(e));
  if (!p.errors.empty()) throw ConfigError(p.errors);
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({std::string("$: parse error: ") + e.what()});
  }
  return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SyncError(Errc::io_error, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace tsync
