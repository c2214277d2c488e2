// Experiment driver behind the `iblab` tool: a run is a pure function of its
// RunConfig plus the files it names.
//
// Exit statuses: 0 success, 1 validation error, 2 verification-suite
// failure (check), 3 numerical failure (e.g. a failed beta bracket).

#pragma once

#include "iblab/disenib.hpp"
#include "iblab/instances.hpp"
#include "iblab/io.hpp"
#include "iblab/lagrangian.hpp"
#include "iblab/variational.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace iblab::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kVerification = 2, kNumerical = 3 };

struct RunConfig {
  std::string subcommand;
  // Path to a JointXY JSON file, or "<family>[:key=value,...]".
  std::string instance = "noisy_mod:n=8,k=2,eta=0.2";
  // Comma-separated list, or "log:<count>:<lo>:<hi>" / "lin:<count>:<lo>:<hi>".
  // Empty selects the subcommand's default grid.
  std::string betas;
  // Empty selects identity for sweep and square for curve.
  std::string surrogate;
  // sweep only: bisect beta between the grid's first and last values for
  // this I(X;T) level instead of sweeping.
  std::optional<double> target_compression;
  std::optional<std::size_t> card_t;
  std::optional<std::size_t> card_s;
  OptimizerConfig optimizer = OptimizerConfig::lagrangian_defaults();
  bool restarts_set = false;
  double epsilon = kDefaultEpsilon;
  int trials = 100;
  std::string out;
  std::string manifest;
  std::string encoders;
  std::string format;
  bool bits = false;
};

inline constexpr const char* kDefaultSweepGrid = "log:20:1e-3:1";
inline constexpr const char* kDefaultCurveGrid = "log:30:1e-3:100";

struct ResolvedInstance {
  JointXY data;
  json description;
};

inline std::uint64_t parse_u64(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ValidationError(std::string(what) + ": expected a nonnegative integer, got '" + text + "'");
  }
}

inline double parse_double(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ValidationError(std::string(what) + ": expected a number, got '" + text + "'");
  }
}

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(text);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

// "<family>[:key=value,...]" with keys n, k, eta, seed.
inline InstanceSpec parse_instance_spec(const std::string& text, std::uint64_t default_seed) {
  const auto colon = text.find(':');
  const std::string family = text.substr(0, colon);
  InstanceSpec spec;
  spec.seed = default_seed;
  if (family == "deterministic_mod" || family == "deterministic")
    spec.family = InstanceFamily::deterministic_mod;
  else if (family == "noisy_mod" || family == "noisy")
    spec.family = InstanceFamily::noisy_mod;
  else if (family == "random_joint" || family == "random")
    spec.family = InstanceFamily::random_joint;
  else
    throw ValidationError("instance: '" + text + "' is neither a readable file nor a known family");
  if (colon != std::string::npos) {
    for (const auto& kv : split(text.substr(colon + 1), ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ValidationError("instance: expected key=value, got '" + kv + "'");
      const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
      if (key == "n")
        spec.n = parse_u64(value, "instance n");
      else if (key == "k")
        spec.k = parse_u64(value, "instance k");
      else if (key == "eta" || key == "noise")
        spec.noise = parse_double(value, "instance eta");
      else if (key == "seed")
        spec.seed = parse_u64(value, "instance seed");
      else
        throw ValidationError("instance: unknown key '" + key + "'");
    }
  }
  return spec;
}

inline ResolvedInstance resolve_instance(const std::string& text, std::uint64_t master_seed) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::is_regular_file(text, ec)) {
    JointXY data = load_joint(text);
    return {data, {{"path", text}}};
  }
  const InstanceSpec spec = parse_instance_spec(text, master_seed);
  return {make_instance(spec), to_json(spec)};
}

inline std::vector<double> parse_betas(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() == 4 && (parts[0] == "log" || parts[0] == "lin")) {
    const auto count = parse_u64(parts[1], "betas count");
    return beta_grid(count, parse_double(parts[2], "betas lo"), parse_double(parts[3], "betas hi"),
                     parts[0] == "log");
  }
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_double(item, "betas"));
  if (out.empty()) throw ValidationError("betas: empty list");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] >= 0.0)) throw ValidationError("betas: values must be nonnegative");
    if (i > 0 && out[i] < out[i - 1]) throw ValidationError("betas: values must be ascending");
  }
  return out;
}

inline double display(double nats, bool bits) { return bits ? nats / std::log(2.0) : nats; }

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Sink for one run: payloads go to files (atomically) or to the stream.
class Outputs {
 public:
  Outputs(const RunConfig& cfg, std::ostream& out) : cfg_(cfg), out_(out) {}

  void emit(const std::string& payload) {
    if (cfg_.out.empty()) {
      out_ << payload;
    } else {
      write_file_atomic(cfg_.out, payload);
      written_.push_back(cfg_.out);
    }
  }

  void emit_extra(const std::string& path, const std::string& payload) {
    write_file_atomic(path, payload);
    written_.push_back(path);
  }

  void manifest(const json& resolved, const std::string& input_hash) {
    std::string path = cfg_.manifest;
    if (path.empty() && !cfg_.out.empty()) path = cfg_.out + ".manifest.json";
    if (path.empty()) return;
    json m = {{"schema", kSchemaVersion},
              {"tool", "iblab"},
              {"version", kToolVersion},
              {"subcommand", cfg_.subcommand},
              {"config", resolved},
              {"master_seed", cfg_.optimizer.seed},
              {"input_hash", input_hash},
              {"outputs", written_},
              {"created_utc", utc_timestamp()}};
    write_file_atomic(path, m.dump(2) + "\n");
  }

  bool to_stream() const { return cfg_.out.empty(); }

 private:
  const RunConfig& cfg_;
  std::ostream& out_;
  std::vector<std::string> written_;
};

inline json base_config(const ResolvedInstance& inst, const OptimizerConfig& opt) {
  return {{"instance", inst.description}, {"optimizer", to_json(opt)}};
}

inline std::string input_hash(const JointXY& data) { return content_hash(to_json(data).dump()); }

inline int run_gen(const RunConfig& cfg, std::ostream& out) {
  const ResolvedInstance inst = resolve_instance(cfg.instance, cfg.optimizer.seed);
  json j = to_json(inst.data);
  j["summary"] = {{"h_x", round_sig9(entropy_x(inst.data))},
                  {"h_y", round_sig9(entropy_y(inst.data))},
                  {"i_xy", round_sig9(mutual_information_xy(inst.data))}};
  Outputs o(cfg, out);
  o.emit(j.dump(2) + "\n");
  o.manifest({{"instance", inst.description}}, input_hash(inst.data));
  return kOk;
}

inline std::string points_payload(const std::vector<IBPoint>& pts, const std::string& format) {
  if (format == "json") {
    json arr = json::array();
    for (const auto& p : pts) arr.push_back(to_json(p));
    return json{{"schema", kSchemaVersion}, {"points", arr}}.dump(2) + "\n";
  }
  return sweep_csv(pts);
}

inline void require_format(const std::string& format, std::initializer_list<const char*> allowed) {
  if (format.empty()) return;
  for (const char* a : allowed)
    if (format == a) return;
  throw ValidationError("format '" + format + "' is not supported by this subcommand");
}

inline int run_sweep(const RunConfig& cfg, std::ostream& out) {
  require_format(cfg.format, {"csv", "json"});
  const ResolvedInstance inst = resolve_instance(cfg.instance, cfg.optimizer.seed);
  const std::vector<double> betas = parse_betas(cfg.betas.empty() ? kDefaultSweepGrid : cfg.betas);
  const Surrogate h = Surrogate::parse(cfg.surrogate.empty() ? "identity" : cfg.surrogate);
  const std::size_t card_t = cfg.card_t.value_or(inst.data.card_x());
  json resolved = base_config(inst, cfg.optimizer);
  std::vector<IBPoint> pts;
  if (cfg.target_compression) {
    if (betas.size() < 2) throw ValidationError("--target-compression needs a grid with at least two betas");
    const CompressionSearch found =
        beta_at_compression(inst.data, *cfg.target_compression, h, card_t, cfg.optimizer, betas.front(), betas.back());
    if (!found.within_tolerance)
      throw NumericalError("no beta in [" + format_sig9(betas.front()) + ", " + format_sig9(betas.back()) +
                           "] reaches I(X;T) = " + format_sig9(*cfg.target_compression) + " within " +
                           format_sig9(kCompressionTolerance) + " nats; closest was " +
                           format_sig9(found.point.i_xt) + " at beta = " + format_sig9(found.beta));
    pts.push_back(found.point);
    resolved["target_compression"] = *cfg.target_compression;
    resolved["bisection_steps"] = found.bisection_steps;
  } else {
    pts = sweep_beta(inst.data, betas, h, card_t, cfg.optimizer);
  }
  Outputs o(cfg, out);
  o.emit(points_payload(pts, cfg.format));
  resolved["betas"] = betas;
  resolved["surrogate"] = h.to_string();
  resolved["card_t"] = card_t;
  resolved["csv_schema"] = kSchemaVersion;
  o.manifest(resolved, input_hash(inst.data));
  return kOk;
}

// Square-surrogate sweep, reported as (I(X;T), I(T;Y)) sorted by I(X;T).
inline std::vector<IBPoint> curve_points(const JointXY& data, const std::vector<double>& betas, const Surrogate& h,
                                         std::size_t card_t, const OptimizerConfig& opt) {
  auto pts = sweep_beta(data, betas, h, card_t, opt);
  std::stable_sort(pts.begin(), pts.end(), [](const IBPoint& a, const IBPoint& b) { return a.i_xt < b.i_xt; });
  return pts;
}

inline int run_curve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_format(cfg.format, {"csv", "json"});
  const ResolvedInstance inst = resolve_instance(cfg.instance, cfg.optimizer.seed);
  if (is_deterministic(inst.data))
    err << json{{"level", "warning"},
                {"message", "Y is a deterministic function of X; Lagrangian solutions jump between corners "
                            "of the IB curve on such instances"}}
               .dump()
        << "\n";
  const std::vector<double> betas = parse_betas(cfg.betas.empty() ? kDefaultCurveGrid : cfg.betas);
  const Surrogate h = Surrogate::parse(cfg.surrogate.empty() ? "square" : cfg.surrogate);
  const std::size_t card_t = cfg.card_t.value_or(inst.data.card_x());
  const auto pts = curve_points(inst.data, betas, h, card_t, cfg.optimizer);
  Outputs o(cfg, out);
  if (cfg.format == "json") {
    o.emit(points_payload(pts, "json"));
  } else {
    std::ostringstream os;
    os << "i_xt_nats,i_ty_nats,beta\n";
    for (const auto& p : pts) os << format_sig9(p.i_xt) << ',' << format_sig9(p.i_ty) << ',' << format_sig9(p.beta) << '\n';
    o.emit(os.str());
  }
  json resolved = base_config(inst, cfg.optimizer);
  resolved["betas"] = betas;
  resolved["surrogate"] = h.to_string();
  resolved["card_t"] = card_t;
  resolved["csv_schema"] = kSchemaVersion;
  o.manifest(resolved, input_hash(inst.data));
  return kOk;
}

inline int run_disenib(const RunConfig& cfg, std::ostream& out) {
  require_format(cfg.format, {"json"});
  const ResolvedInstance inst = resolve_instance(cfg.instance, cfg.optimizer.seed);
  OptimizerConfig opt = cfg.optimizer;
  if (!cfg.restarts_set) opt.restarts = OptimizerConfig::disenib_defaults().restarts;
  const std::size_t card_t = cfg.card_t.value_or(default_card_t(inst.data));
  const std::size_t card_s = cfg.card_s.value_or(default_card_s(inst.data));
  const DisenIBResult res = optimize_disenib(inst.data, card_t, card_s, opt, cfg.epsilon);

  json report = to_json(res.report);
  report["schema"] = kSchemaVersion;
  report["analytic_minimum"] = round_sig9(analytic_minimum(inst.data));
  report["seed"] = opt.seed;
  report["restarts"] = res.restarts_used;
  report["best_restart_seed"] = res.best_restart_seed;
  report["converged"] = res.converged;
  report["card_t"] = card_t;
  report["card_s"] = card_s;
  report["deterministic_labels"] = is_deterministic(inst.data);

  Outputs o(cfg, out);
  o.emit(report.dump(2) + "\n");
  if (!cfg.encoders.empty()) {
    const json enc = {{"schema", kSchemaVersion},
                      {"encoder_t", to_json(res.params.encoder_t(), inst.data.x_labels())},
                      {"encoder_s", to_json(res.params.encoder_s(), inst.data.x_labels())}};
    o.emit_extra(cfg.encoders, enc.dump(2) + "\n");
  }
  if (!o.to_stream()) {
    const char* unit = cfg.bits ? "bits" : "nats";
    out << "I(X;T)=" << format_sig9(display(res.report.i_xt, cfg.bits)) << " I(T;Y)="
        << format_sig9(display(res.report.i_ty, cfg.bits)) << " H(Y)=" << format_sig9(display(res.report.h_y, cfg.bits))
        << " gap=" << format_sig9(display(res.report.gap, cfg.bits)) << " " << unit
        << (res.report.consistent ? " consistent\n" : " NOT consistent\n");
  }
  json resolved = base_config(inst, opt);
  resolved["card_t"] = card_t;
  resolved["card_s"] = card_s;
  resolved["epsilon"] = cfg.epsilon;
  o.manifest(resolved, input_hash(inst.data));
  return kOk;
}

struct SuiteResult {
  std::string name;
  int trials = 0;
  int failures = 0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool passed() const { return failures == 0; }
};

inline constexpr double kBoundTol = 1e-10;

// Sandwich and gap-identity suites over random encoders, decoders,
// reconstructors and priors on one instance.
inline std::vector<SuiteResult> run_bound_suites(const JointXY& data, std::size_t card_t, std::size_t card_s,
                                                 int trials, std::uint64_t seed) {
  std::vector<SuiteResult> suites = {
      {"sandwich: ity_lower_bound <= I(T;Y)", 0, 0, 0.0, kBoundTol},
      {"sandwich: I(T;Y) <= I(X;T)", 0, 0, 0.0, kBoundTol},
      {"sandwich: I(X;T) <= vib_upper_bound", 0, 0, 0.0, kBoundTol},
      {"sandwich: ixsy_lower_bound <= I(X;S,Y)", 0, 0, 0.0, kBoundTol},
      {"gap identity: decoder KL", 0, 0, 0.0, kBoundTol},
      {"gap identity: reconstructor KL", 0, 0, 0.0, kBoundTol},
      {"gap identity: prior KL", 0, 0, 0.0, kBoundTol},
      {"tightness at optimal arguments", 0, 0, 0.0, kBoundTol},
  };
  auto record = [](SuiteResult& s, double violation) {
    ++s.trials;
    s.max_violation = std::max(s.max_violation, violation);
    if (violation > s.tolerance) ++s.failures;
  };
  const auto nx = static_cast<Eigen::Index>(data.card_x());
  const auto ny = static_cast<Eigen::Index>(data.card_y());
  const auto nt = static_cast<Eigen::Index>(card_t);
  const auto ns = static_cast<Eigen::Index>(card_s);
  for (int trial = 0; trial < trials; ++trial) {
    CounterRng rng(seed, 0x636865636bULL + static_cast<std::uint64_t>(trial));
    const double scale = 0.5 + 3.0 * rng.uniform();
    const Encoder enc_t = softmax_encoder(random_logits(nx, nt, scale, rng));
    const Encoder enc_s = softmax_encoder(random_logits(nx, ns, scale, rng));
    const Decoder dec(row_softmax(random_logits(nt, ny, scale, rng)));
    const Reconstructor rec(row_softmax(random_logits(ns * ny, nx, scale, rng)), card_s, data.card_y());
    const Matrix prior_row = row_softmax(random_logits(1, nt, scale, rng));
    const PriorT prior(std::vector<double>(prior_row.data(), prior_row.data() + prior_row.size()));

    const double i_xt = mutual_information(compose_xt(data, enc_t));
    const double i_ty = mutual_information(compose_yt(data, enc_t));
    const double i_xsy = mutual_information(compose_xsy(data, enc_s), {0}, {1, 2});
    const double ity_lb = ity_lower_bound(data, enc_t, dec);
    const double ixsy_lb = ixsy_lower_bound(data, enc_s, rec);
    const double vib = vib_upper_bound(data, enc_t, prior);

    record(suites[0], ity_lb - i_ty);
    record(suites[1], i_ty - i_xt);
    record(suites[2], i_xt - vib);
    record(suites[3], ixsy_lb - i_xsy);
    record(suites[4], std::abs((i_ty - ity_lb) - decoder_gap(data, enc_t, dec)));
    record(suites[5], std::abs((i_xsy - ixsy_lb) - reconstructor_gap(data, enc_s, rec)));
    record(suites[6], std::abs((vib - i_xt) - prior_gap(data, enc_t, prior)));
    const double tight = std::max({std::abs(i_ty - ity_lower_bound(data, enc_t, optimal_decoder(data, enc_t))),
                                   std::abs(i_xsy - ixsy_lower_bound(data, enc_s, optimal_reconstructor(data, enc_s))),
                                   std::abs(vib_upper_bound(data, enc_t, marginal_t(data, enc_t)) - i_xt)});
    record(suites[7], tight);
  }
  return suites;
}

inline int run_check(const RunConfig& cfg, std::ostream& out) {
  require_format(cfg.format, {"json", "text"});
  if (cfg.trials < 1) throw ValidationError("check: trials must be positive");
  const ResolvedInstance inst = resolve_instance(cfg.instance, cfg.optimizer.seed);
  const std::size_t card_t = cfg.card_t.value_or(inst.data.card_y());
  const std::size_t card_s = cfg.card_s.value_or(default_card_s(inst.data));
  if (card_t < 1 || card_s < 1) throw ValidationError("check: cardinalities must be positive");
  const auto suites = run_bound_suites(inst.data, card_t, card_s, cfg.trials, cfg.optimizer.seed);
  const bool all = std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.passed(); });

  json arr = json::array();
  for (const auto& s : suites)
    arr.push_back({{"name", s.name},
                   {"passed", s.passed()},
                   {"trials", s.trials},
                   {"failures", s.failures},
                   {"max_violation", round_sig9(s.max_violation)},
                   {"tolerance", s.tolerance}});
  const json report = {{"schema", kSchemaVersion}, {"card_t", card_t}, {"card_s", card_s},
                       {"trials", cfg.trials},     {"seed", cfg.optimizer.seed}, {"suites", arr},
                       {"passed", all}};

  Outputs o(cfg, out);
  if (cfg.format == "json" && cfg.out.empty()) {
    out << report.dump(2) << "\n";
  } else {
    const char* unit = cfg.bits ? "bits" : "nats";
    std::ostringstream table;
    table << std::left << std::setw(44) << "suite" << std::setw(8) << "result" << std::setw(8) << "trials"
          << "max violation (" << unit << ")\n";
    for (const auto& s : suites)
      table << std::left << std::setw(44) << s.name << std::setw(8) << (s.passed() ? "PASS" : "FAIL")
            << std::setw(8) << s.trials << format_sig9(display(s.max_violation, cfg.bits)) << "\n";
    table << (all ? "all suites passed\n" : "verification FAILED\n");
    out << table.str();
    if (!cfg.out.empty()) o.emit(report.dump(2) + "\n");
  }
  json resolved = base_config(inst, cfg.optimizer);
  resolved["card_t"] = card_t;
  resolved["card_s"] = card_s;
  resolved["trials"] = cfg.trials;
  o.manifest(resolved, input_hash(inst.data));
  return all ? kOk : kVerification;
}

inline void diagnostic(std::ostream& err, const char* kind, const std::string& message) {
  err << json{{"level", "error"}, {"kind", kind}, {"message", message}}.dump() << "\n";
}

inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.optimizer.validate();
    if (!(cfg.epsilon > 0.0)) throw ValidationError("epsilon must be positive");
    if (cfg.subcommand == "gen") return run_gen(cfg, out);
    if (cfg.subcommand == "sweep") return run_sweep(cfg, out);
    if (cfg.subcommand == "curve") return run_curve(cfg, out, err);
    if (cfg.subcommand == "disenib") return run_disenib(cfg, out);
    if (cfg.subcommand == "check") return run_check(cfg, out);
    throw ValidationError("unknown subcommand '" + cfg.subcommand + "'");
  } catch (const NumericalError& e) {
    diagnostic(err, "numerical", e.what());
    return kNumerical;
  } catch (const SupportError& e) {
    diagnostic(err, "validation", e.what());
    return kValidation;
  } catch (const std::invalid_argument& e) {
    diagnostic(err, "validation", e.what());
    return kValidation;
  } catch (const json::exception& e) {
    diagnostic(err, "validation", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    diagnostic(err, "io", e.what());
    return kValidation;
  }
}

}  // namespace iblab::cli
