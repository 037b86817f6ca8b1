#include "cascade/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <regex>
#include <sstream>

#include "cascade/metrics.hpp"
#include "cascade/oracles.hpp"
#include "cascade/replicate.hpp"
#include "cascade/simulator.hpp"
#include "cascade/stability.hpp"
#include "json.hpp"

namespace cascade {

using json = nlohmann::json;

std::string_view to_string(Model m) {
  switch (m) {
    case Model::simulate: return "simulate";
    case Model::ctmc: return "ctmc";
    case Model::stability: return "stability";
    case Model::sweep: return "sweep";
  }
  return "?";
}

namespace {

// Collects every violation instead of stopping at the first.
class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& what) { errors.push_back(path + ": " + what); }

  const json* field(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  double number(const json& obj, const char* key, const std::string& path, double fallback) {
    const json* v = field(obj, key);
    if (!v) return fallback;
    if (!v->is_number()) {
      fail(path + "." + key, "expected a number");
      return fallback;
    }
    return v->get<double>();
  }

  std::int64_t integer(const json& obj, const char* key, const std::string& path, std::int64_t fallback) {
    const json* v = field(obj, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) {
      fail(path + "." + key, "expected an integer");
      return fallback;
    }
    return v->get<std::int64_t>();
  }

  std::uint64_t unsigned_integer(const json& obj, const char* key, const std::string& path, std::uint64_t fallback) {
    const json* v = field(obj, key);
    if (!v) return fallback;
    if (!v->is_number_unsigned()) {
      fail(path + "." + key, "expected a nonnegative integer");
      return fallback;
    }
    return v->get<std::uint64_t>();
  }

  bool boolean(const json& obj, const char* key, const std::string& path, bool fallback) {
    const json* v = field(obj, key);
    if (!v) return fallback;
    if (!v->is_boolean()) {
      fail(path + "." + key, "expected true or false");
      return fallback;
    }
    return v->get<bool>();
  }

  std::string text(const json& obj, const char* key, const std::string& path, std::string fallback) {
    const json* v = field(obj, key);
    if (!v) return fallback;
    if (!v->is_string()) {
      fail(path + "." + key, "expected a string");
      return fallback;
    }
    return v->get<std::string>();
  }

  std::vector<double> numbers(const json& v, const std::string& path) {
    std::vector<double> out;
    if (!v.is_array()) {
      fail(path, "expected an array of numbers");
      return out;
    }
    for (const auto& x : v) {
      if (!x.is_number()) {
        fail(path, "expected an array of numbers");
        return {};
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& path) {
    for (const auto& [key, _] : obj.items()) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
        fail(path + "." + key, "unknown key");
    }
  }
};

// Mean from either "mean" or "rate".
std::optional<double> mean_param(Reader& r, const json& p, const std::string& path) {
  const bool has_mean = p.contains("mean");
  const bool has_rate = p.contains("rate");
  if (has_mean == has_rate) {
    r.fail(path, "give exactly one of mean or rate");
    return std::nullopt;
  }
  const double v = r.number(p, has_mean ? "mean" : "rate", path, 1.0);
  if (!(v > 0.0) || !std::isfinite(v)) {
    r.fail(path + (has_mean ? ".mean" : ".rate"), "must be positive");
    return std::nullopt;
  }
  return has_mean ? v : 1.0 / v;
}

std::optional<DistributionSpec> parse_distribution(Reader& r, const json& j, const std::string& path) {
  if (!j.is_object()) {
    r.fail(path, "expected {family, params}");
    return std::nullopt;
  }
  r.only_keys(j, {"family", "params"}, path);
  const std::string name = r.text(j, "family", path, "");
  if (name.empty()) {
    r.fail(path + ".family", "missing");
    return std::nullopt;
  }
  Family family;
  try {
    family = family_from_string(name);
  } catch (const ValidationError&) {
    r.fail(path + ".family", "unknown family '" + name + "'");
    return std::nullopt;
  }
  const json empty = json::object();
  const json* pp = r.field(j, "params");
  if (pp && !pp->is_object()) {
    r.fail(path + ".params", "expected an object");
    return std::nullopt;
  }
  const json& p = pp ? *pp : empty;
  const std::string ppath = path + ".params";
  const std::size_t before = r.errors.size();
  try {
    switch (family) {
      case Family::exponential: {
        r.only_keys(p, {"mean", "rate"}, ppath);
        auto m = mean_param(r, p, ppath);
        if (!m || r.errors.size() != before) return std::nullopt;
        return DistributionSpec::exponential(*m);
      }
      case Family::erlang: {
        r.only_keys(p, {"shape", "mean", "rate"}, ppath);
        const auto shape = r.integer(p, "shape", ppath, 0);
        if (!p.contains("shape")) r.fail(ppath + ".shape", "missing");
        auto m = mean_param(r, p, ppath);
        if (!m || r.errors.size() != before) return std::nullopt;
        return DistributionSpec::erlang(static_cast<int>(shape), *m);
      }
      case Family::hyperexponential: {
        r.only_keys(p, {"probs", "means"}, ppath);
        if (!p.contains("probs") || !p.contains("means")) {
          r.fail(ppath, "needs probs and means");
          return std::nullopt;
        }
        auto probs = r.numbers(p["probs"], ppath + ".probs");
        auto means = r.numbers(p["means"], ppath + ".means");
        if (r.errors.size() != before) return std::nullopt;
        return DistributionSpec::hyperexponential(std::move(probs), std::move(means));
      }
      case Family::uniform: {
        r.only_keys(p, {"low", "high"}, ppath);
        if (!p.contains("low") || !p.contains("high")) {
          r.fail(ppath, "needs low and high");
          return std::nullopt;
        }
        const double lo = r.number(p, "low", ppath, 0.0);
        const double hi = r.number(p, "high", ppath, 0.0);
        if (r.errors.size() != before) return std::nullopt;
        return DistributionSpec::uniform(lo, hi);
      }
      case Family::deterministic: {
        r.only_keys(p, {"value"}, ppath);
        if (!p.contains("value")) {
          r.fail(ppath + ".value", "missing");
          return std::nullopt;
        }
        const double v = r.number(p, "value", ppath, 0.0);
        if (r.errors.size() != before) return std::nullopt;
        return DistributionSpec::deterministic(v);
      }
      case Family::lognormal: {
        r.only_keys(p, {"mu", "sigma"}, ppath);
        if (!p.contains("mu") || !p.contains("sigma")) {
          r.fail(ppath, "needs mu and sigma");
          return std::nullopt;
        }
        const double mu = r.number(p, "mu", ppath, 0.0);
        const double sigma = r.number(p, "sigma", ppath, 0.0);
        if (r.errors.size() != before) return std::nullopt;
        return DistributionSpec::lognormal(mu, sigma);
      }
    }
  } catch (const ValidationError& e) {
    r.fail(path, e.what());
  }
  return std::nullopt;
}

std::string spread_out_note(const DistributionSpec& d) {
  const auto rep = check_spread_out(d);
  if (rep.admissible()) return "spread-out";
  std::string s = "not spread-out (";
  if (!rep.unbounded_support) s += "bounded support";
  if (!rep.unbounded_support && !rep.density_component) s += ", ";
  if (!rep.density_component) s += "no density component";
  return s + ")";
}

struct Parsed {
  Scenario scenario;
  json document;
};

Parsed parse_document(const json& doc) {
  Reader r;
  Scenario s;
  if (!doc.is_object()) throw ValidationError("scenario: top level must be an object");
  r.only_keys(doc,
              {"name", "model", "seed", "horizon", "replications", "warmup", "batches", "event_cap", "threads", "margin",
               "bins", "bin_width", "level_cap", "tight_level", "event_log", "cross_check", "truncation", "output",
               "stations", "initial", "sweep"},
              "scenario");

  s.name = r.text(doc, "name", "scenario", "");
  if (s.name.empty()) r.fail("scenario.name", "missing");
  else if (s.name.find_first_of("/\\") != std::string::npos || s.name == "." || s.name == "..")
    r.fail("scenario.name", "must be a plain directory name");

  const std::string model = r.text(doc, "model", "scenario", "simulate");
  if (model == "simulate") s.model = Model::simulate;
  else if (model == "ctmc") s.model = Model::ctmc;
  else if (model == "stability") s.model = Model::stability;
  else if (model == "sweep") s.model = Model::sweep;
  else r.fail("scenario.model", "must be one of simulate, ctmc, stability, sweep");

  s.system.seed = r.unsigned_integer(doc, "seed", "scenario", 1);
  s.horizon = r.number(doc, "horizon", "scenario", s.horizon);
  if (!(s.horizon > 0.0) || !std::isfinite(s.horizon)) r.fail("scenario.horizon", "must be positive");
  s.replications = static_cast<int>(r.integer(doc, "replications", "scenario", 1));
  if (s.replications < 1) r.fail("scenario.replications", "must be >= 1");
  s.warmup = r.number(doc, "warmup", "scenario", s.warmup);
  if (!(s.warmup >= 0.0 && s.warmup < 1.0)) r.fail("scenario.warmup", "must be in [0, 1)");
  s.batches = static_cast<int>(r.integer(doc, "batches", "scenario", s.batches));
  if (s.batches < 2) r.fail("scenario.batches", "must be >= 2");
  s.event_cap = r.unsigned_integer(doc, "event_cap", "scenario", s.event_cap);
  if (s.event_cap == 0) r.fail("scenario.event_cap", "must be positive");
  s.threads = static_cast<unsigned>(r.unsigned_integer(doc, "threads", "scenario", 0));
  s.margin = r.number(doc, "margin", "scenario", s.margin);
  if (!(s.margin >= 0.0 && s.margin < 1.0)) r.fail("scenario.margin", "must be in [0, 1)");
  s.layout.bins = static_cast<std::size_t>(r.unsigned_integer(doc, "bins", "scenario", s.layout.bins));
  if (s.layout.bins == 0) r.fail("scenario.bins", "must be positive");
  s.layout.bin_width = r.number(doc, "bin_width", "scenario", 0.0);
  if (!(s.layout.bin_width >= 0.0)) r.fail("scenario.bin_width", "must be >= 0");
  s.layout.level_cap = static_cast<int>(r.integer(doc, "level_cap", "scenario", s.layout.level_cap));
  if (s.layout.level_cap < 1) r.fail("scenario.level_cap", "must be >= 1");
  s.tight_level = r.integer(doc, "tight_level", "scenario", 0);
  if (s.tight_level < 0) r.fail("scenario.tight_level", "must be >= 0");
  s.event_log = r.boolean(doc, "event_log", "scenario", false);
  s.cross_check = r.boolean(doc, "cross_check", "scenario", false);
  s.truncation = static_cast<int>(r.integer(doc, "truncation", "scenario", s.truncation));
  s.output_dir = r.text(doc, "output", "scenario", "out");

  const json* stations = r.field(doc, "stations");
  if (!stations || !stations->is_array() || stations->empty()) {
    r.fail("scenario.stations", "expected a nonempty array");
  } else {
    const std::size_t k = stations->size();
    for (std::size_t i = 0; i < k; ++i) {
      const std::string path = "stations[" + std::to_string(i) + "]";
      const json& st = (*stations)[i];
      if (!st.is_object()) {
        r.fail(path, "expected an object");
        continue;
      }
      const bool last = i + 1 == k;
      if (last) r.only_keys(st, {"arrival", "service"}, path);
      else r.only_keys(st, {"arrival", "service", "threshold", "overflow_service"}, path);
      StationConfig sc{DistributionSpec::exponential(1.0), DistributionSpec::exponential(1.0), std::nullopt};
      for (const char* key : {"arrival", "service"}) {
        if (!st.contains(key)) {
          r.fail(path + "." + key, "missing");
          continue;
        }
        auto d = parse_distribution(r, st[key], path + "." + key);
        if (d) (std::string_view(key) == "arrival" ? sc.arrival : sc.service) = *d;
      }
      if (!last) {
        TransferLink link{1, DistributionSpec::exponential(1.0)};
        link.threshold = static_cast<int>(r.integer(st, "threshold", path, 1));
        if (link.threshold < 1) r.fail(path + ".threshold", "threshold must be >= 1");
        if (!st.contains("overflow_service")) {
          r.fail(path + ".overflow_service", "missing");
        } else if (auto d = parse_distribution(r, st["overflow_service"], path + ".overflow_service")) {
          link.service = *d;
        }
        sc.transfer = link;
      }
      s.system.stations.push_back(std::move(sc));
    }
  }

  if (const json* init = r.field(doc, "initial")) {
    if (!init->is_object()) {
      r.fail("scenario.initial", "expected an object");
    } else {
      r.only_keys(*init, {"queues", "overflow"}, "initial");
      if (init->contains("queues")) {
        for (double q : r.numbers((*init)["queues"], "initial.queues")) {
          if (q < 0 || q != std::floor(q)) r.fail("initial.queues", "entries must be nonnegative integers");
          s.system.initial_queues.push_back(static_cast<std::int64_t>(q));
        }
      }
      if (init->contains("overflow")) {
        for (double b : r.numbers((*init)["overflow"], "initial.overflow")) {
          if (b != 0.0 && b != 1.0) r.fail("initial.overflow", "entries must be 0 or 1");
          s.system.initial_overflow.push_back(static_cast<int>(b));
        }
      }
    }
  }

  if (const json* sw = r.field(doc, "sweep")) {
    SweepAxis axis;
    if (!sw->is_object()) {
      r.fail("scenario.sweep", "expected an object");
    } else {
      r.only_keys(*sw, {"parameter", "values", "from", "to", "step"}, "sweep");
      axis.parameter = r.text(*sw, "parameter", "sweep", "");
      if (axis.parameter.empty()) r.fail("sweep.parameter", "missing");
      if (sw->contains("values")) {
        axis.values = r.numbers((*sw)["values"], "sweep.values");
        if (sw->contains("from") || sw->contains("to") || sw->contains("step"))
          r.fail("sweep", "give either values or from/to/step");
      } else {
        const double from = r.number(*sw, "from", "sweep", NAN);
        const double to = r.number(*sw, "to", "sweep", NAN);
        const double step = r.number(*sw, "step", "sweep", NAN);
        if (!(step > 0.0) || !(to >= from)) {
          r.fail("sweep", "needs from <= to and step > 0");
        } else {
          // Points are from + j*step; the tolerance keeps `to` itself despite rounding.
          const auto n = static_cast<std::int64_t>(std::floor((to - from) / step + 1e-9));
          for (std::int64_t j = 0; j <= n; ++j) {
            // Snap to 12 significant digits so 1.0 + 7 * 0.1 reads as 1.7.
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.12g", from + static_cast<double>(j) * step);
            axis.values.push_back(std::strtod(buf, nullptr));
          }
        }
      }
      if (axis.values.empty()) r.fail("sweep", "no sweep points");
      s.sweep = axis;
    }
  }
  if (s.model == Model::sweep && !s.sweep) r.fail("scenario.sweep", "required for model sweep");

  if (r.errors.empty()) {
    try {
      s.system.validate();
    } catch (const ValidationError& e) {
      r.errors.emplace_back(e.what());
    }
  }
  if (r.errors.empty() && s.sweep) {
    for (double v : s.sweep->values) {
      try {
        SystemConfig probe = s.system;
        set_parameter(probe, s.sweep->parameter, v);
        probe.validate();
      } catch (const ValidationError& e) {
        r.fail("sweep.parameter", e.what());
        break;
      }
    }
  }
  if (r.errors.empty() && s.model == Model::ctmc) {
    try {
      (void)CtmcSpec::from_config(s.system, s.truncation);
    } catch (const ValidationError& e) {
      r.errors.emplace_back(e.what());
    }
  }

  if (!r.errors.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& e : r.errors) msg += "\n  " + e;
    throw ValidationError(msg);
  }

  for (int i = 0; i < s.system.k(); ++i) {
    const auto& a = s.system.stations[i].arrival;
    if (!check_spread_out(a).admissible())
      s.warnings.push_back("stations[" + std::to_string(i) + "].arrival: " + std::string(to_string(a.family())) +
                           " interarrival law is " + spread_out_note(a) +
                           "; the stability criterion is not guaranteed for it");
  }

  json canon = doc;
  canon.erase("output");
  return {std::move(s), std::move(canon)};
}

void set_canonical(Scenario& s, const json& canon) { s.canonical = canon.dump(); }

}  // namespace

Scenario parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // nlohmann reports "parse error at line L, column C: ..."
    throw ValidationError(std::string("scenario: ") + e.what());
  }
  auto parsed = parse_document(doc);
  set_canonical(parsed.scenario, parsed.document);
  return std::move(parsed.scenario);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("scenario: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

void apply_overrides(Scenario& s, const Overrides& o) {
  json canon = json::parse(s.canonical);
  if (o.seed) {
    s.system.seed = *o.seed;
    canon["seed"] = *o.seed;
  }
  if (o.horizon) {
    if (!(*o.horizon > 0.0) || !std::isfinite(*o.horizon)) throw ValidationError("--horizon must be positive");
    s.horizon = *o.horizon;
    canon["horizon"] = *o.horizon;
  }
  if (o.replications) {
    if (*o.replications < 1) throw ValidationError("--reps must be >= 1");
    s.replications = *o.replications;
    canon["replications"] = *o.replications;
  }
  if (o.event_cap) {
    if (*o.event_cap == 0) throw ValidationError("--event-cap must be positive");
    s.event_cap = *o.event_cap;
    canon["event_cap"] = *o.event_cap;
  }
  if (o.output_dir) s.output_dir = *o.output_dir;
  set_canonical(s, canon);
}

void set_parameter(SystemConfig& config, std::string_view path, double value) {
  static const std::regex law(R"(stations\[(\d+)\]\.(arrival|service|overflow_service)\.(rate|mean))");
  static const std::regex threshold(R"(stations\[(\d+)\]\.threshold)");
  const std::string p(path);
  std::smatch m;
  auto station = [&](int need_link) -> StationConfig& {
    const int i = std::stoi(m[1].str());
    if (i >= config.k() || (need_link && !config.stations[i].transfer))
      throw ValidationError("parameter '" + p + "' does not exist in this system");
    return config.stations[i];
  };
  if (std::regex_match(p, m, law)) {
    if (!(value > 0.0) || !std::isfinite(value)) throw ValidationError("parameter '" + p + "' must be positive");
    const std::string which = m[2].str();
    const double mean = m[3].str() == "rate" ? 1.0 / value : value;
    StationConfig& st = station(which == "overflow_service");
    DistributionSpec& d = which == "arrival" ? st.arrival : which == "service" ? st.service : st.transfer->service;
    d = d.with_mean(mean);
    return;
  }
  if (std::regex_match(p, m, threshold)) {
    if (value < 1.0 || value != std::floor(value)) throw ValidationError("threshold must be >= 1");
    station(1).transfer->threshold = static_cast<int>(value);
    return;
  }
  throw ValidationError("unknown parameter '" + p + "'");
}

std::string run_id(const Scenario& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
  for (unsigned char c : s.canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::filesystem::path output_path(const Scenario& s) { return s.output_dir / s.name / run_id(s); }

namespace {

// Shortest text that reads back to the same double; stable across runs.
std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[32];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, x);
    if (std::strtod(shorter, nullptr) == x) return shorter;
  }
  return buf;
}

std::string opt_num(const std::optional<double>& x) { return x ? num(*x) : ""; }

// Six significant digits for console tables.
std::string brief(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string cell(const std::string& s, std::size_t width) { return s.size() < width ? s + std::string(width - s.size(), ' ') : s + ' '; }

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out.flush()) throw std::runtime_error("write failed: " + path.string());
}

WindowOptions window_of(const Scenario& s) { return {s.warmup, s.batches, 0.95}; }

// A record cut short by the event cap keeps only the batches its bins can fill.
WindowOptions window_for(const Scenario& s, const TrajectoryRecord& rec) {
  auto w = window_of(s);
  if (!rec.truncated) return w;
  const auto kept = static_cast<std::size_t>(std::floor(static_cast<double>(rec.bin_count()) * (1.0 - s.warmup)));
  if (kept < 2)
    throw ValidationError("event cap stopped the run after " + std::to_string(rec.bin_count()) +
                          " bins; too few for batch means, raise event_cap or narrow bin_width");
  w.batches = static_cast<int>(std::min<std::size_t>(kept, static_cast<std::size_t>(w.batches)));
  return w;
}

SimBudget budget_of(const Scenario& s) {
  SimBudget b;
  b.horizon = s.horizon;
  b.replications = s.replications;
  b.window = window_of(s);
  b.layout = s.layout;
  b.event_cap = s.event_cap;
  b.threads = s.threads;
  return b;
}

void print_header(const Scenario& s, std::ostream& log) {
  log << "scenario " << s.name << "  model " << to_string(s.model) << "  run " << run_id(s) << "\n";
  log << "seed " << s.system.seed << "  horizon " << num(s.horizon) << "  replications " << s.replications << "\n";
  for (int i = 0; i < s.system.k(); ++i) {
    const auto& st = s.system.stations[i];
    log << "  station " << i + 1 << ": arrival " << to_string(st.arrival.family()) << " rate "
        << num(st.arrival.rate()) << " [" << spread_out_note(st.arrival) << "], service "
        << to_string(st.service.family()) << " rate " << num(st.service.rate());
    if (st.transfer)
      log << ", threshold " << st.transfer->threshold << ", overflow service "
          << to_string(st.transfer->service.family()) << " rate " << num(st.transfer->service.rate());
    log << "\n";
  }
  for (const auto& w : s.warnings) log << "warning: " << w << "\n";
}

json estimate_json(const Estimate& e) { return {{"value", e.value}, {"half_width", e.half_width}}; }

json verdict_json(const StabilityVerdict& v) {
  json stations = json::array();
  for (const auto& st : v.stations) {
    json j{{"station", st.station + 1},
           {"lambda", st.lambda},
           {"mu", st.mu},
           {"mu_overflow", st.mu_overflow},
           {"rho", st.rho},
           {"evaluated", st.evaluated}};
    if (st.evaluated) {
      j["rho_tilde"] = st.rho_tilde;
      j["rho_tilde_low"] = st.rho_tilde_low;
      j["rho_tilde_high"] = st.rho_tilde_high;
      j["classification"] = std::string(to_string(st.classification));
    }
    if (st.rho_star) j["rho_star"] = estimate_json(*st.rho_star);
    if (st.rho_star_simulated) j["rho_star_simulated"] = estimate_json(*st.rho_star_simulated);
    if (st.naive_rho_tilde) j["naive_rho_tilde"] = *st.naive_rho_tilde;
    stations.push_back(std::move(j));
  }
  json out{{"overall", std::string(to_string(v.overall))}, {"margin", v.margin}, {"stations", std::move(stations)}};
  if (v.deciding_station >= 0) out["deciding_station"] = v.deciding_station + 1;
  if (!v.advice.empty()) out["advice"] = v.advice;
  return out;
}

StabilityVerdict verdict_for(const SystemConfig& config, const Scenario& s) {
  if (config.k() == 2) return classify_two_station(config, s.margin);
  if (config.k() == 1) {
    StabilityVerdict v;
    v.margin = s.margin;
    StationVerdict st;
    st.lambda = config.arrival_rate(0);
    st.mu = config.service_rate(0);
    st.rho = st.rho_tilde = st.rho_tilde_low = st.rho_tilde_high = st.lambda / st.mu;
    st.rho_star = Estimate{std::min(st.rho, 1.0), 0.0, 0, 0.0};
    st.evaluated = true;
    st.classification = classify_criterion(st.rho, st.rho, s.margin);
    v.overall = st.classification;
    if (v.overall != Classification::stable) v.deciding_station = 0;
    v.stations.push_back(st);
    return v;
  }
  return backward_induction(config, budget_of(s), s.margin);
}

std::string verdict_table(const StabilityVerdict& v) {
  std::ostringstream t;
  t << cell("station", 9) << cell("lambda", 10) << cell("mu", 10) << cell("mu_ovf", 10) << cell("rho", 10)
    << cell("rho_star", 22) << cell("rho_tilde", 11) << "class\n";
  for (const auto& st : v.stations) {
    t << cell(std::to_string(st.station + 1), 9) << cell(brief(st.lambda), 10) << cell(brief(st.mu), 10)
      << cell(brief(st.mu_overflow), 10) << cell(brief(st.rho), 10);
    std::string rs = "-";
    if (st.rho_star) rs = brief(st.rho_star->value) + " +- " + brief(st.rho_star->half_width);
    t << cell(rs, 22);
    if (st.evaluated) t << cell(brief(st.rho_tilde), 11) << to_string(st.classification);
    else t << cell("-", 11) << "not evaluated";
    t << "\n";
  }
  t << "overall: " << to_string(v.overall);
  if (v.deciding_station >= 0) t << " (station " << v.deciding_station + 1 << ")";
  t << "\n";
  if (!v.advice.empty()) t << v.advice << "\n";
  return t.str();
}

std::string verdict_csv(const StabilityVerdict& v) {
  std::ostringstream c;
  c << "station,lambda,mu,mu_overflow,rho,rho_star,rho_star_ci,rho_tilde,rho_tilde_low,rho_tilde_high,classification\n";
  for (const auto& st : v.stations) {
    c << st.station + 1 << ',' << num(st.lambda) << ',' << num(st.mu) << ',' << num(st.mu_overflow) << ','
      << num(st.rho) << ',' << (st.rho_star ? num(st.rho_star->value) : "") << ','
      << (st.rho_star ? num(st.rho_star->half_width) : "") << ',';
    if (st.evaluated)
      c << num(st.rho_tilde) << ',' << num(st.rho_tilde_low) << ',' << num(st.rho_tilde_high) << ','
        << to_string(st.classification);
    else c << ",,,not_evaluated";
    c << "\n";
  }
  return c.str();
}

int verdict_exit(const StabilityVerdict& v) {
  return v.overall == Classification::boundary ? exit_boundary : exit_success;
}

// ---- simulate -------------------------------------------------------------

struct StationRow {
  Estimate rho_star;
  double idle = 0.0;
  double drift = 0.0;
  std::optional<double> little;
  std::optional<double> slack;
  double tight = 0.0;
};

int run_simulate(const Scenario& s, const std::filesystem::path& dir, std::ostream& log) {
  const RunOptions opts{s.event_cap, s.layout, true};
  const auto records = run_replications(s.system, s.horizon, s.replications, opts, s.threads);
  const int k = s.system.k();

  std::vector<std::vector<StationRow>> rows(records.size(), std::vector<StationRow>(k));
  bool truncated = false;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    truncated = truncated || rec.truncated;
    const auto w = window_for(s, rec);
    for (int i = 0; i < k; ++i) {
      auto& row = rows[r][i];
      row.rho_star = effective_traffic_intensity(rec, i, w);
      row.idle = idle_fraction(rec, i, w).value;
      row.drift = drift_estimate(rec, i);
      if (i == 0 && k > 1) row.little = little_residual(rec, w);
      if (i + 1 < k) row.slack = overflow_bound_check(rec, i, w).slack;
      row.tight = tightness_diagnostic(rec, i, s.tight_level, w).value;
    }
  }

  std::ostringstream csv;
  csv << "replication,station,rho_star,ci,idle,drift,little_residual,overflow_slack,tight_l0\n";
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int i = 0; i < k; ++i) {
      const auto& row = rows[r][i];
      csv << r << ',' << i + 1 << ',' << num(row.rho_star.value) << ',' << num(row.rho_star.half_width) << ','
          << num(row.idle) << ',' << num(row.drift) << ',' << opt_num(row.little) << ',' << opt_num(row.slack)
          << ',' << num(row.tight) << "\n";
    }

  json stations = json::array();
  for (int i = 0; i < k; ++i) {
    std::vector<Estimate> rho;
    std::vector<double> idle, drift, little, slack, tight;
    for (const auto& per : rows) {
      rho.push_back(per[i].rho_star);
      idle.push_back(per[i].idle);
      drift.push_back(per[i].drift);
      if (per[i].little) little.push_back(*per[i].little);
      if (per[i].slack) slack.push_back(*per[i].slack);
      tight.push_back(per[i].tight);
    }
    const Estimate agg = combine(rho);
    auto mean = [](const std::vector<double>& v) -> std::optional<double> {
      if (v.empty()) return std::nullopt;
      return summarize(v).mean;
    };
    csv << "mean," << i + 1 << ',' << num(agg.value) << ',' << num(agg.half_width) << ',' << num(*mean(idle)) << ','
        << num(*mean(drift)) << ',' << opt_num(mean(little)) << ',' << opt_num(mean(slack)) << ','
        << num(*mean(tight)) << "\n";

    const auto dv = drift_verdict(drift);
    json st{{"station", i + 1},
            {"rho_star", estimate_json(agg)},
            {"idle", *mean(idle)},
            {"drift", {{"mean", dv.mean}, {"std_error", dv.std_error}, {"drifting", dv.drifting}}},
            {"tightness", {{"level", s.tight_level}, {"value", *mean(tight)}}}};
    if (i + 1 < k) {
      std::vector<double> rates;
      for (const auto& rec : records) rates.push_back(rec.links[i].departures / rec.horizon());
      // Along a drifting path the ratio is a single-path rate, not the stationary overflow rate.
      st[dv.drifting ? "overflow_path_rate" : "overflow_rate"] = summarize(rates).mean;
      st["overflow_slack_min"] = *std::min_element(slack.begin(), slack.end());
    }
    if (!little.empty()) st["little_residual"] = *mean(little);
    stations.push_back(std::move(st));
  }
  write_file(dir / "metrics.csv", csv.str());

  json report{{"scenario", s.name},
              {"run_id", run_id(s)},
              {"model", "simulate"},
              {"seed", s.system.seed},
              {"horizon", s.horizon},
              {"replications", s.replications},
              {"warmup", s.warmup},
              {"batches", s.batches},
              {"truncated", truncated},
              {"warnings", s.warnings},
              {"stations", std::move(stations)}};
  if (s.system.k() == 2) report["verdict"] = verdict_json(classify_two_station(s.system, s.margin));
  write_file(dir / "report.json", report.dump(2) + "\n");

  if (s.event_log) {
    // Replay replication 0; the path is a function of its seed alone.
    std::ofstream events(dir / "events.csv", std::ios::binary | std::ios::trunc);
    if (!events) throw std::runtime_error("cannot write events.csv");
    EventLogWriter writer(events, k);
    Observer* obs[] = {&writer};
    (void)run(replication_config(s.system, 0), s.horizon, obs, opts);
  }

  log << cell("station", 9) << cell("rho_star", 22) << cell("idle", 11) << "drift\n";
  for (const auto& st : report["stations"])
    log << cell(std::to_string(st["station"].get<int>()), 9)
        << cell(brief(st["rho_star"]["value"].get<double>()) + " +- " + brief(st["rho_star"]["half_width"].get<double>()), 22)
        << cell(brief(st["idle"].get<double>()), 11) << brief(st["drift"]["mean"].get<double>()) << "\n";
  if (truncated) {
    log << "event cap reached: results are partial\n";
    return exit_truncated;
  }
  return exit_success;
}

// ---- ctmc -----------------------------------------------------------------

int run_ctmc(const Scenario& s, const std::filesystem::path& dir, std::ostream& log) {
  const auto spec = CtmcSpec::from_config(s.system, s.truncation);
  const auto table = stationary_solve(cascade_ctmc_generator(spec));
  const auto m1 = table.marginal(0);
  const auto m2 = table.marginal(1);

  std::ostringstream marg;
  marg << "q,p_q1,p_q2\n";
  for (int q = 0; q <= s.truncation; ++q) marg << q << ',' << num(m1[q]) << ',' << num(m2[q]) << "\n";
  write_file(dir / "marginals.csv", marg.str());

  std::ostringstream sum;
  sum << "rho_star_1,p_q1_zero,p_q2_zero,rho_star_2,truncation,truncation_mass,iterations\n"
      << num(1.0 - m1[0]) << ',' << num(m1[0]) << ',' << num(m2[0]) << ',' << num(1.0 - m2[0]) << ','
      << s.truncation << ',' << num(table.truncation_mass) << ',' << table.iterations << "\n";
  write_file(dir / "summary.csv", sum.str());

  log << "rho_star_1 " << brief(1.0 - m1[0]) << "  P(Q1=0) " << brief(m1[0]) << "  P(Q2=0) " << brief(m2[0])
      << "  truncation mass " << brief(table.truncation_mass) << "\n";
  if (!table.warning.empty()) log << "warning: " << table.warning << "\n";
  return exit_success;
}

// ---- stability ------------------------------------------------------------

int run_stability(const Scenario& s, const std::filesystem::path& dir, std::ostream& log) {
  const auto v = verdict_for(s.system, s);
  json doc = verdict_json(v);
  doc["scenario"] = s.name;
  doc["run_id"] = run_id(s);
  doc["warnings"] = s.warnings;
  if (s.cross_check) {
    const auto d = full_system_drift(s.system, budget_of(s), 0);
    doc["drift_cross_check"] = {{"mean", d.mean}, {"std_error", d.std_error}, {"drifting", d.drifting}};
    log << "full-system drift of station 1: " << brief(d.mean) << " (se " << brief(d.std_error) << ")"
        << (d.drifting ? " drifting" : "") << "\n";
  }
  write_file(dir / "verdict.json", doc.dump(2) + "\n");
  write_file(dir / "verdict.csv", verdict_csv(v));
  log << verdict_table(v);
  return verdict_exit(v);
}

// ---- sweep ----------------------------------------------------------------

int run_sweep(const Scenario& s, const std::filesystem::path& dir, std::ostream& log) {
  const auto& axis = *s.sweep;
  const RunOptions opts{s.event_cap, s.layout, true};
  const bool two = s.system.k() >= 2;
  bool truncated = false;

  std::ostringstream csv;
  csv << "value,rho_tilde_1,verdict,drift_mean,drift_se,drifting,rho_star_1,rho_star_1_ci,overflow_rate,"
         "overflow_rate_kind,overflow_bound,bound_holds\n";
  log << cell("value", 10) << cell("rho_tilde_1", 13) << cell("verdict", 10) << "drift\n";
  for (double value : axis.values) {
    SystemConfig config = s.system;
    set_parameter(config, axis.parameter, value);
    const auto v = verdict_for(config, s);
    const auto& top = v.stations.front();

    const auto records = run_replications(config, s.horizon, s.replications, opts, s.threads);
    std::vector<double> drifts, rates, bounds;
    std::vector<Estimate> rho;
    bool holds = true;
    for (const auto& rec : records) {
      truncated = truncated || rec.truncated;
      const auto w = window_for(s, rec);
      drifts.push_back(drift_estimate(rec, 0));
      rho.push_back(effective_traffic_intensity(rec, 0, w));
      if (two) {
        const auto b = overflow_bound_check(rec, 0, w);
        rates.push_back(b.rate);
        bounds.push_back(b.bound);
        holds = holds && b.holds;
      }
    }
    const auto dv = drift_verdict(drifts);
    const auto r1 = combine(rho);
    csv << num(value) << ',' << (top.evaluated ? num(top.rho_tilde) : "") << ',' << to_string(v.overall) << ','
        << num(dv.mean) << ',' << num(dv.std_error) << ',' << (dv.drifting ? 1 : 0) << ',' << num(r1.value) << ','
        << num(r1.half_width) << ',';
    if (two)
      csv << num(summarize(rates).mean) << ',' << (dv.drifting ? "path_rate" : "stationary") << ','
          << num(summarize(bounds).mean) << ',' << (holds ? 1 : 0);
    else csv << ",,,";
    csv << "\n";
    log << cell(brief(value), 10) << cell(top.evaluated ? brief(top.rho_tilde) : "-", 13)
        << cell(std::string(to_string(v.overall)), 10) << brief(dv.mean) << (dv.drifting ? " drifting" : "") << "\n";
  }
  write_file(dir / "sweep.csv", csv.str());
  if (truncated) {
    log << "event cap reached: results are partial\n";
    return exit_truncated;
  }
  return exit_success;
}

}  // namespace

int run_experiment(const Scenario& s, std::ostream& log) {
  const auto dir = output_path(s);
  std::filesystem::create_directories(dir);
  print_header(s, log);
  log << "output " << dir.string() << "\n";
  write_file(dir / "scenario.json", json::parse(s.canonical).dump(2) + "\n");
  switch (s.model) {
    case Model::simulate: return run_simulate(s, dir, log);
    case Model::ctmc: return run_ctmc(s, dir, log);
    case Model::stability: return run_stability(s, dir, log);
    case Model::sweep: return run_sweep(s, dir, log);
  }
  return exit_fault;
}

}  // namespace cascade
