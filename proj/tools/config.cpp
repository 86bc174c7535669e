#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "stocycle/errors.hpp"

namespace stocycle::app {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

// Typed access to one JSON object. Every problem is recorded instead of
// stopping at the first, and keys nobody asked for are reported on exit.
class Section {
 public:
  Section(const json* obj, std::string prefix, std::vector<std::string>& errors)
      : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {
    if (obj_ && !obj_->is_object()) {
      errors_.push_back(prefix_ + ": must be an object");
      obj_ = nullptr;
    }
  }
  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;
  ~Section() {
    if (!obj_) return;
    for (const auto& item : obj_->items()) {
      if (!seen_.contains(item.key())) fail(item.key(), "unknown setting");
    }
  }

  std::vector<std::string>& errors() { return errors_; }
  bool present() const { return obj_ != nullptr; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_ && obj_->contains(key);
  }

  const json* child(const std::string& key) { return has(key) ? &obj_->at(key) : nullptr; }

  std::string path(const std::string& key) const {
    if (key.empty()) return prefix_;
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

  void fail(const std::string& key, const std::string& what) { errors_.push_back(path(key) + ": " + what); }

  double number(const std::string& key, double fallback) {
    const json* v = child(key);
    if (!v) return fallback;
    if (!v->is_number()) {
      fail(key, "must be a number");
      return fallback;
    }
    return v->get<double>();
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const json* v = child(key);
    if (!v) return fallback;
    if (!v->is_number_integer() || v->get<std::int64_t>() < 0) {
      fail(key, "must be a non-negative integer");
      return fallback;
    }
    return v->get<std::size_t>();
  }

  std::uint64_t unsigned64(const std::string& key, std::uint64_t fallback) {
    const json* v = child(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned()) {
      fail(key, "must be a non-negative integer");
      return fallback;
    }
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = child(key);
    if (!v) return fallback;
    if (!v->is_boolean()) {
      fail(key, "must be true or false");
      return fallback;
    }
    return v->get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const json* v = child(key);
    if (!v) return fallback;
    if (!v->is_string()) {
      fail(key, "must be a string");
      return fallback;
    }
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) {
    const json* v = child(key);
    if (!v) return fallback;
    if (!v->is_array() || !std::all_of(v->begin(), v->end(), [](const json& e) { return e.is_number(); })) {
      fail(key, "must be an array of numbers");
      return fallback;
    }
    std::vector<double> out;
    for (const auto& e : *v) out.push_back(e.get<double>());
    return out;
  }

 private:
  const json* obj_;
  std::string prefix_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

BetaInterval read_beta(Section& parent, const std::string& key, BetaInterval value, bool support) {
  Section s(parent.child(key), parent.path(key), parent.errors());
  value.b = s.number("b", value.b);
  value.c = s.number("c", value.c);
  if (support) {
    value.lo = s.number("lower", value.lo);
    value.hi = s.number("upper", value.hi);
  }
  return value;
}

std::vector<BetaInterval> read_beta_list(Section& parent, const std::string& key) {
  std::vector<BetaInterval> out;
  const json* v = parent.child(key);
  if (!v) return out;
  if (!v->is_array()) {
    parent.fail(key, "must be an array of {b, c, lower, upper} objects");
    return out;
  }
  for (std::size_t i = 0; i < v->size(); ++i) {
    Section s(&(*v)[i], parent.path(key) + "[" + std::to_string(i) + "]", parent.errors());
    BetaInterval bi;
    bi.b = s.number("b", 1.0);
    bi.c = s.number("c", 1.0);
    if (!s.has("lower") || !s.has("upper")) s.fail("", "lower and upper are required");
    bi.lo = s.number("lower", 0.0);
    bi.hi = s.number("upper", 0.0);
    out.push_back(bi);
  }
  return out;
}

NormalPrior read_normal(Section& parent, const std::string& key, NormalPrior value) {
  Section s(parent.child(key), parent.path(key), parent.errors());
  value.mean = s.number("mean", value.mean);
  value.variance = s.number("variance", value.variance);
  return value;
}

ModelParameters read_parameters(Section& parent, const std::string& key, const Dimensions& dims, bool& ok) {
  ok = false;
  const json* v = parent.child(key);
  if (!v) {
    parent.fail(key, "required");
    return ModelParameters::zeros(dims);
  }
  if (!v->is_object()) {
    parent.fail(key, "must be an object of named parameter values");
    return ModelParameters::zeros(dims);
  }
  std::map<std::string, double> record;
  const auto names = parameter_names(dims);
  std::set<std::string> known(names.begin(), names.end());
  known.insert("psiP");
  bool good = true;
  for (const auto& item : v->items()) {
    if (!known.contains(item.key())) {
      parent.fail(key + "." + item.key(), "unknown parameter for the configured dimensions");
      good = false;
    } else if (!item.value().is_number()) {
      parent.fail(key + "." + item.key(), "must be a number");
      good = false;
    } else {
      record[item.key()] = item.value().get<double>();
    }
  }
  for (const auto& name : names) {
    if (record.contains(name)) continue;
    if (name.starts_with("A")) {
      record[name] = 0.0;  // amplitude initial conditions default to zero
    } else {
      parent.fail(key + "." + name, "required");
      good = false;
    }
  }
  if (!good) return ModelParameters::zeros(dims);
  auto params = from_record(record, dims);
  if (auto rep = validate(params, dims); !rep.ok()) {
    for (const auto& msg : rep.violations) parent.fail(key, msg);
    return params;
  }
  ok = true;
  return params;
}

json beta_json(const BetaInterval& b) { return {{"b", b.b}, {"c", b.c}, {"lower", b.lo}, {"upper", b.hi}}; }
json normal_json(const NormalPrior& n) { return {{"mean", n.mean}, {"variance", n.variance}}; }

}  // namespace

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir, const Overrides& ov,
                       bool need_data) {
  std::vector<std::string> errors;
  RunConfig cfg;
  cfg.data_required = need_data;
  const auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  {
    Section root(&doc, "", errors);
    if (!root.present()) throw ConfigError("configuration must be a JSON object");

    {
      Section s(root.child("model"), "model", errors);
      cfg.dims.k = s.count("k", 1);
      cfg.dims.p = s.count("p", 1);
      cfg.dims.r = s.count("r", 0);
      if (cfg.dims.k < 1) s.fail("k", "must be at least 1");
      if (cfg.dims.p < 1) s.fail("p", "must be at least 1");
      if (cfg.dims.k > 16) s.fail("k", "must be at most 16");
      if (cfg.dims.p > 16) s.fail("p", "must be at most 16");
      if (cfg.dims.r > 8) s.fail("r", "must be at most 8");
    }
    const bool dims_ok = cfg.dims.k >= 1 && cfg.dims.p >= 1 && cfg.dims.k <= 16 && cfg.dims.p <= 16 &&
                         cfg.dims.r <= 8;

    {
      Section s(root.child("data"), "data", errors);
      if (!s.present() && need_data) errors.emplace_back("data: required");
      if (s.present()) {
        if (!s.has("path")) s.fail("path", "required");
        const auto p = s.text("path", "");
        if (!p.empty()) {
          cfg.data.path = resolve(p);
          if (!std::filesystem::is_regular_file(cfg.data.path)) {
            s.fail("path", "file '" + cfg.data.path.string() + "' does not exist");
          }
        }
        cfg.data.column = s.text("column", "");
        cfg.data.periods_per_year = static_cast<int>(s.count("periods_per_year", 4));
        if (cfg.data.periods_per_year < 1) s.fail("periods_per_year", "must be at least 1");
      }
    }

    {
      Section s(root.child("prior"), "prior", errors);
      auto& pr = cfg.prior;
      cfg.overrides.lambda_half_width = s.number("lambda_half_width", 0.25);
      if (!(cfg.overrides.lambda_half_width > 0.0 && cfg.overrides.lambda_half_width < 1.0)) {
        s.fail("lambda_half_width", "must lie in (0, 1)");
      }
      cfg.overrides.lambda = read_beta_list(s, "lambda");
      cfg.overrides.p_shift = read_beta_list(s, "p");
      if (!cfg.overrides.lambda.empty() && cfg.overrides.lambda.size() != cfg.dims.k) {
        s.fail("lambda", "needs exactly k entries");
      }
      if (!cfg.overrides.p_shift.empty() && cfg.overrides.p_shift.size() != cfg.dims.k) {
        s.fail("p", "needs exactly k entries");
      }
      pr.a = read_normal(s, "a", pr.a);
      pr.q = read_normal(s, "q", pr.q);
      pr.beta = read_normal(s, "beta", pr.beta);
      pr.a_init = read_normal(s, "A_init", pr.a_init);
      pr.alpha_A = read_beta(s, "alphaA", pr.alpha_A, true);
      pr.alpha_P = read_beta(s, "alphaP", pr.alpha_P, true);
      pr.rho = read_beta(s, "rho", pr.rho, false);
      {
        Section g(s.child("omega"), s.path("omega"), errors);
        pr.omega.shape = g.number("shape", pr.omega.shape);
        pr.omega.scale = g.number("scale", pr.omega.scale);
      }
      // Shape checks that do not depend on the frequency supports.
      PriorSpec probe = pr;
      probe.lambda.assign(cfg.dims.k, BetaInterval{1.0, 1.0, 0.0, 0.0});
      probe.p_shift.assign(cfg.dims.k, BetaInterval{1.0, 1.0, 0.0, 1.0});
      if (dims_ok) {
        for (const auto& msg : check(probe, cfg.dims)) {
          const bool support = msg.starts_with("lambda") ||
                               (msg.size() > 1 && msg[0] == 'p' && (std::isdigit(msg[1]) || msg[1] == ' '));
          if (!support) errors.push_back("prior." + msg);
        }
      }
    }

    {
      Section s(root.child("sampler"), "sampler", errors);
      auto& sc = cfg.sampler;
      sc.n_iterations = s.count("n_iterations", sc.n_iterations);
      sc.n_burnin = s.count("n_burnin", sc.n_burnin);
      sc.thin = s.count("thin", sc.thin);
      sc.n_chains = s.count("n_chains", sc.n_chains);
      sc.proposal_dof = s.number("proposal_dof", sc.proposal_dof);
      sc.target_acceptance = s.number("target_acceptance", sc.target_acceptance);
      sc.adapt_window = s.count("adapt_window", sc.adapt_window);
      sc.rng_seed = s.unsigned64("seed", sc.rng_seed);
      sc.full_block = s.boolean("full_block", sc.full_block);
      if (ov.seed) sc.rng_seed = *ov.seed;
      if (ov.chains) sc.n_chains = *ov.chains;
      if (sc.n_chains > 64) s.fail("n_chains", "must be at most 64");
      for (const auto& msg : sc.check()) errors.push_back("sampler: " + msg);
    }

    {
      Section s(root.child("analysis"), "analysis", errors);
      auto& an = cfg.analysis;
      an.ci_level = s.number("ci_level", an.ci_level);
      if (!(an.ci_level > 0.0 && an.ci_level < 1.0)) s.fail("ci_level", "must lie in (0, 1)");
      an.ellipse_levels = s.numbers("ellipse_levels", an.ellipse_levels);
      for (double l : an.ellipse_levels) {
        if (!(l > 0.0 && l < 1.0)) {
          s.fail("ellipse_levels", "every level must lie in (0, 1)");
          break;
        }
      }
      an.forecast_horizon = s.count("forecast_horizon", an.forecast_horizon);
      if (an.forecast_horizon < 1) s.fail("forecast_horizon", "must be at least 1");
      an.paths_per_draw = s.count("paths_per_draw", an.paths_per_draw);
      if (an.paths_per_draw < 1) s.fail("paths_per_draw", "must be at least 1");
      an.max_draws = s.count("max_draws", an.max_draws);
      an.clock_window_years = s.numbers("clock_window_years", an.clock_window_years);
      for (double w : an.clock_window_years) {
        if (!(w > 0.0)) {
          s.fail("clock_window_years", "every window must be positive");
          break;
        }
      }
    }

    {
      Section s(root.child("simulate"), "simulate", errors);
      if (s.present()) {
        cfg.simulate.n = s.count("n", cfg.simulate.n);
        if (cfg.simulate.n < 1) s.fail("n", "must be at least 1");
        if (dims_ok) {
          bool ok = false;
          cfg.simulate.parameters = read_parameters(s, "parameters", cfg.dims, ok);
          cfg.simulate.present = ok;
        } else {
          s.has("parameters");
        }
      }
    }

    const auto out = root.text("output", "out");
    cfg.output = ov.out ? *ov.out : resolve(out);
  }
  if (!errors.empty()) {
    std::ostringstream os;
    os << "invalid configuration (" << errors.size() << (errors.size() == 1 ? " problem" : " problems") << "):";
    for (const auto& e : errors) os << "\n  - " << e;
    throw ConfigError(os.str());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides, bool need_data) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open configuration file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("configuration file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  auto cfg = parse_config(doc, base, overrides, need_data);
  cfg.source = path;
  return cfg;
}

PriorSpec resolve_prior(const RunConfig& config, std::span<const double> peaks) {
  PriorSpec spec = config.prior;
  if (!config.overrides.lambda.empty()) {
    spec.lambda = config.overrides.lambda;
    std::vector<double> lower;
    for (const auto& b : spec.lambda) lower.push_back(b.lo);
    if (config.overrides.p_shift.empty()) {
      spec.p_shift.clear();
      for (double lo : lower) {
        const double hi = lo > 0.0 ? std::numbers::pi / lo : 0.0;
        spec.p_shift.push_back(BetaInterval{1.0, 1.0, 0.0, hi});
      }
    }
  } else {
    const auto built = default_prior(config.dims, peaks, config.overrides.lambda_half_width);
    spec.lambda = built.lambda;
    if (config.overrides.p_shift.empty()) spec.p_shift = built.p_shift;
  }
  if (!config.overrides.p_shift.empty()) spec.p_shift = config.overrides.p_shift;
  const auto problems = check(spec, config.dims);
  if (!problems.empty()) {
    std::ostringstream os;
    os << "invalid prior:";
    for (const auto& p : problems) os << "\n  - " << p;
    throw ConfigError(os.str());
  }
  return spec;
}

json RunConfig::to_json() const {
  json j;
  j["model"] = {{"k", dims.k}, {"p", dims.p}, {"r", dims.r}};
  j["data"] = {{"path", data.path.generic_string()},
               {"column", data.column},
               {"periods_per_year", data.periods_per_year}};
  json lambda = json::array(), pshift = json::array();
  for (const auto& b : overrides.lambda) lambda.push_back(beta_json(b));
  for (const auto& b : overrides.p_shift) pshift.push_back(beta_json(b));
  j["prior"] = {{"lambda_half_width", overrides.lambda_half_width},
                {"lambda", lambda},
                {"p", pshift},
                {"a", normal_json(prior.a)},
                {"q", normal_json(prior.q)},
                {"beta", normal_json(prior.beta)},
                {"A_init", normal_json(prior.a_init)},
                {"alphaA", beta_json(prior.alpha_A)},
                {"alphaP", beta_json(prior.alpha_P)},
                {"rho", {{"b", prior.rho.b}, {"c", prior.rho.c}}},
                {"omega", {{"shape", prior.omega.shape}, {"scale", prior.omega.scale}}}};
  j["sampler"] = {{"n_iterations", sampler.n_iterations}, {"n_burnin", sampler.n_burnin},
                  {"thin", sampler.thin},                 {"n_chains", sampler.n_chains},
                  {"proposal_dof", sampler.proposal_dof}, {"target_acceptance", sampler.target_acceptance},
                  {"adapt_window", sampler.adapt_window}, {"seed", sampler.rng_seed},
                  {"full_block", sampler.full_block}};
  j["analysis"] = {{"ci_level", analysis.ci_level},
                   {"ellipse_levels", analysis.ellipse_levels},
                   {"forecast_horizon", analysis.forecast_horizon},
                   {"paths_per_draw", analysis.paths_per_draw},
                   {"max_draws", analysis.max_draws},
                   {"clock_window_years", analysis.clock_window_years}};
  if (simulate.present) {
    json params;
    for (const auto& [name, value] : to_record(simulate.parameters)) params[name] = value;
    j["simulate"] = {{"n", simulate.n}, {"parameters", params}};
  }
  return j;
}

std::string RunConfig::hash() const { return hex16(fnv1a(to_json().dump())); }

std::string RunConfig::fit_hash() const {
  // The data enter through their bytes rather than their path, so the same
  // file reached through a different relative path hashes identically.
  auto j = to_json();
  j.erase("analysis");
  j.erase("simulate");
  j["data"].erase("path");
  std::ifstream in(data.path, std::ios::binary);
  std::ostringstream bytes;
  bytes << in.rdbuf();
  j["data"]["digest"] = hex16(fnv1a(bytes.str()));
  return hex16(fnv1a(j.dump()));
}

}  // namespace stocycle::app
