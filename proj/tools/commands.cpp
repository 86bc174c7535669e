#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stocycle/analysis.hpp"
#include "stocycle/chain_io.hpp"
#include "stocycle/csv.hpp"
#include "stocycle/errors.hpp"
#include "stocycle/moments.hpp"
#include "stocycle/spectral.hpp"
#include "svg.hpp"

namespace stocycle::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kBlue = "#1f5fa8";
constexpr const char* kRed = "#b8322a";
constexpr const char* kGrey = "#555555";
constexpr const char* kGreen = "#2e7d32";
constexpr const char* kQuadrantColors[4] = {"#2e7d32", "#e08a00", "#b8322a", "#1f5fa8"};
constexpr const char* kQuadrantNames[4] = {"expansion", "downturn", "contraction", "recovery"};

json meta(const RunConfig& cfg, const std::string& command) {
  return {{"schema_version", kSchemaVersion},
          {"command", command},
          {"config_hash", cfg.hash()},
          {"fit_hash", cfg.data_required ? json(cfg.fit_hash()) : json(nullptr)}};
}

void ensure_output(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output, ec);
  if (ec || !fs::is_directory(cfg.output)) {
    throw DataError("cannot create output directory '" + cfg.output.string() + "'");
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write '" + path.string() + "'");
  return os;
}

void write_json(const fs::path& path, const json& doc) {
  auto os = open_out(path);
  os << doc.dump(2) << '\n';
}

std::string f(double v) { return format_double(v); }

std::vector<double> iota_times(std::size_t first, std::size_t count) {
  std::vector<double> t(count);
  for (std::size_t i = 0; i < count; ++i) t[i] = static_cast<double>(first + i);
  return t;
}

TimeSeries load_series(const RunConfig& cfg) {
  return ingest(cfg.data.path, cfg.data.column, cfg.data.periods_per_year);
}

void note(Io& io, const std::string& text) {
  if (io.verbose) io.log << text << std::endl;
}

struct Fitted {
  std::vector<ChainOutput> chains;
  ChainOutput pooled;
};

Fitted load_fit(const RunConfig& cfg) {
  const fs::path meta_path = cfg.output / "fit.json";
  std::ifstream in(meta_path, std::ios::binary);
  if (!in) throw ConfigError("no fit found in '" + cfg.output.string() + "': run the fit command first");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("'" + meta_path.string() + "' is not valid JSON: " + e.what());
  }
  if (doc.value("schema_version", 0) != kSchemaVersion) {
    throw DataError("'" + meta_path.string() + "' has an unsupported schema version");
  }
  const std::string stored = doc.value("fit_hash", "");
  const std::string current = cfg.fit_hash();
  if (stored != current) {
    throw ConfigError("the fit in '" + cfg.output.string() + "' was produced by a different data, model, prior or "
                      "sampler configuration (fit hash " + stored + ", current " + current +
                      "); run the fit command again");
  }
  Fitted out;
  out.chains = read_chain_csv(cfg.output / "chains.csv");
  if (out.chains.empty()) throw DataError("chain file holds no draws");
  if (!(out.chains.front().dims == cfg.dims)) throw DataError("chain file dimensions do not match the model");
  out.pooled = out.chains.front();
  Eigen::Index rows = 0;
  for (const auto& c : out.chains) rows += c.draws.rows();
  out.pooled.draws.resize(rows, out.chains.front().draws.cols());
  out.pooled.log_posterior.clear();
  Eigen::Index at = 0;
  for (const auto& c : out.chains) {
    out.pooled.draws.middleRows(at, c.draws.rows()) = c.draws;
    out.pooled.log_posterior.insert(out.pooled.log_posterior.end(), c.log_posterior.begin(), c.log_posterior.end());
    at += c.draws.rows();
  }
  return out;
}

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index c) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) v[static_cast<std::size_t>(r)] = m(r, c);
  return v;
}

json summary_json(const ParameterSummary& s) {
  return {{"mean", s.mean},
          {"median", s.median},
          {"modes", s.modes},
          {"std_dev", s.std_dev},
          {"level", s.level},
          {"ci", {s.quantile_ci.lower, s.quantile_ci.upper}},
          {"hpd", {s.hpd.lower, s.hpd.upper}}};
}

std::string join_modes(const std::vector<double>& modes) {
  std::string out;
  for (std::size_t i = 0; i < modes.size(); ++i) out += (i ? ";" : "") + f(modes[i]);
  return out;
}

Panel band_panel(const std::string& title, const std::string& y_label, const std::vector<double>& t, const Band& b,
                 const std::string& color) {
  Panel p(title, "t", y_label);
  p.band(t, b.lower, b.upper, color);
  p.line(t, b.median, color);
  return p;
}

void ellipse_outline(Panel& panel, const Ellipse& e, const std::string& color) {
  const Eigen::LLT<Eigen::Matrix2d> llt(e.shape);
  const Eigen::Matrix2d L = llt.matrixL();
  std::vector<double> xs, ys;
  for (int i = 0; i < 72; ++i) {
    const double th = 2.0 * std::numbers::pi * i / 72.0;
    const Eigen::Vector2d pt = e.center + e.radius * (L * Eigen::Vector2d(std::cos(th), std::sin(th)));
    xs.push_back(pt.x());
    ys.push_back(pt.y());
  }
  panel.outline(xs, ys, color);
}

}  // namespace

// ---------------------------------------------------------------------------

void cmd_simulate(const RunConfig& cfg, Io& io) {
  if (!cfg.simulate.present) throw ConfigError("simulate: the configuration needs a simulate section with parameters");
  ensure_output(cfg);
  const auto& params = cfg.simulate.parameters;
  const auto sim = simulate(params, cfg.simulate.n, cfg.sampler.rng_seed);
  const auto& path = sim.path;
  {
    auto os = open_out(cfg.output / "simulated.csv");
    write_csv_row(os, {"t", "y", "mean", "A", "P", "eps"});
    for (std::size_t t = 0; t < sim.series.size(); ++t) {
      write_csv_row(os, {std::to_string(t + 1), f(sim.series.values[t]), f(path.m[t]), f(path.A[t]), f(path.P[t]),
                         f(path.eps[t])});
    }
  }
  json doc = meta(cfg, "simulate");
  doc["n"] = cfg.simulate.n;
  doc["seed"] = cfg.sampler.rng_seed;
  json p;
  for (const auto& [name, value] : to_record(params)) p[name] = value;
  doc["parameters"] = p;
  if (params.psi_P == 1.0) doc["theoretical_variance"] = theoretical_variance(params);
  write_json(cfg.output / "simulate.json", doc);

  const auto t = iota_times(1, sim.series.size());
  Panel top("Simulated series", "t", "y");
  top.line(t, sim.series.values, kGrey, 1.2);
  top.line(t, path.m, kBlue, 1.2);
  top.legend("y", kGrey);
  top.legend("conditional mean", kBlue);
  Panel latent("Latent amplitude and phase deviations", "t", "");
  latent.line(t, path.A, kRed);
  latent.line(t, path.P, kGreen);
  latent.legend("A", kRed);
  latent.legend("P", kGreen);
  latent.zero_axes();
  write_svg(cfg.output / "simulated.svg", {top, latent});
  io.out << "simulated " << cfg.simulate.n << " observations into " << (cfg.output / "simulated.csv").string()
         << '\n';
}

void cmd_periodogram(const RunConfig& cfg, Io& io) {
  ensure_output(cfg);
  const auto y = load_series(cfg);
  const auto pg = periodogram(y, true);
  {
    auto os = open_out(cfg.output / "periodogram.csv");
    write_csv_row(os, {"frequency", "power", "period_years"});
    for (std::size_t i = 0; i < pg.frequencies.size(); ++i) {
      write_csv_row(os, {f(pg.frequencies[i]), f(pg.power[i]),
                         f(cycle_length_years(pg.frequencies[i], y.periods_per_year))});
    }
  }
  std::vector<double> peaks;
  try {
    peaks = pick_peaks(pg, cfg.dims.k);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("periodogram: ") + e.what());
  }
  json doc = meta(cfg, "periodogram");
  doc["n"] = y.size();
  json list = json::array();
  io.out << "top " << peaks.size() << " periodogram peaks\n";
  io.out << "  frequency        power   period (years)\n";
  Panel panel("Periodogram", "frequency", "power");
  panel.line(pg.frequencies, pg.power, kBlue);
  for (double lam : peaks) {
    const auto it = std::find(pg.frequencies.begin(), pg.frequencies.end(), lam);
    const double power = pg.power[static_cast<std::size_t>(it - pg.frequencies.begin())];
    const double years = cycle_length_years(lam, y.periods_per_year);
    list.push_back({{"frequency", lam}, {"power", power}, {"period_years", years}});
    io.out << std::setw(11) << std::fixed << std::setprecision(5) << lam << std::setw(13) << power
           << std::setw(17) << years << '\n';
    std::ostringstream lab;
    lab << std::setprecision(3) << years << " y";
    panel.points({lam}, {power}, kRed, 3.5);
    panel.label(lam, power, lab.str());
  }
  io.out.unsetf(std::ios::floatfield);
  doc["peaks"] = list;
  write_json(cfg.output / "peaks.json", doc);
  write_svg(cfg.output / "periodogram.svg", {panel});
}

void cmd_fit(const RunConfig& cfg, Io& io) {
  ensure_output(cfg);
  const auto y = load_series(cfg);
  note(io, "loaded " + std::to_string(y.size()) + " observations from " + cfg.data.path.string());
  std::vector<double> peaks;
  if (!cfg.overrides.lambda.empty()) {
    for (const auto& b : cfg.overrides.lambda) peaks.push_back(b.midpoint());
  } else {
    try {
      peaks = pick_peaks(periodogram(y, true), cfg.dims.k);
    } catch (const std::invalid_argument& e) {
      throw DataError(std::string("fit: cannot initialise the frequencies: ") + e.what());
    }
  }
  const PriorSpec prior = resolve_prior(cfg, peaks);
  const auto init = initial_parameters(y, cfg.dims, prior, peaks);
  note(io, "running " + std::to_string(cfg.sampler.n_chains) + " chain(s) of " +
               std::to_string(cfg.sampler.n_iterations) + " iterations");
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = run_chains(y, prior, cfg.sampler, init);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  note(io, "sampling finished in " + std::to_string(secs) + " s");

  write_chain_csv(cfg.output / "chains.csv", result.chains);
  std::vector<SamplerState> states;
  for (const auto& c : result.chains) states.push_back(c.final_state);
  save_states(cfg.output / "states.bin", states);

  json doc = meta(cfg, "fit");
  doc["n"] = y.size();
  doc["dims"] = {{"k", cfg.dims.k}, {"p", cfg.dims.p}, {"r", cfg.dims.r}};
  doc["peaks"] = peaks;
  json supports = json::array();
  for (std::size_t j = 0; j < cfg.dims.k; ++j) {
    supports.push_back({{"lambda", {prior.lambda[j].lo, prior.lambda[j].hi}},
                        {"p", {prior.p_shift[j].lo, prior.p_shift[j].hi}}});
  }
  doc["prior_supports"] = supports;
  json init_json;
  for (const auto& [name, value] : to_record(init)) init_json[name] = value;
  doc["initial_values"] = init_json;
  const auto& first = result.chains.front();
  doc["parameters"] = first.names;
  doc["blocks"] = first.block_names;
  json chains = json::array();
  for (const auto& c : result.chains) {
    chains.push_back({{"chain", c.chain_index}, {"draws", c.size()}, {"acceptance_rates", c.acceptance_rates}});
  }
  doc["chains"] = chains;
  doc["ess"] = result.ess;
  doc["split_rhat"] = result.split_rhat;
  write_json(cfg.output / "fit.json", doc);

  io.out << "fit: " << result.chains.size() << " chain(s), " << first.size() << " kept draws each\n";
  io.out << "  parameter          ESS   split-Rhat\n";
  for (std::size_t i = 0; i < first.names.size(); ++i) {
    io.out << "  " << std::left << std::setw(12) << first.names[i] << std::right << std::setw(10) << std::fixed
           << std::setprecision(1) << result.ess[i];
    if (i < result.split_rhat.size() && std::isfinite(result.split_rhat[i])) {
      io.out << std::setw(13) << std::setprecision(3) << result.split_rhat[i];
    }
    io.out << '\n';
  }
  io.out.unsetf(std::ios::floatfield);
}

void cmd_summarize(const RunConfig& cfg, Io& io) {
  const auto fit = load_fit(cfg);
  const auto& pooled = fit.pooled;
  const double level = cfg.analysis.ci_level;
  struct Row {
    std::string name;
    ParameterSummary s;
    double ess = 0.0;
    double rhat = 0.0;
  };
  std::vector<Row> rows;
  const auto diagnostics = [&](Eigen::Index c, Row& row) {
    std::vector<std::vector<double>> cols;
    bool equal = true;
    for (const auto& ch : fit.chains) {
      cols.push_back(column(ch.draws, c));
      row.ess += effective_sample_size(cols.back());
      equal = equal && cols.back().size() == cols.front().size();
    }
    row.rhat = std::numeric_limits<double>::quiet_NaN();
    if (equal && cols.front().size() >= 4) {
      std::vector<std::span<const double>> spans(cols.begin(), cols.end());
      row.rhat = split_rhat(spans);
    }
  };
  for (std::size_t i = 0; i < pooled.names.size(); ++i) {
    Row row{pooled.names[i], summarize(column(pooled.draws, static_cast<Eigen::Index>(i)), level)};
    diagnostics(static_cast<Eigen::Index>(i), row);
    rows.push_back(std::move(row));
  }
  const int ppy = cfg.data.periods_per_year;
  for (std::size_t j = 0; j < cfg.dims.k; ++j) {
    const std::string name = "lambda" + std::to_string(j + 1);
    const auto it = std::find(pooled.names.begin(), pooled.names.end(), name);
    const auto c = static_cast<Eigen::Index>(it - pooled.names.begin());
    Row row{"T(" + name + ")",
            derived_summary(column(pooled.draws, c), [ppy](double l) { return cycle_length_years(l, ppy); }, level)};
    diagnostics(c, row);
    rows.push_back(std::move(row));
  }

  ensure_output(cfg);
  {
    auto os = open_out(cfg.output / "summary.csv");
    write_csv_row(os, {"parameter", "mean", "median", "modes", "std_dev", "ci_lower", "ci_upper", "hpd_lower",
                       "hpd_upper", "ess", "split_rhat"});
    for (const auto& r : rows) {
      write_csv_row(os, {r.name, f(r.s.mean), f(r.s.median), join_modes(r.s.modes), f(r.s.std_dev),
                         f(r.s.quantile_ci.lower), f(r.s.quantile_ci.upper), f(r.s.hpd.lower), f(r.s.hpd.upper),
                         f(r.ess), std::isfinite(r.rhat) ? f(r.rhat) : std::string("NA")});
    }
  }
  json doc = meta(cfg, "summarize");
  doc["level"] = level;
  doc["draws"] = pooled.size();
  json params;
  for (const auto& r : rows) {
    auto j = summary_json(r.s);
    j["ess"] = r.ess;
    j["split_rhat"] = std::isfinite(r.rhat) ? json(r.rhat) : json(nullptr);
    params[r.name] = j;
  }
  doc["parameters"] = params;
  write_json(cfg.output / "summary.json", doc);

  const int pct = static_cast<int>(std::lround(100.0 * level));
  io.out << "posterior summary (" << pooled.size() << " draws, " << pct << "% intervals)\n";
  io.out << std::left << std::setw(13) << "parameter" << std::right << std::setw(10) << "mean" << std::setw(10)
         << "median" << std::setw(20) << "mode(s)" << std::setw(10) << "st.dev" << std::setw(22) << "CI"
         << std::setw(22) << "HPD" << '\n';
  const auto fixed = [](double v, int prec) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << v;
    return s.str();
  };
  for (const auto& r : rows) {
    std::string modes;
    for (std::size_t i = 0; i < r.s.modes.size() && i < 2; ++i) modes += (i ? "; " : "") + fixed(r.s.modes[i], 3);
    io.out << std::left << std::setw(13) << r.name << std::right << std::setw(10) << fixed(r.s.mean, 4)
           << std::setw(10) << fixed(r.s.median, 4) << std::setw(20) << modes << std::setw(10)
           << fixed(r.s.std_dev, 4) << std::setw(22)
           << "(" + fixed(r.s.quantile_ci.lower, 3) + ", " + fixed(r.s.quantile_ci.upper, 3) + ")" << std::setw(22)
           << "(" + fixed(r.s.hpd.lower, 3) + ", " + fixed(r.s.hpd.upper, 3) + ")" << '\n';
  }
}

namespace {

CycleDecomposition decompose_fit(const RunConfig& cfg, const Fitted& fit, const TimeSeries& y) {
  if (y.size() < 2) throw DataError("the series needs at least two observations");
  return decompose(fit.pooled, y, cfg.analysis.ci_level, cfg.analysis.max_draws);
}

}  // namespace

void cmd_decompose(const RunConfig& cfg, Io& io) {
  const auto fit = load_fit(cfg);
  const auto y = load_series(cfg);
  const auto d = decompose_fit(cfg, fit, y);
  note(io, "decomposed " + std::to_string(d.draws()) + " draws");
  const Band trend = pointwise_band(d.trend, d.level);
  const Band resid = pointwise_band(d.residual, d.level);
  ensure_output(cfg);
  {
    auto os = open_out(cfg.output / "decomposition.csv");
    write_csv_row(os, {"series", "frequency", "t", "lower", "median", "upper"});
    const auto emit = [&](const std::string& series, const std::string& freq, const Band& b) {
      for (std::size_t t = 0; t < d.n; ++t) {
        write_csv_row(os, {series, freq, std::to_string(t + 1), f(b.lower[t]), f(b.median[t]), f(b.upper[t])});
      }
    };
    for (std::size_t j = 0; j < d.k; ++j) emit("component", std::to_string(j + 1), d.component_bands[j]);
    emit("amplitude", "", d.amplitude_band);
    emit("phase", "", d.phase_band);
    emit("trend", "", trend);
    emit("residual", "", resid);
  }
  json doc = meta(cfg, "decompose");
  doc["draws"] = d.draws();
  doc["level"] = d.level;
  doc["n"] = d.n;
  write_json(cfg.output / "decomposition.json", doc);

  const auto t = iota_times(1, d.n);
  std::vector<Panel> panels;
  Panel data("Observed series and trend", "t", "y");
  data.band(t, trend.lower, trend.upper, kGrey, 0.2);
  data.line(t, y.values, "#222222", 1.2);
  data.line(t, trend.median, kGrey, 1.2, true);
  panels.push_back(std::move(data));
  for (std::size_t j = 0; j < d.k; ++j) {
    auto p = band_panel("Component C" + std::to_string(j + 1) + " (lambda" + std::to_string(j + 1) + ")", "C", t,
                        d.component_bands[j], j % 2 == 0 ? kBlue : kRed);
    p.zero_axes();
    panels.push_back(std::move(p));
  }
  panels.push_back(band_panel("Amplitude a + A(t-1)", "amplitude", t, d.amplitude_band, kGreen));
  auto phase = band_panel("Phase shift P(t-1)", "phase", t, d.phase_band, kGreen);
  phase.zero_axes();
  panels.push_back(std::move(phase));
  write_svg(cfg.output / "decomposition.svg", panels, 2);
  io.out << "decomposition of " << d.draws() << " draws written to "
         << (cfg.output / "decomposition.csv").string() << '\n';
}

void cmd_clock(const RunConfig& cfg, Io& io) {
  const auto fit = load_fit(cfg);
  const auto y = load_series(cfg);
  const auto d = decompose_fit(cfg, fit, y);
  const auto& levels = cfg.analysis.ellipse_levels;
  ensure_output(cfg);
  auto os = open_out(cfg.output / "clock.csv");
  write_csv_row(os, {"frequency", "t", "delta_median", "level_median", "prob_expansion", "prob_downturn",
                     "prob_contraction", "prob_recovery", "tie_mass"});
  json doc = meta(cfg, "clock");
  doc["draws"] = d.draws();
  doc["ellipse_levels"] = levels;
  doc["quadrants"] = {"expansion", "downturn", "contraction", "recovery"};
  json freq_json = json::array();
  std::vector<Panel> prob_panels;
  for (std::size_t j = 0; j < d.k; ++j) {
    const auto cs = clock(d, j, levels);
    json ellipses = json::array();
    for (std::size_t i = 0; i < cs.time.size(); ++i) {
      const auto& pr = cs.quadrant_probability[i];
      write_csv_row(os, {std::to_string(j + 1), std::to_string(cs.time[i]), f(cs.delta_median[i]),
                         f(cs.level_median[i]), f(pr[0]), f(pr[1]), f(pr[2]), f(pr[3]), f(cs.tie_mass[i])});
      json at = json::array();
      for (const auto& e : cs.ellipses[i]) {
        at.push_back({{"level", e.level},
                      {"center", {e.center.x(), e.center.y()}},
                      {"shape", {{e.shape(0, 0), e.shape(0, 1)}, {e.shape(1, 0), e.shape(1, 1)}}},
                      {"radius", e.radius}});
      }
      ellipses.push_back({{"t", cs.time[i]}, {"ellipses", at}});
    }
    freq_json.push_back({{"frequency", j + 1}, {"times", ellipses}});

    // Clock panels over consecutive windows of the configured length.
    const auto& windows = cfg.analysis.clock_window_years;
    const double years = windows.empty() ? 4.0 : windows[std::min(j, windows.size() - 1)];
    const std::size_t len = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::lround(years * cfg.data.periods_per_year)));
    std::vector<Panel> panels;
    std::size_t end = cs.time.size();
    while (end > 0) {
      const std::size_t start = end > len ? end - len : 0;
      std::vector<double> xs(cs.delta_median.begin() + static_cast<std::ptrdiff_t>(start),
                             cs.delta_median.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<double> ys(cs.level_median.begin() + static_cast<std::ptrdiff_t>(start),
                             cs.level_median.begin() + static_cast<std::ptrdiff_t>(end));
      Panel p("C" + std::to_string(j + 1) + " clock, t = " + std::to_string(cs.time[start]) + ".." +
                  std::to_string(cs.time[end - 1]),
              "median change", "median level");
      p.zero_axes();
      const auto& last = cs.ellipses[end - 1];
      for (std::size_t l = 0; l < last.size(); ++l) ellipse_outline(p, last[l], "#9aa9c7");
      p.line(xs, ys, kBlue);
      p.points(xs, ys, kBlue, 2.5);
      p.label(xs.front(), ys.front(), std::to_string(cs.time[start]));
      p.label(xs.back(), ys.back(), std::to_string(cs.time[end - 1]));
      panels.push_back(std::move(p));
      if (start == 0) break;
      end = start + 1;  // windows share an end point so the trajectory stays connected
    }
    std::reverse(panels.begin(), panels.end());
    write_svg(cfg.output / ("clock_" + std::to_string(j + 1) + ".svg"), panels, 3, 420.0, 380.0);

    Panel probs("Quadrant probabilities of C" + std::to_string(j + 1), "t", "probability");
    std::vector<double> t(cs.time.begin(), cs.time.end());
    for (int q = 0; q < 4; ++q) {
      std::vector<double> v;
      for (const auto& pr : cs.quadrant_probability) v.push_back(pr[static_cast<std::size_t>(q)]);
      probs.line(t, v, kQuadrantColors[q]);
      probs.legend(kQuadrantNames[q], kQuadrantColors[q]);
    }
    prob_panels.push_back(std::move(probs));
  }
  doc["frequencies"] = freq_json;
  write_json(cfg.output / "ellipses.json", doc);
  write_svg(cfg.output / "quadrants.svg", prob_panels, 1, 900.0, 320.0);
  io.out << "clock series for " << d.k << " frequenc" << (d.k == 1 ? "y" : "ies") << " written to "
         << (cfg.output / "clock.csv").string() << '\n';
}

void cmd_forecast(const RunConfig& cfg, Io& io) {
  const auto fit = load_fit(cfg);
  const auto y = load_series(cfg);
  const auto seed = cfg.sampler.rng_seed;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x666f7265u};
  std::mt19937_64 rng(seq);
  const auto fc = forecast(fit.pooled, y, cfg.analysis.forecast_horizon, cfg.analysis.paths_per_draw, rng,
                           cfg.analysis.ci_level, cfg.analysis.max_draws);
  ensure_output(cfg);
  {
    auto os = open_out(cfg.output / "forecast.csv");
    write_csv_row(os, {"h", "t", "mean", "median", "lower", "upper", "variance"});
    for (std::size_t h = 0; h < fc.mean.size(); ++h) {
      write_csv_row(os, {std::to_string(h + 1), std::to_string(fc.n + h + 1), f(fc.mean[h]), f(fc.median[h]),
                         f(fc.lower[h]), f(fc.upper[h]), f(fc.variance[h])});
    }
  }
  json doc = meta(cfg, "forecast");
  doc["horizon"] = cfg.analysis.forecast_horizon;
  doc["paths_per_draw"] = cfg.analysis.paths_per_draw;
  doc["level"] = fc.level;
  write_json(cfg.output / "forecast.json", doc);

  const std::size_t shown = std::min<std::size_t>(y.size(), 8 * static_cast<std::size_t>(y.periods_per_year));
  const auto t_obs = iota_times(y.size() - shown + 1, shown);
  std::vector<double> y_obs(y.values.end() - static_cast<std::ptrdiff_t>(shown), y.values.end());
  const auto t_fc = iota_times(y.size() + 1, fc.mean.size());
  Panel p("Predictive distribution", "t", "y");
  p.band(t_fc, fc.lower, fc.upper, kBlue, 0.25);
  p.line(t_obs, y_obs, "#222222", 1.4);
  p.line(t_fc, fc.median, kBlue, 1.4);
  p.line(t_fc, fc.mean, kRed, 1.2, true);
  p.legend("observed", "#222222");
  p.legend("median", kBlue);
  p.legend("mean", kRed);
  write_svg(cfg.output / "forecast.svg", {p});
  io.out << "forecast for " << fc.mean.size() << " periods written to " << (cfg.output / "forecast.csv").string()
         << '\n';
}

// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian estimation of multi-frequency stochastic cycles", "stocycle"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t chains = 0;
  bool verbose = false;
  auto* config_opt = app.add_option("--config", config_path, "JSON run configuration")->required();
  config_opt->check(CLI::ExistingFile);
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides the configuration)");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides sampler.seed)");
  auto* chains_opt = app.add_option("--chains", chains, "number of chains (overrides sampler.n_chains)");
  app.add_flag("--verbose,-v", verbose, "progress messages on stderr");

  using Handler = void (*)(const RunConfig&, Io&);
  struct Command {
    const char* name;
    const char* help;
    Handler handler;
    bool needs_data;
  };
  const Command commands[] = {
      {"simulate", "simulate a series from the parameters in the simulate section", cmd_simulate, false},
      {"periodogram", "periodogram and its largest peaks", cmd_periodogram, true},
      {"fit", "run the MCMC sampler", cmd_fit, true},
      {"summarize", "posterior summary table", cmd_summarize, true},
      {"decompose", "cycle components with credible bands", cmd_decompose, true},
      {"clock", "cycle clocks, quadrant probabilities and ellipses", cmd_clock, true},
      {"forecast", "simulation-based predictive distribution", cmd_forecast, true},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.help);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    const Command* chosen = nullptr;
    for (const auto& c : commands) {
      if (app.got_subcommand(c.name)) chosen = &c;
    }
    Overrides ov;
    if (*out_opt) ov.out = fs::path(out_dir);
    if (*seed_opt) ov.seed = seed;
    if (*chains_opt) ov.chains = chains;
    const auto cfg = load_config(config_path, ov, chosen->needs_data);
    Io io{out, err, verbose};
    chosen->handler(cfg, io);
    return 0;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace stocycle::app
