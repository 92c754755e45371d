// trimerlab command-line driver: channels, twobody, bound, fit, scan,
// predict and massratio. Every subcommand resolves its inputs into a
// manifest; outputs are stored in the content-addressed cache under the
// manifest hash and replayed byte-identically on reruns.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "trimerlab/analysis.hpp"
#include "trimerlab/cache.hpp"
#include "trimerlab/csv.hpp"
#include "trimerlab/error.hpp"
#include "trimerlab/hyperangular.hpp"
#include "trimerlab/hyperradial.hpp"
#include "trimerlab/model.hpp"
#include "trimerlab/scan.hpp"
#include "trimerlab/twobody.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trimerlab;

namespace {

enum Exit { kOk = 0, kFailure = 1, kInvalid = 2, kConvergence = 3, kUnsupported = 4 };

struct Common {
  std::string config;
  std::string cache_dir;
  std::string out = ".";
  int threads = 1;
  bool no_cache = false;
};

struct ModelArgs {
  double alpha2 = 0.0;
  double r0 = 1.0;
  std::string cutoff = "sech2";
  std::string sector = "boson-0+";
};

void add_model_options(CLI::App* sub, ModelArgs& m) {
  sub->add_option("--alpha2", m.alpha2, "pair strength alpha^2 (>= -1/4)");
  sub->add_option("--r0", m.r0, "regularization length");
  sub->add_option("--cutoff", m.cutoff, "sech2 | gaussian | constant | none");
  sub->add_option("--sector", m.sector, "boson-0+ | fermion-1+ (or statistics-J<parity>)");
}

SymmetrySector parse_sector(const std::string& s) {
  const auto dash = s.find('-');
  if (dash == std::string::npos || s.size() < dash + 3)
    throw InvalidInput("sector must look like boson-0+ or fermion-1+");
  SymmetrySector sec;
  const std::string stat = s.substr(0, dash);
  if (stat == "boson")
    sec.statistics = Statistics::Boson;
  else if (stat == "fermion")
    sec.statistics = Statistics::Fermion;
  else
    throw InvalidInput("unknown statistics '" + stat + "'");
  const char p = s.back();
  if (p != '+' && p != '-') throw InvalidInput("sector parity must be + or -");
  sec.parity = p == '+' ? 1 : -1;
  try {
    sec.J = std::stoi(s.substr(dash + 1, s.size() - dash - 2));
  } catch (const std::exception&) {
    throw InvalidInput("bad sector J in '" + s + "'");
  }
  return sec;
}

ModelConfig model_config(const ModelArgs& m) {
  ModelConfig cfg;
  cfg.alpha2 = m.alpha2;
  cfg.r0 = m.r0;
  cfg.cutoff = cutoff_from_string(m.cutoff);
  cfg.sector = parse_sector(m.sector);
  cfg.validate();
  return cfg;
}

// Options not given on the command line take their value from the JSON
// config, keyed by long option name.
void apply_config(CLI::App* sub, const json& cfg) {
  for (CLI::Option* opt : sub->get_options()) {
    if (opt->count() > 0) continue;
    const std::string name = opt->get_single_name();
    if (name.empty() || !cfg.contains(name)) continue;
    const json& v = cfg.at(name);
    auto text = [](const json& x) { return x.is_string() ? x.get<std::string>() : x.dump(); };
    if (v.is_array()) {
      for (const json& x : v) opt->add_result(text(x));
    } else {
      opt->add_result(text(v));
    }
    opt->run_callback();
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InvalidInput("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw InvalidInput(p.string() + ": " + e.what());
  }
}

struct Product {
  std::vector<std::pair<std::string, std::string>> files;
  std::string summary;
};

struct Runner {
  const Common& common;

  // Serves `core` from the cache or runs `produce`, then writes outputs and the manifest.
  int run(const std::string& subcommand, json core, const std::function<Product(const std::string&)>& produce) {
    const auto t0 = std::chrono::steady_clock::now();
    core["subcommand"] = subcommand;
    core["software_version"] = kVersion;
    const std::string key = cache_key(core);
    std::optional<Cache> cache;
    if (!common.no_cache) cache.emplace(common.cache_dir.empty() ? Cache::default_root() : fs::path(common.cache_dir));

    Product product;
    bool hit = false;
    if (cache) {
      if (auto index = cache->get(key, "outputs.json")) {
        try {
          const json idx = json::parse(*index);
          Product p;
          for (const auto& name : idx.at("files")) {
            const auto content = cache->get(key, name.get<std::string>());
            if (!content) throw Error("missing cached file");
            p.files.emplace_back(name.get<std::string>(), *content);
          }
          p.summary = idx.at("summary").get<std::string>();
          product = std::move(p);
          hit = true;
        } catch (const std::exception&) {
          hit = false;
        }
      }
    }
    if (!hit) {
      product = produce(key);
      if (cache) {
        json names = json::array();
        for (const auto& [name, content] : product.files) {
          cache->put(key, name, content);
          names.push_back(name);
        }
        cache->put(key, "outputs.json", json{{"files", names}, {"summary", product.summary}}.dump(2) + "\n");
      }
    }

    const fs::path out(common.out);
    json outputs = json::array();
    for (const auto& [name, content] : product.files) {
      write_file_atomic(out / name, content);
      outputs.push_back((out / name).string());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest = core;
    manifest["manifest_hash"] = key;
    manifest["outputs"] = outputs;
    manifest["cache_hit"] = hit;
    manifest["wall_clock_s"] = seconds;
    manifest["threads"] = common.threads;
    write_file_atomic(out / (subcommand + ".manifest.json"), manifest.dump(2) + "\n");
    std::cout << product.summary << (hit ? " [cached]" : "") << "\n";
    return kOk;
  }
};

std::string to_text(const std::function<void(std::ostream&)>& f) {
  std::ostringstream ss;
  f(ss);
  return ss.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(7);
  ss << v;
  return ss.str();
}

// Channel table and its sidecar (same stem, .json).
ChannelTable load_table(const fs::path& csv_path, json* sidecar_out = nullptr) {
  fs::path side = csv_path;
  side.replace_extension(".json");
  const json sidecar = read_json(side);
  std::ifstream in(csv_path);
  if (!in) throw InvalidInput("cannot read " + csv_path.string());
  if (sidecar_out) *sidecar_out = sidecar;
  return read_channel_table(in, sidecar);
}

std::string file_hash(const fs::path& p) { return sha256_hex(read_file(p)); }

TailFit load_fit(const fs::path& p) {
  try {
    return read_json(p).get<TailFit>();
  } catch (const json::exception& e) {
    throw InvalidInput(p.string() + ": " + e.what());
  }
}

ChannelTableOptions table_options(double dlnR, int guard, int threads) {
  ChannelTableOptions o;
  o.dlnR = dlnR;
  o.guard_channels = guard;
  o.threads = threads;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trimerlab: three-body bound states with regularized inverse-square pair potentials"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config, "JSON config; command-line flags override its keys");
  app.add_option("--threads", common.threads, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  app.add_option("--cache-dir", common.cache_dir, "cache root (default $TRIMERLAB_CACHE or ./.trimerlab-cache)");
  app.add_option("--out", common.out, "output directory");
  app.add_flag("--no-cache", common.no_cache, "neither read nor write the cache");

  // channels
  ModelArgs ch_model;
  double ch_rmin = 10, ch_rmax = 1e6, ch_per_decade = 10, ch_dlnR = 0.01;
  int ch_nchan = 1, ch_guard = 2;
  MeshPolicy ch_policy;
  auto* ch = app.add_subcommand("channels", "tabulate U, Q and W = U + Q on a log grid of R");
  add_model_options(ch, ch_model);
  ch->add_option("--rmin", ch_rmin, "smallest R in units of r0");
  ch->add_option("--rmax", ch_rmax, "largest R in units of r0");
  ch->add_option("--per-decade", ch_per_decade, "samples per decade");
  ch->add_option("--nchan", ch_nchan, "channels to tabulate")->check(CLI::PositiveNumber);
  ch->add_option("--guard", ch_guard, "extra eigenpairs for continuation");
  ch->add_option("--dlnR", ch_dlnR, "finite-difference step for Q");
  ch->add_option("--order", ch_policy.order, "finite-element order");
  ch->add_option("--elements-per-decade", ch_policy.elements_per_decade, "corner grading density");

  // twobody
  ModelArgs tb_model;
  int tb_l = 0, tb_nlevels = 6;
  double tb_rmin = 1e-6, tb_rmax = 1e12;
  auto* tb = app.add_subcommand("twobody", "two-body levels of the pair potential");
  add_model_options(tb, tb_model);
  tb->add_option("--l", tb_l, "partial wave")->check(CLI::NonNegativeNumber);
  tb->add_option("--nlevels", tb_nlevels, "levels to find")->check(CLI::PositiveNumber);
  tb->add_option("--rmin", tb_rmin, "inner radius in units of r0");
  tb->add_option("--rmax", tb_rmax, "outer radius in units of r0");

  // bound
  std::string bd_from, bd_tail, bd_splice_tail;
  int bd_channel = 0, bd_nmax = 10;
  double bd_wall = 100, bd_splice_r = 0, bd_tol = 1e-8;
  std::optional<double> bd_threshold;
  auto* bd = app.add_subcommand("bound", "single-channel hyperradial bound states");
  bd->add_option("--from", bd_from, "channels.csv (sidecar .json alongside)");
  bd->add_option("--channel", bd_channel, "channel index");
  bd->add_option("--tail", bd_tail, "fit.json used as the whole potential (no table)");
  bd->add_option("--splice-tail", bd_splice_tail, "fit.json spliced onto the table");
  bd->add_option("--splice-r", bd_splice_r, "splice radius in units of r0 (default: fit window start)");
  bd->add_option("--wall", bd_wall, "hard wall in units of r0 (0: none)");
  bd->add_option("--nmax", bd_nmax, "states to find")->check(CLI::PositiveNumber);
  bd->add_option("--tol", bd_tol, "relative energy tolerance");
  bd->add_option("--threshold", bd_threshold, "threshold energy for a table without a tail");

  // fit
  std::string ft_from, ft_form = "subcritical-log";
  std::vector<std::string> ft_trend;
  int ft_channel = 0;
  double ft_rlo = 0, ft_rhi = 0;
  std::optional<double> ft_E_th;
  auto* ft = app.add_subcommand("fit", "tail fits of a channel, or trend fits of several tail fits");
  ft->add_option("--from", ft_from, "channels.csv (sidecar .json alongside)");
  ft->add_option("--channel", ft_channel, "channel index");
  ft->add_option("--form", ft_form, "subcritical-log | supercritical-threshold | threshold-free | fermion-log");
  ft->add_option("--rlo", ft_rlo, "window start in units of r0");
  ft->add_option("--rhi", ft_rhi, "window end in units of r0");
  ft->add_option("--E-th", ft_E_th, "threshold for supercritical-threshold (default: two-body E_00)");
  ft->add_option("--trend", ft_trend, "subcritical fit.json files to fit beta(alpha^2), delta(alpha^2)");

  // scan
  ModelArgs sc_model;
  std::vector<double> sc_list;
  double sc_from = -0.05, sc_to = 0.2, sc_step = 0.01;
  ScanOptions sc_opts;
  auto* sc = app.add_subcommand("scan", "lowest energies as a function of alpha^2");
  add_model_options(sc, sc_model);
  sc->add_option("--alpha2-list", sc_list, "explicit ascending alpha^2 values");
  sc->add_option("--alpha2-from", sc_from, "first alpha^2");
  sc->add_option("--alpha2-to", sc_to, "last alpha^2");
  sc->add_option("--alpha2-step", sc_step, "alpha^2 step")->check(CLI::PositiveNumber);
  sc->add_option("--wall", sc_opts.wall, "hard wall in units of r0");
  sc->add_option("--nstates", sc_opts.n_states, "states per alpha^2")->check(CLI::PositiveNumber);
  sc->add_option("--per-decade", sc_opts.per_decade, "table samples per decade");
  sc->add_option("--rcap", sc_opts.R_cap, "largest tabulated R in units of r0");
  sc->add_option("--rmax-subcritical", sc_opts.subcritical_R_max, "table end for alpha^2 <= 0, units of r0");

  // predict
  std::string pr_fit, pr_bound;
  double pr_beta = 0, pr_R0 = 0, pr_E0 = 0, pr_r0 = 1;
  int pr_nmax = 20;
  auto* pr = app.add_subcommand("predict", "log-tail spectrum law from beta and the ground state");
  pr->add_option("--fit", pr_fit, "subcritical fit.json supplying beta and r0");
  pr->add_option("--bound", pr_bound, "bound.json supplying E_0 and <R>_0");
  pr->add_option("--beta", pr_beta, "beta");
  pr->add_option("--r-mean0", pr_R0, "<R>_0 of the ground state");
  pr->add_option("--E0", pr_E0, "ground-state energy");
  pr->add_option("--r0", pr_r0, "regularization length");
  pr->add_option("--nmax", pr_nmax, "states to predict")->check(CLI::PositiveNumber);

  // massratio
  std::optional<double> mr_alpha2, mr_ratio;
  auto* mr = app.add_subcommand("massratio", "heavy-light mass ratio equivalent to alpha^2 (and inverse)");
  mr->add_option("--alpha2", mr_alpha2, "alpha^2 in (0, 2]");
  mr->add_option("--mass-ratio", mr_ratio, "M/m, inverse map");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::Success& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      app.exit(e);
      return kInvalid;
    }
    if (!common.config.empty()) {
      const json cfg = read_json(common.config);
      if (!cfg.is_object()) throw InvalidInput("config must be a JSON object");
      for (CLI::App* sub : app.get_subcommands()) apply_config(sub, cfg);
    }
    if (!common.out.empty()) fs::create_directories(common.out);
    Runner runner{common};

    if (ch->parsed()) {
      const ModelConfig cfg = model_config(ch_model);
      const auto grid = log_grid(ch_rmin * cfg.r0, ch_rmax * cfg.r0, ch_per_decade);
      const ChannelTableOptions opts = table_options(ch_dlnR, ch_guard, common.threads);
      json core{{"config", cfg}, {"table", channel_table_inputs(cfg, grid, ch_nchan, ch_policy, opts)}};
      return runner.run("channels", core, [&](const std::string& key) {
        std::optional<Cache> cache;
        if (!common.no_cache) cache.emplace(common.cache_dir.empty() ? Cache::default_root() : fs::path(common.cache_dir));
        const ChannelTable t = cached_channel_table(cache ? &*cache : nullptr, cfg, grid, ch_nchan, ch_policy, opts);
        json side = sidecar(t);
        side["manifest_hash"] = key;
        std::size_t imin = 0;
        for (std::size_t i = 1; i < t.R.size(); ++i)
          if (t.W[0][i] < t.W[0][imin]) imin = i;
        return Product{{{"channels.csv", to_text([&](std::ostream& os) { write_csv(os, t); })},
                        {"channels.json", dump(side)}},
                       "channels: " + std::to_string(t.R.size()) + " samples x " + std::to_string(t.n_channels()) +
                           " channels, R in [" + fmt(t.R_min()) + ", " + fmt(t.R_max()) + "], min W_0 = " +
                           fmt(t.W[0][imin]) + " at R = " + fmt(t.R[imin])};
      });
    }

    if (tb->parsed()) {
      const ModelConfig cfg = model_config(tb_model);
      const RadialDomain domain{tb_rmin * cfg.r0, tb_rmax * cfg.r0};
      json core{{"config", cfg}, {"l", tb_l}, {"nlevels", tb_nlevels}, {"domain", {domain.r_min, domain.r_max}}};
      return runner.run("twobody", core, [&](const std::string& key) {
        const TwoBodyLevels lv = solve_two_body(cfg, tb_l, tb_nlevels, domain);
        json side = sidecar(lv);
        side["manifest_hash"] = key;
        std::string summary = "twobody: " + std::to_string(lv.levels.size()) + " levels";
        if (!lv.levels.empty()) summary += ", E_0 = " + fmt(lv.levels.front().E);
        return Product{{{"twobody.csv", to_text([&](std::ostream& os) { write_csv(os, lv); })},
                        {"twobody.json", dump(side)}},
                       summary};
      });
    }

    if (bd->parsed()) {
      if (bd_from.empty() == bd_tail.empty()) throw InvalidInput("bound needs exactly one of --from or --tail");
      json core{{"channel", bd_channel}, {"wall", bd_wall}, {"nmax", bd_nmax}, {"tol", bd_tol},
                {"splice_r", bd_splice_r}};
      core["threshold"] = bd_threshold ? json(*bd_threshold) : json(nullptr);
      if (!bd_from.empty()) core["from_hash"] = file_hash(bd_from);
      if (!bd_tail.empty()) core["tail_hash"] = file_hash(bd_tail);
      if (!bd_splice_tail.empty()) core["splice_tail_hash"] = file_hash(bd_splice_tail);
      return runner.run("bound", core, [&](const std::string& key) {
        std::optional<PotentialSource> src;
        double r0 = 1.0;
        if (!bd_tail.empty()) {
          const TailFit fit = load_fit(bd_tail);
          r0 = fit.r0;
          src = PotentialSource::model(model_tail(fit));
        } else {
          const ChannelTable t = load_table(bd_from);
          r0 = t.cfg.r0;
          src = PotentialSource::table(t, bd_channel, bd_threshold.value_or(0.0));
          if (!bd_splice_tail.empty()) {
            const TailFit fit = load_fit(bd_splice_tail);
            const double R_splice = bd_splice_r > 0 ? bd_splice_r * r0 : fit.window.R_lo;
            ModelTail tail = model_tail(fit);
            if (bd_threshold && tail.form != TailForm::SupercriticalThreshold) tail.E_th = *bd_threshold;
            src = src->with_tail(tail, R_splice);
          }
        }
        if (bd_wall > 0) src = src->with_wall(bd_wall * r0);
        BoundStateOptions opts;
        opts.tolerance = bd_tol;
        const BoundStateSet set = solve_bound_states(*src, bd_nmax, opts);
        json states = json::array();
        for (const BoundState& s : set.states)
          states.push_back({{"n", s.n}, {"E", s.E}, {"E_rel", s.E_rel}, {"R_mean", s.R_mean}, {"nodes", s.nodes}});
        json side{{"source", set.source}, {"states", states}, {"truncated", set.truncated},
                  {"tolerance", bd_tol}, {"manifest_hash", key}};
        std::string summary = "bound: " + std::to_string(set.states.size()) + " states";
        if (!set.states.empty())
          summary += ", E_0 = " + fmt(set.states.front().E) + ", E_last = " + fmt(set.states.back().E);
        if (set.truncated) summary += " (truncated)";
        return Product{{{"bound.csv", to_text([&](std::ostream& os) { write_csv(os, set); })},
                        {"bound.json", dump(side)}},
                       summary};
      });
    }

    if (ft->parsed() && !ft_trend.empty()) {
      json hashes = json::array();
      for (const auto& f : ft_trend) hashes.push_back(file_hash(f));
      return runner.run("trend", json{{"fit_hashes", hashes}}, [&](const std::string& key) {
        std::vector<TrendPoint> pts;
        for (const auto& f : ft_trend) {
          const json j = read_json(f);
          const TailFit fit = j.get<TailFit>();
          if (fit.form != "subcritical-log") throw InvalidInput(f + " is not a subcritical-log fit");
          if (!j.contains("config")) throw InvalidInput(f + " has no config (alpha^2 unknown)");
          TrendPoint p;
          p.alpha2 = j.at("config").get<ModelConfig>().alpha2;
          p.beta = fit.param("beta");
          p.delta = fit.param("delta");
          p.sigma_beta = fit.sigma("beta");
          p.sigma_delta = fit.sigma("delta");
          pts.push_back(p);
        }
        const TrendFit trend = fit_parameter_trends(pts);
        json j = trend;
        j["manifest_hash"] = key;
        std::string summary = "trend: " + std::to_string(pts.size()) + " points, alpha_c^2 = " +
                              (trend.alpha_c2 ? fmt(*trend.alpha_c2) : std::string("undefined"));
        return Product{{{"trend.json", dump(j)}}, summary};
      });
    }

    if (ft->parsed()) {
      if (ft_from.empty()) throw InvalidInput("fit needs --from channels.csv or --trend");
      json core{{"from_hash", file_hash(ft_from)}, {"channel", ft_channel}, {"form", ft_form},
                {"rlo", ft_rlo}, {"rhi", ft_rhi}};
      core["E_th"] = ft_E_th ? json(*ft_E_th) : json(nullptr);
      return runner.run("fit", core, [&](const std::string& key) {
        const ChannelTable t = load_table(ft_from);
        if (ft_channel < 0 || ft_channel >= t.n_channels()) throw InvalidInput("channel index out of range");
        const ModelConfig& cfg = t.cfg;
        const std::vector<double>& W = t.W[ft_channel];
        std::optional<FitWindow> window;
        if (ft_rlo > 0 && ft_rhi > 0) window = FitWindow{ft_rlo * cfg.r0, ft_rhi * cfg.r0};
        TailFit fit;
        if (ft_form == "subcritical-log") {
          if (!window) window = subcritical_window(t.R, W);
          if (!window) throw FitError("W has no negative stretch of at least a decade; give --rlo/--rhi");
          fit = fit_subcritical_tail(t.R, W, *window, cfg.r0);
        } else if (ft_form == "supercritical-threshold" || ft_form == "threshold-free") {
          std::optional<TwoBodyLevel> dimer;
          if (!window || (ft_form == "supercritical-threshold" && !ft_E_th)) dimer = lowest_dimer(cfg, 0);
          if (!window) {
            if (!dimer) throw PreconditionError("no dimer: give --rlo/--rhi");
            window = FitWindow{10 * dimer->r_mean, 40 * dimer->r_mean};
          }
          if (ft_form == "threshold-free") {
            fit = fit_threshold_free(t.R, W, *window);
          } else {
            if (!ft_E_th && !dimer) throw PreconditionError("no dimer threshold: give --E-th");
            fit = fit_threshold_tail(t.R, W, ft_E_th ? *ft_E_th : dimer->E, *window);
          }
        } else if (ft_form == "fermion-log") {
          if (!window) throw InvalidInput("fermion-log needs --rlo and --rhi");
          fit = fit_fermion_tail(t.R, W, *window, cfg.r0);
        } else {
          throw InvalidInput("unknown fit form '" + ft_form + "'");
        }
        fit.source_hash = core.at("from_hash").get<std::string>();
        json j = fit;
        j["config"] = cfg;
        j["channel"] = ft_channel;
        j["manifest_hash"] = key;
        std::string summary = "fit " + fit.form + ":";
        for (const auto& [name, value] : fit.params)
          summary += " " + name + " = " + fmt(value) + " +/- " + fmt(fit.sigma(name));
        summary += ", R^2 = " + fmt(fit.r_squared);
        return Product{{{"fit.json", dump(j)}}, summary};
      });
    }

    if (sc->parsed()) {
      const ModelConfig cfg = model_config(sc_model);
      std::vector<double> alpha2 = sc_list;
      if (alpha2.empty()) {
        const int n = static_cast<int>(std::floor((sc_to - sc_from) / sc_step + 1e-9));
        if (n < 0) throw InvalidInput("--alpha2-to must not be below --alpha2-from");
        // Rounded to the step's decimal grid so that 0 is hit exactly.
        for (int i = 0; i <= n; ++i) alpha2.push_back(std::round((sc_from + i * sc_step) * 1e12) / 1e12);
      }
      sc_opts.table.threads = common.threads;
      json core{{"config", cfg},
                {"alpha2", alpha2},
                {"wall", sc_opts.wall},
                {"n_states", sc_opts.n_states},
                {"per_decade", sc_opts.per_decade},
                {"R_cap", sc_opts.R_cap},
                {"subcritical_R_max", sc_opts.subcritical_R_max},
                {"threshold_window", {sc_opts.threshold_window_lo, sc_opts.threshold_window_hi}},
                {"mesh_policy", sc_opts.policy},
                {"dlnR", sc_opts.table.dlnR}};
      return runner.run("scan", core, [&](const std::string& key) {
        std::optional<Cache> cache;
        if (!common.no_cache) cache.emplace(common.cache_dir.empty() ? Cache::default_root() : fs::path(common.cache_dir));
        const TableProvider provider = [&](const ModelConfig& c, const std::vector<double>& grid, int n) {
          return cached_channel_table(cache ? &*cache : nullptr, c, grid, n, sc_opts.policy, sc_opts.table);
        };
        const auto rows = spectrum_scan(cfg, alpha2, sc_opts, provider);
        int failed = 0;
        for (const auto& r : rows) failed += r.error.empty() ? 0 : 1;
        json j{{"rows", to_json(rows)}, {"manifest_hash", key}};
        return Product{{{"scan.csv", to_text([&](std::ostream& os) { write_csv(os, rows); })},
                        {"scan.json", dump(j)}},
                       "scan: " + std::to_string(rows.size()) + " alpha^2 values, " + std::to_string(failed) +
                           " failed"};
      });
    }

    if (pr->parsed()) {
      json core{{"beta", pr_beta}, {"r_mean0", pr_R0}, {"E0", pr_E0}, {"r0", pr_r0}, {"nmax", pr_nmax}};
      if (!pr_fit.empty()) core["fit_hash"] = file_hash(pr_fit);
      if (!pr_bound.empty()) core["bound_hash"] = file_hash(pr_bound);
      return runner.run("predict", core, [&](const std::string& key) {
        double beta = pr_beta, R0 = pr_R0, E0 = pr_E0, r0 = pr_r0;
        if (!pr_fit.empty()) {
          const TailFit fit = load_fit(pr_fit);
          if (fit.form != "subcritical-log") throw InvalidInput("predict needs a subcritical-log fit");
          beta = fit.param("beta");
          r0 = fit.r0;
        }
        if (!pr_bound.empty()) {
          const json b = read_json(pr_bound);
          if (b.at("states").empty()) throw InvalidInput(pr_bound + " holds no states");
          E0 = b.at("states").at(0).at("E").get<double>();
          R0 = b.at("states").at(0).at("R_mean").get<double>();
        }
        const SpectrumPrediction p = predict_spectrum(beta, R0, E0, pr_nmax, r0);
        json j = p;
        j["manifest_hash"] = key;
        return Product{{{"prediction.json", dump(j)}},
                       "predict: " + std::to_string(p.E.size()) + " levels, E_last = " + fmt(p.E.back()) +
                           (p.truncated ? " (truncated)" : "")};
      });
    }

    if (mr->parsed()) {
      if (mr_alpha2.has_value() == mr_ratio.has_value())
        throw InvalidInput("massratio needs exactly one of --alpha2 or --mass-ratio");
      if (mr_alpha2 && !(*mr_alpha2 > 0 && *mr_alpha2 <= 2.0)) throw InvalidInput("--alpha2 must lie in (0, 2]");
      if (mr_ratio && !(*mr_ratio > 0)) throw InvalidInput("--mass-ratio must be positive");
      json core{{"alpha2", mr_alpha2 ? json(*mr_alpha2) : json(nullptr)},
                {"mass_ratio", mr_ratio ? json(*mr_ratio) : json(nullptr)}};
      return runner.run("massratio", core, [&](const std::string& key) {
        const double a2 = mr_alpha2 ? *mr_alpha2 : alpha2_from_mass_ratio(*mr_ratio);
        const double M = mr_ratio ? *mr_ratio : mass_ratio_map(*mr_alpha2);
        json j{{"alpha2", a2}, {"mass_ratio", M}, {"critical_mass_ratio", critical_mass_ratio()},
               {"manifest_hash", key}};
        const std::string summary = mr_alpha2 ? "massratio: M/m = " + fmt(M) : "massratio: alpha^2 = " + fmt(a2);
        return Product{{{"massratio.json", dump(j)}}, summary};
      });
    }
    return kInvalid;
  } catch (const UnsupportedSector& e) {
    std::cerr << "unsupported sector: " << e.what() << "\n";
    return kUnsupported;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const json::exception& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kInvalid;
  } catch (const CLI::Error& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kInvalid;
  } catch (const Error& e) {
    const bool convergence = dynamic_cast<const ConvergenceError*>(&e) || dynamic_cast<const RelabelingError*>(&e) ||
                             dynamic_cast<const MeshResolutionError*>(&e);
    if (!convergence) {
      std::cerr << "error: " << e.what() << "\n";
      return kFailure;
    }
    json diag{{"error", e.what()}};
    if (auto* r = dynamic_cast<const RelabelingError*>(&e)) diag["relabeling"] = {{"R", r->R()}, {"overlap", r->overlap()}};
    diag["kind"] = dynamic_cast<const ConvergenceError*>(&e)     ? "convergence"
                   : dynamic_cast<const RelabelingError*>(&e) ? "relabeling"
                                                              : "mesh-resolution";
    try {
      write_file_atomic(fs::path(common.out) / "diagnostics.json", dump(diag));
    } catch (const std::exception&) {
    }
    std::cerr << "convergence failure: " << e.what() << " (diagnostics.json written)\n";
    return kConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
