#include "finer/run.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "finer/checkpoint.hpp"
#include "finer/csv.hpp"
#include "finer/image.hpp"
#include "finer/metrics.hpp"
#include "finer/ntk.hpp"

namespace finer {

namespace {

using nlohmann::json;

constexpr std::pair<Task, std::string_view> kTaskNames[] = {
    {Task::FitImage, "fit-image"}, {Task::FitSdf, "fit-sdf"}, {Task::FitSignal, "fit-signal"},
    {Task::NtkSweep, "ntk-sweep"}, {Task::Stream, "stream"},   {Task::Gap, "gap"},
    {Task::Curves, "curves"},      {Task::NeuronFreq, "neuron-freq"},
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string image_ext(const ImageGrid& img) { return img.channels == 3 ? ".ppm" : ".pgm"; }

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw std::invalid_argument("bad number '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty number list");
  return out;
}

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
void read_opt(const json& j, std::optional<T>& out) {
  if (j.is_null())
    out.reset();
  else
    out = j.get<T>();
}

// fit-signal input: "x,y" rows after a header line.
void read_signal_csv(const std::string& path, std::vector<double>& x, std::vector<double>& y) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto vals = parse_number_list(line);
    if (vals.size() != 2) throw std::runtime_error(path + ": line " + std::to_string(lineno) + " needs x,y");
    x.push_back(vals[0]);
    y.push_back(vals[1]);
  }
  if (x.empty()) throw std::runtime_error(path + ": no samples");
}

void run_fit_image(const RunConfig& c, const std::filesystem::path& out) {
  const ImageGrid img = load_image(c.input);
  const auto r = fit_image(img, c.activation_spec(), c.init_scheme(), c.train_config(), c.architecture());
  write_text(out / "log.csv", log_csv(r.log));
  write_text(out / "metrics.csv", CsvBuilder({"psnr", "ssim"}).row({r.psnr, r.ssim}).str());
  save_checkpoint(r.net, out / "checkpoint.json");
  save_image(r.reconstruction, out / ("reconstruction" + image_ext(r.reconstruction)));
}

void run_fit_sdf(const RunConfig& c, const std::filesystem::path& out) {
  const auto sdf = parse_sdf(c.sdf);
  const auto r = fit_sdf(sdf, c.activation_spec(), c.init_scheme(), c.train_config(), c.architecture(), c.n_train,
                         c.eval_grid);
  write_text(out / "log.csv", log_csv(r.log));
  write_text(out / "metrics.csv", CsvBuilder({"sign_iou", "mae"}).row({r.sign_iou, r.mae}).str());
  save_checkpoint(r.net, out / "checkpoint.json");
}

void run_fit_signal(const RunConfig& c, const std::filesystem::path& out) {
  std::vector<double> x, y;
  if (!c.input.empty()) {
    read_signal_csv(c.input, x, y);
  } else {
    const std::size_t n = *c.n;
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back(n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1));
      y.push_back(std::sin(2.0 * std::numbers::pi * x.back()));
    }
  }
  const auto r = fit_signal(x, y, c.activation_spec(), c.init_scheme(), c.train_config(), c.architecture());
  const Matrix pred = forward(r.net, Matrix(x.size(), 1, Vector(x.begin(), x.end())));
  CsvBuilder csv({"x", "target", "prediction"});
  for (std::size_t i = 0; i < x.size(); ++i) csv.row({x[i], y[i], pred(i, 0)});
  write_text(out / "prediction.csv", csv.str());
  write_text(out / "log.csv", log_csv(r.log));
  write_text(out / "metrics.csv", CsvBuilder({"mse"}).row({r.mse}).str());
  save_checkpoint(r.net, out / "checkpoint.json");
}

void run_ntk_sweep(const RunConfig& c, const std::filesystem::path& out) {
  const Matrix probes = ntk_probe_grid(c.probes);
  const auto reports = ntk_sweep(c.architecture().dims(1, 1), c.activation_spec(), c.init_scheme(), c.k_list, probes,
                                 c.samples, c.seed);
  write_text(out / "sweep.csv", sweep_summary_csv(reports));
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const std::string tag = std::to_string(i);
    write_text(out / ("kernel_" + tag + ".csv"), kernel_csv(reports[i].kernel));
    write_text(out / ("eigenvalues_" + tag + ".csv"), eigenvalues_csv(reports[i].eigenvalues));
  }
}

void run_stream(const RunConfig& c, const std::filesystem::path& out) {
  const ImageGrid img = load_image(c.input);
  const auto r = stream_image(img, c.activation_spec(), c.init_scheme(), c.train_config(), *c.layers, c.stage_plan());
  CsvBuilder summary({"stage", "width", "psnr"});
  for (std::size_t s = 0; s < r.stream.stages.size(); ++s) {
    const auto& st = r.stream.stages[s];
    summary.row(static_cast<long long>(s + 1), {static_cast<double>(st.width), r.stage_psnr[s]});
    write_text(out / ("log_stage" + std::to_string(s + 1) + ".csv"), log_csv(st.log));
    const auto& rec = r.stage_reconstructions[s];
    save_image(rec, out / ("reconstruction_w" + std::to_string(st.width) + image_ext(rec)));
  }
  write_text(out / "stages.csv", summary.str());
  save_checkpoint(r.stream.net, out / "checkpoint.json");
}

void run_gap(const RunConfig& c, const std::filesystem::path& out) {
  const ImageGrid img = load_image(c.input);
  const auto g = gap_experiment(c.activation_spec(), img, c.init_scheme(), c.train_config(), c.architecture());
  write_text(out / "log_standard.csv", log_csv(g.standard.log));
  write_text(out / "log_scaled_init.csv", log_csv(g.scaled_init.log));
  write_text(out / "gap.csv",
             CsvBuilder({"p", "psnr_standard", "psnr_scaled_init", "ssim_standard", "ssim_scaled_init", "gap_db"})
                 .row({g.p, g.standard.psnr, g.scaled_init.psnr, g.standard.ssim, g.scaled_init.ssim,
                       g.standard.psnr - g.scaled_init.psnr})
                 .str());
  save_checkpoint(g.standard.net, out / "checkpoint_standard.json");
  save_checkpoint(g.scaled_init.net, out / "checkpoint_scaled_init.json");
}

void run_curves(const RunConfig& c, const std::filesystem::path& out) {
  const auto curve = sample_curve(c.activation_spec(), c.range_lo, c.range_hi, *c.n);
  write_text(out / "curve.csv", curve_csv(curve));
}

void run_neuron_freq(const RunConfig& c, const std::filesystem::path& out) {
  NetworkState net;
  if (!c.input.empty()) {
    net = load_checkpoint(c.input);
  } else {
    Rng rng = Rng::child(c.seed, 0);
    net = init_network(c.architecture().dims(2, 3), c.activation_spec(), c.init_scheme(), rng);
    save_checkpoint(net, out / "checkpoint.json");
  }
  const auto freqs = neuron_dominant_freq(net, c.axis, *c.n);
  std::size_t dc = 0;
  for (const auto& f : freqs) dc += !f.has_value();
  write_text(out / "neuron_freq.csv", neuron_freq_csv(freqs));
  write_text(out / "summary.csv", CsvBuilder({"axis", "spread", "dc_neurons"})
                                      .row({static_cast<double>(c.axis), static_cast<double>(frequency_spread(freqs)),
                                            static_cast<double>(dc)})
                                      .str());
}

std::size_t input_dim(Task t) {
  switch (t) {
    case Task::FitSdf: return 3;
    case Task::FitSignal:
    case Task::NtkSweep:
    case Task::Curves: return 1;
    default: return 2;
  }
}

}  // namespace

std::string_view to_string(Task t) {
  for (const auto& [task, name] : kTaskNames)
    if (task == t) return name;
  return "?";
}

Task parse_task(std::string_view name) {
  for (const auto& [task, n] : kTaskNames)
    if (n == name) return task;
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

RunConfig RunConfig::resolved() const {
  RunConfig r = *this;
  const bool ntk = task == Task::NtkSweep;
  if (!r.finer) r.finer = ntk;
  if (!r.omega0) r.omega0 = ntk ? 1.0 : 30.0;
  if (!r.layers) r.layers = ntk ? 1 : 3;
  const Backbone b = parse_backbone(activation);
  if (!r.k) r.k = task == Task::FitSdf ? sdf_default_k(b) : image_default_k(b);
  InitScheme base;
  base.k_bias = *r.k;
  base.weight_rule = r.weight_rule ? parse_weight_rule(*r.weight_rule) : default_weight_rule(b);
  const InitScheme p = preset_scheme(init, base, r.activation_spec(), input_dim(task), width);
  if (!r.weight_rule) r.weight_rule = std::string(to_string(p.weight_rule));
  if (!r.deep_gain) r.deep_gain = p.deep_weight_gain;
  if (!r.deep_k) r.deep_k = p.deep_k_bias.value_or(*r.k);
  if (!r.first_bound) r.first_bound = p.first_weight_bound;
  if (!r.n) r.n = task == Task::Curves ? 4001 : 1024;
  return r;
}

ActivationSpec RunConfig::activation_spec() const {
  ActivationSpec a;
  a.backbone = parse_backbone(activation);
  a.finer = finer.value();
  a.omega0 = omega0.value();
  a.s0 = s0;
  a.omega_f = omegaf;
  return a;
}

InitScheme RunConfig::init_scheme() const {
  InitScheme s;
  s.weight_rule = parse_weight_rule(weight_rule.value());
  s.k_bias = k.value();
  s.first_weight_bound = first_bound;
  s.deep_weight_gain = deep_gain.value();
  s.deep_k_bias = deep_k.value();
  return s;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.lr = lr;
  t.iterations = iters;
  t.batch_size = batch;
  t.seed = seed;
  t.log_every = log_every;
  t.lr_final_fraction = lr_final;
  return t;
}

std::vector<StagePlan> RunConfig::stage_plan() const {
  std::vector<StagePlan> plan;
  std::stringstream ss(stages);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("stages: expected width:iters, got '" + item + "'");
    try {
      std::size_t a = 0, b = 0;
      const std::string w = item.substr(0, colon), it = item.substr(colon + 1);
      const unsigned long width_v = std::stoul(w, &a), iters_v = std::stoul(it, &b);
      if (a != w.size() || b != it.size()) throw std::invalid_argument("");
      plan.push_back({width_v, iters_v, plan.empty() ? std::nullopt : std::optional<BiasRing>(BiasRing{})});
    } catch (const std::exception&) {
      throw std::invalid_argument("stages: bad entry '" + item + "'");
    }
  }
  if (plan.empty()) throw std::invalid_argument("stages: empty plan");
  return plan;
}

void RunConfig::validate() const {
  activation_spec().validate();
  init_scheme().validate();
  train_config().validate();
  if (*layers == 0 || width == 0) throw std::invalid_argument("layers and width must be positive");
  if (range_lo >= range_hi) throw std::invalid_argument("range: lo must be below hi");
  const bool needs_input = task == Task::FitImage || task == Task::Stream || task == Task::Gap;
  if (needs_input && input.empty()) throw std::invalid_argument(std::string(to_string(task)) + " needs --input");
  if (task == Task::FitSdf) parse_sdf(sdf);
  if (task == Task::Stream) stage_plan();
  if (task == Task::NtkSweep && k_list.empty()) throw std::invalid_argument("k-list is empty");
}

std::string config_json(const RunConfig& c) {
  json j;
  j["task"] = std::string(to_string(c.task));
  j["activation"] = c.activation;
  j["finer"] = opt_json(c.finer);
  j["omega0"] = opt_json(c.omega0);
  j["s0"] = c.s0;
  j["omegaf"] = c.omegaf;
  j["k"] = opt_json(c.k);
  j["weight-rule"] = opt_json(c.weight_rule);
  j["init"] = std::string(to_string(c.init));
  j["first-bound"] = opt_json(c.first_bound);
  j["deep-gain"] = opt_json(c.deep_gain);
  j["deep-k"] = opt_json(c.deep_k);
  j["layers"] = opt_json(c.layers);
  j["width"] = c.width;
  j["iters"] = c.iters;
  j["lr"] = c.lr;
  j["batch"] = c.batch;
  j["seed"] = c.seed;
  j["log-every"] = c.log_every;
  j["lr-final"] = c.lr_final;
  j["input"] = c.input;
  j["outdir"] = c.outdir;
  j["k-list"] = c.k_list;
  j["stages"] = c.stages;
  j["eval-grid"] = c.eval_grid;
  j["sdf"] = c.sdf;
  j["n-train"] = c.n_train;
  j["probes"] = c.probes;
  j["samples"] = c.samples;
  j["range"] = {c.range_lo, c.range_hi};
  j["n"] = opt_json(c.n);
  j["axis"] = c.axis;
  return j.dump(2) + "\n";
}

RunConfig apply_config_json(RunConfig c, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "task") c.task = parse_task(v.get<std::string>());
      else if (key == "activation") c.activation = v.get<std::string>();
      else if (key == "finer") read_opt(v, c.finer);
      else if (key == "omega0") read_opt(v, c.omega0);
      else if (key == "s0") c.s0 = v.get<double>();
      else if (key == "omegaf") c.omegaf = v.get<double>();
      else if (key == "k") read_opt(v, c.k);
      else if (key == "weight-rule") read_opt(v, c.weight_rule);
      else if (key == "init") c.init = parse_init_preset(v.get<std::string>());
      else if (key == "first-bound") read_opt(v, c.first_bound);
      else if (key == "deep-gain") read_opt(v, c.deep_gain);
      else if (key == "deep-k") read_opt(v, c.deep_k);
      else if (key == "layers") read_opt(v, c.layers);
      else if (key == "width") c.width = v.get<std::size_t>();
      else if (key == "iters") c.iters = v.get<std::size_t>();
      else if (key == "lr") c.lr = v.get<double>();
      else if (key == "batch") c.batch = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "log-every") c.log_every = v.get<std::size_t>();
      else if (key == "lr-final") c.lr_final = v.get<double>();
      else if (key == "input") c.input = v.get<std::string>();
      else if (key == "outdir") c.outdir = v.get<std::string>();
      else if (key == "k-list") c.k_list = v.get<std::vector<double>>();
      else if (key == "stages") c.stages = v.get<std::string>();
      else if (key == "eval-grid") c.eval_grid = v.get<std::size_t>();
      else if (key == "sdf") c.sdf = v.get<std::string>();
      else if (key == "n-train") c.n_train = v.get<std::size_t>();
      else if (key == "probes") c.probes = v.get<std::size_t>();
      else if (key == "samples") c.samples = v.get<std::size_t>();
      else if (key == "range") {
        const auto r = v.get<std::vector<double>>();
        if (r.size() != 2) throw std::invalid_argument("needs two numbers");
        c.range_lo = r[0];
        c.range_hi = r[1];
      } else if (key == "n") read_opt(v, c.n);
      else if (key == "axis") c.axis = v.get<std::size_t>();
      else throw std::invalid_argument("unknown key");
    } catch (const json::exception& e) {
      throw std::invalid_argument("config: key '" + key + "': " + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config: key '" + key + "': " + e.what());
    }
  }
  return c;
}

std::optional<RunConfig> parse_command_line(int argc, const char* const* argv, std::string* help_text) {
  RunConfig c;
  // the config file is applied first so that flags override it
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    std::string path;
    if (a == "--config" && i + 1 < argc) path = argv[i + 1];
    else if (a.rfind("--config=", 0) == 0) path = a.substr(9);
    if (!path.empty()) c = apply_config_json(c, read_text(path));
  }

  CLI::App app{"Coordinate-MLP experiments with variable-periodic activations", "finer"};
  std::string config_path, task = std::string(to_string(c.task)), init = std::string(to_string(c.init)), k_text;
  std::vector<double> range;
  app.add_option("--config", config_path, "JSON file with flag-named keys; flags override it");
  app.add_option("--task", task, "fit-image|fit-sdf|fit-signal|ntk-sweep|stream|gap|curves|neuron-freq");
  app.add_option("--activation", c.activation, "sine|gauss|wavelet");
  app.add_flag_function(
      "--finer,!--no-finer", [&](std::int64_t n) { c.finer = n > 0; }, "variable-periodic extension");
  app.add_option_function<double>("--omega0", [&](const double& v) { c.omega0 = v; });
  app.add_option("--s0", c.s0);
  app.add_option("--omegaf", c.omegaf);
  app.add_option("--k", k_text, "bias range; for ntk-sweep a comma list like --k-list");
  app.add_option_function<std::string>("--weight-rule", [&](const std::string& v) { c.weight_rule = v; },
                                       "siren|xavier");
  app.add_option("--init", init, "literal|reference");
  app.add_option_function<double>("--first-bound", [&](const double& v) { c.first_bound = v; });
  app.add_option_function<double>("--deep-gain", [&](const double& v) { c.deep_gain = v; });
  app.add_option_function<double>("--deep-k", [&](const double& v) { c.deep_k = v; });
  app.add_option_function<std::size_t>("--layers", [&](const std::size_t& v) { c.layers = v; }, "hidden layers");
  app.add_option("--width", c.width);
  app.add_option("--iters", c.iters);
  app.add_option("--lr", c.lr);
  app.add_option("--batch", c.batch, "0 = full batch");
  app.add_option("--seed", c.seed);
  app.add_option("--log-every", c.log_every);
  app.add_option("--lr-final", c.lr_final, "final lr as a fraction of --lr");
  app.add_option("--input", c.input);
  app.add_option("--outdir", c.outdir);
  app.add_option_function<std::string>("--k-list", [&](const std::string& v) { c.k_list = parse_number_list(v); });
  app.add_option("--stages", c.stages, "width:iters,...");
  app.add_option("--eval-grid", c.eval_grid);
  app.add_option("--sdf", c.sdf, "sphere:r | box:hx,hy,hz | torus:R,r");
  app.add_option("--n-train", c.n_train);
  app.add_option("--probes", c.probes);
  app.add_option("--samples", c.samples);
  app.add_option("--range", range)->expected(2);
  app.add_option_function<std::size_t>("--n", [&](const std::size_t& v) { c.n = v; });
  app.add_option("--axis", c.axis);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    if (help_text) *help_text = app.help();
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw std::invalid_argument(e.what());
  }
  c.task = parse_task(task);
  c.init = parse_init_preset(init);
  if (!range.empty()) {
    c.range_lo = range[0];
    c.range_hi = range[1];
  }
  if (!k_text.empty()) {
    const auto ks = parse_number_list(k_text);
    if (c.task == Task::NtkSweep) c.k_list = ks;
    else if (ks.size() == 1) c.k = ks[0];
    else throw std::invalid_argument("--k takes one value for " + std::string(to_string(c.task)));
  }
  return c;
}

void run(const RunConfig& cfg) {
  const RunConfig c = cfg.resolved();
  c.validate();
  const std::filesystem::path out = c.outdir;
  std::filesystem::create_directories(out);
  write_text(out / "config.json", config_json(c));
  switch (c.task) {
    case Task::FitImage: run_fit_image(c, out); break;
    case Task::FitSdf: run_fit_sdf(c, out); break;
    case Task::FitSignal: run_fit_signal(c, out); break;
    case Task::NtkSweep: run_ntk_sweep(c, out); break;
    case Task::Stream: run_stream(c, out); break;
    case Task::Gap: run_gap(c, out); break;
    case Task::Curves: run_curves(c, out); break;
    case Task::NeuronFreq: run_neuron_freq(c, out); break;
  }
}

int run_main(int argc, const char* const* argv) {
  auto fail = [](std::string_view kind, const std::string& msg, int code) {
    std::cerr << json{{"error", msg}, {"kind", kind}}.dump() << "\n";
    return code;
  };
  std::optional<RunConfig> cfg;
  try {
    std::string help;
    cfg = parse_command_line(argc, argv, &help);
    if (!cfg) {
      std::cout << help;
      return 0;
    }
    cfg->resolved().validate();
  } catch (const std::exception& e) {
    return fail("usage", e.what(), 2);
  }
  try {
    run(*cfg);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 1);
  }
  return 0;
}

}  // namespace finer
