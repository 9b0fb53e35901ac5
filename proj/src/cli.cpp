#include "solitonlab/cli.hpp"
#include "solitonlab/capacity.hpp"
#include "solitonlab/errors.hpp"
#include "solitonlab/perturbation_lab.hpp"
#include "solitonlab/propagator.hpp"
#include "solitonlab/scattering.hpp"
#include "solitonlab/synthesis.hpp"
#include "solitonlab/waveform.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace solitonlab::cli {

namespace {

using json = nlohmann::json;
using Kind = ParamSpec::Kind;

std::vector<ParamSpec> with(std::vector<ParamSpec> a, const std::vector<ParamSpec>& b)
{
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

const std::vector<ParamSpec> kOutput = {
    {"out", "-", "output path, '-' for stdout"},
    {"manifest", "", "run-manifest path (default <out>.manifest.json when out is a file)"},
};

const std::vector<ParamSpec> kMonteCarlo = {
    {"seed", "1", "root seed; trial k uses a stream derived from (seed, k)"},
    {"threads", "0", "worker threads, 0 for all cores"},
    {"n", "2048", "samples per waveform (power of two)"},
    {"t_span", "40", "time window width"},
    {"steps_per_unit", "0", "split steps per unit distance, 0 for automatic"},
};

const std::map<std::string, std::vector<ParamSpec>>& registry()
{
  static const std::map<std::string, std::vector<ParamSpec>> r = {
      {"synth", with({{"n", "2048", "samples (power of two)"},
                      {"t_span", "40", "time window width"},
                      {"mode", "", "bound state eta,kappa,t,phase (repeatable)", Kind::List},
                      {"modes_json", "", "JSON file {\"modes\":[{\"eta\",\"kappa\",\"t\",\"phase\"}]}"}},
                     kOutput)},
      {"scatter", with({{"in", "-", "waveform CSV, '-' for stdin"},
                        {"re_min", "-2", "search rectangle"},
                        {"re_max", "2", "search rectangle"},
                        {"im_min", "0.01", "search rectangle"},
                        {"im_max", "1.5", "search rectangle"},
                        {"coarse_n", "80", "coarse grid points per axis"},
                        {"xi_min", "-10", "reflection grid"},
                        {"xi_max", "10", "reflection grid"},
                        {"n_xi", "201", "reflection grid points"}},
                       kOutput)},
      {"propagate", with({{"in", "-", "waveform CSV, '-' for stdin"},
                          {"Z", "1", "distance"},
                          {"eps", "0", "noise scale"},
                          {"n_steps", "0", "split steps, 0 for automatic"},
                          {"seed", "1", "noise seed"}},
                         kOutput)},
      {"mc-var", with(with({{"eta", "1", "soliton amplitude"},
                            {"eps", "0.05", "noise scale"},
                            {"Z", "1", "distance"},
                            {"trials", "2000", "Monte-Carlo trials"}},
                           kMonteCarlo),
                      kOutput)},
      {"mc-jitter", with(with({{"eta", "1", "soliton amplitude"},
                               {"eps", "0.05", "noise scale"},
                               {"z_list", "1,2,3,4", "ascending distances"},
                               {"trials", "2000", "Monte-Carlo trials"}},
                              kMonteCarlo),
                         kOutput)},
      {"mc-gain", with(with({{"eta1", "2", "amplitude of the mode at t = 0"},
                             {"eta2", "1", "amplitude of the displaced mode"},
                             {"separations", "0,1,2,3,4,6,8,10", "generalized-position separations"},
                             {"eps", "0.05", "noise scale"},
                             {"Z", "1", "distance"},
                             {"trials", "500", "Monte-Carlo trials per separation"}},
                            kMonteCarlo),
                       kOutput)},
      {"link", with(with({{"eta_min", "1", "amplitude range"},
                          {"eta_max", "2", "amplitude range"},
                          {"eps", "0.1", "noise scale"},
                          {"Z", "1", "distance"},
                          {"symbols", "5000", "transmitted symbols"}},
                         kMonteCarlo),
                    kOutput)},
      {"ba", with({{"eta_min", "1", "input range"},
                   {"eta_max", "2", "input range"},
                   {"sigma", "0.1", "noise standard deviation"},
                   {"n_x", "200", "input grid points"},
                   {"n_y", "1200", "output grid points"},
                   {"zero_atom", "false", "add the empty-symbol input", Kind::Flag},
                   {"tol", "1e-6", "stop when the estimate changes by less than this (bits)"},
                   {"max_iters", "100000", "iteration cap"},
                   {"output_dist", "", "optional CSV y,prob of the induced output distribution"}},
                  kOutput)},
      {"modgain", with({{"eta_max", "2", "largest amplitude"},
                        {"Z", "10", "distance"},
                        {"C", "10", "symbol spacing factor"},
                        {"alpha", "1", "intra-symbol spacing factor"},
                        {"sigma_effs", "0.05,0.1,0.2,0.3,0.4", "effective noise levels"},
                        {"n_points", "200", "eta_min samples per curve"},
                        {"approx_penalty", "false", "use p log2(1/p) for the train penalty", Kind::Flag},
                        {"two_jitters", "false", "double the jitter variance in the mix-up model", Kind::Flag}},
                       kOutput)},
      {"reproduce", {{"target", "", "ba-figure, bound, penalties, modgain-figures, amplitude-variance, "
                                    "timing-jitter, variance-gain or link"},
                     {"out_dir", ".", "directory for CSVs and manifests"},
                     {"seed", "1", "root seed"},
                     {"threads", "0", "worker threads"},
                     {"trials", "0", "override the target's trial count, 0 keeps it"}}},
  };
  return r;
}

const std::map<std::string, std::string>& descriptions()
{
  static const std::map<std::string, std::string> d = {
      {"synth", "reflectionless waveform from bound states"},
      {"scatter", "direct scattering: eigenvalues, norming constants, r(xi)"},
      {"propagate", "split-step NLS, optionally with distributed noise"},
      {"mc-var", "eigenvalue fluctuation statistics of one soliton"},
      {"mc-jitter", "timing variance against distance"},
      {"mc-gain", "variance gain of a two-mode bound state against separation"},
      {"link", "end-to-end amplitude link and binned mutual information"},
      {"ba", "Blahut-Arimoto capacity of Y = eta + sqrt(eta) N"},
      {"modgain", "modulation-gain curves over eta_min for a sigma_eff sweep"},
      {"reproduce", "canned configurations for each reported number or figure"},
  };
  return d;
}

const std::map<std::string, std::string>& footers()
{
  static const std::map<std::string, std::string> f = {
      {"synth", "Output: waveform CSV with columns t,re,im."},
      {"scatter", "Output: JSON {modes:[{zeta_re,zeta_im,b_re,b_im,c_re,c_im,t_pos}],xi,r_re,r_im}."},
      {"propagate", "Output: waveform CSV with columns t,re,im."},
      {"mc-var", "Output CSV columns: quantity,mean,var,std_error,analytic,lost,trials."},
      {"mc-jitter", "Output CSV columns: Z,mean_t,var_t,std_error,analytic,lost."},
      {"mc-gain", "Output CSV columns: separation,gain_eta1,gain_eta2,corr,se_eta1,se_eta2,lost."},
      {"link", "Output CSV columns: eta_in,eta_out."},
      {"ba", "Output CSV columns: eta,prob (optional output distribution: y,prob)."},
      {"modgain", "Output CSV columns: eta_min,sigma_eff,gain_single,gain_off,gain_2bound,gain_ntrain."},
      {"reproduce", "Writes the target's CSVs and manifests into out_dir."},
  };
  return f;
}

std::string dashed(std::string s)
{
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const ParamSpec* find_spec(const std::vector<ParamSpec>& specs, const std::string& key)
{
  for (const auto& s : specs) {
    if (s.name == key) return &s;
  }
  return nullptr;
}

std::vector<std::string> split(const std::string& s, char sep)
{
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

class Params
{
public:
  Params(std::string command, ParamMap values) : command_(std::move(command)), values_(std::move(values)) {}

  const ParamMap& map() const { return values_; }
  const std::string& command() const { return command_; }

  const std::string& str(const std::string& key) const
  {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing parameter '" + key + "'");
    return it->second;
  }

  double num(const std::string& key) const { return parse_double(key, str(key)); }

  long long integer(const std::string& key) const
  {
    const auto& s = str(key);
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(s, &pos);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("parameter '" + key + "' expects an integer, got '" + s + "'");
  }

  std::size_t count(const std::string& key) const
  {
    const long long v = integer(key);
    if (v < 0) throw ConfigError("parameter '" + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
  }

  std::uint64_t u64(const std::string& key) const
  {
    const auto& s = str(key);
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(s, &pos);
      if (pos == s.size() && s.find('-') == std::string::npos) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("parameter '" + key + "' expects an unsigned integer, got '" + s + "'");
  }

  bool flag(const std::string& key) const
  {
    std::string s = str(key);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off" || s.empty()) return false;
    throw ConfigError("parameter '" + key + "' expects true or false, got '" + str(key) + "'");
  }

  std::vector<double> nums(const std::string& key) const
  {
    std::vector<double> out;
    for (const auto& item : split(str(key), ',')) out.push_back(parse_double(key, item));
    return out;
  }

  std::vector<std::string> items(const std::string& key) const { return split(str(key), ';'); }

private:
  static double parse_double(const std::string& key, const std::string& s)
  {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("parameter '" + key + "' expects a number, got '" + s + "'");
  }

  std::string command_;
  ParamMap values_;
};

struct Io
{
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

// Destination for one output: stdout for "-", else a file.
class Sink
{
public:
  Sink(const std::string& path, std::ostream& stdout_stream)
  {
    if (path == "-") {
      os_ = &stdout_stream;
      return;
    }
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(parent, ec);
    }
    file_.open(path);
    if (!file_) throw IoError("cannot open '" + path + "' for writing");
    os_ = &file_;
  }

  std::ostream& stream() { return *os_; }

  void close(const std::string& path)
  {
    os_->flush();
    if (!*os_) throw IoError("write to '" + path + "' failed");
    if (file_.is_open()) file_.close();
  }

private:
  std::ofstream file_;
  std::ostream* os_ = nullptr;
};

struct Outcome
{
  json results = json::object();
  std::vector<std::string> outputs;
};

std::ostream& summary_stream(const Params& p, const Io& io)
{
  const auto it = p.map().find("out");
  return it != p.map().end() && it->second == "-" ? io.err : io.out;
}

ComplexWaveform read_input(const Params& p, const Io& io)
{
  const auto& path = p.str("in");
  return path == "-" ? read_waveform_csv(io.in) : read_waveform_csv(path);
}

MCConfig mc_config(const Params& p, const std::string& trials_key)
{
  MCConfig c;
  c.n_trials = p.count(trials_key);
  c.seed = p.u64("seed");
  c.grid = make_grid(p.count("n"), p.num("t_span"));
  c.threads = static_cast<unsigned>(p.count("threads"));
  c.steps_per_unit_z = static_cast<int>(p.count("steps_per_unit"));
  if (c.n_trials < 2) throw ConfigError("at least two trials are needed for variance estimates");
  return c;
}

void note_warnings(const MCStats& s, std::ostream& err, json& results)
{
  for (const auto& w : s.warnings) {
    err << "warning: Z=" << fmt(s.z) << ": " << w << "\n";
    results["warnings"].push_back(w);
  }
}

template <class Body>
void write_output(const Params& p, const Io& io, Outcome& o, const std::string& key, Body&& body)
{
  const auto& path = p.str(key);
  Sink sink(path, io.out);
  body(sink.stream());
  sink.close(path);
  if (path != "-") o.outputs.push_back(path);
}

Outcome cmd_synth(const Params& p, const Io& io)
{
  const auto grid = make_grid(p.count("n"), p.num("t_span"));
  std::vector<ModeSpec> modes;
  auto add = [&](double eta, double kappa, double t, double phase) {
    if (!(eta > 0.0)) throw ConfigError("mode eta must be positive");
    modes.push_back({cdouble(0.5 * kappa, 0.5 * eta), t, phase});
  };
  for (const auto& m : p.items("mode")) {
    Params one("mode", {{"mode", m}});
    const auto v = one.nums("mode");
    if (v.size() != 4) throw ConfigError("mode expects eta,kappa,t,phase, got '" + m + "'");
    add(v[0], v[1], v[2], v[3]);
  }
  if (const auto& path = p.str("modes_json"); !path.empty()) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open '" + path + "'");
    try {
      const auto j = json::parse(f);
      for (const auto& m : j.at("modes")) {
        add(m.at("eta").get<double>(), m.value("kappa", 0.0), m.value("t", 0.0), m.value("phase", 0.0));
      }
    } catch (const json::exception& e) {
      throw FormatError("modes JSON '" + path + "': " + e.what());
    }
  }
  if (modes.empty()) throw ConfigError("synth needs at least one --mode or a modes_json file");
  const auto w = synthesize_reflectionless(grid, modes);
  Outcome o;
  write_output(p, io, o, "out", [&](std::ostream& os) { write_waveform_csv(os, w); });
  o.results["energy"] = energy(w);
  o.results["modes"] = modes.size();
  return o;
}

Outcome cmd_scatter(const Params& p, const Io& io)
{
  const auto w = read_input(p, io);
  SearchRegion region{p.num("re_min"), p.num("re_max"), p.num("im_min"), p.num("im_max"),
                      static_cast<int>(p.count("coarse_n"))};
  const auto xi = linspace(p.num("xi_min"), p.num("xi_max"), p.count("n_xi"));
  const auto sd = direct_scattering(w, region, xi);
  Outcome o;
  write_output(p, io, o, "out", [&](std::ostream& os) { os << to_json(sd) << "\n"; });
  o.results["modes"] = sd.modes.size();
  auto& s = summary_stream(p, io);
  for (const auto& m : sd.modes) {
    s << "zeta=" << fmt(m.zeta.real()) << (m.zeta.imag() < 0 ? "" : "+") << fmt(m.zeta.imag())
      << "i t_pos=" << fmt(m.t_pos) << "\n";
  }
  return o;
}

Outcome cmd_propagate(const Params& p, const Io& io)
{
  const auto w = read_input(p, io);
  const double Z = p.num("Z");
  int steps = static_cast<int>(p.count("n_steps"));
  if (steps == 0) steps = suggest_steps(w, Z);
  const auto out = propagate_noisy(w, ChannelSpec{Z, p.num("eps"), steps, p.u64("seed")});
  Outcome o;
  write_output(p, io, o, "out", [&](std::ostream& os) { write_waveform_csv(os, out); });
  o.results["n_steps"] = steps;
  o.results["energy_in"] = energy(w);
  o.results["energy_out"] = energy(out);
  return o;
}

Outcome cmd_mc_var(const Params& p, const Io& io)
{
  const double eta = p.num("eta"), eps = p.num("eps"), Z = p.num("Z");
  const auto s = mc_eigenvalue_fluctuations(eta, eps, Z, mc_config(p, "trials"));
  Outcome o;
  note_warnings(s, io.err, o.results);
  struct Row
  {
    const char* name;
    const Moments& m;
    double analytic;
  };
  const Row rows[] = {{"eta", s.eta[0], analytic_amp_var(eta, eps, s.z)},
                      {"kappa", s.kappa[0], analytic_vel_var(eta, eps, s.z)},
                      {"t", s.t[0], analytic_timing_var(eta, eps, s.z)}};
  write_output(p, io, o, "out", [&](std::ostream& os) {
    os << "quantity,mean,var,std_error,analytic,lost,trials\n";
    for (const auto& r : rows) {
      os << r.name << "," << fmt(r.m.mean) << "," << fmt(r.m.var) << "," << fmt(r.m.std_error) << ","
         << fmt(r.analytic) << "," << s.lost_trials << "," << s.n_trials << "\n";
    }
  });
  auto& sum = summary_stream(p, io);
  for (const auto& r : rows) {
    o.results[std::string("var_") + r.name] = r.m.var;
    sum << "var_" << r.name << "=" << fmt(r.m.var) << " se=" << fmt(r.m.std_error) << " analytic=" << fmt(r.analytic)
        << "\n";
  }
  o.results["lost"] = s.lost_trials;
  o.results["flagged"] = s.flagged;
  return o;
}

Outcome cmd_mc_jitter(const Params& p, const Io& io)
{
  const double eta = p.num("eta"), eps = p.num("eps");
  const auto zs = p.nums("z_list");
  const auto r = mc_timing_jitter(eta, eps, zs, mc_config(p, "trials"));
  Outcome o;
  write_output(p, io, o, "out", [&](std::ostream& os) {
    os << "Z,mean_t,var_t,std_error,analytic,lost\n";
    for (const auto& s : r.per_z) {
      os << fmt(s.z) << "," << fmt(s.t[0].mean) << "," << fmt(s.t[0].var) << "," << fmt(s.t[0].std_error) << ","
         << fmt(analytic_timing_var(eta, eps, s.z)) << "," << s.lost_trials << "\n";
    }
  });
  for (const auto& s : r.per_z) note_warnings(s, io.err, o.results);
  o.results["slope"] = r.slope;
  summary_stream(p, io) << "slope=" << fmt(r.slope) << "\n";
  return o;
}

Outcome cmd_mc_gain(const Params& p, const Io& io)
{
  const auto seps = p.nums("separations");
  const auto rows = mc_variance_gain(p.num("eta1"), p.num("eta2"), seps, p.num("eps"), p.num("Z"),
                                     mc_config(p, "trials"));
  Outcome o;
  write_output(p, io, o, "out", [&](std::ostream& os) {
    os << "separation,gain_eta1,gain_eta2,corr,se_eta1,se_eta2,lost\n";
    for (const auto& r : rows) {
      os << fmt(r.separation) << "," << fmt(r.gain_eta1) << "," << fmt(r.gain_eta2) << "," << fmt(r.corr) << ","
         << fmt(r.se_eta1) << "," << fmt(r.se_eta2) << "," << r.lost << "\n";
    }
  });
  for (const auto& r : rows) {
    if (r.flagged) {
      io.err << "warning: separation " << fmt(r.separation) << ": eigenvalue association failed in "
             << r.lost << " trials\n";
    }
  }
  o.results["rows"] = rows.size();
  return o;
}

Outcome cmd_link(const Params& p, const Io& io)
{
  const double lo = p.num("eta_min"), hi = p.num("eta_max"), eps = p.num("eps"), Z = p.num("Z");
  const auto r = mc_link_experiment(lo, hi, eps, Z, mc_config(p, "symbols"));
  Outcome o;
  write_output(p, io, o, "out", [&](std::ostream& os) {
    os << "eta_in,eta_out\n";
    for (std::size_t i = 0; i < r.eta_in.size(); ++i) os << fmt(r.eta_in[i]) << "," << fmt(r.eta_out[i]) << "\n";
  });
  o.results["mi_bits"] = r.mi_bits;
  o.results["bins"] = r.bins;
  o.results["lost"] = r.lost;
  auto& s = summary_stream(p, io);
  s << "mi_bits=" << fmt(r.mi_bits) << " bins=" << r.bins << " lost=" << r.lost << "\n";
  if (eps > 0.0) {
    const double bound = spectral_efficiency_bound(hi - lo, hi, eps, Z);
    o.results["bound_bits"] = bound;
    s << "bound_bits=" << fmt(bound) << "\n";
  }
  return o;
}

Outcome cmd_ba(const Params& p, const Io& io)
{
  const auto ch = build_sqrt_mult_channel(p.num("eta_min"), p.num("eta_max"), p.num("sigma"), p.count("n_x"),
                                          p.count("n_y"), p.flag("zero_atom"));
  const auto r = blahut_arimoto(ch, p.num("tol"), static_cast<int>(p.count("max_iters")));
  Outcome o;
  write_output(p, io, o, "out", [&](std::ostream& os) {
    os << "eta,prob\n";
    for (std::size_t i = 0; i < ch.x.size(); ++i) os << fmt(ch.x[i]) << "," << fmt(r.prior[i]) << "\n";
  });
  if (!p.str("output_dist").empty()) {
    write_output(p, io, o, "output_dist", [&](std::ostream& os) {
      os << "y,prob\n";
      for (std::size_t j = 0; j < ch.y.size(); ++j) os << fmt(ch.y[j]) << "," << fmt(r.output[j]) << "\n";
    });
  }
  o.results["capacity_bits"] = r.capacity_bits;
  o.results["upper_bound_bits"] = r.upper_bound_bits;
  o.results["iterations"] = r.iterations;
  summary_stream(p, io) << "capacity=" << fmt(r.capacity_bits) << " upper=" << fmt(r.upper_bound_bits)
                        << " iterations=" << r.iterations << "\n";
  return o;
}

Outcome cmd_modgain(const Params& p, const Io& io)
{
  ModulationConfig base;
  base.eta_max = p.num("eta_max");
  base.eta_min = 0.5 * base.eta_max;
  base.Z = p.num("Z");
  base.C_spacing = p.num("C");
  base.alpha = p.num("alpha");
  base.two_jitters = p.flag("two_jitters");
  const bool exact = !p.flag("approx_penalty");
  const auto sigmas = p.nums("sigma_effs");
  const auto n = p.count("n_points");
  Outcome o;
  write_output(p, io, o, "out", [&](std::ostream& os) {
    os << "eta_min,sigma_eff,gain_single,gain_off,gain_2bound,gain_ntrain\n";
    for (double s : sigmas) {
      const auto cfg = config_for_sigma_eff(base, s);
      for (const auto& pt : modulation_gain_curves(cfg, n, exact)) {
        os << fmt(pt.eta_min) << "," << fmt(s) << "," << fmt(pt.single) << "," << fmt(pt.with_off) << ","
           << fmt(pt.two_bound) << "," << fmt(pt.ntrain) << "\n";
      }
    }
  });
  auto& sum = summary_stream(p, io);
  for (double s : sigmas) {
    const auto cfg = config_for_sigma_eff(base, s);
    const auto g1 = modulation_gain_single(cfg);
    const auto g2 = modulation_gain_single_with_off(cfg);
    const auto g3 = modulation_gain_2bound(cfg);
    const auto g4 = modulation_gain_ntrain(cfg, exact);
    o.results["sigma_eff"].push_back({{"sigma_eff", s},
                                      {"single", g1.gain},
                                      {"off", g2.gain},
                                      {"two_bound", g3.gain},
                                      {"ntrain", g4.gain}});
    sum << "sigma_eff=" << fmt(s) << " single=" << fmt(g1.gain) << " off=" << fmt(g2.gain)
        << " 2bound=" << fmt(g3.gain) << " ntrain=" << fmt(g4.gain) << "\n";
  }
  return o;
}

Outcome execute(const Params& p, const Io& io);

void write_manifest(const std::string& path, const Params& p, double seconds, const Outcome& o)
{
  json m;
  m["command"] = p.command();
  m["params"] = p.map();
  if (p.map().count("seed")) m["seed"] = p.u64("seed");
  m["version"] = SOLITONLAB_VERSION;
  m["duration_s"] = seconds;
  m["outputs"] = o.outputs;
  m["results"] = o.results;
  Sink sink(path, std::cout);
  sink.stream() << m.dump(2) << "\n";
  sink.close(path);
}

std::string manifest_path(const Params& p)
{
  const auto& m = p.map();
  if (auto it = m.find("manifest"); it != m.end() && !it->second.empty()) return it->second;
  if (auto it = m.find("out"); it != m.end() && it->second != "-") return it->second + ".manifest.json";
  return "";
}

Outcome execute_with_manifest(const Params& p, const Io& io)
{
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o = execute(p, io);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (const auto path = manifest_path(p); !path.empty()) write_manifest(path, p, seconds, o);
  return o;
}

ParamMap sub_params(const std::string& command, const ParamMap& overrides)
{
  ParamMap m = defaults(command_params(command));
  for (const auto& [k, v] : overrides) m[k] = v;
  return m;
}

Outcome cmd_reproduce(const Params& p, const Io& io)
{
  const auto& target = p.str("target");
  const std::filesystem::path dir = p.str("out_dir");
  const std::string seed = p.str("seed"), threads = p.str("threads");
  const auto trials = p.count("trials");
  auto path = [&](const char* name) { return (dir / name).string(); };
  auto mc = [&](ParamMap m, const std::string& trials_key, const char* default_trials) {
    m["seed"] = seed;
    m["threads"] = threads;
    m[trials_key] = trials ? std::to_string(trials) : default_trials;
    return m;
  };
  auto run_sub = [&](const std::string& cmd, const ParamMap& m) {
    return execute_with_manifest(Params(cmd, sub_params(cmd, m)), Io{io.in, io.out, io.err});
  };

  Outcome o;
  if (target == "ba-figure") {
    auto r = run_sub("ba", {{"out", path("ba_prior.csv")}, {"output_dist", path("ba_output.csv")}});
    const double c = r.results["capacity_bits"];
    io.out << "capacity=" << fmt(c) << " reference=1.568+-0.02 " << (std::abs(c - 1.568) <= 0.02 ? "ok" : "off")
           << "\n";
    o = r;
  } else if (target == "bound") {
    const double b = spectral_efficiency_bound(1.0, 2.0, 0.1, 1.0);
    io.out << "bound=" << fmt(b) << " sigma_eff=" << fmt(sigma_eff(2.0, 0.1, 1.0)) << "\n";
    o.results["bound_bits"] = b;
  } else if (target == "penalties") {
    const double hb = binary_entropy(0.1);
    io.out << "H_b(0.1)=" << fmt(hb) << " per_soliton=" << fmt(0.5 * permutation_loss_bound_2(0.1))
           << " ntrain_exact=" << fmt(permutation_penalty_ntrain(0.1))
           << " ntrain_approx=" << fmt(permutation_penalty_ntrain_approx(0.1)) << "\n";
    o.results["H_b_0.1"] = hb;
  } else if (target == "modgain-figures") {
    o = run_sub("modgain", {{"out", path("modgain.csv")}});
  } else if (target == "amplitude-variance") {
    o = run_sub("mc-var", mc({{"out", path("amplitude_variance.csv")}}, "trials", "2000"));
  } else if (target == "timing-jitter") {
    o = run_sub("mc-jitter", mc({{"eta", "3"}, {"out", path("timing_jitter.csv")}}, "trials", "2000"));
  } else if (target == "variance-gain") {
    o = run_sub("mc-gain", mc({{"out", path("variance_gain.csv")}}, "trials", "500"));
  } else if (target == "link") {
    o = run_sub("link", mc({{"out", path("link.csv")}}, "symbols", "5000"));
  } else {
    throw ConfigError("unknown reproduce target '" + target + "'");
  }
  return o;
}

Outcome execute(const Params& p, const Io& io)
{
  const auto& c = p.command();
  if (c == "synth") return cmd_synth(p, io);
  if (c == "scatter") return cmd_scatter(p, io);
  if (c == "propagate") return cmd_propagate(p, io);
  if (c == "mc-var") return cmd_mc_var(p, io);
  if (c == "mc-jitter") return cmd_mc_jitter(p, io);
  if (c == "mc-gain") return cmd_mc_gain(p, io);
  if (c == "link") return cmd_link(p, io);
  if (c == "ba") return cmd_ba(p, io);
  if (c == "modgain") return cmd_modgain(p, io);
  if (c == "reproduce") return cmd_reproduce(p, io);
  throw ConfigError("unknown command '" + c + "'");
}

Params from_manifest(const std::string& path)
{
  std::ifstream f(path);
  if (!f) throw IoError("cannot open manifest '" + path + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("manifest '" + path + "': " + e.what());
  }
  if (!j.contains("command") || !j["command"].is_string() || !j.contains("params") || !j["params"].is_object()) {
    throw ConfigError("manifest '" + path + "' needs a command string and a params object");
  }
  const std::string cmd = j["command"];
  const auto& specs = command_params(cmd);
  ParamMap m = defaults(specs);
  for (const auto& [k, v] : j["params"].items()) {
    if (!find_spec(specs, k)) throw ConfigError("manifest: unknown key '" + k + "' for " + cmd);
    if (!v.is_string()) throw ConfigError("manifest: value of '" + k + "' must be a string");
    m[k] = v.get<std::string>();
  }
  return Params(cmd, m);
}

std::string escape(const std::string& s)
{
  std::string out;
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch == '\n' ? ' ' : ch;
  }
  return out;
}

int fail(std::ostream& err, ExitCode code, const char* kind, const std::string& msg)
{
  err << "error: code=" << static_cast<int>(code) << " kind=" << kind << " msg=\"" << escape(msg) << "\"\n";
  return code;
}

} // namespace

const std::vector<ParamSpec>& command_params(const std::string& command)
{
  const auto& r = registry();
  const auto it = r.find(command);
  if (it == r.end()) throw ConfigError("unknown command '" + command + "'");
  return it->second;
}

std::vector<std::string> command_names()
{
  std::vector<std::string> out;
  for (const auto& [name, specs] : registry()) out.push_back(name);
  return out;
}

ParamMap defaults(const std::vector<ParamSpec>& specs)
{
  ParamMap m;
  for (const auto& s : specs) m[s.name] = s.default_value;
  return m;
}

ParamMap parse_config_text(const std::string& text, const std::vector<ParamSpec>& specs, ParamMap base)
{
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    if (!find_spec(specs, key)) throw ConfigError("unknown config key '" + key + "'");
    base[key] = trim(line.substr(eq + 1));
  }
  return base;
}

ParamMap load_config(const std::string& path, const std::vector<ParamSpec>& specs)
{
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), specs, defaults(specs));
}

ParamMap apply_environment(const std::vector<ParamSpec>& specs, ParamMap base)
{
  for (const auto& s : specs) {
    std::string var = "SOLITONLAB_" + s.name;
    std::transform(var.begin(), var.end(), var.begin(), [](unsigned char c) { return std::toupper(c); });
    if (const char* v = std::getenv(var.c_str())) base[s.name] = v;
  }
  return base;
}

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Soliton eigenvalue-communication laboratory", "solitonlab"};
  app.set_version_flag("--version", SOLITONLAB_VERSION);
  app.require_subcommand(1);

  struct Bound
  {
    CLI::App* sub = nullptr;
    std::string config;
    std::map<std::string, std::string> values;
    std::map<std::string, std::vector<std::string>> lists;
    std::map<std::string, int> flags;
    std::map<std::string, CLI::Option*> options;
  };
  std::map<std::string, Bound> bound;
  for (const auto& name : command_names()) {
    auto& b = bound[name];
    b.sub = app.add_subcommand(name, descriptions().at(name));
    b.sub->footer(footers().at(name));
    b.sub->add_option("--config", b.config, "key = value file applied before environment and flags");
    for (const auto& s : command_params(name)) {
      const std::string flag = "--" + dashed(s.name);
      const std::string help = s.help + (s.default_value.empty() ? "" : " [" + s.default_value + "]");
      switch (s.kind) {
      case Kind::Value:
        b.options[s.name] = b.sub->add_option(flag, b.values[s.name], help);
        break;
      case Kind::List:
        b.options[s.name] = b.sub->add_option(flag, b.lists[s.name], help);
        break;
      case Kind::Flag:
        b.options[s.name] = b.sub->add_flag(flag, b.flags[s.name], help);
        break;
      }
    }
  }
  bound["reproduce"].sub->add_option("target_name", bound["reproduce"].values["target"], "reproduction target");
  std::string manifest_in;
  auto* run_sub = app.add_subcommand("run", "re-execute a run manifest");
  run_sub->add_option("--from-manifest", manifest_in, "manifest JSON written by a previous run")->required();

  std::vector<const char*> argv{"solitonlab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    return fail(err, kUsage, "usage", e.what());
  }

  try {
    const Io io{in, out, err};
    if (run_sub->parsed()) {
      execute_with_manifest(from_manifest(manifest_in), io);
      return kOk;
    }
    for (auto& [name, b] : bound) {
      if (!b.sub->parsed()) continue;
      const auto& specs = command_params(name);
      ParamMap m = b.config.empty() ? defaults(specs) : load_config(b.config, specs);
      m = apply_environment(specs, m);
      for (const auto& s : specs) {
        const auto* opt = b.options.count(s.name) ? b.options.at(s.name) : nullptr;
        // CLI11 reports a count for flags bound to an integer even when absent
        const bool given = s.kind == Kind::Flag ? b.flags[s.name] > 0
                                                : (opt && opt->count() > 0) || (s.name == "target" && !b.values["target"].empty());
        if (!given) continue;
        switch (s.kind) {
        case Kind::Value:
          m[s.name] = b.values[s.name];
          break;
        case Kind::List: {
          std::string joined;
          for (const auto& v : b.lists[s.name]) joined += (joined.empty() ? "" : ";") + v;
          m[s.name] = joined;
          break;
        }
        case Kind::Flag:
          m[s.name] = "true";
          break;
        }
      }
      execute_with_manifest(Params(name, m), io);
      return kOk;
    }
    return fail(err, kUsage, "usage", "no subcommand given");
  } catch (const ConfigError& e) {
    return fail(err, kConfig, "config", e.what());
  } catch (const FormatError& e) {
    return fail(err, kIo, "format", e.what());
  } catch (const IoError& e) {
    return fail(err, kIo, "io", e.what());
  } catch (const NumericalError& e) {
    return fail(err, kNumerical, "numerical", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(err, kConfig, "invalid_argument", e.what());
  } catch (const std::domain_error& e) {
    return fail(err, kConfig, "domain_error", e.what());
  } catch (const std::exception& e) {
    return fail(err, kInternal, "internal", e.what());
  }
}

int run(int argc, const char* const* argv)
{
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cin, std::cout, std::cerr);
}

} // namespace solitonlab::cli
