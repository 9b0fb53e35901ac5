#include "solitonlab/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace solitonlab;
namespace fs = std::filesystem;

namespace {

struct Result
{
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args, const std::string& input = "")
{
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch()
{
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("solitonlab_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p)
{
  std::ifstream f(p);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text)
{
  std::ofstream(p) << text;
}

} // namespace

TEST_CASE("synth piped into scatter recovers zeta = i/2")
{
  const auto wave = invoke({"synth", "--mode", "1,0,0,0", "--n", "1024"});
  REQUIRE(wave.code == 0);
  CHECK(wave.out.rfind("t,re,im\n", 0) == 0);
  const auto sc = invoke({"scatter"}, wave.out);
  REQUIRE(sc.code == 0);
  const auto j = nlohmann::json::parse(sc.out);
  REQUIRE(j["modes"].size() == 1);
  CHECK(std::abs(j["modes"][0]["zeta_re"].get<double>()) < 1e-6);
  CHECK(std::abs(j["modes"][0]["zeta_im"].get<double>() - 0.5) < 1e-6);
  CHECK(std::abs(j["modes"][0]["t_pos"].get<double>()) < 1e-3);
}

TEST_CASE("the installed binary round-trips through a shell pipe")
{
  const char* exe = std::getenv("SOLITONLAB_CLI_PATH");
  if (!exe) return;
  const std::string cmd = std::string(exe) + " synth --mode 1,0,0,0 --n 1024 | " + exe + " scatter";
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p);
  std::string text;
  char buf[4096];
  while (std::size_t k = std::fread(buf, 1, sizeof buf, p)) text.append(buf, k);
  CHECK(::pclose(p) == 0);
  const auto j = nlohmann::json::parse(text);
  REQUIRE(j["modes"].size() == 1);
  CHECK(std::abs(j["modes"][0]["zeta_im"].get<double>() - 0.5) < 1e-6);
}

TEST_CASE("zero waveform scatters to an empty mode list")
{
  std::string csv = "t,re,im\n";
  for (int i = 0; i < 256; ++i) csv += std::to_string(-10.0 + i * 20.0 / 256) + ",0,0\n";
  const auto zero = scratch() / "zero.csv";
  write_file(zero, csv);
  const auto r = invoke({"scatter", "--in", zero.string()});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["modes"].empty());
}

TEST_CASE("config layering")
{
  const auto& specs = cli::command_params("ba");
  CHECK(cli::parse_config_text("", specs, cli::defaults(specs)) == cli::defaults(specs));
  const auto empty = scratch() / "empty.cfg";
  write_file(empty, "");
  CHECK(cli::load_config(empty.string(), specs) == cli::defaults(specs));

  const auto m = cli::parse_config_text("# comment\neta_max = 3\n sigma=0.2 \n", specs, cli::defaults(specs));
  CHECK(m.at("eta_max") == "3");
  CHECK(m.at("sigma") == "0.2");

  const auto cfg = scratch() / "ba.cfg";
  write_file(cfg, "n_x = 60\nn_y = 400\nsigma = 0.5\n");
  const auto out = scratch() / "prior.csv";
  const auto r = invoke({"ba", "--config", cfg.string(), "--sigma", "0.2", "--out", out.string()});
  REQUIRE(r.code == 0);
  const auto manifest = nlohmann::json::parse(slurp(out.string() + ".manifest.json"));
  CHECK(manifest["params"]["sigma"] == "0.2");
  CHECK(manifest["params"]["n_x"] == "60");
  CHECK(manifest["command"] == "ba");

  const auto typo = scratch() / "typo.cfg";
  write_file(typo, "etamax = 3\n");
  const auto bad = invoke({"ba", "--config", typo.string()});
  CHECK(bad.code == cli::kConfig);
  CHECK(bad.err.find("etamax") != std::string::npos);
  CHECK(bad.err.rfind("error: code=3 kind=config", 0) == 0);
}

TEST_CASE("environment overrides the file, flags override the environment")
{
  const auto& specs = cli::command_params("ba");
  ::setenv("SOLITONLAB_SIGMA", "0.3", 1);
  CHECK(cli::apply_environment(specs, cli::defaults(specs)).at("sigma") == "0.3");
  const auto out = scratch() / "env.csv";
  REQUIRE(invoke({"ba", "--n-x", "60", "--n-y", "400", "--out", out.string()}).code == 0);
  CHECK(nlohmann::json::parse(slurp(out.string() + ".manifest.json"))["params"]["sigma"] == "0.3");
  REQUIRE(invoke({"ba", "--n-x", "60", "--n-y", "400", "--sigma", "0.25", "--out", out.string()}).code == 0);
  CHECK(nlohmann::json::parse(slurp(out.string() + ".manifest.json"))["params"]["sigma"] == "0.25");
  ::unsetenv("SOLITONLAB_SIGMA");
}

TEST_CASE("manifest replay is bit-identical")
{
  const auto out = scratch() / "mcvar.csv";
  const auto r = invoke({"mc-var", "--trials", "8", "--n", "512", "--t-span", "30", "--seed", "5", "--out",
                         out.string()});
  REQUIRE(r.code == 0);
  const std::string first = slurp(out);
  CHECK(first.rfind("quantity,mean,var,std_error,analytic,lost,trials\n", 0) == 0);
  const auto manifest_path = out.string() + ".manifest.json";
  const auto manifest = nlohmann::json::parse(slurp(manifest_path));
  CHECK(manifest["seed"] == 5);
  CHECK(manifest.contains("version"));
  CHECK(manifest.contains("duration_s"));
  CHECK(manifest["outputs"].size() >= 1);
  fs::remove(out);
  REQUIRE(invoke({"run", "--from-manifest", manifest_path}).code == 0);
  CHECK(slurp(out) == first);

  auto tampered = manifest;
  tampered["params"]["bogus"] = "1";
  const auto bad_path = scratch() / "bad.manifest.json";
  write_file(bad_path, tampered.dump());
  const auto bad = invoke({"run", "--from-manifest", bad_path.string()});
  CHECK(bad.code == cli::kConfig);
  CHECK(bad.err.find("bogus") != std::string::npos);
}

TEST_CASE("exit codes")
{
  CHECK(invoke({}).code == cli::kUsage);
  CHECK(invoke({"frobnicate"}).code == cli::kUsage);
  CHECK(invoke({"ba", "--no-such-flag"}).code == cli::kUsage);
  CHECK(invoke({"scatter", "--in", "/nonexistent/x.csv"}).code == cli::kIo);
  CHECK(invoke({"scatter"}, "x,y\n1,2\n").code == cli::kIo);
  CHECK(invoke({"ba", "--sigma", "abc"}).code == cli::kConfig);
  CHECK(invoke({"ba", "--sigma", "-1"}).code == cli::kConfig);
  CHECK(invoke({"ba", "--n-x", "60", "--n-y", "400", "--tol", "1e-300", "--max-iters", "2"}).code ==
        cli::kNumerical);
  CHECK(invoke({"reproduce", "nothing"}).code == cli::kConfig);
  const auto r = invoke({"synth", "--mode", "1,0"});
  CHECK(r.code == cli::kConfig);
  CHECK(r.err.find("error: code=3") == 0);
}

TEST_CASE("help documents the CSV columns")
{
  const auto r = invoke({"mc-gain", "--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("separation,gain_eta1,gain_eta2,corr,se_eta1,se_eta2,lost") != std::string::npos);
  CHECK(invoke({"modgain", "--help"}).out.find("eta_min,sigma_eff,gain_single,gain_off,gain_2bound,gain_ntrain") !=
        std::string::npos);
  CHECK(invoke({"--help"}).out.find("reproduce") != std::string::npos);
}

TEST_CASE("every CSV has a header row")
{
  const auto r = invoke({"modgain", "--n-points", "20"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("eta_min,sigma_eff,gain_single,gain_off,gain_2bound,gain_ntrain\n", 0) == 0);
  const auto prop = invoke({"propagate", "--Z", "0.1"}, invoke({"synth", "--mode", "1,0,0,0", "--n", "256"}).out);
  REQUIRE(prop.code == 0);
  CHECK(prop.out.rfind("t,re,im\n", 0) == 0);
}

TEST_CASE("reproduce ba-figure reports the capacity")
{
  const auto dir = scratch() / "repro";
  const auto r = invoke({"reproduce", "ba-figure", "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("capacity=1.5") != std::string::npos);
  CHECK(r.out.find(" ok") != std::string::npos);
  CHECK(slurp(dir / "ba_prior.csv").rfind("eta,prob\n", 0) == 0);
  CHECK(slurp(dir / "ba_output.csv").rfind("y,prob\n", 0) == 0);
}
