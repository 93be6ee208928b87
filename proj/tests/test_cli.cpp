#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "support.hpp"
#include "tolopt/cli.hpp"
#include "tolopt/error.hpp"

using namespace tolopt;
using tolopt::test::data_path;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Scratch directory holding a copy of the fixture blade and a config built from `text`.
struct Workspace
{
  fs::path dir;

  explicit Workspace(const std::string& name, const std::string& text)
      : dir(fs::temp_directory_path() / ("tolopt_cli_" + name))
  {
    fs::remove_all(dir);
    fs::create_directories(dir);
    fs::copy_file(data_path("blade.dat"), dir / "blade.dat");
    std::ofstream(dir / "run.cfg") << text;
  }
  ~Workspace() { fs::remove_all(dir); }

  std::string config() const { return (dir / "run.cfg").string(); }
  fs::path out(const std::string& sub) const { return dir / sub; }
};

std::string fixture(const std::string& name) { return slurp(data_path(name)); }

int run(const std::string& command, const std::string& config, const std::optional<fs::path>& out = std::nullopt,
        std::optional<std::uint64_t> samples = std::nullopt, std::optional<unsigned> threads = std::nullopt)
{
  CliOptions o;
  o.command = command;
  o.config = config;
  if (out)
    o.out = out->string();
  o.samples = samples;
  o.threads = threads;
  std::ostringstream log, err;
  return run_command(o, log, err);
}

int run_binary(const std::string& args)
{
  const int status = std::system((std::string(TOLOPT_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

std::vector<std::string> lines(const fs::path& p)
{
  std::istringstream in(slurp(p));
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);)
    out.push_back(l);
  return out;
}

} // namespace

TEST_CASE("config text parsing")
{
  std::istringstream in("# comment\n[a]\nx = 1  # trailing\ny=two words\n\n[b]\nx = 3\n");
  const ConfigText t = ConfigText::parse(in);
  CHECK(t.entries().at("a.x") == "1");
  CHECK(t.entries().at("a.y") == "two words");
  CHECK(t.entries().at("b.x") == "3");

  std::istringstream dup("[a]\nx = 1\nx = 2\n");
  CHECK_THROWS_AS(ConfigText::parse(dup), Error);
  std::istringstream bad("[a]\nnot a pair\n");
  CHECK_THROWS_AS(ConfigText::parse(bad), Error);
}

TEST_CASE("config hash ignores layout, threads and output directory")
{
  std::istringstream a("[saa]\nseed = 3\nthreads = 1\n[run]\nout = x\n");
  std::istringstream b("# other layout\n[run]\nout = y\n\n[saa]\nthreads = 8\nseed = 3\n");
  std::istringstream c("[saa]\nseed = 4\n");
  const ConfigText ta = ConfigText::parse(a);
  CHECK(ta.hash() == ConfigText::parse(b).hash());
  CHECK(ta.hash() != ConfigText::parse(c).hash());
}

TEST_CASE("fixture configs load")
{
  for (const char* name : {"bowtie.cfg", "single_point.cfg", "multipoint.cfg"}) {
    const RunConfig cfg = load_config(data_path(name));
    CHECK(cfg.n_basis == 41);
    CHECK(cfg.sigma_max == 8e-4);
    CHECK(cfg.budget_fraction == 0.98);
    CHECK(cfg.mp.weights.sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(fs::exists(cfg.blade_file));
  }
  const RunConfig bow = load_config(data_path("bowtie.cfg"));
  REQUIRE(bow.mp.size() == 3);
  CHECK(bow.mp.weights[0] == 0.25);
  CHECK(bow.mp.weights[1] == 0.5);
  CHECK(bow.mp.alphas[2] == doctest::Approx(4.5 * std::numbers::pi / 180.0));
  CHECK(bow.correlation_w_auto);
  const RunConfig over = load_config(data_path("bowtie.cfg"), {{"saa.samples", "17"}});
  CHECK(over.samples == 17);
}

TEST_CASE("config errors")
{
  const std::string base = fixture("bowtie.cfg");
  auto expect_config_error = [&](const std::string& name, const std::string& text) {
    Workspace w(name, text);
    CHECK_THROWS_AS(load_config(w.config()), Error);
    CHECK(run("kl-info", w.config(), w.out("o")) == exit_config);
  };
  expect_config_error("unknown_key", base + "\n[extra]\nfoo = 1\n");
  {
    std::string t = base;
    t.replace(t.find("budget_fraction = 0.98"), 22, "budget_fraction = 1.5");
    expect_config_error("fraction_range", t);
  }
  {
    std::string t = base;
    t.replace(t.find("weights = trapezoid"), 19, "weights = 0.3, 0.3, 0.3");
    expect_config_error("weights", t);
  }
  {
    std::string t = base;
    t.replace(t.find("file = blade.dat"), 16, "file = nowhere.dat");
    Workspace w("missing_blade", t);
    CHECK(run("optimize-tolerance", w.config(), w.out("o")) == exit_config);
    CHECK(run_binary("optimize-tolerance --config " + w.config() + " --out " + w.out("o").string()) == exit_config);
  }
}

TEST_CASE("command line front end")
{
  CHECK(run_binary("--help") == 0);
  CHECK(run_binary("kl-info") == exit_config);
  CHECK(run_binary("no-such-command --config " + data_path("bowtie.cfg")) == exit_config);
  CHECK(run_binary("kl-info --config /nonexistent/run.cfg") == exit_config);
}

TEST_CASE("infeasible budget exits with the infeasible code")
{
  std::string t = fixture("bowtie.cfg");
  t.replace(t.find("budget_fraction = 0.98"), 22, "budget = 1.0");
  Workspace w("infeasible", t);
  CHECK(run("optimize-tolerance", w.config(), w.out("o"), 8) == exit_infeasible);
}

TEST_CASE("kl-info and sample artifacts")
{
  Workspace w("artifacts", fixture("bowtie.cfg"));
  REQUIRE(run("kl-info", w.config(), w.out("kl")) == exit_ok);
  const auto spec = lines(w.out("kl") / "spectrum.csv");
  REQUIRE(spec.size() > 3);
  CHECK(spec[0].rfind("# tolopt kl-info config_hash=0x", 0) == 0);
  CHECK(spec[0].find(" seed=20240611") != std::string::npos);
  CHECK(spec[1] == "index,eigenvalue,cumulative_fraction,retained");
  const std::string last = spec.back();
  CHECK(std::stod(last.substr(last.find(',', last.find(',') + 1) + 1)) == doctest::Approx(1.0).epsilon(1e-12));

  REQUIRE(run("sample", w.config(), w.out("sm")) == exit_ok);
  const auto real = lines(w.out("sm") / "realizations.csv");
  CHECK(real[0].rfind("# tolopt sample config_hash=0x", 0) == 0);
  CHECK(real[1] == "realization,index,s,x,y,e");
  CHECK(real.size() == 2 + 5 * 200);

  const auto j = nlohmann::json::parse(slurp(w.out("sm") / "result.json"));
  CHECK(j["command"] == "sample");
  CHECK(j["seed"] == 20240611);
  CHECK(j["config_hash"].get<std::string>().rfind("0x", 0) == 0);
  // the hash in the CSV header and the JSON agree
  CHECK(real[0].find(j["config_hash"].get<std::string>()) != std::string::npos);
}

TEST_CASE("optimize-tolerance honours the budget and the bounds")
{
  Workspace w("opt", fixture("bowtie.cfg"));
  REQUIRE(run("optimize-tolerance", w.config(), w.out("o"), 40) == exit_ok);
  const auto j = nlohmann::json::parse(slurp(w.out("o") / "result.json"));
  CHECK(j["status"] == "converged");
  CHECK(j["samples"] == 40);
  const double budget = j["budget"];
  CHECK(std::abs(j["variability"].get<double>() - budget) / budget < 1e-8);
  const auto prof = lines(w.out("o") / "sigma_profile.csv");
  CHECK(prof[0].rfind("# tolopt optimize-tolerance config_hash=", 0) == 0);
  CHECK(prof[1] == "s,sigma");
  for (std::size_t k = 2; k < prof.size(); ++k) {
    const double sig = std::stod(prof[k].substr(prof[k].find(',') + 1));
    CHECK(sig >= 0.0);
    CHECK(sig <= 8e-4 * (1.0 + 1e-14));
  }
  const auto hist = lines(w.out("o") / "history.csv");
  CHECK(hist[1] == "iteration,objective,kkt_residual,constraint_violation,step_norm,merit");
}

TEST_CASE("artifacts are byte-identical across runs and thread counts")
{
  Workspace w("determinism", fixture("bowtie.cfg"));
  REQUIRE(run("optimize-tolerance", w.config(), w.out("a"), 24, 1) == exit_ok);
  REQUIRE(run("optimize-tolerance", w.config(), w.out("b"), 24, 1) == exit_ok);
  REQUIRE(run("optimize-tolerance", w.config(), w.out("c"), 24, 8) == exit_ok);
  for (const char* f : {"history.csv", "sigma_profile.csv", "result.json"}) {
    CHECK(slurp(w.out("a") / f) == slurp(w.out("b") / f));
    CHECK(slurp(w.out("a") / f) == slurp(w.out("c") / f));
  }
}

TEST_CASE("seed override changes the header and the draws")
{
  Workspace w("seed", fixture("bowtie.cfg"));
  CliOptions o;
  o.command = "sample";
  o.config = w.config();
  o.out = w.out("s1").string();
  o.seed = 99;
  std::ostringstream log, err;
  REQUIRE(run_command(o, log, err) == exit_ok);
  const auto real = lines(w.out("s1") / "realizations.csv");
  CHECK(real[0].find(" seed=99") != std::string::npos);
  REQUIRE(run("sample", w.config(), w.out("s2")) == exit_ok);
  CHECK(slurp(w.out("s1") / "realizations.csv") != slurp(w.out("s2") / "realizations.csv"));
}
