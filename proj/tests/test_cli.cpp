#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "melfun/cli.hpp"

using namespace melfun;
namespace fs = std::filesystem;

namespace {

struct CliRun
{
  int code;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args)
{
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return { code, out.str(), err.str() };
}

fs::path tmp_dir()
{
  const fs::path d = fs::temp_directory_path() / "melfun_cli_tests";
  fs::create_directories(d);
  return d;
}

fs::path write_file(const std::string& name, const std::string& content)
{
  const fs::path p = tmp_dir() / name;
  std::ofstream f(p);
  f << content;
  return p;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

const std::string b1_scenario = R"({
  "target": "beta:2",
  "error": "beta:1",
  "functional": {"kind": "density", "x0": 1.0},
  "c": 1.0,
  "n": 150,
  "replications": 8,
  "seed": 4242,
  "selection": {"mode": "fixed_k", "k": 2.0}
})";

} // namespace

TEST_SUITE("cli")
{
  TEST_CASE("estimate at a fixed cut-off reproduces the closed form")
  {
    const auto input = write_file("ones.csv", "1\n1\n1\n");
    const auto r = run({ "estimate", "--input", input.string(),
                         "--functional", "density", "--x0", "1", "--c", "1",
                         "--error", "beta:1", "--k", "1" });
    CHECK(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("theta_hat").get<double>() ==
          doctest::Approx(1.0 / pi).epsilon(1e-10));
    CHECK(j.at("n") == 3);
  }

  TEST_CASE("a non-positive cut-off is an input error")
  {
    const auto input = write_file("ones.csv", "1\n1\n1\n");
    const auto r = run({ "estimate", "--input", input.string(),
                         "--functional", "density", "--x0", "1", "--c", "1",
                         "--error", "beta:1", "--k", "0" });
    CHECK(r.code == 2);
  }

  TEST_CASE("an inadmissible development point is an assumption violation")
  {
    const auto input = write_file("ones.csv", "1\n1\n1\n");
    const auto r = run({ "estimate", "--input", input.string(),
                         "--functional", "cdf", "--x0", "1", "--c", "2",
                         "--error", "beta:1", "--k", "1" });
    CHECK(r.code == 3);
    CHECK(r.err.find("c=2") != std::string::npos);
  }

  TEST_CASE("malformed observations are reported with their line number")
  {
    const auto input = write_file("bad.csv", "1.0\npotato\n2.0\n");
    const auto r = run({ "estimate", "--input", input.string(),
                         "--functional", "density", "--x0", "1", "--c", "1",
                         "--error", "beta:1", "--k", "1" });
    CHECK(r.code == 2);
    CHECK(r.err.find("line 2") != std::string::npos);

    const auto neg = write_file("neg.csv", "1.0\n-3\n");
    const auto r2 = run({ "estimate", "--input", neg.string(),
                          "--functional", "density", "--x0", "1", "--c", "1",
                          "--error", "beta:1", "--k", "1" });
    CHECK(r2.code == 2);
    CHECK(r2.err.find("line 2") != std::string::npos);
  }

  TEST_CASE("adaptive estimation and the select subcommand agree")
  {
    std::string csv;
    CounterRng rng = CounterRng::derive(88, 0, 0);
    for (int i = 0; i < 400; ++i)
      csv += format_g17(rng.next_exponential() * rng.next_uniform()) + "\n";
    const auto input = write_file("sample.csv", csv);

    const auto est = run({ "estimate", "--input", input.string(),
                           "--functional", "density", "--x0", "1", "--c", "1",
                           "--error", "beta:1", "--adaptive", "--chi", "0.5",
                           "--grid", "practical" });
    CHECK(est.code == 0);
    const json je = json::parse(est.out);
    CHECK(je.contains("k_hat"));
    CHECK(je.at("certified") == false);

    const auto sel = run({ "select", "--input", input.string(),
                           "--functional", "density", "--x0", "1", "--c", "1",
                           "--error", "beta:1", "--chi", "0.5", "--grid",
                           "practical" });
    CHECK(sel.code == 0);
    CHECK(json::parse(sel.out) == je);
  }

  TEST_CASE("the delta subcommand tabulates the variance proxy")
  {
    const auto r = run({ "delta", "--functional", "density", "--x0", "1",
                         "--c", "1", "--error", "beta:1", "--k", "1", "--k",
                         "5" });
    CHECK(r.code == 0);
    const json j = json::parse(r.out);
    REQUIRE(j.at("values").size() == 2);
    CHECK(j.at("values")[0].at("delta").get<double>() ==
          doctest::Approx(4.0 / (3.0 * pi)).epsilon(1e-8));
    CHECK(j.at("regime") == "nonparametric");
  }

  TEST_CASE("the regime subcommand reports both decay classes")
  {
    const auto r = run({ "regime", "--functional", "laplace", "--x0", "1",
                         "--c", "0.5", "--error", "beta:2" });
    CHECK(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("psi_decay").at("kind") == "super_smooth");
    CHECK(j.at("g_decay").at("kind") == "smooth");
    CHECK(j.at("regime") == "parametric");
  }

  TEST_CASE("simulate writes a report and a per-replication csv")
  {
    const auto scen = write_file("scen.json", b1_scenario);
    const auto out = tmp_dir() / "rep.json";
    const auto csv = tmp_dir() / "rep.csv";
    const auto r = run({ "simulate", "--scenario", scen.string(), "--output",
                         out.string(), "--csv", csv.string() });
    CHECK(r.code == 0);
    const json j = json::parse(slurp(out));
    CHECK(j.at("mse").get<double>() > 0.0);
    CHECK(j.at("theta_true").get<double>() == 0.0); // density of 2(1-x) at 1
    const std::string c = slurp(csv);
    CHECK(c.rfind("n,replication,k,theta_hat,theta_true,squared_error\n",
                  0) == 0);
    // 8 replications + header
    CHECK(std::count(c.begin(), c.end(), '\n') == 9);
  }

  TEST_CASE("simulate reports are byte-identical across reruns and worker "
            "counts")
  {
    const auto scen = write_file("scen2.json", b1_scenario);
    const auto o1 = tmp_dir() / "r1.json";
    const auto o2 = tmp_dir() / "r2.json";
    const auto o3 = tmp_dir() / "r3.json";
    CHECK(run({ "simulate", "--scenario", scen.string(), "--output",
                o1.string(), "--threads", "1" })
            .code == 0);
    CHECK(run({ "simulate", "--scenario", scen.string(), "--output",
                o2.string(), "--threads", "2" })
            .code == 0);
    CHECK(run({ "simulate", "--scenario", scen.string(), "--output",
                o3.string(), "--threads", "8" })
            .code == 0);
    CHECK(slurp(o1) == slurp(o2));
    CHECK(slurp(o1) == slurp(o3));
  }

  TEST_CASE("scenario schema violations exit with the input-error code")
  {
    const auto scen = write_file("bad_scen.json", R"({"target": "beta:2"})");
    const auto r = run({ "simulate", "--scenario", scen.string() });
    CHECK(r.code == 2);
    CHECK(r.err.find("/error") != std::string::npos);

    const auto notjson = write_file("notjson.json", "{{{");
    CHECK(run({ "simulate", "--scenario", notjson.string() }).code == 2);
  }

  TEST_CASE("rates fits the slope and emits the plot csv")
  {
    const std::string rates_scenario = R"({
      "target": "beta:2",
      "error": "beta:1",
      "functional": {"kind": "density", "x0": 1.0},
      "c": 1.0,
      "n_list": [100, 200, 400],
      "replications": 10,
      "seed": 11,
      "selection": {"mode": "k_power", "coeff": 1.0, "exponent": 0.25},
      "sobolev_s": 1.5
    })";
    const auto scen = write_file("rates.json", rates_scenario);
    const auto out = tmp_dir() / "rates_rep.json";
    const auto csv = tmp_dir() / "rates.csv";
    const auto r = run({ "rates", "--scenario", scen.string(), "--output",
                         out.string(), "--csv", csv.string() });
    CHECK(r.code == 0);
    const json j = json::parse(slurp(out));
    CHECK(j.contains("slope"));
    CHECK(j.at("theory_slope").get<double>() == doctest::Approx(-0.4));
    CHECK(j.at("points").size() == 3);
    CHECK(slurp(csv).rfind("log_n,log_mse,stderr\n", 0) == 0);
  }

  TEST_CASE("help and argument errors")
  {
    CHECK(run({ "--help" }).code == 0);
    CHECK(run({}).code == 2);
    CHECK(run({ "estimate" }).code == 2); // missing required flags
    const auto input = write_file("ones.csv", "1\n");
    // both --k and --adaptive is a contradiction
    CHECK(run({ "estimate", "--input", input.string(), "--functional",
                "density", "--x0", "1", "--c", "1", "--error", "beta:1",
                "--k", "1", "--adaptive" })
            .code == 2);
    // neither --k nor --adaptive
    CHECK(run({ "estimate", "--input", input.string(), "--functional",
                "density", "--x0", "1", "--c", "1", "--error", "beta:1" })
            .code == 2);
  }
}
