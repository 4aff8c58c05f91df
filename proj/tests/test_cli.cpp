#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "voltdmd/cli.hpp"
#include "voltdmd/error.hpp"

using namespace voltdmd;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "voltdmd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

struct Workspace {
  fs::path dir;
  explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / ("voltdmd_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string operator/(const std::string& rel) const { return (dir / rel).string(); }
};

Run synth(const Workspace& ws, const std::string& sub = "data") {
  return cli({"synth", "--out", ws / sub, "--repetitions", "2", "--dt", "10", "--noise", "0.001",
              "--seed", "3", "--cycles", "40,80"});
}

}  // namespace

TEST_CASE("exit codes", "[cli]") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"bogus"}).code == 2);
  CHECK(cli({"fit", "--m", "notanumber", "--input", "x.csv"}).code == 2);
  const auto missing = cli({"fit", "--kind", "dmdc", "--m", "4", "--input", "nowhere.csv"});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("ell") != std::string::npos);
  CHECK(cli({"fit", "--kind", "dmd", "--m", "4", "--input", "nowhere.csv"}).code == 1);
  CHECK(cli({"synth", "--help"}).code == 0);
}

TEST_CASE("parse_grid", "[cli]") {
  CHECK(parse_grid("2:10:4") == std::vector<Eigen::Index>{2, 6, 10});
  CHECK(parse_grid("3:5") == std::vector<Eigen::Index>{3, 4, 5});
  CHECK(parse_grid("1, 7,9") == std::vector<Eigen::Index>{1, 7, 9});
  CHECK_THROWS_AS(parse_grid("5:1"), DataError);
  CHECK_THROWS_AS(parse_grid("a:b"), DataError);
  CHECK_THROWS_AS(parse_grid(""), DataError);
}

TEST_CASE("synth is deterministic", "[cli]") {
  Workspace ws("synth");
  REQUIRE(synth(ws, "a").code == 0);
  REQUIRE(synth(ws, "b").code == 0);
  for (const char* f : {"healthy.csv", "cycle_40.csv", "cycle_80.csv", "protocol.json", "manifest.json"})
    CHECK(slurp(ws.dir / "a" / f) == slurp(ws.dir / "b" / f));
  const auto manifest = load(ws.dir / "a" / "manifest.json");
  CHECK(manifest["files"].size() == 3);
  CHECK(manifest["files"][1]["path"] == "cycle_40.csv");
  CHECK(fs::is_empty(ws.dir) == false);
  CHECK_FALSE(fs::exists(ws.dir / "a" / "healthy.csv.tmp"));
}

TEST_CASE("fit, simulate and transfer agree", "[cli]") {
  Workspace ws("pipeline");
  REQUIRE(synth(ws).code == 0);
  const std::string healthy = ws / "data/healthy.csv";
  for (const char* kind : {"dmd", "dmdc"}) {
    std::vector<std::string> fit = {"fit", "--kind", kind, "--m", "12", "--input", healthy, "--out",
                                    ws / kind, "--poles", "3"};
    if (std::string(kind) == "dmdc") fit.insert(fit.end(), {"--ell", "2"});
    const auto f = cli(fit);
    REQUIRE(f.code == 0);
    const auto report = load(ws.dir / kind / "fit_report.json");
    CHECK(report["poles"].size() == 3);
    REQUIRE(report["open_loop"].contains("rss"));

    const std::string model = ws / (std::string(kind) + "/model.json");
    const auto s = cli({"simulate", "--model", model, "--input", healthy, "--out", ws / kind});
    REQUIRE(s.code == 0);
    const auto rr = load(ws.dir / kind / "rss_report.json");
    CHECK(rr["full"]["rss"] == report["open_loop"]["rss"]);
    CHECK(rr["holdout"]["rss"] == report["holdout"]["rss"]);
    CHECK(rr["model_digest"] == load(model)["digest"]);

    const auto t = cli({"transfer", "--model", model, "--aged", healthy, "--aged",
                        ws / "data/cycle_40.csv", "--out", ws / kind});
    REQUIRE(t.code == 0);
    const auto tj = load(ws.dir / kind / "transfer.json");
    REQUIRE(tj["rows"].size() == 2);
    CHECK(tj["rows"][0]["cycle"] == 0);
    CHECK(tj["rows"][1]["cycle"] == 40);
    CHECK(tj["rows"][0]["report"]["rss"] == rr["full"]["rss"]);
    CHECK(slurp(ws.dir / kind / "transfer.csv").rfind("cycle,kind,rss,nrss\n", 0) == 0);

    // embedding flags that contradict the model are rejected
    CHECK(cli({"simulate", "--model", model, "--input", healthy, "--m", "13", "--out", ws / kind}).code == 1);
  }
}

TEST_CASE("simulate on a short record", "[cli]") {
  Workspace ws("short");
  REQUIRE(synth(ws).code == 0);
  REQUIRE(cli({"fit", "--kind", "dmd", "--m", "40", "--input", ws / "data/healthy.csv", "--out", ws / "fit"}).code == 0);
  {
    std::ofstream out(ws / "short.csv");
    out << "time_s,current_a,voltage_v\n";
    for (int k = 0; k < 41; ++k) out << k * 10 << ",0,4.0\n";
  }
  const auto r = cli({"simulate", "--model", ws / "fit/model.json", "--input", ws / "short.csv", "--out",
                      ws / "sim"});
  CHECK(r.code == 1);
  CHECK(r.err.find("insufficient history") != std::string::npos);
  CHECK_FALSE(fs::exists(ws.dir / "sim" / "forecast.csv"));
}

TEST_CASE("sweep outputs", "[cli]") {
  Workspace ws("sweep");
  REQUIRE(synth(ws).code == 0);
  const auto r = cli({"sweep", "--kind", "dmdc", "--input", ws / "data/healthy.csv", "--m-grid", "8",
                      "--ell-grid", "1:3", "--out", ws / "sw"});
  REQUIRE(r.code == 0);
  CHECK(slurp(ws.dir / "sw" / "sweep_m.csv").rfind("param,rss,nrss\n8,", 0) == 0);
  const auto doc = load(ws.dir / "sw" / "sweep.json");
  REQUIRE(doc["stages"].size() == 2);
  CHECK(doc["stages"][0]["best"] == 8);
  CHECK(doc["stages"][1]["fixed"]["m"] == 8);
  CHECK(doc["stages"][1]["rows"].size() == 3);
  CHECK(doc["stages"][1]["curve"]["x"].size() == 3);

  const auto bad = cli({"sweep", "--kind", "dmd", "--input", ws / "data/healthy.csv", "--m-grid", "5000",
                        "--out", ws / "sw2"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("m=5000") != std::string::npos);
  CHECK_FALSE(fs::exists(ws.dir / "sw2" / "sweep.json"));
  CHECK(cli({"sweep", "--kind", "dmd", "--input", ws / "data/healthy.csv", "--ell-grid", "1:2", "--m", "4"})
            .code == 2);
}

TEST_CASE("config file and flag precedence", "[cli]") {
  Workspace ws("config");
  {
    std::ofstream out(ws / "cfg.json");
    out << R"({"repetitions": 1, "dt": 20, "noise": 0.0, "seed": 9})";
  }
  REQUIRE(cli({"synth", "--config", ws / "cfg.json", "--out", ws / "a"}).code == 0);
  REQUIRE(cli({"synth", "--config", ws / "cfg.json", "--dt", "10", "--out", ws / "b"}).code == 0);
  const auto a = load(ws.dir / "a" / "manifest.json");
  const auto b = load(ws.dir / "b" / "manifest.json");
  CHECK(a["dt"] == 20.0);
  CHECK(a["repetitions"] == 1);
  CHECK(b["dt"] == 10.0);
  CHECK(b["files"][0]["samples"].get<int>() > a["files"][0]["samples"].get<int>());

  {
    std::ofstream out(ws / "bad.json");
    out << R"({"repetitons": 1})";
  }
  CHECK(cli({"synth", "--config", ws / "bad.json", "--out", ws / "c"}).code == 2);
}
