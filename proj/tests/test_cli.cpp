#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "wseg/cli.hpp"
#include "wseg/config.hpp"
#include "wseg/error.hpp"
#include "wseg/pipeline/manifest.hpp"

using namespace wseg;
using nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

json read_json(const std::filesystem::path& p) {
  std::ifstream f(p);
  return json::parse(f);
}

// Unsets WSEG_SEED on scope exit so cases don't leak into each other.
struct EnvSeed {
  explicit EnvSeed(const char* v) { ::setenv("WSEG_SEED", v, 1); }
  ~EnvSeed() { ::unsetenv("WSEG_SEED"); }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("toml subset") {
    const json j = parse_toml(
        "# top\nseed = 7\nname = \"a b\" # trailing\nrate = 1e-3\non = true\nlist = [1, 2, 3]\n"
        "[pretrain]\nepochs = 5\n[a.b]\nc = 'x'\n");
    CHECK(j["seed"] == 7);
    CHECK(j["name"] == "a b");
    CHECK(j["rate"].get<double>() == doctest::Approx(1e-3));
    CHECK(j["on"] == true);
    CHECK(j["list"] == json::array({1, 2, 3}));
    CHECK(j["pretrain"]["epochs"] == 5);
    CHECK(j["a"]["b"]["c"] == "x");
    CHECK_THROWS_AS(parse_toml("seed = \n"), FormatError);
    CHECK_THROWS_AS(parse_toml("[broken\n"), FormatError);
  }

  TEST_CASE("usage errors exit 1") {
    CHECK(cli({}).code == 1);
    CHECK(cli({"frobnicate"}).code == 1);
    CHECK(cli({"synth", "--no-such-flag"}).code == 1);
    CHECK(cli({"fuse"}).code == 1);
    CHECK(cli({"synth", "--count", "many"}).code == 1);
    const Run h = cli({"--help"});
    CHECK(h.code == 0);
    CHECK(h.out.find("WSEG_SEED") != std::string::npos);
    const Run sh = cli({"pretrain", "--help"});
    CHECK(sh.code == 0);
    CHECK(sh.out.find("--epochs") != std::string::npos);
    CHECK(sh.out.find("60") != std::string::npos);
    CHECK(sh.out.find("texture") != std::string::npos);
  }

  TEST_CASE("synth, weaklabel and fuse") {
    const auto dir = testutil::scratch("cli_data");
    const std::string d = (dir / "d").string();
    const Run s = cli({"synth", "--count", "4", "--seed", "3", "--out-dir", d});
    REQUIRE(s.code == 0);
    const auto mpath = (dir / "d" / "manifest.json").string();
    CHECK(std::filesystem::exists(mpath));
    const json echo = read_json(dir / "d" / "synth.config.json");
    CHECK(echo["config"]["count"] == 4);
    CHECK(echo["sources"]["count"] == "flag");
    CHECK(echo["sources"]["size"] == "default");
    CHECK(echo["config"]["seed"] == 3);

    CHECK(cli({"weaklabel", "--manifest", mpath}).code == 0);
    const Run f = cli({"fuse", "--manifest", mpath});
    REQUIRE(f.code == 0);
    const auto m = pipeline::DatasetManifest::load(mpath);
    for (const auto& smp : m.samples) {
      REQUIRE(smp.fused_gt_path.has_value());
      CHECK(std::filesystem::exists(m.resolve(*smp.fused_gt_path)));
      CHECK(smp.weak_label_path.has_value());
    }
    CHECK(read_json(dir / "d" / "fuse.config.json")["config"]["k"] == 2);
    CHECK(std::filesystem::exists(dir / "d" / "agreement.json"));
    CHECK(cli({"fuse", "--manifest", mpath, "--k", "9"}).code == 2);
    CHECK(cli({"fuse", "--manifest", (dir / "missing.json").string()}).code == 2);
  }

  TEST_CASE("seed priority and config files") {
    const auto dir = testutil::scratch("cli_seed");
    auto seed_of = [&](const std::string& sub) {
      return read_json(dir / sub / "synth.config.json")["config"]["seed"].get<std::uint64_t>();
    };
    auto source_of = [&](const std::string& sub) {
      return read_json(dir / sub / "synth.config.json")["sources"]["seed"].get<std::string>();
    };
    auto synth = [&](const std::string& sub, std::vector<std::string> extra) {
      std::vector<std::string> a = {"synth", "--count", "1", "--out-dir", (dir / sub).string()};
      a.insert(a.end(), extra.begin(), extra.end());
      return cli(a).code;
    };

    REQUIRE(synth("none", {}) == 0);
    CHECK(seed_of("none") == 0);
    CHECK(source_of("none") == "default");
    {
      EnvSeed env("41");
      REQUIRE(synth("env", {}) == 0);
      CHECK(seed_of("env") == 41);
      CHECK(source_of("env") == "env");

      std::ofstream(dir / "c.toml") << "seed = 12\nsize = 32\n[synth]\ncount = 2\n";
      REQUIRE(synth("cfg", {"--config", (dir / "c.toml").string()}) == 0);
      CHECK(seed_of("cfg") == 12);
      CHECK(source_of("cfg") == "config");
      const json e = read_json(dir / "cfg" / "synth.config.json");
      CHECK(e["config"]["size"] == 32);
      CHECK(e["config"]["count"] == 1);  // the flag still wins over [synth]

      REQUIRE(synth("flag", {"--config", (dir / "c.toml").string(), "--seed", "5"}) == 0);
      CHECK(seed_of("flag") == 5);
      CHECK(source_of("flag") == "flag");
    }
    {
      EnvSeed env("not-a-number");
      CHECK(synth("badenv", {}) == 1);
    }
    std::ofstream(dir / "bad.toml") << "colour = 3\n";
    CHECK(synth("badkey", {"--config", (dir / "bad.toml").string()}) == 1);
    std::ofstream(dir / "typed.toml") << "count = \"three\"\n";
    CHECK(synth("typed", {"--config", (dir / "typed.toml").string()}) == 1);
    CHECK(synth("nofile", {"--config", (dir / "absent.toml").string()}) == 1);

    std::ofstream(dir / "c.json") << R"({"seed": 8, "synth": {"size": 32}})";
    REQUIRE(synth("json", {"--config", (dir / "c.json").string()}) == 0);
    CHECK(seed_of("json") == 8);
  }

  TEST_CASE("stage checks") {
    const auto dir = testutil::scratch("cli_train");
    const std::string d = (dir / "d").string();
    const std::string mpath = d + "/manifest.json";
    REQUIRE(cli({"synth", "--count", "10", "--seed", "2", "--out-dir", d}).code == 0);
    REQUIRE(cli({"fuse", "--manifest", mpath}).code == 0);
    const std::string pre = (dir / "pre").string();
    const Run p = cli({"pretrain", "--manifest", mpath, "--epochs", "1", "--base-width", "4", "--depth", "1",
                       "--out-dir", pre});
    REQUIRE(p.code == 0);
    CHECK(std::filesystem::exists(dir / "pre" / "pretrain.ckpt"));
    CHECK(std::filesystem::exists(dir / "pre" / "splits.json"));
    CHECK(std::filesystem::exists(dir / "pre" / "pretrain.curve.json"));

    const Run bad = cli({"evaluate", "--checkpoint", pre + "/pretrain.ckpt", "--manifest", mpath, "--out-dir",
                         (dir / "ev").string()});
    CHECK(bad.code == 2);
    CHECK_FALSE(bad.err.empty());

    const std::string fin = (dir / "fin").string();
    REQUIRE(cli({"finetune", "--manifest", mpath, "--checkpoint", pre + "/pretrain.ckpt", "--epochs", "1",
                 "--base-width", "4", "--depth", "1", "--out-dir", fin})
                .code == 0);
    CHECK(std::filesystem::exists(dir / "fin" / "test" / "metrics.json"));
    CHECK(cli({"finetune", "--manifest", mpath, "--checkpoint", fin + "/finetune.ckpt", "--epochs", "1",
               "--base-width", "4", "--depth", "1", "--out-dir", (dir / "fin2").string()})
              .code == 2);

    const Run ev = cli({"evaluate", "--checkpoint", fin + "/finetune.ckpt", "--manifest", mpath, "--split", "all",
                        "--out-dir", (dir / "ev").string()});
    REQUIRE(ev.code == 0);
    const json mj = read_json(dir / "ev" / "metrics.json");
    CHECK(mj["per_image"].size() == 10);
    CHECK(cli({"evaluate", "--checkpoint", fin + "/finetune.ckpt", "--manifest", mpath, "--split", "dev"}).code == 1);
  }

  TEST_CASE("report") {
    const auto dir = testutil::scratch("cli_report");
    std::ofstream(dir / "a.csv") << "method,fraction,seed,mean_jsi,pooled_jsi,n_params\n"
                                    "ours,1,0,0.5,0.5,10\nours,1,1,0.7,0.7,10\n";
    const Run r = cli({"report", "--csv", (dir / "a.csv").string(), "--out-dir", (dir / "o").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("0.6") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "o" / "report.txt"));
    std::ofstream(dir / "b.csv") << "nonsense\n";
    CHECK(cli({"report", "--csv", (dir / "b.csv").string()}).code == 2);
  }
}
