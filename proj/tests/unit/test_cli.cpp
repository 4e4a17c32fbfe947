#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "layoutforge/cli.hpp"
#include "layoutforge/forge.hpp"
#include "layoutforge/json_io.hpp"
#include "support.hpp"

using namespace layoutforge;
using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "layoutforge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

std::string write_layout(const TempDir& dir, const std::string& name, const Layout& l) {
  const std::string path = dir / name;
  json_io::write_text_file(path, json_io::to_json(l).dump());
  return path;
}

Layout kitchen(double stove_x) {
  return lf_test::room(RoomType::kitchen, lf_test::rect_floor(4, 3),
                       {lf_test::object("fridge_0", "fridge", 0.7, 0.7, -1.0, 0.0), lf_test::object("stove_0", "stove", 0.6, 0.6, stove_x, 0.0)});
}

std::string fixture(const std::string& rel) { return (lf_test::data_dir() / rel).string(); }

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"validate"}).code == 2);
  CHECK(run({"dpo-loss", "--policy-chosen", "1"}).code == 2);
  CHECK(run({"pairs-stage2", "--corpus", "x", "--output", "y", "--mix", "2"}).code == 2);
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("validate") != std::string::npos);
}

TEST_CASE("validate exit status follows usability") {
  TempDir dir("layoutforge_cli_validate");
  const auto ok = run({"validate", "--layout", write_layout(dir, "ok.json", kitchen(1.0))});
  CHECK(ok.code == 0);
  CHECK(Json::parse(ok.out).at("usable") == true);

  // A stage-2 negative is unusable under the forge thresholds.
  std::mt19937_64 gen(3);
  SceneRecord rec;
  rec.scene_id = "x";
  rec.source = SceneSource::generated;
  rec.layout = lf_test::random_clean_layout(gen);
  const auto pair = forge::synth_stage2_pairs({rec}, 9, 1.0).pairs.at(0);
  const auto bad = run({"validate", "--layout", write_layout(dir, "bad.json", pair.negative), "--max-pair-overlap", "1e-6",
                        "--max-boundary-violation", "1e-6"});
  CHECK(bad.code == 1);
  CHECK(Json::parse(bad.out).at("usable") == false);

  // A wrapped {"layout": ...} document is accepted too.
  json_io::write_text_file(dir / "wrapped.json", Json{{"layout", json_io::to_json(kitchen(1.0))}}.dump());
  CHECK(run({"validate", "--layout", dir / "wrapped.json"}).code == 0);

  const auto missing = run({"validate", "--layout", dir / "nope.json"});
  CHECK(missing.code == 1);
  CHECK(missing.err.starts_with("error [io_error]"));
}

TEST_CASE("dataset commands") {
  TempDir dir("layoutforge_cli_dataset");
  const auto front = run({"ingest", "--source", "three_d_front", "--input", fixture("fixtures/scenes/front_bedroom.json"),
                          "--output", dir / "front.jsonl"});
  REQUIRE(front.code == 0);
  const auto holo = run({"ingest", "--source", "holodeck_synth", "--input", fixture("fixtures/scenes/holodeck_kitchen.json")});
  REQUIRE(holo.code == 0);
  json_io::write_text_file(dir / "corpus.jsonl", json_io::read_text_file(dir / "front.jsonl") + holo.out);
  CHECK(json_io::read_corpus(dir / "corpus.jsonl").size() == 2);

  const auto filtered = run({"filter", "--corpus", dir / "corpus.jsonl", "--accepted", dir / "acc.jsonl", "--rejected", dir / "rej.jsonl"});
  REQUIRE(filtered.code == 0);
  const Json f = Json::parse(filtered.out);
  CHECK(f.at("accepted").get<std::size_t>() + f.at("rejected").get<std::size_t>() == 2);
  CHECK(json_io::read_corpus(dir / "acc.jsonl").size() == f.at("accepted").get<std::size_t>());

  const auto stats = run({"stats", "--corpus", dir / "corpus.jsonl"});
  REQUIRE(stats.code == 0);
  CHECK(Json::parse(stats.out).is_object());

  const auto split = run({"split", "--corpus", dir / "corpus.jsonl", "--plan", "bedroom=1", "--seed", "4", "--train",
                          dir / "train.jsonl", "--test", dir / "test.jsonl"});
  REQUIRE(split.code == 0);
  CHECK(Json::parse(split.out).at("test") == 1);
  CHECK(Json::parse(split.out).at("train") == 1);
  // Asking for more than exists is a domain error.
  CHECK(run({"split", "--corpus", dir / "corpus.jsonl", "--plan", "bedroom=5", "--train", dir / "a", "--test", dir / "b"}).code == 1);
}

TEST_CASE("preference commands") {
  TempDir dir("layoutforge_cli_forge");
  std::mt19937_64 gen(5);
  std::vector<SceneRecord> positives;
  for (int i = 0; i < 6; ++i) {
    SceneRecord r;
    r.scene_id = "p" + std::to_string(i);
    r.source = SceneSource::generated;
    r.layout = lf_test::random_clean_layout(gen);
    positives.push_back(r);
  }
  json_io::write_corpus(dir / "pos.jsonl", positives);
  const auto p2 = run({"pairs-stage2", "--corpus", dir / "pos.jsonl", "--output", dir / "pairs.jsonl", "--seed", "11", "--mix", "0.5"});
  REQUIRE(p2.code == 0);
  const Json summary = Json::parse(p2.out);
  CHECK(summary.at("pairs") == 6);
  CHECK(summary.at("overlap") == 3);
  CHECK(summary.at("out_of_bounds") == 3);
  CHECK(forge::import_pairs(dir / "pairs.jsonl").size() == 6);
  // Same seed, same file.
  const std::string first = json_io::read_text_file(dir / "pairs.jsonl");
  REQUIRE(run({"pairs-stage2", "--corpus", dir / "pos.jsonl", "--output", dir / "pairs.jsonl", "--seed", "11", "--mix", "0.5"}).code == 0);
  CHECK(json_io::read_text_file(dir / "pairs.jsonl") == first);

  const auto loss = run({"dpo-loss", "--policy-chosen", "2", "--policy-rejected", "1", "--ref-chosen", "0", "--ref-rejected", "0",
                         "--beta", "0.1"});
  REQUIRE(loss.code == 0);
  CHECK(std::abs(std::stod(loss.out) - lf_test::naive_dpo(2, 1, 0, 0, 0.1)) < 1e-12);
  CHECK(run({"dpo-loss", "--policy-chosen", "0", "--policy-rejected", "0", "--ref-chosen", "0", "--ref-rejected", "0", "--beta", "0"})
            .code == 1);
}

TEST_CASE("generation, prompts and evaluation") {
  TempDir dir("layoutforge_cli_eval");
  const std::string task = fixture("fixtures/parser/task.json");

  const auto gen = run({"generate", "--task", task, "--backend", "mock_template", "--output", dir / "gen.json"});
  REQUIRE(gen.code == 0);
  const Json result = Json::parse(json_io::read_text_file(dir / "gen.json"));
  CHECK(result.at("report").at("usable") == true);
  CHECK(result.at("layout").at("objects").size() == 4);
  CHECK(run({"validate", "--layout", dir / "gen.json", "--task", task}).code == 0);

  const auto prompt = run({"prompt", "--template", "generate", "--task", task});
  REQUIRE(prompt.code == 0);
  CHECK(prompt.out.find("[Task Room Type]") != std::string::npos);
  const auto edit = run({"prompt", "--template", "edit", "--layout", dir / "gen.json", "--instruction", "remove the bed", "--json"});
  REQUIRE(edit.code == 0);
  CHECK(Json::parse(edit.out).at("template") == "edit");
  CHECK(run({"prompt", "--template", "edit", "--layout", dir / "gen.json"}).code == 1);

  const auto svg = run({"render", "--layout", dir / "gen.json", "--no-labels"});
  REQUIRE(svg.code == 0);
  CHECK(svg.out.starts_with("<svg"));
  CHECK(svg.out.find("<text") == std::string::npos);

  const auto rate = run({"eval-success", "--tasks", task, "--n", "3", "--backend", "mock_template"});
  REQUIRE(rate.code == 0);
  CHECK(Json::parse(rate.out).at("rooms").at("bedroom").at("success_rate") == 1.0);

  json_io::write_text_file(dir / "open.json", json_io::to_json(lf_test::open_room()).dump());
  const auto nav = run({"eval-nav", "--layout", dir / "open.json", "--target", "table_0", "--start", "-2.5", "-2.5", "0"});
  REQUIRE(nav.code == 0);
  CHECK(Json::parse(nav.out).at("success") == true);
  CHECK(run({"eval-nav", "--layout", dir / "open.json", "--target", "ghost", "--start", "0", "-1", "0"}).code == 1);

  const auto judged = run({"judge", "--layouts", dir / "gen.json", "--preferences", "cozy", "--backend", "mock_template"});
  REQUIRE(judged.code == 0);
  CHECK(Json::parse(judged.out).size() == 1);
}

TEST_CASE("scripted backend through the binary") {
  TempDir dir("layoutforge_cli_binary");
  const std::string bin = LAYOUTFORGE_CLI;
  const auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  json_io::write_text_file(dir / "script.jsonl", Json{{"response", "no answer here"}}.dump() + "\n");
  const std::string task = fixture("fixtures/parser/task.json");
  CHECK(status(bin + " generate --task " + task + " --script " + (dir / "script.jsonl")) == 1);
  const auto refused = run({"generate", "--task", task, "--script", dir / "script.jsonl"});
  CHECK(refused.err.starts_with("error [no_answer_block]"));
  json_io::write_text_file(dir / "bad_script.jsonl", "\"not an object\"\n");
  CHECK(run({"generate", "--task", task, "--script", dir / "bad_script.jsonl"}).err.starts_with("error [schema_error]"));
  CHECK(status(bin + " generate --task " + task + " --backend mock_template") == 0);
  CHECK(status(bin + " nonsense") == 2);
}
