#include "layoutforge/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "layoutforge/dataset.hpp"
#include "layoutforge/errors.hpp"
#include "layoutforge/eval.hpp"
#include "layoutforge/forge.hpp"
#include "layoutforge/gateway.hpp"
#include "layoutforge/json_io.hpp"
#include "layoutforge/prompt.hpp"
#include "layoutforge/service.hpp"

namespace layoutforge::cli {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// A file holding one JSON value, a JSON array of values, or JSONL.
std::vector<Json> read_documents(const fs::path& path) {
  const std::string text = json_io::read_text_file(path);
  try {
    Json whole = Json::parse(text);
    if (whole.is_array()) return {whole.begin(), whole.end()};
    return {std::move(whole)};
  } catch (const Json::parse_error&) {
    // Fall through to JSONL.
  }
  std::vector<Json> docs;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      docs.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw SchemaError(fmt::format("{} line {}: {}", path.string(), line_no, e.what()));
    }
  }
  return docs;
}

Json read_single(const fs::path& path) {
  auto docs = read_documents(path);
  if (docs.size() != 1) throw SchemaError(fmt::format("{}: expected one JSON document", path.string()));
  return std::move(docs.front());
}

// A layout file may be a bare layout or anything carrying one under "layout"
// (generate output, session history entries).
Layout layout_from_document(const Json& j) {
  if (j.is_object() && j.contains("layout") && j.at("layout").is_object()) return json_io::layout_from_json(j.at("layout"));
  return json_io::layout_from_json(j);
}

void emit(std::ostream& out, const Json& j) { out << j.dump(2) << '\n'; }

void write_or_emit(std::ostream& out, const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    json_io::write_text_file(path, text);
  }
}

struct BackendFlags {
  std::string kind;
  std::string script;
  std::string endpoint;
  int max_in_flight = 4;
  double temperature = 0.7;
  int max_tokens = 2048;
  std::string model = "layoutforge-default";
  std::optional<std::int64_t> seed;
  std::string catalog;

  void attach(CLI::App* cmd) {
    cmd->add_option("--backend", kind, "http_chat | mock_scripted | mock_template (default from environment)");
    cmd->add_option("--script", script, "JSONL script for mock_scripted");
    cmd->add_option("--endpoint", endpoint, "chat-completions URL (overrides LAYOUTFORGE_LLM_URL)");
    cmd->add_option("--max-in-flight", max_in_flight, "concurrent backend calls")->check(CLI::PositiveNumber);
    cmd->add_option("--temperature", temperature, "sampling temperature");
    cmd->add_option("--max-tokens", max_tokens, "completion token limit");
    cmd->add_option("--model", model, "model name sent to the endpoint");
    cmd->add_option("--seed", seed, "sampling seed forwarded to the backend");
    cmd->add_option("--catalog", catalog, "asset catalog JSON (default: built-in)");
  }

  AssetCatalog load_catalog() const {
    if (catalog.empty()) return AssetCatalog::builtin();
    return json_io::catalog_from_json(read_single(catalog));
  }

  gateway::GenerationParams params() const {
    gateway::GenerationParams p;
    p.temperature = temperature;
    p.max_tokens = max_tokens;
    p.model_name = model;
    p.seed = seed;
    gateway::check_params(p);
    return p;
  }

  std::shared_ptr<gateway::Gateway> make_gateway() const {
    std::optional<gateway::BackendKind> k;
    if (!kind.empty()) k = gateway::parse_backend_kind(kind);
    if (!k && !script.empty()) k = gateway::BackendKind::mock_scripted;
    gateway::BackendConfig config = gateway::config_from_env(k);
    if (!endpoint.empty()) config.endpoint = endpoint;
    config.script_path = script;
    config.max_in_flight = max_in_flight;
    std::shared_ptr<gateway::Backend> backend;
    if (config.kind == gateway::BackendKind::mock_template && !catalog.empty()) {
      gateway::check_config(config);
      backend = std::make_shared<gateway::TemplateBackend>(load_catalog());
    } else {
      backend = gateway::make_backend(config);
    }
    return std::make_shared<gateway::Gateway>(backend, config.max_in_flight);
  }
};

struct ThresholdFlags {
  eval::ValidationThresholds t;

  void attach(CLI::App* cmd) {
    cmd->add_option("--max-pair-overlap", t.max_pair_overlap, "usable limit per object pair (m^2)");
    cmd->add_option("--max-boundary-violation", t.max_boundary_violation, "usable limit per object (m^2)");
    cmd->add_flag("--require-counts", t.require_counts_match, "unusable when object counts differ from the task");
  }

  eval::ValidationThresholds get() const {
    eval::check_thresholds(t);
    return t;
  }
};

TaskSpec load_task(const std::string& path, const AssetCatalog& catalog) {
  TaskSpec task = json_io::task_from_json(read_single(path));
  task.objects = retrieve_boxes(std::move(task.objects), catalog);
  return task;
}

dataset::PipelineConfig load_pipeline_config(const std::string& path) {
  return path.empty() ? dataset::PipelineConfig{} : dataset::load_config(path);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Indoor layout generation toolkit", "layoutforge"};
  app.require_subcommand(1);

  // ingest
  std::string in_source = "three_d_front";
  std::vector<std::string> in_inputs;
  std::string in_output, in_config;
  auto* ingest = app.add_subcommand("ingest", "Normalize source scenes into a corpus JSONL");
  ingest->add_option("--source", in_source, "three_d_front | holodeck_synth | generated");
  ingest->add_option("--input", in_inputs, "scene file(s): JSON object, array or JSONL")->required();
  ingest->add_option("--output", in_output, "corpus JSONL (default: stdout)");
  ingest->add_option("--config", in_config, "pipeline config JSON");

  // filter
  std::string f_corpus, f_accepted, f_rejected, f_config;
  auto* filter = app.add_subcommand("filter", "Apply the heuristic quality filter");
  filter->add_option("--corpus", f_corpus, "input corpus JSONL")->required();
  filter->add_option("--accepted", f_accepted, "accepted records JSONL");
  filter->add_option("--rejected", f_rejected, "rejected records JSONL");
  filter->add_option("--config", f_config, "pipeline config JSON");

  // stats
  std::string s_corpus, s_output;
  auto* stats = app.add_subcommand("stats", "Corpus statistics report");
  stats->add_option("--corpus", s_corpus, "corpus JSONL")->required();
  stats->add_option("--output", s_output, "report JSON (default: stdout)");

  // split
  std::string sp_corpus, sp_plan, sp_train, sp_test;
  std::uint64_t sp_seed = 0;
  auto* split = app.add_subcommand("split", "Seeded train/test split");
  split->add_option("--corpus", sp_corpus, "corpus JSONL")->required();
  split->add_option("--plan", sp_plan, "test counts, e.g. bedroom=423,living_room=53")->required();
  split->add_option("--seed", sp_seed, "shuffle seed");
  split->add_option("--train", sp_train, "train JSONL")->required();
  split->add_option("--test", sp_test, "test JSONL")->required();

  // prompt
  std::string p_kind = "generate", p_task, p_layout, p_instruction, p_preferences, p_catalog;
  bool p_json = false;
  auto* prompt_cmd = app.add_subcommand("prompt", "Render a prompt without calling a model");
  prompt_cmd->add_option("--template", p_kind, "generate | edit | judge | summarize");
  prompt_cmd->add_option("--task", p_task, "task JSON (generate)");
  prompt_cmd->add_option("--layout", p_layout, "layout JSON (edit, judge, summarize)");
  prompt_cmd->add_option("--instruction", p_instruction, "edit instruction");
  prompt_cmd->add_option("--preferences", p_preferences, "judge preferences text");
  prompt_cmd->add_option("--catalog", p_catalog, "asset catalog JSON");
  prompt_cmd->add_flag("--json", p_json, "print the bundle as JSON with its fingerprint");

  // generate
  BackendFlags g_backend;
  ThresholdFlags g_thresholds;
  std::string g_task, g_output;
  auto* generate = app.add_subcommand("generate", "Generate a layout for a task");
  generate->add_option("--task", g_task, "task JSON")->required();
  generate->add_option("--output", g_output, "result JSON (default: stdout)");
  g_backend.attach(generate);
  g_thresholds.attach(generate);

  // validate
  ThresholdFlags v_thresholds;
  std::string v_layout, v_task;
  auto* validate_cmd = app.add_subcommand("validate", "Validate a layout; exit 1 when unusable");
  validate_cmd->add_option("--layout", v_layout, "layout JSON")->required();
  validate_cmd->add_option("--task", v_task, "task JSON for the count check");
  v_thresholds.attach(validate_cmd);

  // render
  std::string r_layout, r_output;
  eval::SvgOptions r_options;
  bool r_no_labels = false;
  auto* render = app.add_subcommand("render", "Top-down SVG of a layout");
  render->add_option("--layout", r_layout, "layout JSON")->required();
  render->add_option("--output", r_output, "SVG file (default: stdout)");
  render->add_option("--scale", r_options.pixels_per_meter, "pixels per meter")->check(CLI::PositiveNumber);
  render->add_flag("--no-labels", r_no_labels, "omit instance labels");

  // pairs-stage1
  BackendFlags p1_backend;
  std::string p1_corpus, p1_output, p1_skips;
  int p1_k = 2;
  auto* pairs1 = app.add_subcommand("pairs-stage1", "Pair curated layouts with sampled completions");
  pairs1->add_option("--corpus", p1_corpus, "positives JSONL")->required();
  pairs1->add_option("--output", p1_output, "pairs JSONL")->required();
  pairs1->add_option("--k", p1_k, "samples per positive")->check(CLI::PositiveNumber);
  pairs1->add_option("--skips", p1_skips, "skip log JSONL");
  p1_backend.attach(pairs1);

  // pairs-stage2
  std::string p2_corpus, p2_output, p2_skips;
  std::uint64_t p2_seed = 0;
  double p2_mix = 0.5, p2_magnitude = 0.5;
  auto* pairs2 = app.add_subcommand("pairs-stage2", "Pair curated layouts with injected violations");
  pairs2->add_option("--corpus", p2_corpus, "positives JSONL")->required();
  pairs2->add_option("--output", p2_output, "pairs JSONL")->required();
  pairs2->add_option("--seed", p2_seed, "injection seed");
  pairs2->add_option("--mix", p2_mix, "fraction of pairs using the overlap injector")->check(CLI::Range(0.0, 1.0));
  pairs2->add_option("--magnitude", p2_magnitude, "extra out-of-bounds displacement (m)");
  pairs2->add_option("--skips", p2_skips, "skip log JSONL");

  // dpo-loss
  double d_pp = 0, d_pn = 0, d_rp = 0, d_rn = 0, d_beta = 0.1;
  auto* dpo = app.add_subcommand("dpo-loss", "Evaluate the DPO objective for one pair");
  dpo->add_option("--policy-chosen", d_pp, "log pi_theta(chosen)")->required();
  dpo->add_option("--policy-rejected", d_pn, "log pi_theta(rejected)")->required();
  dpo->add_option("--ref-chosen", d_rp, "log pi_ref(chosen)")->required();
  dpo->add_option("--ref-rejected", d_rn, "log pi_ref(rejected)")->required();
  dpo->add_option("--beta", d_beta, "KL weight");

  // eval-success
  BackendFlags es_backend;
  ThresholdFlags es_thresholds;
  std::string es_tasks, es_output;
  int es_n = 10;
  auto* eval_success = app.add_subcommand("eval-success", "Usable-layout rate per room type");
  eval_success->add_option("--tasks", es_tasks, "task JSON, array or JSONL")->required();
  eval_success->add_option("--n", es_n, "samples per task")->check(CLI::PositiveNumber);
  eval_success->add_option("--output", es_output, "report JSON (default: stdout)");
  es_backend.attach(eval_success);
  es_thresholds.attach(eval_success);

  // eval-nav
  std::string n_layout, n_target;
  std::vector<double> n_start;
  eval::NavTask n_task;
  auto* eval_nav = app.add_subcommand("eval-nav", "Grid navigation check toward one object");
  eval_nav->add_option("--layout", n_layout, "layout JSON")->required();
  eval_nav->add_option("--target", n_task.target_instance, "target instance id")->required();
  eval_nav->add_option("--start", n_start, "x y heading (radians)")->expected(3)->required();
  eval_nav->add_option("--radius", n_task.success_radius, "success radius (m)");
  eval_nav->add_option("--fov", n_task.fov_half_angle, "half field of view (rad)");
  eval_nav->add_option("--resolution", n_task.grid_resolution, "grid cell size (m)");

  // judge
  BackendFlags j_backend;
  std::string j_layouts, j_preferences;
  auto* judge = app.add_subcommand("judge", "Score layouts with a judge model");
  judge->add_option("--layouts", j_layouts, "layouts: JSON, array or JSONL")->required();
  judge->add_option("--preferences", j_preferences, "user preferences text");
  j_backend.attach(judge);

  // serve
  BackendFlags sv_backend;
  ThresholdFlags sv_thresholds;
  std::string sv_host = "127.0.0.1", sv_persist, sv_cors;
  int sv_port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP editing service");
  serve_cmd->add_option("--host", sv_host, "bind address");
  serve_cmd->add_option("--port", sv_port, "TCP port")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--persist", sv_persist, "session log JSONL, replayed at start");
  serve_cmd->add_option("--cors-origin", sv_cors, "allowed browser origin");
  sv_backend.attach(serve_cmd);
  sv_thresholds.attach(serve_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ingest) {
      const SceneSource source = parse_scene_source(in_source);
      const auto config = load_pipeline_config(in_config);
      std::vector<SceneRecord> records;
      for (const std::string& input : in_inputs) {
        const auto docs = read_documents(input);
        const std::string stem = fs::path(input).stem().string();
        for (std::size_t i = 0; i < docs.size(); ++i) {
          const std::string fallback = docs.size() == 1 ? stem : fmt::format("{}-{}", stem, i);
          records.push_back(dataset::ingest_scene(docs[i], source, config, fallback));
        }
      }
      write_or_emit(out, in_output, json_io::format_corpus(records));
      if (!in_output.empty()) err << fmt::format("ingested {} scenes\n", records.size());
      return 0;
    }

    if (*filter) {
      const auto config = load_pipeline_config(f_config);
      std::vector<SceneRecord> accepted, rejected;
      Json verdicts = Json::array();
      for (const SceneRecord& r : json_io::read_corpus(f_corpus)) {
        const auto v = dataset::filter_scene(r, config.rules);
        Json reasons = Json::array();
        for (auto reason : v.reasons) reasons.push_back(dataset::to_string(reason));
        verdicts.push_back(
            Json{{"scene_id", r.scene_id}, {"accepted", v.accepted}, {"reasons", reasons}, {"metrics", v.metrics}});
        (v.accepted ? accepted : rejected).push_back(r);
      }
      if (!f_accepted.empty()) json_io::write_corpus(f_accepted, accepted);
      if (!f_rejected.empty()) json_io::write_corpus(f_rejected, rejected);
      emit(out, Json{{"accepted", accepted.size()}, {"rejected", rejected.size()}, {"verdicts", verdicts}});
      return 0;
    }

    if (*stats) {
      const auto report = dataset::to_json(dataset::corpus_stats(json_io::read_corpus(s_corpus)));
      write_or_emit(out, s_output, report.dump(2) + "\n");
      return 0;
    }

    if (*split) {
      const auto result = dataset::split_corpus(json_io::read_corpus(sp_corpus), sp_seed, dataset::parse_split_plan(sp_plan));
      json_io::write_corpus(sp_train, result.train);
      json_io::write_corpus(sp_test, result.test);
      emit(out, Json{{"train", result.train.size()}, {"test", result.test.size()}, {"seed", sp_seed}});
      return 0;
    }

    if (*prompt_cmd) {
      const auto id = prompt::parse_template_id(p_kind);
      const auto need = [](const std::string& value, const char* flag) {
        if (value.empty()) throw PreconditionError(fmt::format("{} is required for this template", flag));
        return value;
      };
      prompt::PromptBundle bundle;
      switch (id) {
        case prompt::TemplateId::generate: {
          const AssetCatalog catalog =
              p_catalog.empty() ? AssetCatalog::builtin() : json_io::catalog_from_json(read_single(p_catalog));
          bundle = prompt::build_generation_prompt(load_task(need(p_task, "--task"), catalog));
          break;
        }
        case prompt::TemplateId::edit:
          bundle = prompt::build_edit_prompt(layout_from_document(read_single(need(p_layout, "--layout"))),
                                             need(p_instruction, "--instruction"));
          break;
        case prompt::TemplateId::judge:
          bundle = prompt::build_judge_prompt(layout_from_document(read_single(need(p_layout, "--layout"))), p_preferences);
          break;
        case prompt::TemplateId::summarize:
          bundle = prompt::build_summary_prompt(layout_from_document(read_single(need(p_layout, "--layout"))));
          break;
      }
      if (p_json) {
        emit(out, Json{{"template", prompt::to_string(bundle.template_id)},
                       {"version", bundle.version},
                       {"fingerprint", gateway::fingerprint(bundle)},
                       {"system", bundle.system_text},
                       {"user", bundle.user_text}});
      } else {
        out << bundle.full_text();
        if (!bundle.full_text().ends_with('\n')) out << '\n';
      }
      return 0;
    }

    if (*generate) {
      const TaskSpec task = load_task(g_task, g_backend.load_catalog());
      const auto thresholds = g_thresholds.get();
      auto gw = g_backend.make_gateway();
      const std::string text = gw->complete(prompt::build_generation_prompt(task), g_backend.params());
      const auto parsed = prompt::parse_completion(text, &task);
      const auto report = eval::validate(parsed.layout, thresholds, &task);
      const Json result{{"reasoning", parsed.reasoning},
                        {"layout", json_io::to_json(parsed.layout)},
                        {"report", eval::to_json(report)}};
      write_or_emit(out, g_output, result.dump(2) + "\n");
      return 0;
    }

    if (*validate_cmd) {
      const Layout layout = layout_from_document(read_single(v_layout));
      std::optional<TaskSpec> task;
      if (!v_task.empty()) task = json_io::task_from_json(read_single(v_task));
      const auto report = eval::validate(layout, v_thresholds.get(), task ? &*task : nullptr);
      emit(out, eval::to_json(report));
      return report.usable ? 0 : 1;
    }

    if (*render) {
      r_options.labels = !r_no_labels;
      write_or_emit(out, r_output, eval::render_svg(layout_from_document(read_single(r_layout)), r_options));
      return 0;
    }

    if (*pairs1) {
      auto gw = p1_backend.make_gateway();
      const auto batch = forge::make_stage1_pairs(json_io::read_corpus(p1_corpus), *gw, p1_backend.params(), p1_k);
      forge::export_pairs(batch.pairs, p1_output);
      std::string skip_lines;
      for (const auto& s : batch.skips) {
        skip_lines += Json{{"scene_id", s.scene_id}, {"sample", s.sample}, {"code", s.code}, {"message", s.message}}.dump() + "\n";
      }
      if (!p1_skips.empty()) json_io::write_text_file(p1_skips, skip_lines);
      emit(out, Json{{"pairs", batch.pairs.size()}, {"skipped", batch.skips.size()}});
      return 0;
    }

    if (*pairs2) {
      const auto batch = forge::synth_stage2_pairs(json_io::read_corpus(p2_corpus), p2_seed, p2_mix, p2_magnitude);
      forge::export_pairs(batch.pairs, p2_output);
      std::string skip_lines;
      std::size_t overlap = 0;
      for (const auto& p : batch.pairs) {
        for (const auto& tag : p.tags) overlap += tag == forge::kOverlapTag;
      }
      for (const auto& s : batch.skips) {
        skip_lines += Json{{"scene_id", s.scene_id}, {"code", s.code}, {"message", s.message}}.dump() + "\n";
      }
      if (!p2_skips.empty()) json_io::write_text_file(p2_skips, skip_lines);
      emit(out, Json{{"pairs", batch.pairs.size()},
                     {"overlap", overlap},
                     {"out_of_bounds", batch.pairs.size() - overlap},
                     {"skipped", batch.skips.size()},
                     {"seed", p2_seed}});
      return 0;
    }

    if (*dpo) {
      out << fmt::format("{:.17g}\n", forge::dpo_loss(d_pp, d_pn, d_rp, d_rn, d_beta));
      return 0;
    }

    if (*eval_success) {
      const AssetCatalog catalog = es_backend.load_catalog();
      std::vector<TaskSpec> tasks;
      for (const Json& doc : read_documents(es_tasks)) {
        TaskSpec t = json_io::task_from_json(doc);
        t.objects = retrieve_boxes(std::move(t.objects), catalog);
        tasks.push_back(std::move(t));
      }
      auto gw = es_backend.make_gateway();
      const auto report = eval::success_rate(tasks, *gw, es_backend.params(), es_n, es_thresholds.get());
      write_or_emit(out, es_output, eval::to_json(report).dump(2) + "\n");
      return 0;
    }

    if (*eval_nav) {
      n_task.start = {n_start.at(0), n_start.at(1), n_start.at(2)};
      const auto result = eval::nav_eval(layout_from_document(read_single(n_layout)), n_task);
      emit(out, eval::to_json(result));
      return 0;
    }

    if (*judge) {
      std::vector<Layout> layouts;
      for (const Json& doc : read_documents(j_layouts)) layouts.push_back(layout_from_document(doc));
      auto gw = j_backend.make_gateway();
      Json results = Json::array();
      for (const auto& outcome : eval::judge_scores(layouts, j_preferences, *gw, j_backend.params())) {
        results.push_back(eval::to_json(outcome));
      }
      emit(out, results);
      return 0;
    }

    if (*serve_cmd) {
      service::Options options;
      options.params = sv_backend.params();
      options.thresholds = sv_thresholds.get();
      if (!sv_persist.empty()) options.persist = sv_persist;
      options.cors_origin = sv_cors;
      options.catalog = sv_backend.load_catalog();
      service::Service svc(sv_backend.make_gateway(), std::move(options));
      err << fmt::format("listening on {}:{}\n", sv_host, sv_port);
      return service::serve(svc, sv_host, sv_port);
    }
  } catch (const Error& e) {
    err << fmt::format("error [{}]: {}\n", e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    err << fmt::format("error: {}\n", e.what());
    return 1;
  }
  return 2;
}

}  // namespace layoutforge::cli
