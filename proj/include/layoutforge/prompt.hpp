#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "layoutforge/scene.hpp"

// Meta prompt construction and completion parsing.
namespace layoutforge::prompt {

inline constexpr std::string_view kTemplateVersion = "v1";

enum class TemplateId { generate, edit, judge, summarize };

std::string_view to_string(TemplateId id);
TemplateId parse_template_id(std::string_view text);

enum class EditKind { add, remove };

std::string_view to_string(EditKind kind);

struct EditRequest {
  EditKind kind = EditKind::add;
  std::string instruction;
  // Instruction text after the leading verb, e.g. "a chair near the desk".
  std::string target;
};

// Leading verb add/place/put -> add, remove/delete/take -> remove.
// Throws UnsupportedEditError for anything else.
EditRequest classify_edit(std::string_view instruction);

struct PromptBundle {
  TemplateId template_id = TemplateId::generate;
  std::string version{kTemplateVersion};
  std::string system_text;
  std::string user_text;
  // Exactly one of these is set for generate (task) and edit/judge/summarize
  // (layout).
  std::optional<TaskSpec> task;
  std::optional<Layout> layout;
  std::optional<EditRequest> edit;
  std::string preferences;

  // system + blank line + user; what a single-message backend would see.
  std::string full_text() const;
};

// Raw template text by name ("generate.system", ...). Throws IoError when the
// name is unknown.
std::string_view template_text(std::string_view name);

// Replaces every {{key}} from `values`; unknown placeholders are an error so
// a typo in a template cannot ship silently.
std::string render_template(std::string_view text,
                            const std::vector<std::pair<std::string, std::string>>& values);

// The structured task block (room type, area, floor, objects with bbox).
std::string task_json(const TaskSpec& task);

// Requires every object size to be resolved (UnresolvedSizeError).
PromptBundle build_generation_prompt(const TaskSpec& task);
PromptBundle build_edit_prompt(const Layout& layout, std::string_view instruction);
PromptBundle build_judge_prompt(const Layout& layout, std::string_view preferences);
PromptBundle build_summary_prompt(const Layout& layout);

struct CompletionParse {
  std::string reasoning;
  Layout layout;
  std::string raw;
};

// Tagged answer in the response format the generation prompt asks for.
std::string format_completion(std::string_view reasoning, const Layout& layout);

// Extracts reasoning and the first JSON value in the answer region that forms
// a layout. With `context`, an answer may omit room type, floor, or bboxes;
// they are taken from the task (objects matched by description). Throws
// NoAnswerBlockError or MalformedLayoutError; never anything else.
CompletionParse parse_completion(std::string_view text, const TaskSpec* context = nullptr);

struct JudgeScore {
  int functionality = 0;
  int layout = 0;
  int aesthetics = 0;
  int overall = 0;
  std::string comments;
};

// Throws MalformedScoreError or RangeError.
JudgeScore parse_judge(std::string_view text);

}  // namespace layoutforge::prompt
