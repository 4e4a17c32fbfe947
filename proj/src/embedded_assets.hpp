#pragma once

#include <optional>
#include <string_view>

// Text assets compiled into the library (see cmake/embed_assets.cmake).
namespace layoutforge::embedded {

// `name` is "<version>/<template file stem>", e.g. "v1/generate.system".
std::optional<std::string_view> template_text(std::string_view name);

std::string_view builtin_catalog_json();

}  // namespace layoutforge::embedded
