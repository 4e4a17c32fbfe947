#pragma once

#include <ostream>

namespace layoutforge::cli {

// Exit codes: 0 success, 1 domain error (or an unusable layout from
// `validate`), 2 usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace layoutforge::cli
