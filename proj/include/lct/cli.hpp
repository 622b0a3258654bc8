#pragma once

#include <string>
#include <vector>

namespace lct::cli {

// Exit codes: 0 ok, 2 usage, 3 validation, 4 numeric failure. Errors print a
// single JSON line on stderr and remove files the failed run created.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace lct::cli
