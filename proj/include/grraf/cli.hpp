#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "grraf/llm.hpp"

namespace grraf::cli {

inline constexpr int kExitOk = 0;
/// Completed, but some questions failed inside the harness.
inline constexpr int kExitPartial = 1;
/// A named input (graph, dataset, script, runtime) could not be found or used.
inline constexpr int kExitConfig = 2;
/// Bad command line.
inline constexpr int kExitUsage = 64;
/// An input file was found but is malformed.
inline constexpr int kExitData = 65;

/// `scripted:FILE`, `live`, or `live:CONFIG.json`. Golden mode is handled by
/// the subcommands because it needs the dataset.
std::shared_ptr<llm::LlmClient> make_llm(const std::string& spec);

/// Entry point behind the executable; argv[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace grraf::cli
