#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace therif::cli {

// Entry point shared by main() and the tests. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Markdown report over a store (simulated or served). nullopt when the store
// holds neither a closed iteration nor a completed reading trial.
std::optional<std::string> report_markdown(const std::filesystem::path& root, bool per_group_bounds = false);

// One CSS rule per theme of iteration `iteration` ("last" or an index).
std::string export_css(const std::filesystem::path& root, const std::string& iteration);

}  // namespace therif::cli
