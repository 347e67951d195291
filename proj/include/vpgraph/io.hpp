#pragma once

#include <string>

namespace vpgraph {

// Writes to a sibling temp file and renames it over `path`.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace vpgraph
