#pragma once

#include <cstdint>
#include <string>

#include "rplo/problems.hpp"

namespace rplo::serialize {

/// Self-describing JSON text for a problem instance (seed, dims, and all
/// matrices), so runs are replayable without the builder.
std::string multiterm_to_json(const problems::MultiTermProblem& p,
                              std::uint64_t seed);
problems::MultiTermProblem multiterm_from_json(const std::string& text);

std::string decomposition_to_json(const problems::DecompositionProblem& p,
                                  std::uint64_t seed);
problems::DecompositionProblem decomposition_from_json(const std::string& text);

void save_text(const std::string& path, const std::string& text);
std::string load_text(const std::string& path);

}  // namespace rplo::serialize
