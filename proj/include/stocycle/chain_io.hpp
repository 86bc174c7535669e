#pragma once

// Persistence for sampler output: draws as CSV, sampler states as a compact
// binary file for resuming chains.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stocycle/sampler.hpp"

namespace stocycle {

// Infers (k, p, r) from canonical parameter names. Throws DataError when the
// names do not form a canonical set.
Dimensions dimensions_from_names(std::span<const std::string> names);

// Header "chain,draw,<natural-scale names>,log_posterior"; one row per kept
// draw, values in round-trip decimal form.
void write_chain_csv(std::ostream& os, std::span<const ChainOutput> chains);
void write_chain_csv(const std::filesystem::path& path, std::span<const ChainOutput> chains);

// Reads draws back into one ChainOutput per chain id (draws, names, dims,
// log_posterior). Throws DataError on malformed input.
std::vector<ChainOutput> read_chain_csv(const std::filesystem::path& path);

void write_states(std::ostream& os, std::span<const SamplerState> states);
std::vector<SamplerState> read_states(std::istream& is);
void save_states(const std::filesystem::path& path, std::span<const SamplerState> states);
std::vector<SamplerState> load_states(const std::filesystem::path& path);

}  // namespace stocycle
