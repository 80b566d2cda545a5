#pragma once

#include <optional>
#include <span>
#include <vector>

namespace msz {

/// Split-chain potential scale reduction factor. Each chain is halved, so
/// two or more chains of length >= 4 are required. Returns nullopt when the
/// within-chain variance is zero (constant chains), where R-hat is undefined.
std::optional<double> gelman_rubin(const std::vector<std::vector<double>>& chains);

/// Multi-chain effective sample size: the autocorrelation sum is truncated at
/// the first negative sum of an adjacent lag pair (Geyer's initial positive
/// sequence). Returns 0 for constant draws.
double effective_sample_size(const std::vector<std::vector<double>>& chains);
double effective_sample_size(std::span<const double> chain);

}  // namespace msz
