#pragma once

#include <filesystem>
#include <vector>

#include "msziarmn/panel.hpp"
#include "msziarmn/posterior.hpp"
#include "msziarmn/sampler.hpp"

namespace msz {

/// Writes the retained draws of every chain into `dir`:
///   draws.csv        chain,draw,<parameter names>
///   phi.csv          chain,draw,phi[<disease>:<area>:<time>]...   (when stored)
///   states.csv       chain,draw,S[<area>:<time>]... as labels 1..2^D (when stored)
///   cell_loglik.csv  chain,draw,ll[<area>:<time>]... for every time after the first (when stored)
///   adaptation.csv   chain,block,acceptance,scale_at_burn_in,scale_final
/// Numbers are written in shortest round-trip form.
void write_draws(const PosteriorDraws& draws, const DiseasePanel& panel, const std::filesystem::path& dir);

/// Reads files written by write_draws back for the given model; headers must
/// match the model's parameter layout and panel labels exactly.
PosteriorDraws read_draws(const Model& model, const std::vector<double>& initial_presence,
                          const std::filesystem::path& dir);

void write_convergence(const std::vector<ConvergenceRow>& rows, const std::filesystem::path& file);
void write_summary(const std::vector<SummaryRow>& rows, const std::filesystem::path& file);
/// waic.csv gets one row (lpdd,pwaic,waic,draws); `cells_file` the per-cell terms.
void write_waic(const WaicReport& report, const DiseasePanel& panel, const std::filesystem::path& file,
                const std::filesystem::path& cells_file);
/// disease,area,time,probability for every non-baseline disease and cell.
void write_presence(const PosteriorDraws& draws, const DiseasePanel& panel, const std::filesystem::path& file);

/// name,value in layout order.
void write_parameters(const ParameterLayout& layout, const ParameterState& p, const std::filesystem::path& file);
std::vector<double> read_parameters(const ParameterLayout& layout, const std::filesystem::path& file);

/// area,time,state with the label of every cell.
void write_state_sequence(const StateSequence& s, const DiseasePanel& panel, const std::filesystem::path& file);

}  // namespace msz
