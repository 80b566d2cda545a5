#include "msziarmn/draws_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "msziarmn/csv.hpp"
#include "msziarmn/errors.hpp"

namespace msz {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw ValidationError("cannot write " + file.string());
  return os;
}

std::string cell_name(const DiseasePanel& panel, int i, int t) {
  return panel.area_labels()[i] + ":" + std::to_string(panel.time_labels()[t]);
}

std::vector<std::string> prefix_row(std::size_t c, std::size_t m) { return {std::to_string(c + 1), std::to_string(m + 1)}; }

std::vector<std::string> header(std::vector<std::string> tail) {
  tail.insert(tail.begin(), {"chain", "draw"});
  return tail;
}

std::vector<std::string> phi_columns(const DiseasePanel& panel) {
  std::vector<std::string> out;
  const auto& names = panel.disease_names();
  for (int i = 0; i < panel.areas(); ++i)
    for (int t = 0; t < panel.times(); ++t)
      for (int d = 1; d < panel.diseases(); ++d) out.push_back("phi[" + names[d] + ":" + cell_name(panel, i, t) + "]");
  return out;
}

std::vector<std::string> cell_columns(const DiseasePanel& panel, const std::string& tag, int first_time) {
  std::vector<std::string> out;
  for (int i = 0; i < panel.areas(); ++i)
    for (int t = first_time; t < panel.times(); ++t) out.push_back(tag + "[" + cell_name(panel, i, t) + "]");
  return out;
}

// Like csv::to_double but accepting the infinities format_double writes.
double read_value(const csv::Table& tab, std::size_t r, std::size_t c) {
  const auto& s = tab.rows[r][c];
  if (s == "-Inf") return -std::numeric_limits<double>::infinity();
  if (s == "Inf") return std::numeric_limits<double>::infinity();
  return csv::to_double(tab, r, c);
}

void check_header(const csv::Table& tab, const std::vector<std::string>& expected) {
  if (tab.header != expected)
    throw ValidationError(tab.source + ": header does not match the model (different data, variant or covariates?)");
}

// Rows must be grouped by chain and numbered 1.. within each chain.
std::vector<std::size_t> rows_per_chain(const csv::Table& tab) {
  std::vector<std::size_t> n;
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    const long long c = csv::to_integer(tab, r, 0), m = csv::to_integer(tab, r, 1);
    if (c < 1 || c > static_cast<long long>(n.size()) + 1)
      throw ValidationError(tab.source + ": line " + std::to_string(tab.line_numbers[r]) + ": chains out of order");
    if (c == static_cast<long long>(n.size()) + 1) n.push_back(0);
    if (c != static_cast<long long>(n.size()) || m != static_cast<long long>(n.back()) + 1)
      throw ValidationError(tab.source + ": line " + std::to_string(tab.line_numbers[r]) + ": draws out of order");
    ++n.back();
  }
  return n;
}

}  // namespace

void write_draws(const PosteriorDraws& d, const DiseasePanel& panel, const fs::path& dir) {
  fs::create_directories(dir);
  // Companions of an earlier run must not survive into this one.
  for (const char* f : {"phi.csv", "states.csv", "cell_loglik.csv"}) fs::remove(dir / f);
  const std::size_t P = d.layout.size();
  {
    auto os = open_out(dir / "draws.csv");
    csv::write_row(os, header(d.layout.names));
    for (std::size_t c = 0; c < d.chains.size(); ++c)
      for (std::size_t m = 0; m < d.chains[c].draws; ++m) {
        auto row = prefix_row(c, m);
        for (std::size_t j = 0; j < P; ++j) row.push_back(csv::format_double(d.chains[c].params[m * P + j]));
        csv::write_row(os, row);
      }
  }
  const std::size_t NT = static_cast<std::size_t>(d.N) * d.T;
  if (d.has_phi()) {
    auto os = open_out(dir / "phi.csv");
    csv::write_row(os, header(phi_columns(panel)));
    const std::size_t W = NT * d.D;
    for (std::size_t c = 0; c < d.chains.size(); ++c)
      for (std::size_t m = 0; m < d.chains[c].draws; ++m) {
        auto row = prefix_row(c, m);
        for (std::size_t j = 0; j < W; ++j) row.push_back(csv::format_double(d.chains[c].phi[m * W + j]));
        csv::write_row(os, row);
      }
  }
  if (d.has_states()) {
    auto os = open_out(dir / "states.csv");
    csv::write_row(os, header(cell_columns(panel, "S", 0)));
    for (std::size_t c = 0; c < d.chains.size(); ++c)
      for (std::size_t m = 0; m < d.chains[c].draws; ++m) {
        auto row = prefix_row(c, m);
        for (std::size_t j = 0; j < NT; ++j) row.push_back(std::to_string(d.chains[c].states[m * NT + j] + 1));
        csv::write_row(os, row);
      }
  }
  if (d.has_cell_loglik()) {
    auto os = open_out(dir / "cell_loglik.csv");
    csv::write_row(os, header(cell_columns(panel, "ll", 1)));
    for (std::size_t c = 0; c < d.chains.size(); ++c)
      for (std::size_t m = 0; m < d.chains[c].draws; ++m) {
        auto row = prefix_row(c, m);
        for (int i = 0; i < d.N; ++i)
          for (int t = 1; t < d.T; ++t)
            row.push_back(csv::format_double(d.chains[c].cell_loglik[m * NT + static_cast<std::size_t>(i) * d.T + t]));
        csv::write_row(os, row);
      }
  }
  {
    auto os = open_out(dir / "adaptation.csv");
    csv::write_row(os, {"chain", "block", "acceptance", "scale_at_burn_in", "scale_final"});
    for (std::size_t c = 0; c < d.chains.size(); ++c) {
      const auto& L = d.chains[c].ledger;
      for (const auto& e : L.entries)
        csv::write_row(os, {std::to_string(c + 1), e.block, csv::format_double(e.acceptance),
                            csv::format_double(e.scale_at_burn_in), csv::format_double(e.scale_final)});
      csv::write_row(os, {std::to_string(c + 1), "Sigma non-SPD redraws", std::to_string(L.sigma_redraws), "", ""});
    }
  }
}

PosteriorDraws read_draws(const Model& model, const std::vector<double>& initial_presence, const fs::path& dir) {
  PosteriorDraws d;
  d.layout = ParameterLayout::make(model);
  d.variant = model.variant();
  d.N = model.N();
  d.T = model.T();
  d.D = model.D();
  d.initial_presence = initial_presence;
  const auto& panel = model.panel();

  auto tab = csv::read(dir / "draws.csv");
  check_header(tab, header(d.layout.names));
  const auto counts = rows_per_chain(tab);
  const std::size_t P = d.layout.size();
  std::size_t r = 0;
  for (std::size_t n : counts) {
    ChainDraws c;
    c.draws = n;
    c.params.reserve(n * P);
    for (std::size_t m = 0; m < n; ++m, ++r)
      for (std::size_t j = 0; j < P; ++j) c.params.push_back(csv::to_double(tab, r, j + 2));
    d.chains.push_back(std::move(c));
  }

  // Optional companions must agree with draws.csv row for row.
  auto companion = [&](const char* name, const std::vector<std::string>& cols, auto&& fill) {
    if (!fs::exists(dir / name)) return;
    auto t = csv::read(dir / name);
    check_header(t, header(cols));
    if (rows_per_chain(t) != counts) throw ValidationError(t.source + ": draw counts differ from draws.csv");
    std::size_t row = 0;
    for (auto& c : d.chains)
      for (std::size_t m = 0; m < c.draws; ++m, ++row) fill(c, t, row);
  };
  const std::size_t NT = static_cast<std::size_t>(d.N) * d.T;
  companion("phi.csv", phi_columns(panel), [&](ChainDraws& c, const csv::Table& t, std::size_t row) {
    for (std::size_t j = 0; j < NT * d.D; ++j) c.phi.push_back(csv::to_double(t, row, j + 2));
  });
  companion("states.csv", cell_columns(panel, "S", 0), [&](ChainDraws& c, const csv::Table& t, std::size_t row) {
    for (std::size_t j = 0; j < NT; ++j) {
      const long long label = csv::to_integer(t, row, j + 2);
      if (label < 1 || label > model.states())
        throw ValidationError(t.source + ": line " + std::to_string(t.line_numbers[row]) + ": state label out of range");
      c.states.push_back(static_cast<std::uint8_t>(label - 1));
    }
  });
  companion("cell_loglik.csv", cell_columns(panel, "ll", 1), [&](ChainDraws& c, const csv::Table& t, std::size_t row) {
    std::size_t col = 2;
    for (int i = 0; i < d.N; ++i)
      for (int tt = 0; tt < d.T; ++tt) c.cell_loglik.push_back(tt == 0 ? 0.0 : read_value(t, row, col++));
  });
  return d;
}

void write_convergence(const std::vector<ConvergenceRow>& rows, const fs::path& file) {
  auto os = open_out(file);
  csv::write_row(os, {"parameter", "rhat", "ess"});
  for (const auto& r : rows)
    csv::write_row(os, {r.name, r.rhat ? csv::format_double(*r.rhat) : "NA", csv::format_double(r.ess)});
}

void write_summary(const std::vector<SummaryRow>& rows, const fs::path& file) {
  auto os = open_out(file);
  csv::write_row(os, {"parameter", "transform", "mean", "lower95", "upper95"});
  for (const auto& r : rows)
    csv::write_row(os, {r.name, r.transform, csv::format_double(r.summary.mean), csv::format_double(r.summary.lower),
                        csv::format_double(r.summary.upper)});
}

void write_waic(const WaicReport& w, const DiseasePanel& panel, const fs::path& file, const fs::path& cells_file) {
  {
    auto os = open_out(file);
    csv::write_row(os, {"lpdd", "pwaic", "waic", "draws"});
    csv::write_row(os, {csv::format_double(w.lpdd), csv::format_double(w.pwaic), csv::format_double(w.waic),
                        std::to_string(w.draws)});
  }
  auto os = open_out(cells_file);
  csv::write_row(os, {"area", "time", "lpd", "pwaic"});
  for (int i = 0; i < w.N; ++i)
    for (int t = 1; t < w.T; ++t) {
      const std::size_t c = static_cast<std::size_t>(i) * w.T + t;
      csv::write_row(os, {panel.area_labels()[i], std::to_string(panel.time_labels()[t]),
                          csv::format_double(w.cell_lpd[c]), csv::format_double(w.cell_pwaic[c])});
    }
}

void write_presence(const PosteriorDraws& d, const DiseasePanel& panel, const fs::path& file) {
  auto os = open_out(file);
  csv::write_row(os, {"disease", "area", "time", "probability"});
  for (int e = 0; e < d.D; ++e)
    for (int i = 0; i < d.N; ++i)
      for (int t = 0; t < d.T; ++t)
        csv::write_row(os, {panel.disease_names()[e + 1], panel.area_labels()[i], std::to_string(panel.time_labels()[t]),
                            csv::format_double(presence_probability(d, e, i, t))});
}

void write_parameters(const ParameterLayout& layout, const ParameterState& p, const fs::path& file) {
  auto os = open_out(file);
  csv::write_row(os, {"parameter", "value"});
  const auto v = layout.flatten(p);
  for (std::size_t j = 0; j < v.size(); ++j) csv::write_row(os, {layout.names[j], csv::format_double(v[j])});
}

std::vector<double> read_parameters(const ParameterLayout& layout, const fs::path& file) {
  auto tab = csv::read(file);
  const auto cn = tab.column("parameter"), cv = tab.column("value");
  std::vector<double> out(layout.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    const int j = layout.index(tab.rows[r][cn]);
    if (j < 0)
      throw ValidationError(tab.source + ": line " + std::to_string(tab.line_numbers[r]) + ": unknown parameter '" +
                            tab.rows[r][cn] + "'");
    out[j] = csv::to_double(tab, r, cv);
  }
  for (int j = 0; j < layout.size(); ++j)
    if (std::isnan(out[j])) throw ValidationError(tab.source + ": missing parameter '" + layout.names[j] + "'");
  return out;
}

void write_state_sequence(const StateSequence& s, const DiseasePanel& panel, const fs::path& file) {
  auto os = open_out(file);
  csv::write_row(os, {"area", "time", "state"});
  for (int i = 0; i < s.N; ++i)
    for (int t = 0; t < s.T; ++t)
      csv::write_row(os, {panel.area_labels()[i], std::to_string(panel.time_labels()[t]), std::to_string(s.label(i, t))});
}

}  // namespace msz
