#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nsp {

inline constexpr std::size_t kPhaseSize = 500;

/// One row of phases.csv.
struct PhaseRow {
  int run_id = 0;
  std::string agent;
  double beta = 0.0;
  std::uint64_t seed = 0;
  int phase = 0;
  int accepted = 0;
  double tar = 0.0;
  double load_target = 0.0;

  bool operator==(const PhaseRow&) const = default;
};

struct TarSeries {
  std::vector<double> tars;
  std::size_t dropped = 0;  ///< episodes of a trailing partial phase
};

/// accepted/phase_size for every complete phase of the acceptance log.
TarSeries tar_series(std::span<const std::uint8_t> accepted, std::size_t phase_size = kPhaseSize);

struct RuptureReport {
  int rupture_phase = 0;
  int window = 0;  ///< phases actually averaged
  double rupture_tar = 0.0;
  double last_tar = 0.0;
  double avg_tar = 0.0;
  double tar_std = 0.0;  ///< population standard deviation
  double gap_avg = 0.0;  ///< rupture - avg
  double gap_last = 0.0; ///< rupture - last
};

/// Robustness statistics around `rupture_phase` (0-based index into
/// `tars`). The average and std use the min(window, rupture_phase) phases
/// right before it. Throws std::out_of_range unless
/// 1 <= rupture_phase < tars.size().
RuptureReport rupture_report(std::span<const double> tars, int rupture_phase, int window = 30);

void write_phase_csv_header(std::ostream& out);
void write_phase_csv(std::ostream& out, std::span<const PhaseRow> rows);

/// Parses phases.csv content; problems are appended to `warnings` and the
/// offending line skipped. Throws std::runtime_error on a bad header.
std::vector<PhaseRow> read_phase_csv(std::istream& in, std::vector<std::string>& warnings);

/// First phase whose load target differs from the one before it.
std::optional<int> infer_rupture_phase(std::span<const PhaseRow> run);

struct RunReport {
  std::string agent;
  double beta = 0.0;
  std::string run_id;  ///< "mean" for the per-agent average row
  std::string seed;
  RuptureReport report;
};

/// One report per run (rows grouped by agent, beta, run id and seed, in
/// first-seen order) followed by one mean row per (agent, beta).
/// `rupture_phase` overrides inference from load targets.
std::vector<RunReport> build_reports(std::span<const PhaseRow> rows, std::optional<int> rupture_phase, int window,
                                     std::vector<std::string>& warnings);

void write_report_csv(std::ostream& out, std::span<const RunReport> reports);

/// Two-column "phase tar" blocks, one per run, each headed by a comment
/// carrying agent, beta, run, seed and the rupture phase.
void write_plot_data(std::ostream& out, std::span<const PhaseRow> rows, std::optional<int> rupture_phase);

std::string format_beta(double beta);

}  // namespace nsp
