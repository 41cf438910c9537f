#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gyrobloch/config.hpp"
#include "gyrobloch/sweep.hpp"

namespace gyrobloch {

/// 9 significant digits; "inf" / "-inf" / "nan" for non-finite values.
std::string format_number(double value);

/// Write to a sibling temporary file, then rename over `path`.
/// Throws IoError.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// omega,theta,re_lambda,im_lambda,residual,mirrored_flag for every
/// filtered eigenvalue, ordered by (omega, theta, Re lambda, Im lambda).
std::string eigs_csv(const GapReport& report);

/// omega,theta,gap_margin with gap_margin = min |Im lambda| at the point.
std::string tube_csv(const GapReport& report);

/// theta,lambda,omega for real in-window eigenvalues (|Im lambda| <= threshold),
/// ordered by (theta, lambda, omega).
std::string surfaces_csv(const GapReport& report, double gap_threshold);

/// gaps.json document (schema "gyrobloch.gaps/1", described in the README).
std::string gaps_json(const GapReport& report, const RunConfig& config);

/// One JSON object per line with solver statistics of every grid point.
std::string diagnostics_jsonl(const GapReport& report);

/// Render every requested artifact, create `directory` and write them
/// atomically. Returns the written paths.
std::vector<std::filesystem::path> write_artifacts(const GapReport& report,
                                                   const RunConfig& config,
                                                   const std::filesystem::path& directory);

}  // namespace gyrobloch
