#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ehr/uncertainty.hpp"

namespace ehr::uq {

// Scores read from CSV. Header "p_0,...,p_{K-1},label" holds probabilities;
// "z_0,...,z_{K-1},label" holds logits.
struct ScoreTable {
    Matrix values;
    std::vector<int> labels;
    bool logits = false;
};

// Throws IoError, ShapeError or ValidationError (bad header or number).
ScoreTable read_score_csv(const std::filesystem::path& path);

// Logits of a table: as-is for logits, log(max(p, 1e-300)) for probabilities.
Matrix to_logits(const ScoreTable& t);
// Probabilities of a table: validated for p_, softmax for z_.
ProbMatrix to_probs(const ScoreTable& t);

// Fields of the calibration report; absent ones are emitted as null.
struct CalibReport {
    std::optional<double> ece;
    std::optional<double> ece_before;
    std::optional<double> coverage;
    std::optional<double> avg_set_size;
    std::optional<double> temperature;
    std::optional<double> alpha;
    std::optional<double> threshold;
};

std::string calib_report_json(const CalibReport& r);

// Fit on cal, evaluate on test.
CalibReport run_temperature(const ScoreTable& cal, const ScoreTable& test, int bins = kDefaultBins);
// Top-label histogram binning on (confidence, correct).
CalibReport run_binning(const ScoreTable& cal, const ScoreTable& test, int bins = kDefaultBins);
CalibReport run_conformal(const ScoreTable& cal, const ScoreTable& test, double alpha,
                          int bins = kDefaultBins);

}  // namespace ehr::uq
