#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ehr::uq {

// Dense row-major N x K matrix of reals.
class Matrix {
   public:
    Matrix() = default;
    Matrix(size_t rows, size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    // Throws ShapeError for ragged rows.
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }
    std::span<const double> row(size_t i) const { return {data_.data() + i * cols_, cols_}; }
    std::span<double> row(size_t i) { return {data_.data() + i * cols_, cols_}; }
    double& at(size_t i, size_t j) { return data_[i * cols_ + j]; }
    double at(size_t i, size_t j) const { return data_[i * cols_ + j]; }

   private:
    size_t rows_ = 0;
    size_t cols_ = 0;
    std::vector<double> data_;
};

// Matrix whose rows are probability vectors: entries in [0,1], rows sum to
// 1 within 1e-9.
class ProbMatrix {
   public:
    ProbMatrix() = default;
    // Throws ShapeError when the invariant does not hold.
    explicit ProbMatrix(Matrix m);

    size_t rows() const { return m_.rows(); }
    size_t cols() const { return m_.cols(); }
    std::span<const double> row(size_t i) const { return m_.row(i); }
    const Matrix& matrix() const { return m_; }

   private:
    Matrix m_;
};

inline constexpr double kMinTemperature = 0.05;
inline constexpr double kMaxTemperature = 50.0;
inline constexpr int kDefaultBins = 15;

struct TemperatureModel {
    double temperature = 1.0;
};

// Mean negative log-likelihood of softmax(logits / T).
double temperature_nll(const Matrix& logits, std::span<const int> labels, double temperature);

// Golden-section search over log T in [log 0.05, log 50] to |d log T| < 1e-4.
// A flat objective yields T = 1; the result never has higher NLL than T = 1.
// Throws ShapeError or DegenerateError (non-finite logits).
TemperatureModel fit_temperature(const Matrix& logits, std::span<const int> labels);

ProbMatrix apply_temperature(const TemperatureModel& m, const Matrix& logits);

struct BinningModel {
    int bins = kDefaultBins;
    std::vector<double> edges;  // bins + 1, edges[0] = 0, edges[bins] = 1
    std::vector<double> rates;  // per bin

    double apply(double p) const;
};

// Equal-width bins over [0,1]; the last bin includes 1. Bin index of p is
// min(floor(p * B), B - 1).
int bin_index(double p, int bins);

// Empty bins fall back to their midpoint. Throws ShapeError.
BinningModel fit_histogram_binning(std::span<const double> probs, std::span<const int> labels,
                                   int bins = kDefaultBins);

// Top-label ECE: sum over bins of (n_b / N) |acc_b - conf_b|.
double ece(const ProbMatrix& probs, std::span<const int> labels, int bins = kDefaultBins);
// Same statistic from per-sample confidence and correctness.
double ece_from_confidence(std::span<const double> confidence, std::span<const int> correct,
                           int bins = kDefaultBins);

// argmax with ties to the lowest index.
size_t argmax(std::span<const double> row);

struct ConformalThreshold {
    double threshold = 0.0;
    double alpha = 0.1;
    size_t n_cal = 0;
};

// ceil((n + 1)(1 - alpha)), computed with a 1e-9 relative guard against
// floating error in the product.
size_t conformal_rank(size_t n, double alpha);

// Split-conformal LABEL threshold: the k-th smallest true-class probability,
// k = n + 1 - ceil((n + 1)(1 - alpha)). Throws AlphaError when k < 1.
ConformalThreshold fit_label_threshold(const ProbMatrix& cal_probs, std::span<const int> cal_labels,
                                       double alpha);

// Classes with probability >= threshold, ascending.
std::vector<int> predict_set(double threshold, std::span<const double> probs_row);

double coverage(const std::vector<std::vector<int>>& sets, std::span<const int> labels);
double avg_set_size(const std::vector<std::vector<int>>& sets);

}  // namespace ehr::uq
