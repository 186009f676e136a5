#include "ehr/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ehr/errors.hpp"

namespace ehr::uq {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const size_t k = rows.empty() ? 0 : rows[0].size();
    Matrix m(rows.size(), k);
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != k) {
            throw ShapeError("row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                             " columns, expected " + std::to_string(k));
        }
        std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
}

ProbMatrix::ProbMatrix(Matrix m) : m_(std::move(m)) {
    for (size_t i = 0; i < m_.rows(); ++i) {
        double sum = 0;
        for (double p : m_.row(i)) {
            if (!(p >= 0.0 && p <= 1.0)) {
                throw ShapeError("row " + std::to_string(i) + " has an entry outside [0,1]");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ShapeError("row " + std::to_string(i) + " sums to " + std::to_string(sum));
        }
    }
}

namespace {

void check_labels(size_t rows, size_t cols, std::span<const int> labels) {
    if (labels.size() != rows) {
        throw ShapeError("got " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(rows) + " rows");
    }
    for (int y : labels) {
        if (y < 0 || static_cast<size_t>(y) >= cols) {
            throw ShapeError("label " + std::to_string(y) + " outside 0.." +
                             std::to_string(cols) + "-1");
        }
    }
}

void softmax_scaled(std::span<const double> z, double temperature, std::span<double> out) {
    double mx = -INFINITY;
    for (double v : z) {
        mx = std::max(mx, v / temperature);
    }
    double sum = 0;
    for (size_t j = 0; j < z.size(); ++j) {
        out[j] = std::exp(z[j] / temperature - mx);
        sum += out[j];
    }
    for (double& v : out) {
        v /= sum;
    }
}

}  // namespace

double temperature_nll(const Matrix& logits, std::span<const int> labels, double temperature) {
    double total = 0;
    for (size_t i = 0; i < logits.rows(); ++i) {
        const auto z = logits.row(i);
        double mx = -INFINITY;
        for (double v : z) {
            mx = std::max(mx, v / temperature);
        }
        double sum = 0;
        for (double v : z) {
            sum += std::exp(v / temperature - mx);
        }
        const double log_z = mx + std::log(sum);
        total += log_z - z[static_cast<size_t>(labels[i])] / temperature;
    }
    return total / static_cast<double>(logits.rows());
}

TemperatureModel fit_temperature(const Matrix& logits, std::span<const int> labels) {
    if (logits.rows() == 0 || logits.cols() == 0) {
        throw ShapeError("fit_temperature needs at least one row and one class");
    }
    check_labels(logits.rows(), logits.cols(), labels);
    for (size_t i = 0; i < logits.rows(); ++i) {
        for (double v : logits.row(i)) {
            if (!std::isfinite(v)) {
                throw DegenerateError("non-finite logit in row " + std::to_string(i));
            }
        }
    }
    auto f = [&](double log_t) { return temperature_nll(logits, labels, std::exp(log_t)); };
    double a = std::log(kMinTemperature);
    double b = std::log(kMaxTemperature);
    const double at_one = f(0.0);
    const double scale = 1e-12 * std::max(1.0, std::abs(at_one));
    if (std::abs(f(a) - at_one) <= scale && std::abs(f(b) - at_one) <= scale) {
        return {1.0};  // flat objective
    }
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a >= 1e-4) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double best = 0.5 * (a + b);
    if (f(best) > at_one) {
        return {1.0};
    }
    return {std::clamp(std::exp(best), kMinTemperature, kMaxTemperature)};
}

ProbMatrix apply_temperature(const TemperatureModel& m, const Matrix& logits) {
    if (!(m.temperature >= kMinTemperature && m.temperature <= kMaxTemperature)) {
        throw ShapeError("temperature outside [0.05, 50]");
    }
    Matrix out(logits.rows(), logits.cols());
    for (size_t i = 0; i < logits.rows(); ++i) {
        softmax_scaled(logits.row(i), m.temperature, out.row(i));
    }
    return ProbMatrix(std::move(out));
}

int bin_index(double p, int bins) {
    const int b = static_cast<int>(std::floor(p * bins));
    return std::clamp(b, 0, bins - 1);
}

double BinningModel::apply(double p) const { return rates[static_cast<size_t>(bin_index(p, bins))]; }

BinningModel fit_histogram_binning(std::span<const double> probs, std::span<const int> labels,
                                   int bins) {
    if (bins < 1) {
        throw ShapeError("bin count must be >= 1");
    }
    if (probs.size() != labels.size()) {
        throw ShapeError("probs and labels differ in length");
    }
    BinningModel m;
    m.bins = bins;
    for (int k = 0; k <= bins; ++k) {
        m.edges.push_back(static_cast<double>(k) / bins);
    }
    std::vector<double> pos(static_cast<size_t>(bins), 0.0);
    std::vector<double> cnt(static_cast<size_t>(bins), 0.0);
    for (size_t i = 0; i < probs.size(); ++i) {
        if (!(probs[i] >= 0.0 && probs[i] <= 1.0)) {
            throw ShapeError("probability outside [0,1] at " + std::to_string(i));
        }
        if (labels[i] != 0 && labels[i] != 1) {
            throw ShapeError("binary label expected at " + std::to_string(i));
        }
        const auto b = static_cast<size_t>(bin_index(probs[i], bins));
        pos[b] += labels[i];
        cnt[b] += 1;
    }
    for (size_t b = 0; b < static_cast<size_t>(bins); ++b) {
        m.rates.push_back(cnt[b] > 0 ? pos[b] / cnt[b] : 0.5 * (m.edges[b] + m.edges[b + 1]));
    }
    return m;
}

size_t argmax(std::span<const double> row) {
    return static_cast<size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

double ece_from_confidence(std::span<const double> confidence, std::span<const int> correct,
                           int bins) {
    if (confidence.size() != correct.size()) {
        throw ShapeError("confidence and correctness differ in length");
    }
    if (bins < 1) {
        throw ShapeError("bin count must be >= 1");
    }
    if (confidence.empty()) {
        return 0.0;
    }
    std::vector<double> acc(static_cast<size_t>(bins), 0.0);
    std::vector<double> conf(static_cast<size_t>(bins), 0.0);
    std::vector<double> cnt(static_cast<size_t>(bins), 0.0);
    for (size_t i = 0; i < confidence.size(); ++i) {
        const auto b = static_cast<size_t>(bin_index(confidence[i], bins));
        acc[b] += correct[i] ? 1.0 : 0.0;
        conf[b] += confidence[i];
        cnt[b] += 1;
    }
    double total = 0;
    const auto n = static_cast<double>(confidence.size());
    for (size_t b = 0; b < static_cast<size_t>(bins); ++b) {
        if (cnt[b] > 0) {
            total += (cnt[b] / n) * std::abs(acc[b] / cnt[b] - conf[b] / cnt[b]);
        }
    }
    return total;
}

double ece(const ProbMatrix& probs, std::span<const int> labels, int bins) {
    check_labels(probs.rows(), probs.cols(), labels);
    std::vector<double> confidence(probs.rows());
    std::vector<int> correct(probs.rows());
    for (size_t i = 0; i < probs.rows(); ++i) {
        const size_t top = argmax(probs.row(i));
        confidence[i] = probs.row(i)[top];
        correct[i] = static_cast<int>(top) == labels[i];
    }
    return ece_from_confidence(confidence, correct, bins);
}

size_t conformal_rank(size_t n, double alpha) {
    const double x = static_cast<double>(n + 1) * (1.0 - alpha);
    return static_cast<size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
}

ConformalThreshold fit_label_threshold(const ProbMatrix& cal_probs, std::span<const int> cal_labels,
                                       double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw AlphaError("alpha must lie in (0, 1)");
    }
    check_labels(cal_probs.rows(), cal_probs.cols(), cal_labels);
    const size_t n = cal_probs.rows();
    const size_t q = conformal_rank(n, alpha);
    if (n == 0 || q > n) {
        throw AlphaError("calibration set of " + std::to_string(n) + " is too small for alpha " +
                         std::to_string(alpha));
    }
    std::vector<double> scores(n);
    for (size_t i = 0; i < n; ++i) {
        scores[i] = cal_probs.row(i)[static_cast<size_t>(cal_labels[i])];
    }
    const size_t k = n + 1 - q;  // 1-based
    std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(k - 1), scores.end());
    return {scores[k - 1], alpha, n};
}

std::vector<int> predict_set(double threshold, std::span<const double> probs_row) {
    std::vector<int> out;
    for (size_t c = 0; c < probs_row.size(); ++c) {
        if (probs_row[c] >= threshold) {
            out.push_back(static_cast<int>(c));
        }
    }
    return out;
}

double coverage(const std::vector<std::vector<int>>& sets, std::span<const int> labels) {
    if (sets.size() != labels.size()) {
        throw ShapeError("sets and labels differ in length");
    }
    if (sets.empty()) {
        return 0.0;
    }
    size_t hit = 0;
    for (size_t i = 0; i < sets.size(); ++i) {
        hit += std::find(sets[i].begin(), sets[i].end(), labels[i]) != sets[i].end();
    }
    return static_cast<double>(hit) / static_cast<double>(sets.size());
}

double avg_set_size(const std::vector<std::vector<int>>& sets) {
    if (sets.empty()) {
        return 0.0;
    }
    size_t total = 0;
    for (const auto& s : sets) {
        total += s.size();
    }
    return static_cast<double>(total) / static_cast<double>(sets.size());
}

}  // namespace ehr::uq
