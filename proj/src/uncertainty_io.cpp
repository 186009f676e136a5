#include "ehr/uncertainty_io.hpp"

#include <charconv>
#include <cmath>

#include "ehr/csv.hpp"
#include "ehr/errors.hpp"
#include "json.hpp"

namespace ehr::uq {

namespace {

double parse_double(const std::string& s, const std::filesystem::path& path, std::uint64_t line) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ValidationError(path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
    }
    return v;
}

}  // namespace

ScoreTable read_score_csv(const std::filesystem::path& path) {
    CsvReader in(path);
    const auto& h = in.header();
    if (h.size() < 2 || h.back() != "label") {
        throw ValidationError(path.string() + ": header must end with 'label'");
    }
    const size_t k = h.size() - 1;
    ScoreTable t;
    t.logits = h[0] == "z_0";
    const std::string prefix = t.logits ? "z_" : "p_";
    for (size_t c = 0; c < k; ++c) {
        if (h[c] != prefix + std::to_string(c)) {
            throw ValidationError(path.string() + ": expected column " + prefix + std::to_string(c) +
                                  ", found '" + h[c] + "'");
        }
    }
    std::vector<std::vector<double>> rows;
    std::vector<std::string> row;
    while (in.next(row)) {
        std::vector<double> r(k);
        for (size_t c = 0; c < k; ++c) {
            r[c] = parse_double(row[c], path, in.line());
        }
        const double y = parse_double(row[k], path, in.line());
        if (y != std::floor(y) || y < 0 || y >= static_cast<double>(k)) {
            throw ShapeError(path.string() + ":" + std::to_string(in.line()) + ": label outside 0.." +
                             std::to_string(k - 1));
        }
        rows.push_back(std::move(r));
        t.labels.push_back(static_cast<int>(y));
    }
    t.values = Matrix::from_rows(rows);
    if (rows.empty()) {
        t.values = Matrix(0, k);
    }
    return t;
}

Matrix to_logits(const ScoreTable& t) {
    if (t.logits) {
        return t.values;
    }
    Matrix z(t.values.rows(), t.values.cols());
    for (size_t i = 0; i < z.rows(); ++i) {
        for (size_t j = 0; j < z.cols(); ++j) {
            z.at(i, j) = std::log(std::max(t.values.at(i, j), 1e-300));
        }
    }
    return z;
}

ProbMatrix to_probs(const ScoreTable& t) {
    if (t.logits) {
        return apply_temperature({1.0}, t.values);
    }
    return ProbMatrix(t.values);
}

std::string calib_report_json(const CalibReport& r) {
    nlohmann::ordered_json j;
    auto put = [&j](const char* key, const std::optional<double>& v) {
        if (v) {
            j[key] = *v;
        } else {
            j[key] = nullptr;
        }
    };
    put("ece", r.ece);
    put("ece_before", r.ece_before);
    put("coverage", r.coverage);
    put("avg_set_size", r.avg_set_size);
    put("T", r.temperature);
    put("alpha", r.alpha);
    put("t", r.threshold);
    return j.dump(2) + "\n";
}

CalibReport run_temperature(const ScoreTable& cal, const ScoreTable& test, int bins) {
    const auto model = fit_temperature(to_logits(cal), cal.labels);
    CalibReport r;
    r.temperature = model.temperature;
    r.ece_before = ece(to_probs(test), test.labels, bins);
    r.ece = ece(apply_temperature(model, to_logits(test)), test.labels, bins);
    return r;
}

namespace {

void top_label(const ProbMatrix& p, const std::vector<int>& labels, std::vector<double>& conf,
               std::vector<int>& correct) {
    conf.resize(p.rows());
    correct.resize(p.rows());
    for (size_t i = 0; i < p.rows(); ++i) {
        const size_t top = argmax(p.row(i));
        conf[i] = p.row(i)[top];
        correct[i] = static_cast<int>(top) == labels[i];
    }
}

}  // namespace

CalibReport run_binning(const ScoreTable& cal, const ScoreTable& test, int bins) {
    const auto cal_p = to_probs(cal);
    const auto test_p = to_probs(test);
    if (cal.labels.size() != cal_p.rows() || test.labels.size() != test_p.rows()) {
        throw ShapeError("label count mismatch");
    }
    std::vector<double> conf;
    std::vector<int> correct;
    top_label(cal_p, cal.labels, conf, correct);
    const auto model = fit_histogram_binning(conf, correct, bins);
    top_label(test_p, test.labels, conf, correct);
    CalibReport r;
    r.ece_before = ece_from_confidence(conf, correct, bins);
    for (double& c : conf) {
        c = model.apply(c);
    }
    r.ece = ece_from_confidence(conf, correct, bins);
    return r;
}

CalibReport run_conformal(const ScoreTable& cal, const ScoreTable& test, double alpha, int bins) {
    const auto thr = fit_label_threshold(to_probs(cal), cal.labels, alpha);
    const auto test_p = to_probs(test);
    std::vector<std::vector<int>> sets;
    sets.reserve(test_p.rows());
    for (size_t i = 0; i < test_p.rows(); ++i) {
        sets.push_back(predict_set(thr.threshold, test_p.row(i)));
    }
    CalibReport r;
    r.ece = ece(test_p, test.labels, bins);
    r.coverage = coverage(sets, test.labels);
    r.avg_set_size = avg_set_size(sets);
    r.alpha = alpha;
    r.threshold = thr.threshold;
    return r;
}

}  // namespace ehr::uq
