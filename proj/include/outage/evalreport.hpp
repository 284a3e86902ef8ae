#pragma once

#include <string>
#include <utility>
#include <vector>

#include "outage/gammadist.hpp"
#include "outage/netmodel.hpp"

namespace outage::eval {

struct MetricRow {
  std::string dataset;
  std::string feature_set;
  double nll = 0.0;      // nats, mean per prediction
  double rmse = 0.0;     // hours, on the Gamma mean k*theta
  double corr100 = 0.0;  // Pearson x 100
  bool zero_variance = false;  // correlation undefined, reported as 0
};

MetricRow metrics(const std::vector<gamma::GammaParams>& preds,
                  const std::vector<double>& truths,
                  const std::string& dataset = "", const std::string& feature_set = "");

std::string metric_table(const std::vector<MetricRow>& rows);

// One evaluated outage sequence: distribution and matching truth target at the
// initial stage and after each report.
struct SequenceEval {
  std::vector<gamma::GammaParams> dists;
  std::vector<double> truths;
};

struct PerReportRow {
  int reports;  // 0 = initial prediction
  double nll;
  double rmse;
  int n;  // outages contributing (identical for every row)
};

// Rows for 0..3 reports over outages carrying at least 3 reports; sequences
// with fewer are excluded so every row covers the same subset.
std::vector<PerReportRow> per_report_metrics(const std::vector<SequenceEval>& seqs);
std::string per_report_table(const std::vector<PerReportRow>& rows);

struct BaselineResult {
  std::vector<double> weights;  // last entry is the intercept
  std::vector<double> predictions;
  double rmse = 0.0;
  double corr100 = 0.0;
  bool zero_variance = false;
};

// Least squares with a ridge floor (lambda = 1e-6) for conditioning.
BaselineResult linear_baseline(const std::vector<std::vector<double>>& train_x,
                               const std::vector<double>& train_y,
                               const std::vector<std::vector<double>>& test_x,
                               const std::vector<double>& test_y);

struct AttentionExport {
  std::string outage_id;
  int report_index = 0;
  std::vector<std::string> tokens;
  std::vector<std::pair<int, int>> offsets;     // character spans
  std::vector<std::vector<double>> raw;         // [head][token], simplex
  std::vector<std::vector<double>> smoothed;    // [head][token]
};

// Centered moving average, window 3, edges padded by repetition so total mass
// is preserved exactly.
std::vector<double> smooth_weights(const std::vector<double>& w);

AttentionExport attention_export(const std::string& outage_id, int report_index,
                                 const std::vector<std::string>& tokens,
                                 const std::vector<std::pair<int, int>>& offsets,
                                 const std::vector<num::Tensor>& head_weights);

// Line-delimited records: outage id, report index, token, offset, head, raw,
// smoothed.
std::string attention_records(const std::vector<AttentionExport>& exports);

struct BigramCount {
  std::string first, second;
  int count = 0;
};

// Per head: take the argmax-weight token of each report and count its two
// neighbor bigrams; descending by count, ties lexicographic.
std::vector<std::vector<BigramCount>> top_bigrams(
    const std::vector<AttentionExport>& exports);
std::string bigram_table(const std::vector<std::vector<BigramCount>>& per_head);

struct ReportRow {
  double elapsed_hours = 0.0;
  double mode;   // hours remaining
  double mean;   // min-MSE estimate
  double q80;    // 80% confidence bound
};

ReportRow report_row(const gamma::GammaParams& p, double elapsed_hours);
std::string report_table(const std::vector<ReportRow>& rows);

}  // namespace outage::eval
