#include "outage/evalreport.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace outage::eval {

namespace {

struct PointStats {
  double rmse;
  double corr100;
  bool zero_variance;
};

PointStats point_stats(const std::vector<double>& pred, const std::vector<double>& truth) {
  size_t n = pred.size();
  double se = 0.0, mp = 0.0, mt = 0.0;
  for (size_t i = 0; i < n; ++i) {
    se += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    mp += pred[i];
    mt += truth[i];
  }
  mp /= double(n);
  mt /= double(n);
  double cov = 0.0, vp = 0.0, vt = 0.0;
  for (size_t i = 0; i < n; ++i) {
    cov += (pred[i] - mp) * (truth[i] - mt);
    vp += (pred[i] - mp) * (pred[i] - mp);
    vt += (truth[i] - mt) * (truth[i] - mt);
  }
  PointStats s;
  s.rmse = std::sqrt(se / double(n));
  s.zero_variance = vp <= 0.0 || vt <= 0.0;
  s.corr100 = s.zero_variance ? 0.0 : 100.0 * cov / std::sqrt(vp * vt);
  return s;
}

}  // namespace

MetricRow metrics(const std::vector<gamma::GammaParams>& preds,
                  const std::vector<double>& truths, const std::string& dataset,
                  const std::string& feature_set) {
  if (preds.size() != truths.size())
    throw std::invalid_argument("metrics: prediction/truth length mismatch");
  if (preds.empty()) throw std::invalid_argument("metrics: empty input");
  MetricRow row;
  row.dataset = dataset;
  row.feature_set = feature_set;
  std::vector<double> point(preds.size());
  double nll = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    nll += gamma::nll(truths[i], preds[i]);
    point[i] = gamma::mean(preds[i]);
  }
  row.nll = nll / double(preds.size());
  PointStats s = point_stats(point, truths);
  row.rmse = s.rmse;
  row.corr100 = s.corr100;
  row.zero_variance = s.zero_variance;
  return row;
}

std::string metric_table(const std::vector<MetricRow>& rows) {
  std::ostringstream out;
  out << "dataset\tfeatures\tnll\trmse\tcorr\n";
  for (const MetricRow& r : rows)
    out << r.dataset << "\t" << r.feature_set << "\t" << r.nll << "\t" << r.rmse
        << "\t" << r.corr100 << (r.zero_variance ? "\t# zero-variance" : "") << "\n";
  return out.str();
}

std::vector<PerReportRow> per_report_metrics(const std::vector<SequenceEval>& seqs) {
  std::vector<const SequenceEval*> kept;
  for (const SequenceEval& s : seqs) {
    if (s.dists.size() != s.truths.size())
      throw std::invalid_argument("per_report_metrics: dists/truths length mismatch");
    if (s.dists.size() >= 4) kept.push_back(&s);  // initial + >= 3 reports
  }
  if (kept.empty())
    throw std::invalid_argument("per_report_metrics: no outage has 3+ reports");
  std::vector<PerReportRow> rows;
  for (int r = 0; r <= 3; ++r) {
    std::vector<gamma::GammaParams> preds;
    std::vector<double> truths;
    for (const SequenceEval* s : kept) {
      preds.push_back(s->dists[r]);
      truths.push_back(s->truths[r]);
    }
    MetricRow m = metrics(preds, truths);
    rows.push_back({r, m.nll, m.rmse, int(kept.size())});
  }
  return rows;
}

std::string per_report_table(const std::vector<PerReportRow>& rows) {
  std::ostringstream out;
  out << "reports\tnll\trmse\tn\n";
  for (const PerReportRow& r : rows)
    out << r.reports << "\t" << r.nll << "\t" << r.rmse << "\t" << r.n << "\n";
  return out.str();
}

BaselineResult linear_baseline(const std::vector<std::vector<double>>& train_x,
                               const std::vector<double>& train_y,
                               const std::vector<std::vector<double>>& test_x,
                               const std::vector<double>& test_y) {
  if (train_x.empty() || train_x.size() != train_y.size())
    throw std::invalid_argument("linear_baseline: bad training data");
  if (test_x.size() != test_y.size())
    throw std::invalid_argument("linear_baseline: bad test data");
  size_t dim = train_x[0].size();
  size_t p = dim + 1;  // plus intercept
  const double lambda = 1e-6;

  // normal equations A w = b with A = X^T X + lambda I
  std::vector<std::vector<double>> a(p, std::vector<double>(p, 0.0));
  std::vector<double> b(p, 0.0);
  for (size_t i = 0; i < train_x.size(); ++i) {
    if (train_x[i].size() != dim)
      throw std::invalid_argument("linear_baseline: inconsistent feature width");
    std::vector<double> row(train_x[i]);
    row.push_back(1.0);
    for (size_t j = 0; j < p; ++j) {
      b[j] += row[j] * train_y[i];
      for (size_t k = 0; k < p; ++k) a[j][k] += row[j] * row[k];
    }
  }
  for (size_t j = 0; j < p; ++j) a[j][j] += lambda;

  // Gaussian elimination with partial pivoting
  std::vector<double> w(p, 0.0);
  for (size_t col = 0; col < p; ++col) {
    size_t piv = col;
    for (size_t r = col + 1; r < p; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-12)
      throw std::runtime_error("linear_baseline: singular normal equations");
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (size_t r = col + 1; r < p; ++r) {
      double f = a[r][col] / a[col][col];
      for (size_t k = col; k < p; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  for (size_t col = p; col-- > 0;) {
    double acc = b[col];
    for (size_t k = col + 1; k < p; ++k) acc -= a[col][k] * w[k];
    w[col] = acc / a[col][col];
  }

  BaselineResult res;
  res.weights = w;
  for (const auto& x : test_x) {
    if (x.size() != dim)
      throw std::invalid_argument("linear_baseline: inconsistent feature width");
    double y = w[dim];
    for (size_t j = 0; j < dim; ++j) y += w[j] * x[j];
    res.predictions.push_back(y);
  }
  if (!test_x.empty()) {
    PointStats s = point_stats(res.predictions, test_y);
    res.rmse = s.rmse;
    res.corr100 = s.corr100;
    res.zero_variance = s.zero_variance;
  }
  return res;
}

std::vector<double> smooth_weights(const std::vector<double>& w) {
  size_t n = w.size();
  std::vector<double> out(n);
  if (n == 0) return out;
  auto at = [&](long i) {  // repeat edges; keeps total mass exact
    if (i < 0) return w[0];
    if (i >= long(n)) return w[n - 1];
    return w[size_t(i)];
  };
  for (size_t i = 0; i < n; ++i)
    out[i] = (at(long(i) - 1) + at(long(i)) + at(long(i) + 1)) / 3.0;
  return out;
}

AttentionExport attention_export(const std::string& outage_id, int report_index,
                                 const std::vector<std::string>& tokens,
                                 const std::vector<std::pair<int, int>>& offsets,
                                 const std::vector<num::Tensor>& head_weights) {
  if (tokens.size() != offsets.size())
    throw std::invalid_argument("attention_export: tokens/offsets length mismatch");
  AttentionExport ex;
  ex.outage_id = outage_id;
  ex.report_index = report_index;
  ex.tokens = tokens;
  ex.offsets = offsets;
  for (const num::Tensor& hw : head_weights) {
    if (size_t(hw.size()) != tokens.size())
      throw std::invalid_argument("attention_export: weight/token length mismatch");
    ex.raw.push_back(hw.v);
    ex.smoothed.push_back(smooth_weights(hw.v));
  }
  return ex;
}

std::string attention_records(const std::vector<AttentionExport>& exports) {
  std::ostringstream out;
  out << "outage\treport\ttoken\tbegin\tend\thead\traw\tsmoothed\n";
  for (const AttentionExport& ex : exports)
    for (size_t h = 0; h < ex.raw.size(); ++h)
      for (size_t i = 0; i < ex.tokens.size(); ++i)
        out << ex.outage_id << "\t" << ex.report_index << "\t" << ex.tokens[i] << "\t"
            << ex.offsets[i].first << "\t" << ex.offsets[i].second << "\t" << h << "\t"
            << ex.raw[h][i] << "\t" << ex.smoothed[h][i] << "\n";
  return out.str();
}

std::vector<std::vector<BigramCount>> top_bigrams(
    const std::vector<AttentionExport>& exports) {
  size_t heads = 0;
  for (const AttentionExport& ex : exports) heads = std::max(heads, ex.raw.size());
  std::vector<std::map<std::pair<std::string, std::string>, int>> counts(heads);
  for (const AttentionExport& ex : exports) {
    for (size_t h = 0; h < ex.raw.size(); ++h) {
      const auto& w = ex.raw[h];
      if (w.size() < 2) continue;  // single-token reports have no bigrams
      size_t best = 0;
      for (size_t i = 1; i < w.size(); ++i)
        if (w[i] > w[best]) best = i;
      if (best > 0) ++counts[h][{ex.tokens[best - 1], ex.tokens[best]}];
      if (best + 1 < w.size()) ++counts[h][{ex.tokens[best], ex.tokens[best + 1]}];
    }
  }
  std::vector<std::vector<BigramCount>> out(heads);
  for (size_t h = 0; h < heads; ++h) {
    for (const auto& [bg, c] : counts[h]) out[h].push_back({bg.first, bg.second, c});
    std::sort(out[h].begin(), out[h].end(), [](const BigramCount& a, const BigramCount& b) {
      if (a.count != b.count) return a.count > b.count;
      if (a.first != b.first) return a.first < b.first;
      return a.second < b.second;
    });
  }
  return out;
}

std::string bigram_table(const std::vector<std::vector<BigramCount>>& per_head) {
  std::ostringstream out;
  out << "head\tbigram\tcount\n";
  for (size_t h = 0; h < per_head.size(); ++h)
    for (const BigramCount& b : per_head[h])
      out << h << "\t" << b.first << " " << b.second << "\t" << b.count << "\n";
  return out.str();
}

ReportRow report_row(const gamma::GammaParams& p, double elapsed_hours) {
  ReportRow r;
  r.elapsed_hours = elapsed_hours;
  r.mode = gamma::mode(p);
  r.mean = gamma::mean(p);
  r.q80 = gamma::quantile(0.8, p);
  return r;
}

std::string report_table(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << "elapsed\tmode\tmean\tq80\n";
  for (const ReportRow& r : rows)
    out << r.elapsed_hours << "\t" << r.mode << "\t" << r.mean << "\t" << r.q80 << "\n";
  return out.str();
}

}  // namespace outage::eval
