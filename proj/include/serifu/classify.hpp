#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "serifu/corpus.hpp"
#include "serifu/error.hpp"
#include "serifu/patterns.hpp"
#include "serifu/rng.hpp"
#include "serifu/subword.hpp"

namespace serifu {

// Dense row-major speaker x surface matrix.
struct FeatureMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  std::vector<double> values;

  std::size_t rows() const { return row_ids.size(); }
  std::size_t cols() const { return col_ids.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols(), cols()}; }

  FeatureMatrix select_rows(std::span<const std::size_t> rows_to_keep) const {
    FeatureMatrix out;
    out.col_ids = col_ids;
    out.values.reserve(rows_to_keep.size() * cols());
    for (auto r : rows_to_keep) {
      out.row_ids.push_back(row_ids[r]);
      auto src = row(r);
      out.values.insert(out.values.end(), src.begin(), src.end());
    }
    return out;
  }
};

// Rows are the table's documents (speakers); columns are the word-list
// universe in lexicographic order, zero where a speaker never used a surface.
inline FeatureMatrix build_features(const TfIdfTable& table, const WordList& word_list) {
  if (table.scheme != Scheme::character) {
    throw ValidationError("features need a character-scheme table, got " + std::string(to_string(table.scheme)));
  }
  FeatureMatrix m;
  m.row_ids = table.doc_ids;
  m.col_ids = word_list.universe();
  m.values.assign(m.rows() * m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (const auto& [surface, cell] : table.cells[r]) {
      auto it = std::lower_bound(m.col_ids.begin(), m.col_ids.end(), surface);
      if (it != m.col_ids.end() && *it == surface) m.at(r, static_cast<std::size_t>(it - m.col_ids.begin())) = cell.value;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Linear one-vs-rest SVM

enum class SvmSolver {
  stochastic,  // Pegasos: hinge-loss subgradient steps of size 1/(lambda t) on shuffled rows
  full_batch,  // full-gradient subgradient descent with step backtracking
};

struct SvmConfig {
  double lambda = 1e-3;
  std::size_t epochs = 200;
  std::uint64_t seed = 42;
  SvmSolver solver = SvmSolver::stochastic;
  // Always "linear"; kernel SVMs are not provided.
  std::string kernel = "linear";
};

struct SvmModel {
  std::vector<Group5> classes;
  std::vector<std::string> col_ids;
  std::vector<std::vector<double>> weights;  // one per class
  std::vector<double> bias;
  SvmConfig config;
  // Full-batch solver only: objective after each epoch, per class.
  std::vector<std::vector<double>> objective_history;

  std::vector<double> scores(std::span<const double> x) const {
    std::vector<double> out(classes.size());
    for (std::size_t c = 0; c < classes.size(); ++c) {
      out[c] = std::inner_product(x.begin(), x.end(), weights[c].begin(), 0.0) + bias[c];
    }
    return out;
  }
};

namespace detail {

using SparseRow = std::vector<std::pair<std::uint32_t, double>>;

inline std::vector<SparseRow> sparse_rows(const FeatureMatrix& X) {
  std::vector<SparseRow> rows(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    for (std::size_t c = 0; c < X.cols(); ++c) {
      if (X.at(r, c) != 0.0) rows[r].emplace_back(static_cast<std::uint32_t>(c), X.at(r, c));
    }
  }
  return rows;
}

// Regularized hinge objective: lambda/2 (|w|^2 + b^2) + mean hinge loss.
// The bias is an extra weight on a constant-one feature.
inline double hinge_objective(const std::vector<SparseRow>& rows, const std::vector<double>& signs,
                              const std::vector<double>& w, double b, double lambda) {
  double norm2 = b * b;
  for (double v : w) norm2 += v * v;
  double loss = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double s = b;
    for (auto [c, x] : rows[i]) s += w[c] * x;
    loss += std::max(0.0, 1.0 - signs[i] * s);
  }
  return 0.5 * lambda * norm2 + loss / static_cast<double>(rows.size());
}

// Pegasos with w = scale * v so each step touches only the row's nonzeros.
inline std::pair<std::vector<double>, double> pegasos(const std::vector<SparseRow>& rows,
                                                      const std::vector<double>& signs, std::size_t dim,
                                                      const SvmConfig& config, Rng& rng) {
  std::vector<double> v(dim + 1, 0.0);  // last slot is the bias
  double scale = 1.0;
  double v_norm2 = 0.0;
  const double radius2 = 1.0 / config.lambda;
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t t = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (auto i : order) {
      ++t;
      const double eta = 1.0 / (config.lambda * static_cast<double>(t));
      double dot = v[dim];
      for (auto [c, x] : rows[i]) dot += v[c] * x;
      const double margin = signs[i] * scale * dot;

      const double shrink = 1.0 - eta * config.lambda;
      if (shrink <= 0.0) {
        std::fill(v.begin(), v.end(), 0.0);
        scale = 1.0;
        v_norm2 = 0.0;
      } else {
        scale *= shrink;
      }
      if (margin < 1.0) {
        const double step = eta * signs[i] / scale;
        auto bump = [&](std::size_t c, double x) {
          const double old = v[c];
          v[c] += step * x;
          v_norm2 += v[c] * v[c] - old * old;
        };
        for (auto [c, x] : rows[i]) bump(c, x);
        bump(dim, 1.0);
      }
      const double norm2 = scale * scale * v_norm2;
      if (norm2 > radius2) scale *= std::sqrt(radius2 / norm2);
      if (scale < 1e-100) {
        for (double& x : v) x *= scale;
        v_norm2 *= scale * scale;
        scale = 1.0;
      }
    }
  }
  std::vector<double> w(dim);
  for (std::size_t c = 0; c < dim; ++c) w[c] = scale * v[c];
  return {w, scale * v[dim]};
}

// Subgradient descent on the full objective. A step is accepted only if it
// does not raise the objective; otherwise the step is halved (up to 60 times).
inline std::pair<std::vector<double>, double> full_batch(const std::vector<SparseRow>& rows,
                                                         const std::vector<double>& signs, std::size_t dim,
                                                         const SvmConfig& config, std::vector<double>& history) {
  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  double obj = hinge_objective(rows, signs, w, b, config.lambda);
  const double n = static_cast<double>(rows.size());
  std::vector<double> grad(dim);
  std::vector<double> trial(dim);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t c = 0; c < dim; ++c) grad[c] = config.lambda * w[c];
    double grad_b = config.lambda * b;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double s = b;
      for (auto [c, x] : rows[i]) s += w[c] * x;
      if (signs[i] * s < 1.0) {
        for (auto [c, x] : rows[i]) grad[c] -= signs[i] * x / n;
        grad_b -= signs[i] / n;
      }
    }
    double eta = 1.0 / (config.lambda * static_cast<double>(epoch));
    for (int attempt = 0; attempt < 60; ++attempt, eta *= 0.5) {
      for (std::size_t c = 0; c < dim; ++c) trial[c] = w[c] - eta * grad[c];
      const double trial_b = b - eta * grad_b;
      const double trial_obj = hinge_objective(rows, signs, trial, trial_b, config.lambda);
      if (trial_obj <= obj) {
        w.swap(trial);
        b = trial_b;
        obj = trial_obj;
        break;
      }
    }
    history.push_back(obj);
  }
  return {w, b};
}

inline void check_inputs(const FeatureMatrix& X, std::span<const Group5> y) {
  if (X.rows() != y.size()) throw ValidationError("feature rows and labels differ in length");
  if (X.values.size() != X.rows() * X.cols()) throw ValidationError("feature matrix has the wrong number of cells");
  for (double v : X.values) {
    if (std::isnan(v)) throw ValidationError("NaN feature");
  }
}

inline std::vector<Group5> distinct_labels(std::span<const Group5> y) {
  std::vector<Group5> classes(y.begin(), y.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  return classes;
}

}  // namespace detail

inline SvmModel train_svm(const FeatureMatrix& X, std::span<const Group5> y, const SvmConfig& config = {}) {
  detail::check_inputs(X, y);
  if (!(config.lambda > 0.0)) throw ValidationError("lambda must be positive");
  SvmModel model;
  model.classes = detail::distinct_labels(y);
  if (model.classes.size() < 2) throw ValidationError("single-class input");
  model.col_ids = X.col_ids;
  model.config = config;

  const auto rows = detail::sparse_rows(X);
  for (std::size_t k = 0; k < model.classes.size(); ++k) {
    std::vector<double> signs(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) signs[i] = y[i] == model.classes[k] ? 1.0 : -1.0;
    std::pair<std::vector<double>, double> wb;
    if (config.solver == SvmSolver::stochastic) {
      Rng rng(config.seed + k);
      wb = detail::pegasos(rows, signs, X.cols(), config, rng);
    } else {
      model.objective_history.emplace_back();
      wb = detail::full_batch(rows, signs, X.cols(), config, model.objective_history.back());
    }
    model.weights.push_back(std::move(wb.first));
    model.bias.push_back(wb.second);
  }
  return model;
}

// Argmax of w.x + b per row; the earlier class in model.classes wins ties.
inline std::vector<Group5> predict(const SvmModel& model, const FeatureMatrix& X) {
  if (X.col_ids != model.col_ids) throw ValidationError("dimension mismatch: feature columns differ from model");
  std::vector<Group5> out;
  out.reserve(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const auto s = model.scores(X.row(r));
    out.push_back(model.classes[static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin())]);
  }
  return out;
}

inline double accuracy(std::span<const Group5> truth, std::span<const Group5> predicted) {
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

// ---------------------------------------------------------------------------
// Cross-validation

struct CvResult {
  std::vector<Group5> classes;               // confusion axes
  std::vector<std::size_t> fold_of_row;      // test fold of each row
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
  // confusion[fold][true][predicted]
  std::vector<std::vector<std::vector<std::size_t>>> confusion;
};

// Stratified fold assignment: each class's rows are shuffled and dealt
// round-robin, the dealer position carrying over from one class to the next.
inline std::vector<std::size_t> assign_folds(std::span<const Group5> y, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ValidationError("need at least 2 folds");
  if (folds > y.size()) throw ValidationError("more folds than rows");
  Rng rng(seed);
  std::vector<std::size_t> fold_of(y.size(), 0);
  std::size_t dealer = 0;
  for (Group5 cls : detail::distinct_labels(y)) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == cls) members.push_back(i);
    }
    rng.shuffle(std::span<std::size_t>(members));
    for (auto i : members) fold_of[i] = dealer++ % folds;
  }
  return fold_of;
}

inline CvResult cross_validate(const FeatureMatrix& X, std::span<const Group5> y, std::size_t folds,
                               const SvmConfig& config = {}) {
  detail::check_inputs(X, y);
  CvResult result;
  result.classes = detail::distinct_labels(y);
  result.fold_of_row = assign_folds(y, folds, config.seed);
  const std::size_t n_classes = result.classes.size();
  auto class_index = [&](Group5 g) {
    return static_cast<std::size_t>(std::lower_bound(result.classes.begin(), result.classes.end(), g) -
                                    result.classes.begin());
  };

  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < y.size(); ++i) (result.fold_of_row[i] == f ? test_rows : train_rows).push_back(i);
    std::vector<Group5> train_y, test_y;
    for (auto i : train_rows) train_y.push_back(y[i]);
    for (auto i : test_rows) test_y.push_back(y[i]);

    const FeatureMatrix test_x = X.select_rows(test_rows);
    std::vector<Group5> predicted;
    if (detail::distinct_labels(train_y).size() < 2) {
      // A one-class training split can only ever predict that class.
      predicted.assign(test_rows.size(), train_y.front());
    } else {
      const SvmModel model = train_svm(X.select_rows(train_rows), train_y, config);
      predicted = predict(model, test_x);
    }

    std::vector<std::vector<std::size_t>> cm(n_classes, std::vector<std::size_t>(n_classes, 0));
    for (std::size_t i = 0; i < test_y.size(); ++i) ++cm[class_index(test_y[i])][class_index(predicted[i])];
    result.confusion.push_back(std::move(cm));
    result.fold_accuracies.push_back(accuracy(test_y, predicted));
  }
  result.mean_accuracy = std::accumulate(result.fold_accuracies.begin(), result.fold_accuracies.end(), 0.0) /
                         static_cast<double>(folds);
  return result;
}

// fold <tab> accuracy rows, a mean line, then the confusion matrix summed over
// folds (rows: true class, columns: predicted class).
inline std::string format_cv_tsv(const CvResult& cv) {
  std::string out = "fold\taccuracy\n";
  for (std::size_t f = 0; f < cv.fold_accuracies.size(); ++f) {
    out += std::to_string(f + 1) + '\t' + detail::format_double(cv.fold_accuracies[f]) + '\n';
  }
  out += "mean\t" + detail::format_double(cv.mean_accuracy) + "\n\ntrue\\predicted";
  for (Group5 g : cv.classes) out += '\t' + std::string(to_string(g));
  out += '\n';
  for (std::size_t t = 0; t < cv.classes.size(); ++t) {
    out += to_string(cv.classes[t]);
    for (std::size_t p = 0; p < cv.classes.size(); ++p) {
      std::size_t total = 0;
      for (const auto& cm : cv.confusion) total += cm[t][p];
      out += '\t' + std::to_string(total);
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVM model files
//
//   serifu-svm <tab> v1 <tab> classes <tab> features <tab> lambda <tab> epochs <tab> seed
//   col <tab> surface                       (one per feature)
//   class <tab> label <tab> bias <tab> w_1 <tab> ... <tab> w_d

inline std::string save_svm(const SvmModel& model) {
  std::string out = "serifu-svm\tv1\t" + std::to_string(model.classes.size()) + '\t' +
                    std::to_string(model.col_ids.size()) + '\t' + detail::format_double(model.config.lambda) + '\t' +
                    std::to_string(model.config.epochs) + '\t' + std::to_string(model.config.seed) + '\n';
  for (const auto& c : model.col_ids) out += "col\t" + c + '\n';
  for (std::size_t k = 0; k < model.classes.size(); ++k) {
    out += "class\t" + std::string(to_string(model.classes[k])) + '\t' + detail::format_double(model.bias[k]);
    for (double w : model.weights[k]) out += '\t' + detail::format_double(w);
    out += '\n';
  }
  return out;
}

inline SvmModel load_svm(std::string_view bytes) {
  std::istringstream in{std::string(bytes)};
  std::string row;
  auto fields_of = [](const std::string& s) {
    std::vector<std::string> f;
    for (auto v : detail::split_tabs(s)) f.emplace_back(v);
    return f;
  };
  if (!std::getline(in, row)) throw ValidationError("malformed svm model: empty file");
  auto header = fields_of(row);
  if (header.size() != 7 || header[0] != "serifu-svm") throw ValidationError("malformed svm model: bad header");
  if (header[1] != "v1") throw ValidationError("svm model version mismatch: " + header[1]);
  auto n_classes = detail::parse_int<std::size_t>(header[2]);
  auto n_features = detail::parse_int<std::size_t>(header[3]);
  auto lambda = detail::parse_double(header[4]);
  auto epochs = detail::parse_int<std::size_t>(header[5]);
  auto seed = detail::parse_int<std::uint64_t>(header[6]);
  if (!n_classes || !n_features || !lambda || !epochs || !seed) throw ValidationError("malformed svm model: bad header");

  SvmModel model;
  model.config.lambda = *lambda;
  model.config.epochs = *epochs;
  model.config.seed = *seed;
  for (std::size_t c = 0; c < *n_features; ++c) {
    if (!std::getline(in, row) || row.rfind("col\t", 0) != 0) throw ValidationError("malformed svm model: column row");
    model.col_ids.push_back(row.substr(4));
  }
  for (std::size_t k = 0; k < *n_classes; ++k) {
    if (!std::getline(in, row)) throw ValidationError("malformed svm model: truncated");
    auto f = fields_of(row);
    if (f.size() != 3 + *n_features || f[0] != "class") throw ValidationError("malformed svm model: class row");
    auto label = parse_group5(f[1]);
    auto bias = detail::parse_double(f[2]);
    if (!label || !bias) throw ValidationError("malformed svm model: class row");
    model.classes.push_back(*label);
    model.bias.push_back(*bias);
    std::vector<double> w;
    for (std::size_t c = 0; c < *n_features; ++c) {
      auto v = detail::parse_double(f[3 + c]);
      if (!v) throw ValidationError("malformed svm model: weight");
      w.push_back(*v);
    }
    model.weights.push_back(std::move(w));
  }
  return model;
}

}  // namespace serifu
