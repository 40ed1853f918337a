#include "adsel/premodel.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "adsel/error.hpp"

namespace adsel {

void TrainingMatrix::add_row(std::string image_id, std::span<const double> scaled, std::optional<std::string> label) {
  if (scaled.size() != dims()) {
    throw Error(fmt::format("training row '{}' has {} features, matrix has {}", image_id, scaled.size(), dims()));
  }
  image_ids.push_back(std::move(image_id));
  values.insert(values.end(), scaled.begin(), scaled.end());
  labels.push_back(std::move(label));
}

std::vector<Neighbor> k_nearest(const TrainingMatrix& matrix, std::span<const double> query, std::size_t k) {
  if (query.size() != matrix.dims()) {
    throw Error(fmt::format("query has {} features, training matrix has {}", query.size(), matrix.dims()));
  }
  k = std::min(k, matrix.rows());
  std::vector<Neighbor> best;
  best.reserve(k + 1);
  if (k == 0) return best;
  const std::size_t d = matrix.dims();
  const double* data = matrix.values.data();
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const double* row = data + r * d;
    double sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = row[j] - query[j];
      sum += diff * diff;
    }
    const double dist = std::sqrt(sum);
    // Rows arrive in increasing order, so a tie never displaces an earlier row.
    if (best.size() == k && !(dist < best.back().distance)) continue;
    auto pos = std::upper_bound(best.begin(), best.end(), dist,
                                [](double v, const Neighbor& n) { return v < n.distance; });
    best.insert(pos, Neighbor{r, dist});
    if (best.size() > k) best.pop_back();
  }
  return best;
}

Cascade::Cascade(TrainingMatrix matrix, std::vector<std::string> level_models, std::size_t k, Fallback fallback)
    : matrix_(std::move(matrix)),
      k_(k),
      fallback_(std::move(fallback)),
      searches_(std::make_unique<std::atomic<std::uint64_t>>(0)) {
  if (matrix_.rows() == 0) throw Error("cannot train a premodel on an empty training matrix");
  if (matrix_.dims() == 0) throw Error("training matrix has no features");
  if (matrix_.values.size() != matrix_.rows() * matrix_.dims() || matrix_.labels.size() != matrix_.rows()) {
    throw Error("training matrix is inconsistent");
  }
  if (k_ == 0) throw Error("K must be at least 1");
  if (k_ > matrix_.rows()) throw Error(fmt::format("K = {} exceeds {} training rows", k_, matrix_.rows()));
  if (level_models.empty()) throw Error("premodel needs at least one level");
  for (double v : matrix_.values) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error("training matrix values must be scaled to [0, 1]");
  }
  if (fallback_.kind == Fallback::Kind::kUsePrespecified && fallback_.model_id.empty()) {
    throw Error("pre-specified fallback needs a model id");
  }
  levels_.reserve(level_models.size());
  for (auto& model : level_models) {
    CascadeLevel level{std::move(model), std::vector<std::uint8_t>(matrix_.rows(), 0)};
    for (std::size_t r = 0; r < matrix_.rows(); ++r) {
      level.positive[r] = matrix_.labels[r] && *matrix_.labels[r] == level.model_id;
    }
    levels_.push_back(std::move(level));
  }
}

Cascade::Cascade(const Cascade& other)
    : matrix_(other.matrix_),
      levels_(other.levels_),
      k_(other.k_),
      fallback_(other.fallback_),
      searches_(std::make_unique<std::atomic<std::uint64_t>>(0)) {}

Cascade& Cascade::operator=(const Cascade& other) {
  if (this != &other) {
    Cascade copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Cascade::Cascade(Cascade&&) noexcept = default;
Cascade& Cascade::operator=(Cascade&&) noexcept = default;
Cascade::~Cascade() = default;

std::vector<Neighbor> Cascade::neighbors(std::span<const double> query) const {
  searches_->fetch_add(1, std::memory_order_relaxed);
  return k_nearest(matrix_, query, k_);
}

Cascade train(TrainingMatrix matrix, const ModelSelectionTrace& trace, std::size_t k, Fallback fallback) {
  std::vector<std::string> models = trace.selected_ids();
  if (models.empty()) throw Error("model selection trace selects no models");
  return Cascade(std::move(matrix), std::move(models), k, std::move(fallback));
}

bool MajorityVote::use_level(const Cascade& cascade, std::size_t level, std::span<const double>,
                             std::span<const Neighbor> neighbors) const {
  const auto& positive = cascade.levels()[level].positive;
  std::size_t votes = 0;
  for (const auto& n : neighbors) votes += positive[n.row];
  return 2 * votes > neighbors.size();
}

Prediction predict_from_neighbors(const Cascade& cascade, std::span<const double> query, std::vector<Neighbor> neighbors,
                                  const LevelDecider& decider) {
  Prediction p;
  p.neighbor_ids.reserve(neighbors.size());
  for (const auto& n : neighbors) p.neighbor_ids.push_back(cascade.matrix().image_ids[n.row]);
  p.neighbors = std::move(neighbors);
  const auto& levels = cascade.levels();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (decider.use_level(cascade, i, query, p.neighbors)) {
      p.choice = levels[i].model_id;
      p.level_reached = i;
      return p;
    }
  }
  p.level_reached = levels.size();
  p.used_fallback = true;
  if (cascade.fallback().kind == Fallback::Kind::kUsePrespecified) p.choice = cascade.fallback().model_id;
  return p;
}

Prediction predict(const Cascade& cascade, std::span<const double> query, const LevelDecider& decider) {
  return predict_from_neighbors(cascade, query, cascade.neighbors(query), decider);
}

Prediction predict(const Cascade& cascade, std::span<const double> query) {
  static const MajorityVote kVote;
  return predict(cascade, query, kVote);
}

double confidence(const Prediction& prediction) {
  if (prediction.neighbors.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& n : prediction.neighbors) sum += n.distance;
  return sum / static_cast<double>(prediction.neighbors.size());
}

}  // namespace adsel
