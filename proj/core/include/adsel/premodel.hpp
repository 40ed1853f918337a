#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adsel/selection.hpp"

namespace adsel {

// Scaled feature rows with their optimum-model labels. A label of nullopt
// means no candidate model handles the image.
struct TrainingMatrix {
  std::vector<std::string> feature_names;
  std::vector<std::string> image_ids;
  std::vector<double> values;  // row-major, rows() x dims()
  std::vector<std::optional<std::string>> labels;

  std::size_t rows() const { return image_ids.size(); }
  std::size_t dims() const { return feature_names.size(); }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * dims(), dims()}; }

  void add_row(std::string image_id, std::span<const double> scaled, std::optional<std::string> label);
};

struct Neighbor {
  std::size_t row = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Exact Euclidean K nearest rows, ascending by distance, equal distances by
// lower row index.
std::vector<Neighbor> k_nearest(const TrainingMatrix& matrix, std::span<const double> query, std::size_t k);

struct Fallback {
  enum class Kind { kUsePrespecified, kAbstain };
  Kind kind = Kind::kAbstain;
  std::string model_id;  // set for kUsePrespecified

  static Fallback abstain() { return {Kind::kAbstain, {}}; }
  static Fallback use(std::string model) { return {Kind::kUsePrespecified, std::move(model)}; }

  friend bool operator==(const Fallback&, const Fallback&) = default;
};

struct CascadeLevel {
  std::string model_id;
  // Per training row: 1 iff the row's label is this level's model.
  std::vector<std::uint8_t> positive;
};

class Cascade;

// Per-level decision seam. The default is a majority vote over the shared
// neighbours; alternatives may ignore the neighbours and look at the query.
class LevelDecider {
 public:
  virtual ~LevelDecider() = default;
  virtual bool use_level(const Cascade& cascade, std::size_t level, std::span<const double> query,
                         std::span<const Neighbor> neighbors) const = 0;
};

// Positive iff strictly more than half of the neighbours are positive rows.
class MajorityVote final : public LevelDecider {
 public:
  bool use_level(const Cascade& cascade, std::size_t level, std::span<const double> query,
                 std::span<const Neighbor> neighbors) const override;
};

struct Prediction {
  std::optional<std::string> choice;  // nullopt = abstain
  // Index of the level that fired, or levels().size() when none did.
  std::size_t level_reached = 0;
  bool used_fallback = false;
  std::vector<Neighbor> neighbors;
  std::vector<std::string> neighbor_ids;
};

// Sequence of binary KNN deciders sharing one training matrix and one
// neighbour search per query.
class Cascade {
 public:
  Cascade(TrainingMatrix matrix, std::vector<std::string> level_models, std::size_t k, Fallback fallback);
  Cascade(const Cascade& other);
  Cascade& operator=(const Cascade& other);
  Cascade(Cascade&&) noexcept;
  Cascade& operator=(Cascade&&) noexcept;
  ~Cascade();

  const TrainingMatrix& matrix() const { return matrix_; }
  const std::vector<CascadeLevel>& levels() const { return levels_; }
  std::size_t k() const { return k_; }
  const Fallback& fallback() const { return fallback_; }

  std::vector<Neighbor> neighbors(std::span<const double> query) const;
  // Number of neighbour searches run so far; predict() performs exactly one.
  std::uint64_t neighbor_searches() const { return searches_->load(std::memory_order_relaxed); }

 private:
  TrainingMatrix matrix_;
  std::vector<CascadeLevel> levels_;
  std::size_t k_;
  Fallback fallback_;
  std::unique_ptr<std::atomic<std::uint64_t>> searches_;
};

// Levels follow the included models of `trace`, in order. The training matrix
// labels must name models by id.
Cascade train(TrainingMatrix matrix, const ModelSelectionTrace& trace, std::size_t k, Fallback fallback);

Prediction predict(const Cascade& cascade, std::span<const double> query);
Prediction predict(const Cascade& cascade, std::span<const double> query, const LevelDecider& decider);
// Level decisions over an already computed neighbour list.
Prediction predict_from_neighbors(const Cascade& cascade, std::span<const double> query, std::vector<Neighbor> neighbors,
                                  const LevelDecider& decider);

// Mean distance to the K neighbours; lower is more confident.
double confidence(const Prediction& prediction);

}  // namespace adsel
