#ifndef VOLALG_DATASET_HPP
#define VOLALG_DATASET_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace volalg {

/// In-memory classification dataset: row-major inputs (count x features,
/// values in [0, 1]) and integer class labels in [0, classes).
struct Dataset {
  std::vector<double> inputs;
  std::vector<int> labels;
  std::size_t count = 0;
  std::size_t features = 0;
  int classes = 0;
  std::string name;

  std::span<const double> row(std::size_t i) const {
    return {inputs.data() + i * features, features};
  }
};

/// One training batch, gathered into contiguous storage.
struct Batch {
  std::vector<double> inputs;  // row-major count x features
  std::vector<int> labels;
  std::size_t count = 0;
  std::size_t features = 0;
};

/// Reads a big-endian IDX image/label file pair (magic 0x00000803 for the
/// 3-D image tensor, 0x00000801 for the label vector). Pixels are scaled to
/// [0, 1] by /255. Image and label counts must match. Throws ParseError
/// naming the offending field on bad magic, truncation, or count mismatch.
Dataset idx_read(const std::string& images_path,
                 const std::string& labels_path);

/// Writes the pair back in IDX format; pixels are re-quantized by x255 and
/// rounding to nearest, so data that came from idx_read round-trips exactly.
/// `rows`/`cols` give the stored image shape; rows*cols must equal features.
void idx_write(const Dataset& data, const std::string& images_path,
               const std::string& labels_path, std::uint32_t rows,
               std::uint32_t cols);

/// Gaussian blobs around per-class centers drawn uniformly in
/// [0.25, 0.75]^dim; samples are clamped into [0, 1] and shuffled.
/// Deterministic per seed.
Dataset synthetic_blobs(int classes, int per_class, int dim, double spread,
                        std::uint64_t seed);

/// Index batches for one epoch: a seeded shuffle of 0..count-1 cut into
/// consecutive batches; the final short batch is kept.
std::vector<std::vector<std::size_t>> minibatches(std::size_t count,
                                                  std::size_t batch_size,
                                                  std::uint64_t epoch_seed);

/// Copies the given rows into a contiguous batch.
Batch gather(const Dataset& data, std::span<const std::size_t> rows);

/// First n examples of the dataset (all of it if n == 0 or n >= count).
Dataset take_prefix(const Dataset& data, std::size_t n);

}  // namespace volalg

#endif  // VOLALG_DATASET_HPP
