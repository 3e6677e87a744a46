#include "volalg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "volalg/errors.hpp"
#include "volalg/rng.hpp"

namespace volalg {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& in, const char* field,
                          const std::string& path) {
  unsigned char raw[4];
  if (!in.read(reinterpret_cast<char*>(raw), 4)) {
    throw ParseError(std::string("truncated ") + field + " in " + path);
  }
  return (std::uint32_t(raw[0]) << 24) | (std::uint32_t(raw[1]) << 16) |
         (std::uint32_t(raw[2]) << 8) | std::uint32_t(raw[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
  const unsigned char raw[4] = {
      static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
      static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(raw), 4);
}

}  // namespace

Dataset idx_read(const std::string& images_path,
                 const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw ParseError("cannot open image file: " + images_path);
  const std::uint32_t img_magic = read_u32_be(img, "image magic", images_path);
  if (img_magic != kImageMagic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bad image magic 0x%08x (expected 0x%08x)",
                  img_magic, kImageMagic);
    throw ParseError(std::string(buf) + " in " + images_path);
  }
  const std::uint32_t count = read_u32_be(img, "image count", images_path);
  const std::uint32_t rows = read_u32_be(img, "image rows", images_path);
  const std::uint32_t cols = read_u32_be(img, "image cols", images_path);

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw ParseError("cannot open label file: " + labels_path);
  const std::uint32_t lab_magic = read_u32_be(lab, "label magic", labels_path);
  if (lab_magic != kLabelMagic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bad label magic 0x%08x (expected 0x%08x)",
                  lab_magic, kLabelMagic);
    throw ParseError(std::string(buf) + " in " + labels_path);
  }
  const std::uint32_t label_count =
      read_u32_be(lab, "label count", labels_path);
  if (label_count != count) {
    throw ParseError("image/label count mismatch: " + std::to_string(count) +
                     " images vs " + std::to_string(label_count) + " labels");
  }

  Dataset d;
  d.count = count;
  d.features = std::size_t(rows) * cols;
  d.name = images_path;
  d.inputs.resize(d.count * d.features);
  std::vector<unsigned char> pixel_row(d.features);
  for (std::size_t i = 0; i < d.count; ++i) {
    if (!img.read(reinterpret_cast<char*>(pixel_row.data()),
                  static_cast<std::streamsize>(d.features))) {
      throw ParseError("truncated image payload at image " +
                       std::to_string(i) + " in " + images_path);
    }
    for (std::size_t j = 0; j < d.features; ++j) {
      d.inputs[i * d.features + j] = pixel_row[j] / 255.0;
    }
  }
  d.labels.resize(d.count);
  std::vector<unsigned char> raw_labels(d.count);
  if (d.count > 0 &&
      !lab.read(reinterpret_cast<char*>(raw_labels.data()),
                static_cast<std::streamsize>(d.count))) {
    throw ParseError("truncated label payload in " + labels_path);
  }
  int max_label = 0;
  for (std::size_t i = 0; i < d.count; ++i) {
    d.labels[i] = raw_labels[i];
    max_label = std::max(max_label, d.labels[i]);
  }
  d.classes = max_label + 1;
  return d;
}

void idx_write(const Dataset& data, const std::string& images_path,
               const std::string& labels_path, std::uint32_t rows,
               std::uint32_t cols) {
  if (std::size_t(rows) * cols != data.features) {
    throw InputError("rows*cols must equal the dataset feature count");
  }
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw ParseError("cannot write image file: " + images_path);
  write_u32_be(img, kImageMagic);
  write_u32_be(img, static_cast<std::uint32_t>(data.count));
  write_u32_be(img, rows);
  write_u32_be(img, cols);
  std::vector<unsigned char> pixel_row(data.features);
  for (std::size_t i = 0; i < data.count; ++i) {
    for (std::size_t j = 0; j < data.features; ++j) {
      const double v =
          std::clamp(data.inputs[i * data.features + j], 0.0, 1.0);
      pixel_row[j] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    img.write(reinterpret_cast<const char*>(pixel_row.data()),
              static_cast<std::streamsize>(data.features));
  }

  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw ParseError("cannot write label file: " + labels_path);
  write_u32_be(lab, kLabelMagic);
  write_u32_be(lab, static_cast<std::uint32_t>(data.count));
  for (std::size_t i = 0; i < data.count; ++i) {
    const unsigned char b = static_cast<unsigned char>(data.labels[i]);
    lab.write(reinterpret_cast<const char*>(&b), 1);
  }
}

Dataset synthetic_blobs(int classes, int per_class, int dim, double spread,
                        std::uint64_t seed) {
  if (classes < 1 || per_class < 1 || dim < 1) {
    throw InputError("blob sizes must be positive");
  }
  if (spread < 0.0) throw InputError("spread must be >= 0");
  Rng rng(seed);
  std::vector<double> centers(std::size_t(classes) * dim);
  for (double& c : centers) c = rng.uniform(0.25, 0.75);

  Dataset d;
  d.count = std::size_t(classes) * per_class;
  d.features = static_cast<std::size_t>(dim);
  d.classes = classes;
  d.name = "blobs";
  d.inputs.resize(d.count * d.features);
  d.labels.resize(d.count);
  std::size_t row = 0;
  for (int c = 0; c < classes; ++c) {
    for (int k = 0; k < per_class; ++k, ++row) {
      d.labels[row] = c;
      for (int j = 0; j < dim; ++j) {
        const double v = centers[std::size_t(c) * dim + j] +
                         spread * rng.normal();
        d.inputs[row * d.features + j] = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  // Shuffle rows so minibatches mix classes even without reshuffling.
  std::vector<std::size_t> order(d.count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  Dataset shuffled = d;
  for (std::size_t i = 0; i < d.count; ++i) {
    shuffled.labels[i] = d.labels[order[i]];
    std::copy_n(d.inputs.begin() + order[i] * d.features, d.features,
                shuffled.inputs.begin() + i * d.features);
  }
  return shuffled;
}

std::vector<std::vector<std::size_t>> minibatches(std::size_t count,
                                                  std::size_t batch_size,
                                                  std::uint64_t epoch_seed) {
  if (count == 0) throw InputError("cannot batch an empty dataset");
  if (batch_size < 1) throw InputError("batch_size must be >= 1");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(epoch_seed);
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t at = 0; at < count; at += batch_size) {
    const std::size_t end = std::min(count, at + batch_size);
    batches.emplace_back(order.begin() + at, order.begin() + end);
  }
  return batches;
}

Batch gather(const Dataset& data, std::span<const std::size_t> rows) {
  Batch b;
  b.count = rows.size();
  b.features = data.features;
  b.inputs.resize(b.count * b.features);
  b.labels.resize(b.count);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    b.labels[i] = data.labels[rows[i]];
    std::copy_n(data.inputs.begin() + rows[i] * data.features, data.features,
                b.inputs.begin() + i * b.features);
  }
  return b;
}

Dataset take_prefix(const Dataset& data, std::size_t n) {
  if (n == 0 || n >= data.count) return data;
  Dataset d;
  d.count = n;
  d.features = data.features;
  d.classes = data.classes;
  d.name = data.name;
  d.inputs.assign(data.inputs.begin(),
                  data.inputs.begin() + n * data.features);
  d.labels.assign(data.labels.begin(), data.labels.begin() + n);
  return d;
}

}  // namespace volalg
