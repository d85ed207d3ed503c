#include "uq/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "uq/error.hpp"
#include "uq/rng.hpp"

namespace uq {

void LabeledDataset::validate() const {
  if (static_cast<int>(labels.size()) != inputs.rows()) {
    throw Error(Error::Kind::LengthMismatch, "dataset: label count != row count");
  }
  for (int label : labels) {
    if (label < 0 || label >= k) {
      throw Error(Error::Kind::ParseError, "dataset: label out of range");
    }
  }
  for (double v : inputs.data()) {
    if (!std::isfinite(v)) {
      throw Error(Error::Kind::ParseError, "dataset: non-finite input entry");
    }
  }
}

Matrix circle_means(int k, double radius) {
  Matrix means(k, 2);
  for (int c = 0; c < k; ++c) {
    const double angle = 2.0 * 3.14159265358979323846 * c / k;
    means(c, 0) = radius * std::cos(angle);
    means(c, 1) = radius * std::sin(angle);
  }
  return means;
}

LabeledDataset gen_gaussian_clusters(int k, int n_per_class, const Matrix& means, double std_dev,
                                     uint64_t seed) {
  if (k < 2) throw Error(Error::Kind::BadSize, "need at least two clusters");
  if (means.rows() != k) {
    throw Error(Error::Kind::DimensionMismatch, "means must have one row per class");
  }
  const int dim = means.cols();
  LabeledDataset data;
  data.k = k;
  data.inputs = Matrix(k * n_per_class, dim);
  data.labels.resize(k * n_per_class);
  int row = 0;
  for (int c = 0; c < k; ++c) {
    for (int i = 0; i < n_per_class; ++i, ++row) {
      CounterRng rng(seed, 0x746f79 /*"toy"*/, c, i);
      for (int d = 0; d < dim; ++d) {
        data.inputs(row, d) = means(c, d) + std_dev * rng.next_gaussian();
      }
      data.labels[row] = c;
    }
  }
  return data;
}

LabeledDataset binarize(const LabeledDataset& data, int class_a, int class_b) {
  if (class_a == class_b) {
    throw Error(Error::Kind::ClassAbsent, "binarize: classes must be distinct");
  }
  int count_a = 0;
  int count_b = 0;
  for (int label : data.labels) {
    if (label == class_a) ++count_a;
    if (label == class_b) ++count_b;
  }
  if (count_a == 0 || count_b == 0) {
    throw Error(Error::Kind::ClassAbsent, "binarize: a requested class has no points");
  }
  LabeledDataset out;
  out.k = 2;
  out.inputs = Matrix(count_a + count_b, data.dim());
  out.labels.reserve(count_a + count_b);
  int row = 0;
  for (int i = 0; i < data.size(); ++i) {
    if (data.labels[i] != class_a && data.labels[i] != class_b) continue;
    for (int d = 0; d < data.dim(); ++d) out.inputs(row, d) = data.inputs(i, d);
    out.labels.push_back(data.labels[i] == class_a ? 0 : 1);
    ++row;
  }
  return out;
}

namespace {

uint32_t read_be32(std::istream& in, const char* what) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) {
    throw Error(Error::Kind::TruncatedFile, std::string("idx: truncated ") + what);
  }
  return (uint32_t(bytes[0]) << 24) | (uint32_t(bytes[1]) << 16) | (uint32_t(bytes[2]) << 8) |
         uint32_t(bytes[3]);
}

}  // namespace

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw Error(Error::Kind::IoError, "cannot open " + images_path);
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw Error(Error::Kind::IoError, "cannot open " + labels_path);

  const uint32_t image_magic = read_be32(images, "image header");
  if (image_magic != 0x00000803u) {
    throw Error(Error::Kind::BadMagic, "idx: bad image magic");
  }
  const uint32_t n_images = read_be32(images, "image header");
  const uint32_t rows = read_be32(images, "image header");
  const uint32_t cols = read_be32(images, "image header");

  const uint32_t label_magic = read_be32(labels, "label header");
  if (label_magic != 0x00000801u) {
    throw Error(Error::Kind::BadMagic, "idx: bad label magic");
  }
  const uint32_t n_labels = read_be32(labels, "label header");
  if (n_images != n_labels) {
    throw Error(Error::Kind::CountMismatch, "idx: image and label counts differ");
  }

  const size_t dim = size_t(rows) * cols;
  std::vector<unsigned char> pixel_buf(dim);
  LabeledDataset data;
  data.inputs = Matrix(static_cast<int>(n_images), static_cast<int>(dim));
  data.labels.resize(n_images);
  int max_label = 0;
  for (uint32_t i = 0; i < n_images; ++i) {
    images.read(reinterpret_cast<char*>(pixel_buf.data()), static_cast<std::streamsize>(dim));
    if (!images || images.gcount() != static_cast<std::streamsize>(dim)) {
      throw Error(Error::Kind::TruncatedFile, "idx: image payload shorter than header claims");
    }
    for (size_t d = 0; d < dim; ++d) {
      data.inputs(static_cast<int>(i), static_cast<int>(d)) = pixel_buf[d] / 255.0;
    }
    char label = 0;
    labels.read(&label, 1);
    if (!labels) {
      throw Error(Error::Kind::TruncatedFile, "idx: label payload shorter than header claims");
    }
    data.labels[i] = static_cast<unsigned char>(label);
    max_label = std::max(max_label, data.labels[i]);
  }
  data.k = max_label + 1;
  return data;
}

std::pair<LabeledDataset, LabeledDataset> train_val_split(const LabeledDataset& data, int n_val,
                                                          uint64_t seed) {
  const int n = data.size();
  if (n_val <= 0 || n_val >= n) {
    throw Error(Error::Kind::BadSize, "split: need 0 < n_val < n");
  }
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  CounterRng rng(seed, 0x73706c74 /*"splt"*/);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_below(static_cast<uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  auto take = [&](int begin, int count) {
    LabeledDataset part;
    part.k = data.k;
    part.inputs = Matrix(count, data.dim());
    part.labels.resize(count);
    for (int i = 0; i < count; ++i) {
      const int src = perm[begin + i];
      for (int d = 0; d < data.dim(); ++d) part.inputs(i, d) = data.inputs(src, d);
      part.labels[i] = data.labels[src];
    }
    return part;
  };
  return {take(n_val, n - n_val), take(0, n_val)};
}

void save_csv(const LabeledDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Kind::IoError, "cannot open " + path + " for writing");
  for (int d = 0; d < data.dim(); ++d) out << "x" << d << ",";
  out << "label\n";
  char buf[64];
  for (int i = 0; i < data.size(); ++i) {
    for (int d = 0; d < data.dim(); ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.inputs(i, d));
      out << buf << ",";
    }
    out << data.labels[i] << "\n";
  }
}

LabeledDataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Error::Kind::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(Error::Kind::ParseError, path + ":1: empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header.back() != "label") {
    throw Error(Error::Kind::ParseError, path + ":1: header must be x0,...,label");
  }
  const int dim = static_cast<int>(header.size()) - 1;
  for (int d = 0; d < dim; ++d) {
    if (header[d] != "x" + std::to_string(d)) {
      throw Error(Error::Kind::ParseError, path + ":1: expected column x" + std::to_string(d));
    }
  }

  std::vector<double> values;
  std::vector<int> labels;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    for (; std::getline(ss, cell, ','); ++col) {
      try {
        size_t used = 0;
        if (col < dim) {
          values.push_back(std::stod(cell, &used));
        } else if (col == dim) {
          labels.push_back(std::stoi(cell, &used));
        } else {
          throw Error(Error::Kind::ParseError,
                      path + ":" + std::to_string(line_no) + ": too many columns");
        }
        if (used != cell.size()) throw std::invalid_argument("trailing characters");
      } catch (const Error&) {
        throw;
      } catch (const std::exception&) {
        throw Error(Error::Kind::ParseError,
                    path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (col != dim + 1) {
      throw Error(Error::Kind::ParseError,
                  path + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim + 1) +
                      " columns, got " + std::to_string(col));
    }
  }
  if (labels.empty()) {
    throw Error(Error::Kind::ParseError, path + ": no data rows");
  }

  LabeledDataset data;
  const int n = static_cast<int>(labels.size());
  data.inputs = Matrix(n, dim);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) data.inputs(i, d) = values[static_cast<size_t>(i) * dim + d];
  data.labels = std::move(labels);
  data.k = *std::max_element(data.labels.begin(), data.labels.end()) + 1;
  if (data.k < 2) data.k = 2;
  data.validate();
  return data;
}

}  // namespace uq
