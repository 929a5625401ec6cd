#include "odenet/data.hpp"

#include "odenet/errors.hpp"
#include "odenet/rng.hpp"

#include <zlib.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace odenet {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;
constexpr Eigen::Index kDigitClasses = 10;

class GzReader {
 public:
  explicit GzReader(const std::string& path) : file_(gzopen(path.c_str(), "rb")), path_(path) {
    if (file_ == nullptr) throw FormatError("cannot open '" + path + "'");
  }
  GzReader(const GzReader&) = delete;
  GzReader& operator=(const GzReader&) = delete;
  ~GzReader() { gzclose(file_); }

  void read(void* dst, std::size_t bytes) {
    auto* out = static_cast<unsigned char*>(dst);
    while (bytes > 0) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(bytes, 1u << 30));
      const int got = gzread(file_, out, chunk);
      if (got <= 0) throw FormatError("'" + path_ + "': unexpected end of file");
      out += got;
      bytes -= static_cast<std::size_t>(got);
    }
  }

  std::uint32_t read_be32() {
    unsigned char b[4];
    read(b, 4);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
           (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
  }

 private:
  gzFile file_;
  std::string path_;
};

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  if (path.ends_with(".gz")) {
    gzFile f = gzopen(path.c_str(), "wb9");
    if (f == nullptr) throw FormatError("cannot write '" + path + "'");
    const int wrote = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    gzclose(f);
    if (wrote != static_cast<int>(bytes.size())) throw FormatError("short write to '" + path + "'");
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to '" + path + "'");
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos
                                                                                : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    fields.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_double(std::string_view text, const std::string& where) {
  double value = 0.0;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError(where + ": cannot parse number '" + std::string(text) + "'");
  }
  return value;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_fields(line);
    if (table.header.empty()) {
      for (auto f : fields) table.header.emplace_back(f);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " columns, got " +
                        std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(parse_double(f, path + ":" + std::to_string(line_no)));
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw FormatError(path + ": missing header row");
  return table;
}

/// Counts leading x0..x{n-1} columns followed by y0..y{m-1}.
std::pair<Eigen::Index, Eigen::Index> column_layout(const std::vector<std::string>& header,
                                                    const std::string& path) {
  Eigen::Index n = 0;
  while (static_cast<std::size_t>(n) < header.size() && header[n] == "x" + std::to_string(n)) ++n;
  Eigen::Index m = 0;
  while (static_cast<std::size_t>(n + m) < header.size() &&
         header[static_cast<std::size_t>(n + m)] == "y" + std::to_string(m)) {
    ++m;
  }
  if (n == 0 || static_cast<std::size_t>(n + m) != header.size()) {
    throw FormatError(path + ": header must be x0..x{n-1},y0..y{m-1}");
  }
  return {n, m};
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view task_name(Task task) {
  switch (task) {
    case Task::regression:
      return "regression";
    case Task::binary:
      return "binary";
    case Task::multiclass:
      return "multiclass";
  }
  return "?";
}

Task parse_task(std::string_view text) {
  if (text == "regression") return Task::regression;
  if (text == "binary") return Task::binary;
  if (text == "multiclass") return Task::multiclass;
  throw FormatError("unknown task '" + std::string(text) +
                    "' (expected regression|binary|multiclass)");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.task = task;
  out.inputs.resize(n(), static_cast<Eigen::Index>(indices.size()));
  out.targets.resize(m(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = static_cast<Eigen::Index>(indices[i]);
    if (src >= size()) throw ShapeError("subset index out of range");
    out.inputs.col(static_cast<Eigen::Index>(i)) = inputs.col(src);
    out.targets.col(static_cast<Eigen::Index>(i)) = targets.col(src);
  }
  return out;
}

void Dataset::validate() const {
  if (inputs.cols() != targets.cols()) throw FormatError("dataset: inputs/targets count differ");
  if (!inputs.allFinite() || !targets.allFinite()) throw FormatError("dataset: non-finite values");
  if (task == Task::binary) {
    if (m() != 1) throw FormatError("binary dataset must have m = 1");
    for (Eigen::Index k = 0; k < size(); ++k) {
      const double t = targets(0, k);
      if (t != 0.0 && t != 1.0) throw FormatError("binary target not in {0,1} at sample " +
                                                  std::to_string(k));
    }
  } else if (task == Task::multiclass) {
    for (Eigen::Index k = 0; k < size(); ++k) {
      const auto col = targets.col(k);
      const bool one_hot = (col.array() == 0.0 || col.array() == 1.0).all() && col.sum() == 1.0;
      if (!one_hot) throw FormatError("multiclass target not one-hot at sample " + std::to_string(k));
    }
  }
}

Dataset gen_sinusoid(Eigen::Index count) {
  if (count < 1) throw ShapeError("gen_sinusoid: K must be >= 1");
  Dataset d;
  d.task = Task::regression;
  d.inputs.resize(1, count);
  d.targets.resize(1, count);
  for (Eigen::Index k = 0; k < count; ++k) {
    const double xi = static_cast<double>(k) / static_cast<double>(count);
    d.inputs(0, k) = xi;
    d.targets(0, k) = std::sin(4.0 * std::numbers::pi * xi);
  }
  return d;
}

double circle_label(double x0, double x1) {
  return std::hypot(x0 - 0.5, x1 - 0.5) < 0.3 ? 0.0 : 1.0;
}

Dataset gen_circle(Eigen::Index count, std::uint64_t seed) {
  if (count < 1) throw ShapeError("gen_circle: K must be >= 1");
  Xoshiro256 rng(seed);
  Dataset d;
  d.task = Task::binary;
  d.inputs.resize(2, count);
  d.targets.resize(1, count);
  for (Eigen::Index k = 0; k < count; ++k) {
    const double x0 = rng.uniform();
    const double x1 = rng.uniform();
    d.inputs(0, k) = x0;
    d.inputs(1, k) = x1;
    d.targets(0, k) = circle_label(x0, x1);
  }
  return d;
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                       std::optional<std::size_t> limit) {
  GzReader images(images_path);
  const std::uint32_t image_magic = images.read_be32();
  if (image_magic != kImageMagic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bad image magic 0x%08x", image_magic);
    throw FormatError("'" + images_path + "': " + buf + " (expected 0x00000803)");
  }
  const std::uint32_t image_count = images.read_be32();
  const std::uint32_t rows = images.read_be32();
  const std::uint32_t cols = images.read_be32();
  if (rows == 0 || cols == 0) throw FormatError("'" + images_path + "': zero image dimension");

  GzReader labels(labels_path);
  const std::uint32_t label_magic = labels.read_be32();
  if (label_magic != kLabelMagic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bad label magic 0x%08x", label_magic);
    throw FormatError("'" + labels_path + "': " + buf + " (expected 0x00000801)");
  }
  const std::uint32_t label_count = labels.read_be32();
  if (label_count != image_count) {
    throw FormatError("image count " + std::to_string(image_count) + " != label count " +
                      std::to_string(label_count));
  }

  std::size_t count = image_count;
  if (limit) count = std::min(count, *limit);
  const std::size_t pixels = std::size_t{rows} * cols;

  Dataset d;
  d.task = Task::multiclass;
  d.inputs.resize(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(count));
  d.targets = Mat::Zero(kDigitClasses, static_cast<Eigen::Index>(count));
  std::vector<std::uint8_t> buffer(pixels);
  for (std::size_t k = 0; k < count; ++k) {
    images.read(buffer.data(), pixels);
    for (std::size_t p = 0; p < pixels; ++p) {
      d.inputs(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k)) = buffer[p] / 255.0;
    }
    std::uint8_t label = 0;
    labels.read(&label, 1);
    if (label >= kDigitClasses) {
      throw FormatError("'" + labels_path + "': label " + std::to_string(label) +
                        " out of range at sample " + std::to_string(k));
    }
    d.targets(label, static_cast<Eigen::Index>(k)) = 1.0;
  }
  return d;
}

void write_idx_images(const std::string& path, std::uint32_t rows, std::uint32_t cols,
                      std::span<const std::uint8_t> pixels) {
  const std::size_t per_image = std::size_t{rows} * cols;
  if (per_image == 0 || pixels.size() % per_image != 0) {
    throw ShapeError("write_idx_images: pixel count is not a multiple of rows*cols");
  }
  std::vector<unsigned char> bytes;
  bytes.reserve(16 + pixels.size());
  put_be32(bytes, kImageMagic);
  put_be32(bytes, static_cast<std::uint32_t>(pixels.size() / per_image));
  put_be32(bytes, rows);
  put_be32(bytes, cols);
  bytes.insert(bytes.end(), pixels.begin(), pixels.end());
  write_bytes(path, bytes);
}

void write_idx_labels(const std::string& path, std::span<const std::uint8_t> labels) {
  std::vector<unsigned char> bytes;
  bytes.reserve(8 + labels.size());
  put_be32(bytes, kLabelMagic);
  put_be32(bytes, static_cast<std::uint32_t>(labels.size()));
  bytes.insert(bytes.end(), labels.begin(), labels.end());
  write_bytes(path, bytes);
}

std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ShapeError("split: fraction must be in (0, 1)");
  const auto total = static_cast<std::size_t>(data.size());
  const auto first = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  if (first == 0 || first == total) {
    throw ShapeError("split: fraction " + std::to_string(fraction) + " of " +
                     std::to_string(total) + " samples leaves one side empty");
  }
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Xoshiro256 rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const std::span<const std::size_t> all(order);
  return {data.subset(all.first(first)), data.subset(all.subspan(first))};
}

Eigen::Index argmax(const Vec& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

double accuracy(const Mat& predictions, const Mat& targets, Task task) {
  if (predictions.cols() == 0) throw ShapeError("accuracy: empty prediction set");
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
    throw ShapeError("accuracy: prediction/target shape mismatch");
  }
  std::size_t correct = 0;
  switch (task) {
    case Task::regression:
      throw std::invalid_argument("accuracy is undefined for regression tasks");
    case Task::binary:
      for (Eigen::Index k = 0; k < predictions.cols(); ++k) {
        const double label = predictions(0, k) >= 0.5 ? 1.0 : 0.0;
        if (label == targets(0, k)) ++correct;
      }
      break;
    case Task::multiclass:
      for (Eigen::Index k = 0; k < predictions.cols(); ++k) {
        if (argmax(predictions.col(k)) == argmax(targets.col(k))) ++correct;
      }
      break;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.cols());
}

Dataset load_csv_dataset(const std::string& path, Task task) {
  const CsvTable table = read_csv(path);
  const auto [n, m] = column_layout(table.header, path);
  if (m == 0) throw FormatError(path + ": no target columns (y0..)");
  Dataset d;
  d.task = task;
  const auto count = static_cast<Eigen::Index>(table.rows.size());
  d.inputs.resize(n, count);
  d.targets.resize(m, count);
  for (Eigen::Index k = 0; k < count; ++k) {
    const auto& row = table.rows[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < n; ++i) d.inputs(i, k) = row[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m; ++j) d.targets(j, k) = row[static_cast<std::size_t>(n + j)];
  }
  d.validate();
  return d;
}

void save_csv_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  for (Eigen::Index i = 0; i < data.n(); ++i) out << (i ? "," : "") << 'x' << i;
  for (Eigen::Index j = 0; j < data.m(); ++j) out << ",y" << j;
  out << '\n';
  for (Eigen::Index k = 0; k < data.size(); ++k) {
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      out << (i ? "," : "") << format_double(data.inputs(i, k));
    }
    for (Eigen::Index j = 0; j < data.m(); ++j) out << ',' << format_double(data.targets(j, k));
    out << '\n';
  }
}

Mat load_csv_inputs(const std::string& path) {
  const CsvTable table = read_csv(path);
  const auto [n, m] = column_layout(table.header, path);
  (void)m;
  Mat inputs(n, static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      inputs(i, static_cast<Eigen::Index>(k)) = table.rows[k][static_cast<std::size_t>(i)];
    }
  }
  return inputs;
}

}  // namespace odenet
