#include "sparsegn/data_gen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "sparsegn/rng.hpp"

namespace sparsegn {

void DataSpec::validate() const {
  if (n == 0) throw std::invalid_argument("DataSpec: n must be >= 1");
  if (d < 2) throw std::invalid_argument("DataSpec: d must be >= 2");
  if (!(delta_target >= 0.0 && delta_target < std::sqrt(2.0)))
    throw std::invalid_argument("DataSpec: delta_target must lie in [0, sqrt(2))");
  if (label_mode == LabelMode::teacher && teacher_width == 0)
    throw std::invalid_argument("DataSpec: teacher_width must be >= 1");
}

Dataset generate(const DataSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t d = spec.d;
  Vector points;
  points.reserve(spec.n * d);
  Vector x(d);
  std::size_t rejections = 0;
  while (points.size() < spec.n * d) {
    double nrm = 0.0;
    while (nrm == 0.0) {
      for (double& v : x) v = normal(rng);
      nrm = norm2(x);
    }
    for (double& v : x) v /= nrm;

    bool ok = true;
    for (std::size_t k = 0; ok && k < points.size() / d; ++k) {
      const double* y = points.data() + k * d;
      double plus = 0.0, minus = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        plus += (x[c] + y[c]) * (x[c] + y[c]);
        minus += (x[c] - y[c]) * (x[c] - y[c]);
      }
      ok = std::sqrt(std::min(plus, minus)) >= spec.delta_target;
    }
    if (ok) {
      points.insert(points.end(), x.begin(), x.end());
    } else if (++rejections > spec.max_rejections) {
      std::ostringstream msg;
      msg << "generate: rejection budget exhausted for (n=" << spec.n << ", d=" << spec.d
          << ", delta_target=" << spec.delta_target << ")";
      throw std::runtime_error(msg.str());
    }
  }

  Vector labels(spec.n, 0.0);
  if (spec.label_mode == LabelMode::uniform) {
    Rng label_rng(derive_seed(spec.seed, 1));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (double& y : labels) y = uni(label_rng);
    return Dataset(d, std::move(points), std::move(labels));
  }
  Dataset unlabeled(d, std::move(points), std::move(labels));
  return unlabeled.with_labels(
      teacher_labels(unlabeled, spec.teacher_width, spec.teacher_shift, derive_seed(spec.seed, 2)));
}

Vector teacher_labels(const Dataset& data, std::size_t width, double shift, std::uint64_t seed) {
  NetworkConfig cfg{width, data.d(), data.n(), shift, seed};
  const WeightMatrix teacher = init_weights(cfg);
  Vector y(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto fire = scan_fire_row(teacher, data.point(i), shift);
    y[i] = std::clamp(forward(teacher, shift, data.point(i), fire), -1.0, 1.0);
  }
  return y;
}

void write_dataset(std::ostream& os, const Dataset& data) {
  os << data.n() << ' ' << data.d() << '\n';
  os << std::setprecision(17);
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (double v : data.point(i)) os << v << ' ';
    os << data.label(i) << '\n';
  }
}

Dataset read_dataset(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(is, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw std::runtime_error("read_dataset: missing header line");
  std::size_t n = 0, d = 0;
  {
    std::istringstream hs(line);
    if (!(hs >> n >> d) || n == 0 || d == 0)
      throw std::runtime_error("read_dataset: header must be \"n d\" with positive counts");
  }
  Vector points;
  Vector labels;
  points.reserve(n * d);
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!next_line())
      throw std::runtime_error("read_dataset: expected " + std::to_string(n) + " rows, got " +
                               std::to_string(i));
    std::istringstream rs(line);
    double v = 0.0;
    std::size_t count = 0;
    while (rs >> v) {
      if (count < d) points.push_back(v);
      else labels.push_back(v);
      ++count;
    }
    if (count != d + 1 || !rs.eof())
      throw std::runtime_error("read_dataset: line " + std::to_string(lineno) + " has " +
                               std::to_string(count) + " values, expected " +
                               std::to_string(d + 1));
  }
  return Dataset(d, std::move(points), std::move(labels));
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_dataset: cannot open " + path.string());
  write_dataset(os, data);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_dataset: cannot open " + path.string());
  return read_dataset(is);
}

LabelMode parse_label_mode(const std::string& s) {
  if (s == "uniform") return LabelMode::uniform;
  if (s == "teacher") return LabelMode::teacher;
  throw std::invalid_argument("unknown label mode '" + s + "' (expected uniform or teacher)");
}

std::string to_string(LabelMode mode) { return mode == LabelMode::uniform ? "uniform" : "teacher"; }

}  // namespace sparsegn
