#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "sparsegn/network.hpp"

namespace sparsegn {

enum class LabelMode { uniform, teacher };

struct DataSpec {
  std::size_t n = 8;
  std::size_t d = 4;
  double delta_target = 0.5;  // required separability, in [0, sqrt(2))
  LabelMode label_mode = LabelMode::uniform;
  std::uint64_t seed = 0;
  // Hidden network used for teacher labels.
  std::size_t teacher_width = 64;
  double teacher_shift = 0.0;
  std::size_t max_rejections = 1'000'000;

  void validate() const;
};

/// Rejection sampling on the sphere: a Gaussian draw is normalised and kept
/// if it is at least delta_target-separated from every accepted point.
/// Throws std::runtime_error naming (n, d, delta_target) when the rejection
/// budget runs out.
Dataset generate(const DataSpec& spec);

/// Labels y_i = f(W*, x_i, a*) of a random teacher network, clipped to [-1, 1].
Vector teacher_labels(const Dataset& data, std::size_t width, double shift, std::uint64_t seed);

/// Text format: a header line "n d", then n lines of d coordinates followed
/// by the label, whitespace separated. Values are written with 17 significant
/// digits so a save/load cycle is exact.
void write_dataset(std::ostream& os, const Dataset& data);
Dataset read_dataset(std::istream& is);

void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);

LabelMode parse_label_mode(const std::string& s);
std::string to_string(LabelMode mode);

}  // namespace sparsegn
