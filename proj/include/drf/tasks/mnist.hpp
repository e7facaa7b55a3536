#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drf/core/rng.hpp"
#include "drf/tasks/task.hpp"

namespace drf {

// Raw IDX payloads: images scaled to [0,1], flattened row-major to 784 steps.
struct MnistSplit {
  std::size_t count = 0;
  std::vector<float> pixels;       // (count, 784), already in [0,1]
  std::vector<std::uint8_t> labels;
};

struct MnistData {
  MnistSplit train;
  MnistSplit test;
};

// Reads the standard 4-file IDX layout from dir. Errors: MissingFile,
// BadMagic(value), TruncatedFile.
MnistData load_mnist(const std::string& dir);

// Fixed time-axis permutation shared across all samples; seed 0 is the
// identity (so the permuted task degenerates to the plain sequential one).
std::vector<std::uint32_t> pixel_permutation(std::uint64_t seed);

// Assembles a (B, 1, 784) batch from split rows [first, first+count), applying
// the permutation when given.
LabeledSequenceBatch mnist_batch(const MnistSplit& split, std::size_t first,
                                 std::size_t count,
                                 const std::vector<std::uint32_t>* perm);

// Downloads the four gzipped IDX files from the mirror into dir, inflates
// them and verifies payload lengths. Needs network access; never called from
// the library or tests.
void fetch_mnist(const std::string& mirror, const std::string& dir);

}  // namespace drf
