#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ecgbal/ecg_data.hpp"

namespace ecgbal {

// Exponential long-tail profile: the class of frequency rank m (0 = most
// frequent) keeps max(1, floor(N_max * alpha^(m / (M - 1)))) records, clamped
// to what the class has.
struct ImbalanceProfile {
  double alpha = 1.0;
  std::vector<std::size_t> target_counts;  // indexed by class
  std::vector<std::size_t> rank_order;     // rank_order[r] = class with rank r
};

// Closed-form target before clamping, for rank m of M classes.
std::size_t longtail_target(std::size_t n_max, double alpha, std::size_t rank, std::size_t num_classes);

ImbalanceProfile longtail_counts(const std::vector<std::size_t>& class_counts, double alpha);

// Uniform subsample without replacement to exactly target_counts per class,
// output order shuffled. Deterministic in `seed`.
Dataset resample(const Dataset& d, const ImbalanceProfile& p, std::uint64_t seed);

// Two-column CSV `class,count`.
void write_histogram_csv(const std::vector<std::string>& class_names,
                         const std::vector<std::size_t>& counts, const std::filesystem::path& file);

}  // namespace ecgbal
