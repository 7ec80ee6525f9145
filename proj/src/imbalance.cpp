#include "ecgbal/imbalance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "ecgbal/error.hpp"

namespace ecgbal {

std::size_t longtail_target(std::size_t n_max, double alpha, std::size_t rank,
                            std::size_t num_classes) {
  const long double exponent =
      static_cast<long double>(rank) / static_cast<long double>(num_classes - 1);
  const long double value =
      static_cast<long double>(n_max) * std::pow(static_cast<long double>(alpha), exponent);
  return std::max<std::size_t>(1, floor_count(static_cast<double>(value)));
}

ImbalanceProfile longtail_counts(const std::vector<std::size_t>& class_counts, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  const std::size_t M = class_counts.size();
  if (M < 2) throw ConfigError("long-tail resampling needs at least two classes");
  const std::size_t n_max = *std::max_element(class_counts.begin(), class_counts.end());
  if (n_max == 0) throw EmptyDataset("every class is empty");

  ImbalanceProfile p;
  p.alpha = alpha;
  p.rank_order.resize(M);
  std::iota(p.rank_order.begin(), p.rank_order.end(), std::size_t{0});
  std::stable_sort(p.rank_order.begin(), p.rank_order.end(),
                   [&](std::size_t a, std::size_t b) { return class_counts[a] > class_counts[b]; });
  p.target_counts.assign(M, 0);
  for (std::size_t rank = 0; rank < M; ++rank) {
    const std::size_t m = p.rank_order[rank];
    p.target_counts[m] = std::min(longtail_target(n_max, alpha, rank, M), class_counts[m]);
  }
  return p;
}

Dataset resample(const Dataset& d, const ImbalanceProfile& p, std::uint64_t seed) {
  const std::size_t M = d.num_classes();
  if (p.target_counts.size() != M) {
    throw ConfigError("imbalance profile has " + std::to_string(p.target_counts.size()) +
                      " classes, dataset has " + std::to_string(M));
  }
  std::vector<std::vector<std::size_t>> by_class(M);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& label = d.records()[i].label();
    if (!label) throw DataError("record '" + d.records()[i].record_id() + "' has no label");
    by_class[*label].push_back(i);
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> keep;
  for (std::size_t m = 0; m < M; ++m) {
    auto& members = by_class[m];
    if (p.target_counts[m] > members.size()) {
      throw ConfigError("profile asks for " + std::to_string(p.target_counts[m]) +
                        " records of class " + std::to_string(m) + " but only " +
                        std::to_string(members.size()) + " exist");
    }
    std::shuffle(members.begin(), members.end(), rng);
    keep.insert(keep.end(), members.begin(),
                members.begin() + static_cast<std::ptrdiff_t>(p.target_counts[m]));
  }
  std::shuffle(keep.begin(), keep.end(), rng);

  std::vector<EcgRecord> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(d.records()[i]);
  return Dataset(std::move(out), d.class_names(), seed);
}

void write_histogram_csv(const std::vector<std::string>& class_names,
                         const std::vector<std::size_t>& counts, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write '" + file.string() + "'");
  out << "class,count\n";
  for (std::size_t m = 0; m < class_names.size(); ++m) out << class_names[m] << ',' << counts[m] << '\n';
}

}  // namespace ecgbal
