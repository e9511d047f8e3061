#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "oakes_hmm/errors.hpp"

namespace oakes_hmm {

using Sequence = std::vector<int>;

/// Observed categorical sequences collapsed into a frequency table over the
/// distinct response configurations. Configurations are kept in
/// lexicographic order so every traversal is deterministic.
class Dataset {
 public:
  Dataset(std::vector<Sequence> configs, std::vector<std::int64_t> counts, int categories)
      : configs_(std::move(configs)), counts_(std::move(counts)), categories_(categories) {
    validate();
  }

  /// Collapse one row per unit into the frequency table.
  static Dataset from_sequences(const std::vector<Sequence>& rows, int categories) {
    std::map<Sequence, std::int64_t> table;
    for (const auto& r : rows) ++table[r];
    std::vector<Sequence> configs;
    std::vector<std::int64_t> counts;
    for (auto& [seq, n] : table) {
      configs.push_back(seq);
      counts.push_back(n);
    }
    return {std::move(configs), std::move(counts), categories};
  }

  const std::vector<Sequence>& configs() const { return configs_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::size_t num_configs() const { return configs_.size(); }
  int categories() const { return categories_; }
  int length() const { return static_cast<int>(configs_.front().size()); }
  std::int64_t units() const {
    std::int64_t n = 0;
    for (auto c : counts_) n += c;
    return n;
  }

  /// Expand back to one row per unit, in table order.
  std::vector<Sequence> rows() const {
    std::vector<Sequence> out;
    for (std::size_t i = 0; i < configs_.size(); ++i)
      for (std::int64_t r = 0; r < counts_[i]; ++r) out.push_back(configs_[i]);
    return out;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  void validate() const {
    if (configs_.empty()) throw InputError("dataset is empty");
    if (configs_.size() != counts_.size())
      throw InputError("dataset: configs and counts differ in length");
    if (categories_ < 2) throw InputError("dataset: need at least two categories");
    const auto T = configs_.front().size();
    if (T == 0) throw InputError("dataset: sequences must have length >= 1");
    for (std::size_t i = 0; i < configs_.size(); ++i) {
      if (configs_[i].size() != T)
        throw InputError("dataset: configuration " + std::to_string(i) +
                         " has a different length");
      if (counts_[i] < 1) throw InputError("dataset: counts must be >= 1");
      for (int y : configs_[i])
        if (y < 0 || y >= categories_)
          throw InputError("dataset: category " + std::to_string(y) + " outside [0, " +
                           std::to_string(categories_) + ")");
    }
  }

  std::vector<Sequence> configs_;
  std::vector<std::int64_t> counts_;
  int categories_;
};

}  // namespace oakes_hmm
