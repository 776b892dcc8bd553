// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trustrl/errors.hpp"

namespace trustrl {

// Ordered image paths of one query. Paths stay hidden from the policy; the
// k-th path is addressed by the label "Figure k" (1-based).
struct ImageContext {
  std::vector<std::string> paths;

  bool operator==(const ImageContext&) const = default;
};

struct QuerySample {
  std::string id;
  std::string query_type;
  std::string question;
  std::vector<std::string> options;  // >= 2, pairwise distinct
  std::string ground_truth;          // one of options
  ImageContext images;

  bool operator==(const QuerySample&) const = default;
};

struct DatasetSpec {
  std::vector<std::string> types;
  std::vector<double> type_weights;  // sums to 1
  int n_options = 4;
  int n_samples = 0;
};

// Throws config_error naming the offending field.
void validate_dataset_spec(const DatasetSpec& spec);

// Reproducible synthetic queries; type frequencies follow the weights.
std::vector<QuerySample> generate_dataset(const DatasetSpec& spec, uint64_t seed);

// JSON-lines ingestion; throws dataset_error carrying the 1-based line number
// (parse kind for schema/JSON problems, invariant kind for semantic ones).
std::vector<QuerySample> load_dataset(const std::string& path);

void save_dataset(const std::vector<QuerySample>& samples, const std::string& path);

std::string sample_to_json_line(const QuerySample& sample);

}  // namespace trustrl
