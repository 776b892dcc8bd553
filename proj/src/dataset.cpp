// SPDX-License-Identifier: Apache-2.0
#include "trustrl/dataset.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "trustrl/protocol.hpp"
#include "trustrl/rng.hpp"

namespace trustrl {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::array<const char*, 6> kRequiredFields = {
    "id", "query_type", "question", "options", "ground_truth", "images"};

bool contains_protocol_tag(const std::string& text) {
  static constexpr std::array<std::string_view, 6> kTags = {
      kToolCallOpen, kToolCallClose, kToolResponseOpen,
      kToolResponseClose, kAnswerOpen, kAnswerClose};
  for (auto tag : kTags)
    if (text.find(tag) != std::string::npos) return true;
  return false;
}

void validate_sample(const QuerySample& s, size_t line) {
  auto invariant = [line](const std::string& msg) {
    throw dataset_error(DatasetErrorKind::invariant, line, msg);
  };
  if (s.id.empty()) invariant("empty id");
  if (s.query_type.empty()) invariant("empty query_type");
  if (s.options.size() < 2) invariant("fewer than 2 options");
  std::set<std::string> distinct(s.options.begin(), s.options.end());
  if (distinct.size() != s.options.size()) invariant("options are not pairwise distinct");
  if (distinct.find(s.ground_truth) == distinct.end())
    invariant("ground_truth is not one of options");
  if (s.images.paths.empty()) invariant("images must list at least one path");
  for (const auto& field : {s.question, s.ground_truth})
    if (contains_protocol_tag(field)) invariant("field contains a protocol tag literal");
  for (const auto& o : s.options)
    if (contains_protocol_tag(o)) invariant("option contains a protocol tag literal");
}

}  // namespace

void validate_dataset_spec(const DatasetSpec& spec) {
  if (spec.types.empty()) throw config_error("types", "must be non-empty");
  if (spec.types.size() != spec.type_weights.size())
    throw config_error("type_weights", "must have one weight per type");
  double sum = 0.0;
  for (double w : spec.type_weights) {
    if (w < 0.0) throw config_error("type_weights", "weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw config_error("type_weights", "weights must sum to 1");
  if (spec.n_options < 2 || spec.n_options > 26)
    throw config_error("n_options", "must be in [2, 26]");
  if (spec.n_samples < 0) throw config_error("n_samples", "must be non-negative");
}

std::vector<QuerySample> generate_dataset(const DatasetSpec& spec, uint64_t seed) {
  validate_dataset_spec(spec);
  std::vector<QuerySample> samples;
  samples.reserve(static_cast<size_t>(spec.n_samples));

  std::vector<std::string> options;
  for (int i = 0; i < spec.n_options; ++i) options.push_back(std::string(1, char('A' + i)));

  for (int i = 0; i < spec.n_samples; ++i) {
    Rng rng(derive_seed(seed, "dataset", static_cast<uint64_t>(i)));
    QuerySample s;
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "q%06d", i);
    s.id = idbuf;

    double u = rng.next_real();
    double acc = 0.0;
    s.query_type = spec.types.back();
    for (size_t t = 0; t < spec.types.size(); ++t) {
      acc += spec.type_weights[t];
      if (u < acc) {
        s.query_type = spec.types[t];
        break;
      }
    }
    s.options = options;
    s.ground_truth = options[rng.next_below(options.size())];
    s.question = "Case " + s.id + ": select the best option.";
    s.images.paths = {"img/" + s.id + ".png"};
    samples.push_back(std::move(s));
  }
  return samples;
}

std::string sample_to_json_line(const QuerySample& sample) {
  ordered_json j;
  j["id"] = sample.id;
  j["query_type"] = sample.query_type;
  j["question"] = sample.question;
  j["options"] = sample.options;
  j["ground_truth"] = sample.ground_truth;
  j["images"] = sample.images.paths;
  return j.dump();
}

std::vector<QuerySample> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open dataset file: " + path);

  std::vector<QuerySample> samples;
  std::set<std::string> seen_ids;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    bool blank = true;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (blank) continue;

    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw dataset_error(DatasetErrorKind::parse, line_no, "line is not a JSON object");
    for (const auto& [key, value] : j.items()) {
      (void)value;
      bool known = false;
      for (const char* f : kRequiredFields)
        if (key == f) known = true;
      if (!known)
        throw dataset_error(DatasetErrorKind::parse, line_no, "unknown field \"" + key + "\"");
    }
    for (const char* f : kRequiredFields)
      if (!j.contains(f))
        throw dataset_error(DatasetErrorKind::parse, line_no,
                            "missing field \"" + std::string(f) + "\"");

    QuerySample s;
    try {
      s.id = j.at("id").get<std::string>();
      s.query_type = j.at("query_type").get<std::string>();
      s.question = j.at("question").get<std::string>();
      s.options = j.at("options").get<std::vector<std::string>>();
      s.ground_truth = j.at("ground_truth").get<std::string>();
      s.images.paths = j.at("images").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw dataset_error(DatasetErrorKind::parse, line_no, e.what());
    }
    validate_sample(s, line_no);
    if (!seen_ids.insert(s.id).second)
      throw dataset_error(DatasetErrorKind::invariant, line_no, "duplicate id \"" + s.id + "\"");
    samples.push_back(std::move(s));
  }
  return samples;
}

void save_dataset(const std::vector<QuerySample>& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw error("cannot write dataset file: " + path);
  for (const auto& s : samples) out << sample_to_json_line(s) << "\n";
}

}  // namespace trustrl
