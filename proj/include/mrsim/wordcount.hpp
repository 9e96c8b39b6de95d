#pragma once

#include <map>
#include <string>
#include <vector>

#include "mrsim/engine.hpp"

namespace mrsim {

// Words longer than this cannot be packed into a node label.
inline constexpr std::size_t kMaxWordBytes = 32;

NodeLabel word_label(const std::string& word);
std::string label_word(const NodeLabel& l);

struct WordCountResult {
  std::map<std::string, std::int64_t> counts;
  ExecutionReport report;
};

Algorithm wordcount_algorithm();
std::vector<Item> wordcount_inputs(const std::vector<std::string>& tokens);
WordCountResult word_count(const std::vector<std::string>& tokens, const EngineConfig& cfg);

}  // namespace mrsim
