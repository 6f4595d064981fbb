#include <fstream>
#include <sstream>

#include "json.hpp"
#include "uavd/dataset.hpp"
#include "uavd/error.hpp"

namespace uavd {

using ojson = nlohmann::ordered_json;

std::string triplet_to_json(const Triplet& t, Split split) {
  ojson j;
  j["instruction"] = t.instruction;
  j["prompt_context"] = t.prompt_context;
  j["think"] = ojson::array();
  for (const auto& s : t.think) j["think"].push_back(ojson{{"stage", std::string(to_string(s.stage))}, {"text", s.text}});
  j["code"] = t.code;
  j["sdk_id"] = t.sdk_id;
  j["label"] = std::string(to_string(t.label));
  j["split"] = std::string(to_string(split));
  j["seed_index"] = t.seed_index;
  if (t.requested_capability) j["requested_capability"] = *t.requested_capability;
  return j.dump();
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::string out;
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    out += triplet_to_json(corpus.samples[i], corpus.split[i]);
    out += '\n';
  }
  return out;
}

void write_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out << corpus_to_jsonl(corpus);
  if (!out) throw InputError("failed writing " + path);
}

namespace {

Triplet triplet_from_json(const nlohmann::json& j, Split& split, int line) {
  auto fail = [&](const std::string& what) {
    return InputError("corpus line " + std::to_string(line) + ": " + what);
  };
  try {
    Triplet t;
    t.instruction = j.at("instruction").get<std::string>();
    t.prompt_context = j.at("prompt_context").get<std::string>();
    for (const auto& s : j.at("think")) {
      auto stage = stage_from_string(s.at("stage").get<std::string>());
      if (!stage) throw fail("unknown stage " + s.at("stage").get<std::string>());
      t.think.push_back(ReasoningStep{*stage, s.at("text").get<std::string>()});
    }
    t.code = j.at("code").get<std::string>();
    t.sdk_id = j.at("sdk_id").get<std::string>();
    const auto label = j.at("label").get<std::string>();
    if (label == "feasible") t.label = Label::kFeasible;
    else if (label == "infeasible") t.label = Label::kInfeasible;
    else throw fail("unknown label " + label);
    auto sp = split_from_string(j.at("split").get<std::string>());
    if (!sp) throw fail("unknown split");
    split = *sp;
    t.seed_index = j.at("seed_index").get<int>();
    if (auto it = j.find("requested_capability"); it != j.end()) t.requested_capability = it->get<std::string>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw fail(e.what());
  }
}

}  // namespace

Corpus parse_corpus_jsonl(std::string_view text) {
  Corpus corpus;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line.begin(), line.end());
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
    Split split{};
    corpus.samples.push_back(triplet_from_json(j, split, line_no));
    corpus.split.push_back(split);
  }
  if (corpus.samples.empty()) throw InputError("corpus is empty");
  return corpus;
}

Corpus read_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read corpus " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_corpus_jsonl(ss.str());
}

}  // namespace uavd
