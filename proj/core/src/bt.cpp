#include "hacklab/bt.hpp"

#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"

namespace hacklab {

namespace {

template <class A>
void write_impl(std::ostream& out, std::span<const PreferencePair<A>> pairs) {
  for (const auto& pr : pairs) {
    nlohmann::ordered_json j;
    j["state"] = pr.state;
    j["a0"] = pr.winner;
    j["a1"] = pr.loser;
    j["label"] = 0;
    j["p"] = pr.p;
    out << j.dump() << '\n';
  }
}

template <class A>
std::vector<PreferencePair<A>> read_impl(std::istream& in) {
  std::vector<PreferencePair<A>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      PreferencePair<A> pr;
      pr.state = j.at("state").get<std::size_t>();
      auto a0 = j.at("a0").get<A>();
      auto a1 = j.at("a1").get<A>();
      const int label = j.at("label").get<int>();
      if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 or 1");
      pr.winner = label == 0 ? std::move(a0) : std::move(a1);
      pr.loser = label == 0 ? std::move(a1) : std::move(a0);
      pr.p = j.at("p").get<double>();
      if (!(pr.p > 0.0 && pr.p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
      out.push_back(std::move(pr));
    } catch (const std::exception& e) {
      throw std::invalid_argument("pairs line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

void write_pairs_jsonl(std::ostream& out, std::span<const PreferencePair<Vec>> pairs) {
  write_impl<Vec>(out, pairs);
}
void write_pairs_jsonl(std::ostream& out, std::span<const PreferencePair<TokenSeq>> pairs) {
  write_impl<TokenSeq>(out, pairs);
}
std::vector<PreferencePair<Vec>> read_vector_pairs_jsonl(std::istream& in) { return read_impl<Vec>(in); }
std::vector<PreferencePair<TokenSeq>> read_token_pairs_jsonl(std::istream& in) {
  return read_impl<TokenSeq>(in);
}

}  // namespace hacklab
