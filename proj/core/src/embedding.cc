#include "slatebandit/embedding.h"

#include <cctype>
#include <fstream>
#include <sstream>

#include "slatebandit/rng.h"
#include "slatebandit/types.h"

namespace slatebandit {

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

HashingEmbedder::HashingEmbedder(int dim, std::uint64_t seed, int max_ngram)
    : dim_(dim), seed_(seed), max_ngram_(max_ngram) {
  if (dim_ < 1) throw ValidationError("hashing embedder: dim must be >= 1");
  if (max_ngram_ < 1) {
    throw ValidationError("hashing embedder: max_ngram must be >= 1");
  }
}

Eigen::VectorXd HashingEmbedder::Embed(std::string_view text) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
  const std::vector<std::string> tokens = Tokenize(text);
  for (int n = 1; n <= max_ngram_; ++n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string gram = tokens[i];
      for (int k = 1; k < n; ++k) gram += ' ' + tokens[i + k];
      const std::uint64_t h = StableHash(gram, seed_);
      const auto slot = static_cast<Eigen::Index>(h % dim_);
      v[slot] += (h >> 63) ? -1.0 : 1.0;
    }
  }
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

nlohmann::json HashingEmbedder::ToJson() const {
  return {{"kind", "hashing"},
          {"dim", dim_},
          {"seed", seed_},
          {"max_ngram", max_ngram_}};
}

LookupEmbedder::LookupEmbedder(int dim,
                               std::map<std::string, Eigen::VectorXd> table)
    : dim_(dim), table_(std::move(table)) {
  for (const auto& [token, vec] : table_) {
    if (vec.size() != dim_) {
      throw ValidationError("lookup embedder: vector for '" + token +
                            "' has wrong dimension");
    }
  }
}

LookupEmbedder LookupEmbedder::LoadText(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::map<std::string, Eigen::VectorXd> table;
  int dim = -1;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<double> values;
    double x;
    while (fields >> x) values.push_back(x);
    if (dim < 0) dim = static_cast<int>(values.size());
    if (static_cast<int>(values.size()) != dim || dim == 0) {
      throw ValidationError(path.string() + ": inconsistent vector length");
    }
    table[token] = Eigen::Map<Eigen::VectorXd>(values.data(), dim);
  }
  if (dim < 1) throw ValidationError(path.string() + ": empty embedding table");
  return LookupEmbedder(dim, std::move(table));
}

Eigen::VectorXd LookupEmbedder::Embed(std::string_view text) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
  int hits = 0;
  for (const std::string& token : Tokenize(text)) {
    auto it = table_.find(token);
    if (it == table_.end()) continue;
    v += it->second;
    ++hits;
  }
  if (hits > 0) v /= hits;
  return v;
}

nlohmann::json LookupEmbedder::ToJson() const {
  nlohmann::json table = nlohmann::json::object();
  for (const auto& [token, vec] : table_) {
    table[token] = std::vector<double>(vec.data(), vec.data() + vec.size());
  }
  return {{"kind", "lookup"}, {"dim", dim_}, {"table", table}};
}

std::shared_ptr<const TextEmbedder> EmbedderFromJson(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "hashing") {
    return std::make_shared<HashingEmbedder>(
        j.at("dim").get<int>(), j.at("seed").get<std::uint64_t>(),
        j.value("max_ngram", 2));
  }
  if (kind == "lookup") {
    const int dim = j.at("dim").get<int>();
    std::map<std::string, Eigen::VectorXd> table;
    for (const auto& [token, values] : j.at("table").items()) {
      const auto v = values.get<std::vector<double>>();
      table[token] = Eigen::Map<const Eigen::VectorXd>(
          v.data(), static_cast<Eigen::Index>(v.size()));
    }
    return std::make_shared<LookupEmbedder>(dim, std::move(table));
  }
  throw ValidationError("unknown embedder kind '" + kind + "'");
}

}  // namespace slatebandit
