#ifndef SLATEBANDIT_EMBEDDING_H_
#define SLATEBANDIT_EMBEDDING_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace slatebandit {

// Lowercased whitespace tokens.
std::vector<std::string> Tokenize(std::string_view text);

class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual int dim() const = 0;
  // Empty or fully unknown text embeds to the zero vector.
  virtual Eigen::VectorXd Embed(std::string_view text) const = 0;
  virtual nlohmann::json ToJson() const = 0;
};

// Signed feature hashing of token n-grams (n = 1..max_ngram), L2-normalized.
class HashingEmbedder final : public TextEmbedder {
 public:
  HashingEmbedder(int dim, std::uint64_t seed, int max_ngram = 2);

  int dim() const override { return dim_; }
  Eigen::VectorXd Embed(std::string_view text) const override;
  nlohmann::json ToJson() const override;

 private:
  int dim_;
  std::uint64_t seed_;
  int max_ngram_;
};

// Mean of per-token vectors from a fixed table; unknown tokens are ignored.
class LookupEmbedder final : public TextEmbedder {
 public:
  LookupEmbedder(int dim, std::map<std::string, Eigen::VectorXd> table);

  // Whitespace-separated "token v_1 ... v_dim" lines.
  static LookupEmbedder LoadText(const std::filesystem::path& path);

  int dim() const override { return dim_; }
  Eigen::VectorXd Embed(std::string_view text) const override;
  nlohmann::json ToJson() const override;

 private:
  int dim_;
  std::map<std::string, Eigen::VectorXd> table_;
};

std::shared_ptr<const TextEmbedder> EmbedderFromJson(const nlohmann::json& j);

}  // namespace slatebandit

#endif  // SLATEBANDIT_EMBEDDING_H_
