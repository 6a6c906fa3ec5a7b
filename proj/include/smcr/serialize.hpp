#pragma once

// Text bundles of named scalars and matrices:
//
//   key=value
//   @matrix name rows cols
//   v,v,v        (one line per row)
//
// Doubles use 17 significant digits so a save/load round trip is exact.

#include <filesystem>
#include <map>
#include <string>

#include "smcr/numerics.hpp"
#include "smcr/pipeline.hpp"
#include "smcr/translator.hpp"

namespace smcr {

class Bundle {
 public:
  void set(const std::string& key, std::string value);
  void set_matrix(const std::string& name, Matrix m);

  /// Throws Integrity naming the missing entry.
  const std::string& get(const std::string& key) const;
  const Matrix& matrix(const std::string& name) const;
  bool has(const std::string& key) const { return scalars_.count(key) != 0; }

  std::string str() const;
  static Bundle parse(std::string_view text, const std::string& source_name);

  void save(const std::filesystem::path& path) const;
  /// Throws Io naming the path when the file does not exist.
  static Bundle load(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> scalar_order_;
  std::map<std::string, std::string> scalars_;
  std::vector<std::pair<std::string, Matrix>> matrices_;
  std::string source_;
};

void put_encoder(Bundle& b, const std::string& prefix, const EncoderParams& e);
EncoderParams get_encoder(const Bundle& b, const std::string& prefix);

void save_encoder(const EncoderParams& e, const std::filesystem::path& path);
EncoderParams load_encoder(const std::filesystem::path& path);

void put_translator(Bundle& b, const std::string& prefix, const TranslatorParams& t);
TranslatorParams get_translator(const Bundle& b, const std::string& prefix);

void save_branch(const BranchState& s, const std::filesystem::path& path);
BranchState load_branch(const std::filesystem::path& path);

}  // namespace smcr
