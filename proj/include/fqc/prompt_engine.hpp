#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fqc/corpus.hpp"

namespace fqc {

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Subpolicy {
  std::string name;
  std::string text;

  bool operator==(const Subpolicy&) const = default;
};

/// A named category with its policy text. Subpolicies, when present, define
/// the decomposed prompt set; their order fixes the score-vector layout
/// downstream.
struct CategoryPolicy {
  std::string category_name;
  std::string policy_text;
  std::string variant_id;
  std::vector<Subpolicy> subpolicies;

  CategoryPolicy() = default;
  CategoryPolicy(std::string category, std::string policy, std::string variant,
                 std::vector<Subpolicy> subs = {});

  bool has_subpolicies() const { return !subpolicies.empty(); }
  std::vector<std::string> subcategory_names() const;
};

struct RenderedPrompt {
  std::string system_text;
  std::string user_text;
  std::vector<EncodedImage> images;
};

/// The two prompt templates. Stored as text assets so policy teams can diff
/// them; slots are the literal strings {CATEGORY}, {POLICY}, {asr},
/// {hashtag}, {text}, {stickerText}.
struct PromptTemplates {
  std::string system_template;
  std::string user_template;
};

/// Loads system.txt and user.txt from the template directory and checks the
/// expected slots are present.
PromptTemplates load_templates(const std::filesystem::path& dir);

std::string render_system_prompt(const PromptTemplates& templates,
                                 const CategoryPolicy& policy);

/// Fills the user template from the post's text features. Empty features
/// render as empty values, not omitted lines. Images ride out-of-band on the
/// request; the text keeps its fixed frames line.
RenderedPrompt render_user_prompt(const PromptTemplates& templates, const VideoPost& post,
                                  std::vector<EncodedImage> images);

/// Complete prompt for one request: system + user + images.
RenderedPrompt render_prompt(const PromptTemplates& templates, const CategoryPolicy& policy,
                             const VideoPost& post, std::vector<EncodedImage> images);

/// Count of maximal whitespace-delimited tokens.
int word_count(const std::string& text);

/// One single-policy CategoryPolicy per subcategory, in registry order.
/// Throws when the category has no decomposition.
std::vector<CategoryPolicy> expand_subprompts(const CategoryPolicy& policy);

/// Immutable registry of category policy variants loaded from a directory of
/// .policy files (front matter between "---" lines, then the policy text,
/// then optional "[subpolicy: Name]" blocks).
class PolicyRegistry {
 public:
  static PolicyRegistry load(const std::filesystem::path& dir);
  static CategoryPolicy parse_policy_file(const std::filesystem::path& file);

  const std::vector<CategoryPolicy>& all() const { return policies_; }

  /// Category selector accepts the exact name or its slug.
  std::vector<std::string> category_names() const;
  std::vector<const CategoryPolicy*> variants_of(const std::string& category) const;

  /// variant_id may be empty when the category has exactly one variant.
  const CategoryPolicy& find(const std::string& category, const std::string& variant_id) const;

 private:
  std::vector<CategoryPolicy> policies_;  // sorted by (category slug, variant)
};

}  // namespace fqc
