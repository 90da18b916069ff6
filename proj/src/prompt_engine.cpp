#include "fqc/prompt_engine.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "fqc/util.hpp"

namespace fqc {

CategoryPolicy::CategoryPolicy(std::string category, std::string policy, std::string variant,
                               std::vector<Subpolicy> subs)
    : category_name(std::move(category)),
      policy_text(std::move(policy)),
      variant_id(std::move(variant)),
      subpolicies(std::move(subs)) {
  if (category_name.empty()) throw PromptError("category_name must be nonempty");
  if (policy_text.empty()) {
    throw PromptError("policy_text must be nonempty for category " + category_name);
  }
  std::set<std::string> names;
  for (const Subpolicy& sub : subpolicies) {
    if (sub.name.empty() || sub.text.empty()) {
      throw PromptError("subpolicy of " + category_name + " must have name and text");
    }
    if (!names.insert(sub.name).second) {
      throw PromptError("duplicate subpolicy name " + sub.name + " in " + category_name);
    }
  }
}

std::vector<std::string> CategoryPolicy::subcategory_names() const {
  std::vector<std::string> names;
  names.reserve(subpolicies.size());
  for (const Subpolicy& sub : subpolicies) names.push_back(sub.name);
  return names;
}

namespace {

// Single pass: slot occurrences in the template are replaced, inserted
// values are never rescanned.
std::string substitute(const std::string& tmpl,
                       const std::vector<std::pair<std::string, std::string>>& slots) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    std::size_t best = std::string::npos;
    const std::pair<std::string, std::string>* hit = nullptr;
    for (const auto& slot : slots) {
      const std::size_t p = tmpl.find(slot.first, pos);
      if (p < best) {
        best = p;
        hit = &slot;
      }
    }
    if (!hit) {
      out.append(tmpl, pos, std::string::npos);
      break;
    }
    out.append(tmpl, pos, best - pos);
    out.append(hit->second);
    pos = best + hit->first.size();
  }
  return out;
}

void require_slots(const std::string& tmpl, const std::vector<std::string>& slots,
                   const std::string& which) {
  for (const std::string& slot : slots) {
    if (tmpl.find(slot) == std::string::npos) {
      throw PromptError(which + " template is missing slot " + slot);
    }
  }
}

}  // namespace

PromptTemplates load_templates(const std::filesystem::path& dir) {
  PromptTemplates t;
  t.system_template = read_file(dir / "system.txt");
  t.user_template = read_file(dir / "user.txt");
  require_slots(t.system_template, {"{CATEGORY}", "{POLICY}"}, "system");
  require_slots(t.user_template, {"{asr}", "{hashtag}", "{text}", "{stickerText}"}, "user");
  return t;
}

std::string render_system_prompt(const PromptTemplates& templates,
                                 const CategoryPolicy& policy) {
  if (policy.policy_text.empty()) throw PromptError("policy_text must be nonempty");
  return substitute(templates.system_template, {{"{CATEGORY}", policy.category_name},
                                                {"{POLICY}", policy.policy_text}});
}

RenderedPrompt render_user_prompt(const PromptTemplates& templates, const VideoPost& post,
                                  std::vector<EncodedImage> images) {
  RenderedPrompt prompt;
  prompt.user_text = substitute(templates.user_template, {{"{asr}", post.asr},
                                                          {"{hashtag}", post.hashtag},
                                                          {"{text}", post.text},
                                                          {"{stickerText}", post.sticker_text}});
  prompt.images = std::move(images);
  return prompt;
}

RenderedPrompt render_prompt(const PromptTemplates& templates, const CategoryPolicy& policy,
                             const VideoPost& post, std::vector<EncodedImage> images) {
  RenderedPrompt prompt = render_user_prompt(templates, post, std::move(images));
  prompt.system_text = render_system_prompt(templates, policy);
  return prompt;
}

int word_count(const std::string& text) {
  int count = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

std::vector<CategoryPolicy> expand_subprompts(const CategoryPolicy& policy) {
  if (!policy.has_subpolicies()) {
    throw PromptError("category has no decomposition: " + policy.category_name);
  }
  std::vector<CategoryPolicy> out;
  out.reserve(policy.subpolicies.size());
  for (const Subpolicy& sub : policy.subpolicies) {
    out.emplace_back(sub.name, sub.text, policy.variant_id + "#" + slugify(sub.name));
  }
  return out;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

// Joins block lines, dropping leading/trailing blank lines but keeping
// interior structure verbatim.
std::string join_block(const std::vector<std::string>& lines) {
  std::size_t a = 0;
  std::size_t b = lines.size();
  while (a < b && trim(lines[a]).empty()) ++a;
  while (b > a && trim(lines[b - 1]).empty()) --b;
  std::string out;
  for (std::size_t i = a; i < b; ++i) {
    if (i > a) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

std::optional<std::string> parse_subpolicy_header(const std::string& line) {
  const std::string t = trim(line);
  constexpr std::string_view kPrefix = "[subpolicy:";
  if (t.size() < kPrefix.size() + 1 || t.back() != ']') return std::nullopt;
  if (t.compare(0, kPrefix.size(), kPrefix) != 0) return std::nullopt;
  return trim(t.substr(kPrefix.size(), t.size() - kPrefix.size() - 1));
}

}  // namespace

CategoryPolicy PolicyRegistry::parse_policy_file(const std::filesystem::path& file) {
  const std::vector<std::string> lines = split_lines(read_file(file));
  auto fail = [&file](const std::string& what) -> PromptError {
    return PromptError(file.string() + ": " + what);
  };

  if (lines.empty() || trim(lines[0]) != "---") throw fail("missing front matter");
  std::size_t i = 1;
  std::string category_name;
  std::string variant_id;
  for (; i < lines.size() && trim(lines[i]) != "---"; ++i) {
    const std::string line = trim(lines[i]);
    if (line.empty()) continue;
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) throw fail("bad front matter line: " + line);
    const std::string key = trim(line.substr(0, colon));
    const std::string value = trim(line.substr(colon + 1));
    if (key == "category_name") {
      category_name = value;
    } else if (key == "variant_id") {
      variant_id = value;
    }
    // Unknown keys are tolerated for forward compatibility.
  }
  if (i >= lines.size()) throw fail("unterminated front matter");
  ++i;  // past the closing ---
  if (category_name.empty()) throw fail("front matter missing category_name");
  if (variant_id.empty()) throw fail("front matter missing variant_id");

  std::vector<std::string> body;
  std::vector<Subpolicy> subs;
  std::vector<std::string>* sink = &body;
  std::vector<std::vector<std::string>> sub_bodies;
  for (; i < lines.size(); ++i) {
    if (auto name = parse_subpolicy_header(lines[i])) {
      subs.push_back({*name, ""});
      sub_bodies.emplace_back();
      sink = &sub_bodies.back();
      continue;
    }
    sink->push_back(lines[i]);
  }
  for (std::size_t k = 0; k < subs.size(); ++k) {
    subs[k].text = join_block(sub_bodies[k]);
    if (subs[k].text.empty()) throw fail("subpolicy " + subs[k].name + " has empty text");
  }

  const std::string policy_text = join_block(body);
  if (policy_text.empty()) throw fail("policy text is empty");
  try {
    return CategoryPolicy(category_name, policy_text, variant_id, std::move(subs));
  } catch (const PromptError& e) {
    throw fail(e.what());
  }
}

PolicyRegistry PolicyRegistry::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw PromptError("policy registry directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".policy") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  PolicyRegistry reg;
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& file : files) {
    CategoryPolicy policy = parse_policy_file(file);
    const auto key = std::make_pair(slugify(policy.category_name), policy.variant_id);
    if (!keys.insert(key).second) {
      throw PromptError("duplicate policy " + key.first + "/" + key.second + " in registry");
    }
    reg.policies_.push_back(std::move(policy));
  }
  std::sort(reg.policies_.begin(), reg.policies_.end(),
            [](const CategoryPolicy& a, const CategoryPolicy& b) {
              return std::make_pair(slugify(a.category_name), a.variant_id) <
                     std::make_pair(slugify(b.category_name), b.variant_id);
            });
  return reg;
}

std::vector<std::string> PolicyRegistry::category_names() const {
  std::vector<std::string> names;
  for (const CategoryPolicy& p : policies_) {
    if (names.empty() || names.back() != p.category_name) names.push_back(p.category_name);
  }
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

std::vector<const CategoryPolicy*> PolicyRegistry::variants_of(const std::string& category) const {
  const std::string slug = slugify(category);
  std::vector<const CategoryPolicy*> out;
  for (const CategoryPolicy& p : policies_) {
    if (slugify(p.category_name) == slug) out.push_back(&p);
  }
  return out;
}

const CategoryPolicy& PolicyRegistry::find(const std::string& category,
                                           const std::string& variant_id) const {
  const auto variants = variants_of(category);
  if (variants.empty()) throw PromptError("unknown category: " + category);
  if (variant_id.empty()) {
    if (variants.size() == 1) return *variants.front();
    std::string msg = "category " + category + " has multiple variants, pick one of:";
    for (const CategoryPolicy* p : variants) msg += " " + p->variant_id;
    throw PromptError(msg);
  }
  for (const CategoryPolicy* p : variants) {
    if (p->variant_id == variant_id) return *p;
  }
  throw PromptError("unknown variant " + variant_id + " for category " + category);
}

}  // namespace fqc
