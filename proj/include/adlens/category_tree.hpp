#pragma once

// Hierarchical interest taxonomy. Node ids are canonical slash paths
// ("Health/Pediatrics"); the segment count equals the node level. A synthetic
// root sits at level 0 and is not stored as a node. Immutable after load.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "adlens/text.hpp"

namespace adlens {

struct CategoryNode {
  std::string id;            // slash path, e.g. "Health/Pediatrics"
  std::string display_name;  // last path segment unless overridden
  std::optional<std::string> parent_id;  // absent => child of root
  int level = 1;             // segment count of id
};

struct CycleDetected : std::runtime_error {
  explicit CycleDetected(const std::string& id) : std::runtime_error("category cycle through: " + id) {}
};
struct DanglingParent : std::runtime_error {
  explicit DanglingParent(const std::string& id) : std::runtime_error("parent missing for: " + id) {}
};
struct DuplicateId : std::runtime_error {
  explicit DuplicateId(const std::string& id) : std::runtime_error("duplicate category id: " + id) {}
};
struct UnknownNode : std::runtime_error {
  explicit UnknownNode(const std::string& id) : std::runtime_error("unknown category: " + id) {}
};
struct EmptyAssignedSet : std::runtime_error {
  EmptyAssignedSet() : std::runtime_error("relevance_fraction over empty assigned set") {}
};

class CategoryTree {
 public:
  struct Row {
    std::string id;
    std::string display_name;
    std::optional<std::string> parent_id;
  };

  // Builds from explicit (id, parent_id) rows in any order. Validates the
  // module invariants: unique ids, parents present, levels consistent, no
  // cycles.
  static CategoryTree from_rows(const std::vector<Row>& rows) {
    CategoryTree t;
    for (const auto& r : rows) {
      if (t.index_.count(r.id)) throw DuplicateId(r.id);
      CategoryNode n;
      n.id = r.id;
      n.display_name = r.display_name.empty() ? last_segment(r.id) : r.display_name;
      n.parent_id = r.parent_id;
      t.index_.emplace(n.id, t.nodes_.size());
      t.nodes_.push_back(std::move(n));
    }
    t.validate();
    return t;
  }

  // File format: one node per line, "id<TAB>display_name" (display optional);
  // parent derived from the id's slash-path prefix. '#' comments and blank
  // lines ignored.
  static CategoryTree parse(const std::vector<std::string>& lines) {
    std::vector<Row> rows;
    for (const auto& raw : lines) {
      std::string line = trim(raw);
      if (line.empty() || line[0] == '#') continue;
      auto fields = split(line, '\t');
      Row r;
      r.id = trim(fields[0]);
      if (fields.size() > 1) r.display_name = trim(fields[1]);
      size_t slash = r.id.rfind('/');
      if (slash != std::string::npos) r.parent_id = r.id.substr(0, slash);
      rows.push_back(std::move(r));
    }
    return from_rows(rows);
  }

  static CategoryTree load_file(const std::filesystem::path& p) {
    return parse(read_lines(p));
  }

  bool contains(const std::string& id) const { return index_.count(id) != 0; }

  const CategoryNode& node(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownNode(id);
    return nodes_[it->second];
  }

  const std::vector<CategoryNode>& nodes() const { return nodes_; }

  std::vector<std::string> ids_at_level(int level) const {
    std::vector<std::string> out;
    for (const auto& n : nodes_)
      if (n.level == level) out.push_back(n.id);
    std::sort(out.begin(), out.end());
    return out;
  }

  int max_depth() const {
    int d = 0;
    for (const auto& n : nodes_) d = std::max(d, n.level);
    return d;
  }

  // True iff candidate lies in the subtree rooted at target (target itself
  // included). Ancestors of target are NOT relevant.
  bool is_relevant(const std::string& target, const std::string& candidate) const {
    node(target);
    const CategoryNode* cur = &node(candidate);
    while (true) {
      if (cur->id == target) return true;
      if (!cur->parent_id) return false;
      cur = &node(*cur->parent_id);
    }
  }

  // Fraction of assigned categories relevant to target. Assigned is treated
  // as a set: duplicates collapse.
  double relevance_fraction(const std::string& target,
                            const std::vector<std::string>& assigned) const {
    std::unordered_set<std::string> distinct(assigned.begin(), assigned.end());
    if (distinct.empty()) throw EmptyAssignedSet();
    size_t relevant = 0;
    for (const auto& c : distinct)
      if (is_relevant(target, c)) ++relevant;
    return static_cast<double>(relevant) / static_cast<double>(distinct.size());
  }

  // First path segment; rows of the profile/ad-category heat map use this.
  static std::string top_level(const std::string& id) {
    size_t slash = id.find('/');
    return slash == std::string::npos ? id : id.substr(0, slash);
  }

 private:
  static std::string last_segment(const std::string& id) {
    size_t slash = id.rfind('/');
    return slash == std::string::npos ? id : id.substr(slash + 1);
  }

  void validate() {
    for (auto& n : nodes_) {
      if (n.parent_id && !index_.count(*n.parent_id)) throw DanglingParent(n.id);
    }
    // Walk parent chains; assign levels and catch cycles.
    std::unordered_map<std::string, int> state;  // 0 = visiting, 1 = done
    for (auto& n : nodes_) resolve_level(n.id, state);
    for (auto& n : nodes_) {
      size_t segments = split(n.id, '/').size();
      if (static_cast<size_t>(n.level) != segments)
        throw std::runtime_error("category id segments do not match depth: " + n.id);
    }
  }

  int resolve_level(const std::string& id, std::unordered_map<std::string, int>& state) {
    CategoryNode& n = nodes_[index_.at(id)];
    auto it = state.find(id);
    if (it != state.end()) {
      if (it->second == 0) throw CycleDetected(id);
      return n.level;
    }
    state[id] = 0;
    n.level = n.parent_id ? resolve_level(*n.parent_id, state) + 1 : 1;
    state[id] = 1;
    return n.level;
  }

  std::vector<CategoryNode> nodes_;
  std::unordered_map<std::string, size_t> index_;
};

}  // namespace adlens
