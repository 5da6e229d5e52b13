#pragma once

#include <string>
#include <vector>

#include "clueqa/errors.hpp"

namespace clueqa {

// A rooted is-a hierarchy over answer vocabulary. Node 0 is the root and has
// depth 1 (node-counting convention, so depth(child) = depth(parent) + 1).
class Taxonomy {
 public:
  // Adds a node and returns its index. parent must already exist (or be -1
  // for the root, which must be the first node added).
  int add_node(const std::string& name, int parent);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int node) const { return names_.at(node); }
  int parent(int node) const { return parents_.at(node); }
  int depth(int node) const { return depths_.at(node); }

  // Index of the node with this name, or -1 if absent. Names are unique.
  int index_of(const std::string& name) const;
  bool contains(const std::string& name) const { return index_of(name) >= 0; }

  // Lowest common ancestor of two existing nodes.
  int lca(int a, int b) const;

  // Leaf children of a node's parent excluding the node itself.
  std::vector<int> siblings(int node) const;

  bool is_leaf(int node) const;

  // Text form: "format_version: 1" header, then one node per line as
  // "<indent>name" where indent is two spaces per (depth - 1).
  void save(const std::string& path) const;
  static Taxonomy load(const std::string& path);

  bool operator==(const Taxonomy&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<int> parents_;
  std::vector<int> depths_;
};

}  // namespace clueqa
