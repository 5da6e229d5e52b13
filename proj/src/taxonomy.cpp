#include "clueqa/taxonomy.hpp"

#include <fstream>

namespace clueqa {

int Taxonomy::add_node(const std::string& name, int parent) {
  if (name.empty()) throw ValidationError("taxonomy node name is empty");
  if (index_of(name) >= 0) {
    throw ValidationError("duplicate taxonomy node '" + name + "'");
  }
  if (names_.empty()) {
    if (parent != -1) throw ValidationError("first taxonomy node must be root");
  } else {
    if (parent < 0 || parent >= size()) {
      throw ValidationError("taxonomy parent index out of range for '" + name +
                            "'");
    }
  }
  names_.push_back(name);
  parents_.push_back(parent);
  depths_.push_back(parent == -1 ? 1 : depths_[parent] + 1);
  return size() - 1;
}

int Taxonomy::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i) {
    if (names_[i] == name) return i;
  }
  return -1;
}

int Taxonomy::lca(int a, int b) const {
  if (a < 0 || a >= size() || b < 0 || b >= size()) {
    throw ValidationError("taxonomy lca on out-of-range node");
  }
  while (depths_[a] > depths_[b]) a = parents_[a];
  while (depths_[b] > depths_[a]) b = parents_[b];
  while (a != b) {
    a = parents_[a];
    b = parents_[b];
  }
  return a;
}

bool Taxonomy::is_leaf(int node) const {
  for (int p : parents_) {
    if (p == node) return false;
  }
  return true;
}

std::vector<int> Taxonomy::siblings(int node) const {
  std::vector<int> out;
  int p = parents_.at(node);
  if (p < 0) return out;
  for (int i = 0; i < size(); ++i) {
    if (i != node && parents_[i] == p && is_leaf(i)) out.push_back(i);
  }
  return out;
}

void Taxonomy::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "format_version: 1\n";
  for (int i = 0; i < size(); ++i) {
    for (int d = 1; d < depths_[i]; ++d) out << "  ";
    out << names_[i] << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

Taxonomy Taxonomy::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "format_version: 1") {
    throw IoError(path + ": missing or unsupported format_version header");
  }
  Taxonomy tax;
  std::vector<int> stack;  // stack[d] = last node seen at depth d+1
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    size_t indent = 0;
    while (indent < line.size() && line[indent] == ' ') ++indent;
    if (indent % 2 != 0) {
      throw IoError(path + ": line " + std::to_string(line_no) +
                    ": odd indentation");
    }
    size_t depth = indent / 2;  // 0-based nesting level
    std::string name = line.substr(indent);
    if (depth > stack.size()) {
      throw IoError(path + ": line " + std::to_string(line_no) +
                    ": indentation skips a level");
    }
    int parent = depth == 0 ? -1 : stack[depth - 1];
    if (depth == 0 && tax.size() > 0) {
      throw IoError(path + ": line " + std::to_string(line_no) +
                    ": multiple roots");
    }
    int node;
    try {
      node = tax.add_node(name, parent);
    } catch (const ValidationError& e) {
      throw IoError(path + ": line " + std::to_string(line_no) + ": " +
                    e.what());
    }
    stack.resize(depth);
    stack.push_back(node);
  }
  if (tax.size() == 0) throw IoError(path + ": empty taxonomy");
  return tax;
}

}  // namespace clueqa
