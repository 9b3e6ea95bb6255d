#ifndef QCAL_TESTS_XML_TREE_H_
#define QCAL_TESTS_XML_TREE_H_

#include <expat.h>

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcal::test {

struct XmlNode {
  std::string name;
  std::map<std::string, std::string> attrs;
  std::vector<std::unique_ptr<XmlNode>> children;
  std::string text;

  std::string attr(const std::string& key) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? std::string() : it->second;
  }

  // Depth-first search over this node and its descendants.
  void visit(const std::function<void(const XmlNode&)>& fn) const {
    fn(*this);
    for (const auto& c : children) c->visit(fn);
  }

  std::vector<const XmlNode*> find_all(const std::string& tag) const {
    std::vector<const XmlNode*> out;
    visit([&](const XmlNode& n) {
      if (n.name == tag) out.push_back(&n);
    });
    return out;
  }

  const XmlNode* find_id(const std::string& id) const {
    const XmlNode* out = nullptr;
    visit([&](const XmlNode& n) {
      if (!out && n.attr("id") == id) out = &n;
    });
    return out;
  }

  // Concatenated text of the subtree.
  std::string all_text() const {
    std::string out;
    visit([&](const XmlNode& n) { out += n.text; });
    return out;
  }
};

// Strict parse with expat; throws std::runtime_error with line information when not well-formed.
inline std::unique_ptr<XmlNode> parse_xml(const std::string& text) {
  struct State {
    std::unique_ptr<XmlNode> root;
    std::vector<XmlNode*> stack;
  } state;
  XML_Parser parser = XML_ParserCreate("UTF-8");
  XML_SetUserData(parser, &state);
  XML_SetElementHandler(
      parser,
      [](void* data, const XML_Char* name, const XML_Char** atts) {
        auto* s = static_cast<State*>(data);
        auto node = std::make_unique<XmlNode>();
        node->name = name;
        for (int i = 0; atts[i]; i += 2) node->attrs[atts[i]] = atts[i + 1];
        XmlNode* raw = node.get();
        if (s->stack.empty()) s->root = std::move(node);
        else s->stack.back()->children.push_back(std::move(node));
        s->stack.push_back(raw);
      },
      [](void* data, const XML_Char*) { static_cast<State*>(data)->stack.pop_back(); });
  XML_SetCharacterDataHandler(parser, [](void* data, const XML_Char* s, int len) {
    auto* st = static_cast<State*>(data);
    if (!st->stack.empty()) st->stack.back()->text.append(s, static_cast<std::size_t>(len));
  });
  const auto status = XML_Parse(parser, text.data(), static_cast<int>(text.size()), 1);
  if (status != XML_STATUS_OK) {
    const std::string msg = std::string(XML_ErrorString(XML_GetErrorCode(parser))) + " at line " +
                            std::to_string(XML_GetCurrentLineNumber(parser));
    XML_ParserFree(parser);
    throw std::runtime_error(msg);
  }
  XML_ParserFree(parser);
  return std::move(state.root);
}

}  // namespace qcal::test

#endif  // QCAL_TESTS_XML_TREE_H_
