#pragma once

#include <cctype>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "melcond/types.hpp"

// Minimal non-validating XML reader, enough for MusicXML documents:
// elements, attributes, character data, comments, processing instructions
// and a DOCTYPE line. No namespaces, no CDATA.

namespace melcond::xml {

struct Node {
  std::string name;
  std::map<std::string, std::string> attrs;
  std::vector<Node> children;
  std::string text;  // concatenated character data

  const Node* child(std::string_view tag) const {
    for (const auto& c : children)
      if (c.name == tag) return &c;
    return nullptr;
  }

  std::vector<const Node*> children_named(std::string_view tag) const {
    std::vector<const Node*> out;
    for (const auto& c : children)
      if (c.name == tag) out.push_back(&c);
    return out;
  }

  std::string attr(const std::string& key, const std::string& fallback = "") const {
    auto it = attrs.find(key);
    return it == attrs.end() ? fallback : it->second;
  }

  std::string child_text(std::string_view tag,
                         const std::string& fallback = "") const {
    const Node* c = child(tag);
    return c ? c->text : fallback;
  }
};

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Node parse_document() {
    skip_misc();
    if (pos_ >= src_.size())
      throw ParseError("xml: no root element", pos_);
    Node root = parse_element();
    skip_misc();
    return root;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("xml: " + msg, pos_);
  }

  char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }

  bool starts_with(std::string_view s) const {
    return src_.substr(pos_, s.size()) == s;
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  // whitespace, <?...?>, <!-- --> and <!DOCTYPE ...>
  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<?")) {
        auto end = src_.find("?>", pos_);
        if (end == std::string_view::npos) fail("unterminated <?...?>");
        pos_ = end + 2;
      } else if (starts_with("<!--")) {
        auto end = src_.find("-->", pos_);
        if (end == std::string_view::npos) fail("unterminated comment");
        pos_ = end + 3;
      } else if (starts_with("<!")) {
        auto end = src_.find('>', pos_);
        if (end == std::string_view::npos) fail("unterminated <!...>");
        pos_ = end + 1;
      } else {
        return;
      }
    }
  }

  std::string parse_name() {
    std::size_t start = pos_;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
          c == '_' || c == '.' || c == ':')
        ++pos_;
      else
        break;
    }
    if (pos_ == start) fail("expected a name");
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string decode_entities(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out.push_back(raw[i]);
        continue;
      }
      auto semi = raw.find(';', i);
      if (semi == std::string_view::npos) fail("unterminated entity");
      std::string_view ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "amp") out.push_back('&');
      else if (ent == "lt") out.push_back('<');
      else if (ent == "gt") out.push_back('>');
      else if (ent == "apos") out.push_back('\'');
      else if (ent == "quot") out.push_back('"');
      else if (!ent.empty() && ent[0] == '#') {
        int code = ent[1] == 'x' || ent[1] == 'X'
                       ? std::stoi(std::string(ent.substr(2)), nullptr, 16)
                       : std::stoi(std::string(ent.substr(1)));
        if (code < 0x80) out.push_back(static_cast<char>(code));
        // non-ASCII references are dropped; lyrics in the corpus are ASCII
      } else {
        fail("unknown entity &" + std::string(ent) + ";");
      }
      i = semi;
    }
    return out;
  }

  Node parse_element() {
    if (peek() != '<') fail("expected '<'");
    ++pos_;
    Node node;
    node.name = parse_name();
    for (;;) {
      skip_ws();
      if (starts_with("/>")) {
        pos_ += 2;
        return node;
      }
      if (peek() == '>') {
        ++pos_;
        break;
      }
      std::string key = parse_name();
      skip_ws();
      if (peek() != '=') fail("expected '=' after attribute name");
      ++pos_;
      skip_ws();
      char quote = peek();
      if (quote != '"' && quote != '\'') fail("expected quoted attribute");
      ++pos_;
      auto end = src_.find(quote, pos_);
      if (end == std::string_view::npos) fail("unterminated attribute value");
      node.attrs[key] = decode_entities(src_.substr(pos_, end - pos_));
      pos_ = end + 1;
    }
    // content
    for (;;) {
      if (pos_ >= src_.size()) fail("unexpected end inside <" + node.name + ">");
      if (starts_with("</")) {
        pos_ += 2;
        std::string closing = parse_name();
        if (closing != node.name)
          fail("mismatched </" + closing + "> inside <" + node.name + ">");
        skip_ws();
        if (peek() != '>') fail("expected '>' in closing tag");
        ++pos_;
        return node;
      }
      if (starts_with("<!--")) {
        auto end = src_.find("-->", pos_);
        if (end == std::string_view::npos) fail("unterminated comment");
        pos_ = end + 3;
      } else if (peek() == '<') {
        node.children.push_back(parse_element());
      } else {
        auto end = src_.find('<', pos_);
        if (end == std::string_view::npos) fail("text outside an element");
        node.text += decode_entities(src_.substr(pos_, end - pos_));
        pos_ = end;
      }
    }
  }
};

}  // namespace detail

inline Node parse(std::string_view document) {
  return detail::Parser(document).parse_document();
}

}  // namespace melcond::xml
