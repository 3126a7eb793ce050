#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "nobn/error.hpp"
#include "nobn/network.hpp"

namespace nobn {

namespace {

struct Token {
  std::string_view text;
  std::size_t col;  // 1-based
};

struct Line {
  std::size_t number;  // 1-based
  std::vector<Token> tokens;
};

std::vector<Line> tokenize(std::string_view text) {
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    ++number;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    Line line{number, {}};
    std::size_t i = 0;
    while (i < raw.size()) {
      while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
      std::size_t start = i;
      while (i < raw.size() && !std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
      if (i > start) line.tokens.push_back({raw.substr(start, i - start), start + 1});
    }
    if (!line.tokens.empty()) lines.push_back(std::move(line));
    if (end == text.size()) break;
    pos = end + 1;
  }
  return lines;
}

std::string where(std::size_t line, std::size_t col) {
  return std::to_string(line) + ":" + std::to_string(col);
}

[[noreturn]] void syntax_error(std::size_t line, std::size_t col, const std::string& msg) {
  throw Error(ErrorKind::kSyntax, where(line, col) + ": " + msg);
}

[[noreturn]] void validation_error(std::size_t line, std::size_t col, const std::string& msg) {
  throw Error(ErrorKind::kValidation, where(line, col) + ": " + msg);
}

double parse_number(std::string_view text, std::size_t line, std::size_t col) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    syntax_error(line, col, "expected a probability, got '" + std::string(text) + "'");
  }
  return value;
}

double parse_probability(std::string_view text, std::size_t line, std::size_t col) {
  double p = parse_number(text, line, col);
  if (p < 0.0 || p > 1.0) {
    validation_error(line, col, "probability " + std::string(text) + " is outside [0,1]");
  }
  return p;
}

struct RawLink {
  std::string parent;
  double q;
  std::size_t col;
};

struct RawNode {
  std::string name;
  std::size_t line;
  std::size_t col;
  std::optional<double> prior;
  double leak = 0.0;
  std::vector<RawLink> links;
};

RawNode parse_declaration(const Line& line) {
  const auto& t = line.tokens;
  const std::size_t ln = line.number;
  if (t[0].text != "node") syntax_error(ln, t[0].col, "expected 'node'");
  if (t.size() < 2) syntax_error(ln, t[0].col + 4, "expected a node name");
  RawNode node{std::string(t[1].text), ln, t[1].col, std::nullopt, 0.0, {}};
  if (node.name.find(':') != std::string::npos) {
    syntax_error(ln, t[1].col, "node name must not contain ':'");
  }
  if (t.size() < 4) {
    std::size_t col = t.back().col + t.back().text.size();
    syntax_error(ln, col, "expected 'prior <p>' or 'leak <l> parents ...'");
  }
  if (t[2].text == "prior") {
    node.prior = parse_probability(t[3].text, ln, t[3].col);
    if (t.size() > 4) syntax_error(ln, t[4].col, "unexpected token after prior");
    return node;
  }
  if (t[2].text != "leak") syntax_error(ln, t[2].col, "expected 'prior' or 'leak'");
  node.leak = parse_probability(t[3].text, ln, t[3].col);
  if (t.size() < 5 || t[4].text != "parents") {
    std::size_t col = t.size() < 5 ? t[3].col + t[3].text.size() : t[4].col;
    syntax_error(ln, col, "expected 'parents'");
  }
  if (t.size() < 6) syntax_error(ln, t[4].col + 7, "expected at least one <parent>:<q>");
  for (std::size_t i = 5; i < t.size(); ++i) {
    std::string_view tok = t[i].text;
    auto colon = tok.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == tok.size()) {
      syntax_error(ln, t[i].col, "expected <parent>:<q>, got '" + std::string(tok) + "'");
    }
    node.links.push_back({std::string(tok.substr(0, colon)),
                          parse_probability(tok.substr(colon + 1), ln, t[i].col + colon + 1),
                          t[i].col});
  }
  return node;
}

}  // namespace

Network parse_network(std::string_view text) {
  std::vector<RawNode> raw;
  for (const Line& line : tokenize(text)) raw.push_back(parse_declaration(line));

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!index.emplace(raw[i].name, i).second) {
      validation_error(raw[i].line, raw[i].col, "duplicate node name '" + raw[i].name + "'");
    }
  }

  std::vector<std::vector<std::size_t>> parents(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (const RawLink& link : raw[i].links) {
      auto it = index.find(link.parent);
      if (it == index.end()) {
        validation_error(raw[i].line, link.col, "unknown parent '" + link.parent + "'");
      }
      parents[i].push_back(it->second);
    }
  }

  // Kahn's algorithm over the declared arcs; leftovers lie on or behind a cycle.
  std::vector<std::size_t> pending(raw.size());
  std::vector<std::vector<std::size_t>> children(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    pending[i] = parents[i].size();
    for (std::size_t p : parents[i]) children[p].push_back(i);
  }
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (pending[i] == 0) ready.push_back(i);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    std::size_t n = ready.back();
    ready.pop_back();
    ++visited;
    for (std::size_t c : children[n]) {
      if (--pending[c] == 0) ready.push_back(c);
    }
  }
  if (visited != raw.size()) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (pending[i] > 0) {
        validation_error(raw[i].line, raw[i].col, "cycle detected through '" + raw[i].name + "'");
      }
    }
  }

  std::vector<NodeSpec> nodes;
  nodes.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    NodeSpec spec{raw[i].name, raw[i].prior, raw[i].leak, {}};
    for (std::size_t k = 0; k < raw[i].links.size(); ++k) {
      const std::size_t p = parents[i][k];
      if (p >= i) {
        validation_error(raw[i].line, raw[i].links[k].col,
                         "parent '" + raw[p].name + "' must be declared before '" +
                             raw[i].name + "'");
      }
      for (std::size_t j = 0; j < k; ++j) {
        if (parents[i][j] == p) {
          validation_error(raw[i].line, raw[i].links[k].col,
                           "duplicate parent '" + raw[p].name + "'");
        }
      }
      spec.links.push_back({static_cast<NodeId>(p), raw[i].links[k].q});
    }
    nodes.push_back(std::move(spec));
  }
  return Network::build(std::move(nodes));
}

std::string format_probability(double p) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", p);
  return buf;
}

std::string print_network(const Network& net) {
  std::string out;
  for (const NodeSpec& n : net.nodes()) {
    out += "node ";
    out += n.name;
    if (n.is_root()) {
      out += " prior ";
      out += format_probability(*n.prior);
    } else {
      out += " leak ";
      out += format_probability(n.leak);
      out += " parents";
      for (const Link& link : n.links) {
        out += ' ';
        out += net.node(link.parent).name;
        out += ':';
        out += format_probability(link.q);
      }
    }
    out += '\n';
  }
  return out;
}

Evidence parse_evidence(const Network& net, std::string_view text) {
  std::vector<Observation> items;
  bool first = true;
  for (const Line& line : tokenize(text)) {
    const auto& t = line.tokens;
    if (first && t[0].text == "case") {
      first = false;
      continue;
    }
    first = false;
    if (t.size() != 2) {
      syntax_error(line.number, t[0].col, "expected '<name> <present|absent>'");
    }
    auto id = net.find(t[0].text);
    if (!id) {
      validation_error(line.number, t[0].col, "unknown node '" + std::string(t[0].text) + "'");
    }
    State state;
    if (t[1].text == "present") {
      state = State::kPresent;
    } else if (t[1].text == "absent") {
      state = State::kAbsent;
    } else {
      syntax_error(line.number, t[1].col, "expected 'present' or 'absent'");
    }
    items.push_back({*id, state});
  }
  return make_evidence(net, std::move(items));
}

std::string print_evidence(const Network& net, const Evidence& ev) {
  std::string out;
  for (const Observation& o : ev.items) {
    out += net.node(o.node).name;
    out += ' ';
    out += to_string(o.state);
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kValidation, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kValidation, "cannot write '" + path + "'");
  out << content;
  if (!out) throw Error(ErrorKind::kValidation, "write to '" + path + "' failed");
}

}  // namespace nobn
