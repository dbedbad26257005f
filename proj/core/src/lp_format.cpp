// Copyright 2026 The evsl Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "evsl/lp_format.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <vector>

namespace evsl {

namespace {

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_'))
    return false;
  for (const char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
          c == '.' || c == '[' || c == ']'))
      return false;
  }
  return true;
}

// Shortest numeral that round-trips through a double.
std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void append_terms(std::string* out, const std::vector<LinearTerm>& terms,
                  const MilpModel& model, bool* first) {
  for (const LinearTerm& t : terms) {
    if (t.coef == 0.0) continue;
    const std::string& name = model.variable(t.var).name;
    const double a = std::abs(t.coef);
    if (*first) {
      *out += t.coef < 0 ? "- " : "";
      *first = false;
    } else {
      *out += t.coef < 0 ? " - " : " + ";
    }
    if (a != 1.0) {
      *out += num(a);
      *out += ' ';
    }
    *out += name;
  }
}

}  // namespace

std::string write_lp(const MilpModel& model) {
  const int n = model.num_variables();
  for (int j = 0; j < n; ++j) {
    if (!valid_name(model.variable(j).name))
      throw LpFormatError("variable name not LP-safe: '" +
                          model.variable(j).name + "'");
  }

  {
    std::unordered_map<std::string, int> names;
    for (int j = 0; j < n; ++j) {
      if (!names.emplace(model.variable(j).name, j).second)
        throw LpFormatError("duplicate variable name: '" +
                            model.variable(j).name + "'");
    }
  }

  // Everything is emitted in variable-name order, so the bytes depend only on
  // the model's content and never on internal variable numbering.  Parsing
  // assigns fresh ids, which is why write(parse(write(m))) == write(m) needs
  // an id-independent canonical order.
  const auto by_name = [&model](int a, int b) {
    return model.variable(a).name < model.variable(b).name;
  };
  const auto sorted_terms = [&model](std::vector<LinearTerm> ts) {
    std::sort(ts.begin(), ts.end(), [&model](const LinearTerm& a,
                                             const LinearTerm& b) {
      return model.variable(a.var).name < model.variable(b.var).name;
    });
    return ts;
  };

  std::vector<bool> mentioned(n, false);
  std::string out;
  out.reserve(1 << 16);
  if (!model.name.empty()) out += "\\ Problem name: " + model.name + "\n";
  out += "Minimize\n obj:";
  {
    std::vector<LinearTerm> obj_terms;
    for (int j = 0; j < n; ++j) {
      if (model.variable(j).obj != 0.0) {
        obj_terms.push_back({j, model.variable(j).obj});
        mentioned[j] = true;
      }
    }
    bool first = true;
    std::string body;
    append_terms(&body, sorted_terms(std::move(obj_terms)), model, &first);
    const double c0 = model.objective_offset();
    if (c0 != 0.0) {
      if (first)
        body += num(c0);
      else
        body += (c0 < 0 ? " - " : " + ") + num(std::abs(c0));
      first = false;
    }
    if (first) body = "0";
    out += ' ' + body + '\n';
  }

  out += "Subject To\n";
  for (int i = 0; i < model.num_constraints(); ++i) {
    const LinearConstraint& c = model.constraint(i);
    std::string name = c.name.empty() ? "c" + std::to_string(i) : c.name;
    if (!valid_name(name))
      throw LpFormatError("constraint name not LP-safe: '" + name + "'");
    bool first = true;
    std::string body;
    append_terms(&body, sorted_terms(c.terms), model, &first);
    if (first)
      throw LpFormatError("constraint '" + name +
                          "' has no nonzero terms; LP text cannot express it");
    for (const LinearTerm& t : c.terms)
      if (t.coef != 0.0) mentioned[t.var] = true;
    const char* sense = c.sense == RowSense::kLe   ? "<="
                        : c.sense == RowSense::kGe ? ">="
                                                   : "=";
    out += ' ' + name + ": " + body + ' ' + sense + ' ' + num(c.rhs) + '\n';
  }

  out += "Bounds\n";
  {
    std::vector<int> need;
    for (int j = 0; j < n; ++j) {
      const Variable& v = model.variable(j);
      const bool def_cont = v.lb == 0.0 && v.ub == kInfinity;
      const bool def_bin =
          v.kind == VarKind::kBinary && v.lb == 0.0 && v.ub == 1.0;
      if (def_bin) continue;
      if (def_cont && mentioned[j]) continue;  // implied, already in the text
      need.push_back(j);
    }
    std::sort(need.begin(), need.end(), by_name);
    for (const int j : need) {
      const Variable& v = model.variable(j);
      if (v.lb == 0.0 && v.ub == kInfinity) {
        out += ' ' + v.name + " >= 0\n";
      } else if (v.lb == v.ub) {
        out += ' ' + v.name + " = " + num(v.lb) + '\n';
      } else if (v.lb == -kInfinity && v.ub == kInfinity) {
        out += ' ' + v.name + " free\n";
      } else if (v.lb == -kInfinity) {
        out += " -inf <= " + v.name + " <= " + num(v.ub) + '\n';
      } else if (v.ub == kInfinity) {
        out += ' ' + v.name + " >= " + num(v.lb) + '\n';
      } else {
        out += ' ' + num(v.lb) + " <= " + v.name + " <= " + num(v.ub) + '\n';
      }
    }
  }

  for (const VarKind kind : {VarKind::kInteger, VarKind::kBinary}) {
    std::vector<int> members;
    for (int j = 0; j < n; ++j)
      if (model.variable(j).kind == kind) members.push_back(j);
    if (members.empty()) continue;
    std::sort(members.begin(), members.end(), by_name);
    out += kind == VarKind::kInteger ? "Generals\n" : "Binaries\n";
    for (const int j : members)
      out += ' ' + model.variable(j).name + '\n';
  }

  if (model.num_sos2() > 0) {
    out += "SOS\n";
    for (int s = 0; s < model.num_sos2(); ++s) {
      const Sos2Set& set = model.sos2(s);
      std::string name = set.name.empty() ? "sos" + std::to_string(s) : set.name;
      if (!valid_name(name))
        throw LpFormatError("sos name not LP-safe: '" + name + "'");
      out += ' ' + name + ": S2::";
      for (std::size_t k = 0; k < set.vars.size(); ++k) {
        out += ' ' + model.variable(set.vars[k]).name + ':' +
               num(set.weights[k]);
      }
      out += '\n';
    }
  }
  out += "End\n";
  return out;
}

void write_lp_file(const MilpModel& model, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw LpFormatError("cannot open for writing: " + path);
  f << write_lp(model);
  if (!f) throw LpFormatError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Parser.
// ---------------------------------------------------------------------------

namespace {

struct Token {
  enum Kind { kIdent, kNumber, kOp, kEnd } kind = kEnd;
  std::string text;
  double value = 0.0;
  int line = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  Token next() {
    skip_space();
    Token t;
    t.line = line_;
    if (pos_ >= text_.size()) return t;
    const char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
      t.kind = Token::kIdent;
      t.text = text_.substr(start, pos_ - start);
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '.'))
        ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
        std::size_t mark = pos_++;
        if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-'))
          ++pos_;
        if (pos_ < text_.size() &&
            std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          while (pos_ < text_.size() &&
                 std::isdigit(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        } else {
          pos_ = mark;  // 'e' belongs to a following identifier
        }
      }
      t.kind = Token::kNumber;
      t.text = text_.substr(start, pos_ - start);
      t.value = std::strtod(t.text.c_str(), nullptr);
      return t;
    }
    // Operators.
    t.kind = Token::kOp;
    if ((c == '<' || c == '>' || c == '=') && pos_ + 1 < text_.size()) {
      const char d = text_[pos_ + 1];
      if ((c == '<' && d == '=') || (c == '>' && d == '=') ||
          (c == '=' && (d == '<' || d == '>'))) {
        t.text = text_.substr(pos_, 2);
        pos_ += 2;
        // Normalize archaic '=<' / '=>'.
        if (t.text == "=<") t.text = "<=";
        if (t.text == "=>") t.text = ">=";
        return t;
      }
    }
    t.text = std::string(1, c);
    ++pos_;
    if (t.text == "<") t.text = "<=";
    if (t.text == ">") t.text = ">=";
    return t;
  }

  Token peek() {
    const std::size_t save_pos = pos_;
    const int save_line = line_;
    Token t = next();
    pos_ = save_pos;
    line_ = save_line;
    return t;
  }

 private:
  static bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           c == '.' || c == '[' || c == ']';
  }
  void skip_space() {
    for (;;) {
      while (pos_ < text_.size() &&
             std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        if (text_[pos_] == '\n') ++line_;
        ++pos_;
      }
      if (pos_ < text_.size() && text_[pos_] == '\\') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
        continue;
      }
      return;
    }
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

[[noreturn]] void fail(int line, const std::string& what) {
  throw LpFormatError("lp parse error at line " + std::to_string(line) + ": " +
                      what);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

enum class Section { kObjective, kConstraints, kBounds, kGenerals, kBinaries, kSos, kEnd };

// Section headers, matched against a whole trimmed line (case-insensitive,
// runs of internal whitespace collapsed).
Section header_of(const std::string& line, bool* is_max, bool* matched) {
  std::string l = lower(line);
  std::string squashed;
  for (const char c : l) {
    if (c == ' ' || c == '\t') {
      if (!squashed.empty() && squashed.back() != ' ') squashed += ' ';
    } else {
      squashed += c;
    }
  }
  l = std::move(squashed);
  *matched = true;
  if (l == "minimize" || l == "minimise" || l == "min") {
    *is_max = false;
    return Section::kObjective;
  }
  if (l == "maximize" || l == "maximise" || l == "max") {
    *is_max = true;
    return Section::kObjective;
  }
  if (l == "subject to" || l == "such that" || l == "st" || l == "s.t.")
    return Section::kConstraints;
  if (l == "bounds" || l == "bound") return Section::kBounds;
  if (l == "generals" || l == "general" || l == "integers" || l == "integer")
    return Section::kGenerals;
  if (l == "binaries" || l == "binary" || l == "bin") return Section::kBinaries;
  if (l == "sos") return Section::kSos;
  if (l == "end") return Section::kEnd;
  *matched = false;
  return Section::kEnd;
}

struct Builder {
  MilpModel model;
  std::unordered_map<std::string, int> var_ids;
  std::vector<bool> explicit_bounds;

  int var(const std::string& name) {
    auto it = var_ids.find(name);
    if (it != var_ids.end()) return it->second;
    const int id =
        model.add_variable(name, 0.0, kInfinity, 0.0, VarKind::kContinuous);
    var_ids.emplace(name, id);
    explicit_bounds.push_back(false);
    return id;
  }
};

// Parses "[name :] sum-of-terms [sense rhs]" from `lex`.
struct ParsedRow {
  std::string name;
  std::vector<LinearTerm> terms;
  double constant = 0.0;
};

// Reads a linear expression until a sense operator or section boundary.
// Returns the token that stopped the scan.
Token parse_expr(Lexer* lex, Builder* b, ParsedRow* row) {
  double sign = 1.0;
  bool have_coef = false;
  double coef = 1.0;
  bool pending_op = false;  // a +/- was read with no operand yet
  for (;;) {
    Token t = lex->next();
    switch (t.kind) {
      case Token::kOp:
        if (t.text == "+" || t.text == "-") {
          if (have_coef) {
            // "3 + x": the bare number is an additive constant.
            row->constant += sign * coef;
            have_coef = false;
            coef = 1.0;
            sign = 1.0;
          }
          sign *= t.text == "-" ? -1.0 : 1.0;
          pending_op = true;
          continue;
        }
        if (t.text == "*") continue;  // optional multiplication sign
        if (pending_op) fail(t.line, "operator with no operand");
        if (have_coef) row->constant += sign * coef;  // caller validates
        return t;  // sense or other operator: caller decides
      case Token::kNumber:
        if (have_coef) fail(t.line, "two numbers in a row");
        coef = t.value;
        have_coef = true;
        pending_op = false;
        continue;
      case Token::kIdent: {
        row->terms.push_back({b->var(t.text), sign * coef});
        sign = 1.0;
        coef = 1.0;
        have_coef = false;
        pending_op = false;
        continue;
      }
      case Token::kEnd:
        if (pending_op) fail(t.line, "expression ends after an operator");
        if (have_coef) {
          row->constant += sign * coef;
          have_coef = false;
        }
        return t;
    }
  }
}

}  // namespace

MilpModel parse_lp(const std::string& text, std::string model_name) {
  // Pass 1: split into sections on whole-line keywords.
  struct Chunk {
    Section section;
    std::string body;
    int first_line;
  };
  std::vector<Chunk> chunks;
  bool objective_is_max = false;
  std::string comment_name;
  {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    Section cur = Section::kEnd;
    bool have_cur = false;
    std::string body;
    int body_line = 1;
    auto flush = [&]() {
      if (have_cur) chunks.push_back({cur, body, body_line});
      body.clear();
    };
    while (std::getline(in, line)) {
      ++lineno;
      if (!have_cur && comment_name.empty()) {
        // A "\ Problem name: <name>" comment ahead of the first section names
        // the model; write_lp emits one, so round trips keep the name.
        const std::size_t mark = line.find("\\ Problem name:");
        if (mark != std::string::npos) {
          std::string nm = line.substr(mark + 15);
          const auto nb = nm.find_first_not_of(" \t\r");
          const auto ne = nm.find_last_not_of(" \t\r");
          if (nb != std::string::npos) comment_name = nm.substr(nb, ne - nb + 1);
        }
      }
      std::string trimmed = line;
      const std::size_t cmt = trimmed.find('\\');
      if (cmt != std::string::npos) trimmed.resize(cmt);
      const auto b = trimmed.find_first_not_of(" \t\r");
      const auto e = trimmed.find_last_not_of(" \t\r");
      trimmed = b == std::string::npos ? "" : trimmed.substr(b, e - b + 1);
      bool matched = false;
      bool is_max = false;
      const Section s = trimmed.empty()
                            ? Section::kEnd
                            : header_of(trimmed, &is_max, &matched);
      if (!trimmed.empty() && matched) {
        flush();
        if (s == Section::kEnd) {
          have_cur = false;
          break;
        }
        cur = s;
        have_cur = true;
        if (s == Section::kObjective) objective_is_max = is_max;
        body_line = lineno + 1;
        continue;
      }
      if (!trimmed.empty() && !have_cur)
        fail(lineno, "content before the objective section: '" + trimmed + "'");
      body += line;
      body += '\n';
    }
    flush();
  }

  Builder b;
  b.model.name =
      comment_name.empty() ? std::move(model_name) : std::move(comment_name);
  bool saw_objective = false;

  for (const Chunk& chunk : chunks) {
    Lexer lex(chunk.body);
    switch (chunk.section) {
      case Section::kObjective: {
        saw_objective = true;
        ParsedRow row;
        Token t = lex.peek();
        if (t.kind == Token::kIdent) {
          // Possible "name:" prefix.
          Lexer probe(chunk.body);
          probe.next();
          Token colon = probe.next();
          if (colon.kind == Token::kOp && colon.text == ":") {
            lex.next();
            lex.next();
          }
        }
        Token stop = parse_expr(&lex, &b, &row);
        if (stop.kind != Token::kEnd)
          fail(stop.line, "unexpected '" + stop.text + "' in the objective");
        const double s = objective_is_max ? -1.0 : 1.0;
        for (const LinearTerm& term : row.terms) {
          Variable& v = b.model.mutable_variable(term.var);
          v.obj += s * term.coef;
        }
        b.model.set_objective_offset(b.model.objective_offset() +
                                     s * row.constant);
        break;
      }
      case Section::kConstraints: {
        for (;;) {
          Token t = lex.peek();
          if (t.kind == Token::kEnd) break;
          ParsedRow row;
          // Optional "name :" prefix.
          if (t.kind == Token::kIdent) {
            Lexer probe = lex;
            probe.next();
            Token colon = probe.next();
            if (colon.kind == Token::kOp && colon.text == ":") {
              row.name = t.text;
              lex.next();
              lex.next();
            }
          }
          Token stop = parse_expr(&lex, &b, &row);
          if (stop.kind != Token::kOp ||
              (stop.text != "<=" && stop.text != ">=" && stop.text != "="))
            fail(stop.line, "expected a row sense, got '" + stop.text + "'");
          Token rhs = lex.next();
          double rsign = 1.0;
          while (rhs.kind == Token::kOp &&
                 (rhs.text == "-" || rhs.text == "+")) {
            if (rhs.text == "-") rsign = -rsign;
            rhs = lex.next();
          }
          if (rhs.kind != Token::kNumber)
            fail(rhs.line, "expected a numeric right-hand side");
          if (row.name.empty())
            row.name = "c" + std::to_string(b.model.num_constraints());
          if (row.constant != 0.0)
            fail(stop.line, "constant terms belong on the right-hand side");
          const RowSense sense = stop.text == "<="  ? RowSense::kLe
                                 : stop.text == ">=" ? RowSense::kGe
                                                     : RowSense::kEq;
          b.model.add_constraint(row.name, row.terms, sense,
                                 rsign * rhs.value);
        }
        break;
      }
      case Section::kBounds: {
        for (;;) {
          Token t = lex.next();
          if (t.kind == Token::kEnd) break;
          // Forms: "x free" | "x = v" | "x <= v" | "x >= v" |
          //        "l <= x [<= u]" where l, u admit -inf / +inf.
          double lead = 0.0;
          bool have_lead = false;
          double lead_sign = 1.0;
          while (t.kind == Token::kOp && (t.text == "-" || t.text == "+")) {
            if (t.text == "-") lead_sign = -lead_sign;
            t = lex.next();
          }
          if (t.kind == Token::kNumber) {
            lead = lead_sign * t.value;
            have_lead = true;
            t = lex.next();
          } else if (t.kind == Token::kIdent &&
                     (lower(t.text) == "inf" || lower(t.text) == "infinity")) {
            lead = lead_sign * kInfinity;
            have_lead = true;
            t = lex.next();
          }
          if (have_lead) {
            if (!(t.kind == Token::kOp && t.text == "<="))
              fail(t.line, "expected '<=' after a bound value");
            Token vtok = lex.next();
            if (vtok.kind != Token::kIdent)
              fail(vtok.line, "expected a variable name in bounds");
            const int id = b.var(vtok.text);
            Variable& v = b.model.mutable_variable(id);
            v.lb = lead;
            b.explicit_bounds[id] = true;
            Token more = lex.peek();
            if (more.kind == Token::kOp && more.text == "<=") {
              lex.next();
              Token utok = lex.next();
              double usign = 1.0;
              while (utok.kind == Token::kOp &&
                     (utok.text == "-" || utok.text == "+")) {
                if (utok.text == "-") usign = -usign;
                utok = lex.next();
              }
              if (utok.kind == Token::kNumber)
                v.ub = usign * utok.value;
              else if (utok.kind == Token::kIdent &&
                       (lower(utok.text) == "inf" ||
                        lower(utok.text) == "infinity"))
                v.ub = usign * kInfinity;
              else
                fail(utok.line, "expected an upper bound value");
            }
            continue;
          }
          if (t.kind != Token::kIdent)
            fail(t.line, "expected a variable name in bounds");
          const int id = b.var(t.text);
          Variable& v = b.model.mutable_variable(id);
          b.explicit_bounds[id] = true;
          Token op = lex.next();
          if (op.kind == Token::kIdent && lower(op.text) == "free") {
            v.lb = -kInfinity;
            v.ub = kInfinity;
            continue;
          }
          if (op.kind != Token::kOp ||
              (op.text != "<=" && op.text != ">=" && op.text != "="))
            fail(op.line, "expected '<=', '>=', '=' or 'free'");
          Token vtok = lex.next();
          double vsign = 1.0;
          while (vtok.kind == Token::kOp &&
                 (vtok.text == "-" || vtok.text == "+")) {
            if (vtok.text == "-") vsign = -vsign;
            vtok = lex.next();
          }
          double val;
          if (vtok.kind == Token::kNumber)
            val = vsign * vtok.value;
          else if (vtok.kind == Token::kIdent &&
                   (lower(vtok.text) == "inf" || lower(vtok.text) == "infinity"))
            val = vsign * kInfinity;
          else
            fail(vtok.line, "expected a bound value");
          if (op.text == "<=")
            v.ub = val;
          else if (op.text == ">=")
            v.lb = val;
          else
            v.lb = v.ub = val;
        }
        break;
      }
      case Section::kGenerals:
      case Section::kBinaries: {
        for (;;) {
          Token t = lex.next();
          if (t.kind == Token::kEnd) break;
          if (t.kind != Token::kIdent)
            fail(t.line, "expected a variable name");
          const int id = b.var(t.text);
          Variable& v = b.model.mutable_variable(id);
          if (chunk.section == Section::kGenerals) {
            v.kind = VarKind::kInteger;
          } else {
            v.kind = VarKind::kBinary;
            if (!b.explicit_bounds[id]) {
              v.lb = 0.0;
              v.ub = 1.0;
            }
          }
        }
        break;
      }
      case Section::kSos: {
        for (;;) {
          Token t = lex.next();
          if (t.kind == Token::kEnd) break;
          if (t.kind != Token::kIdent) fail(t.line, "expected an SOS name");
          Sos2Set set;
          set.name = t.text;
          Token colon = lex.next();
          if (!(colon.kind == Token::kOp && colon.text == ":"))
            fail(colon.line, "expected ':' after the SOS name");
          Token kind = lex.next();
          if (kind.kind != Token::kIdent || lower(kind.text) != "s2")
            fail(kind.line, "only S2 sets are supported");
          Token c1 = lex.next();
          Token c2 = lex.next();
          if (!(c1.kind == Token::kOp && c1.text == ":" &&
                c2.kind == Token::kOp && c2.text == ":"))
            fail(c1.line, "expected '::' after S2");
          // Members: name:weight until the next "name: S2::" or section end.
          for (;;) {
            Token mt = lex.peek();
            if (mt.kind == Token::kEnd) break;
            Lexer probe = lex;
            probe.next();          // member or next set name
            probe.next();          // ':'
            Token after = probe.next();
            if (after.kind == Token::kIdent && lower(after.text) == "s2")
              break;  // next set begins
            Token name_tok = lex.next();
            if (name_tok.kind != Token::kIdent)
              fail(name_tok.line, "expected an SOS member name");
            Token mc = lex.next();
            if (!(mc.kind == Token::kOp && mc.text == ":"))
              fail(mc.line, "expected ':' between member and weight");
            Token w = lex.next();
            double wsign = 1.0;
            while (w.kind == Token::kOp && (w.text == "-" || w.text == "+")) {
              if (w.text == "-") wsign = -wsign;
              w = lex.next();
            }
            if (w.kind != Token::kNumber)
              fail(w.line, "expected a numeric SOS weight");
            set.vars.push_back(b.var(name_tok.text));
            set.weights.push_back(wsign * w.value);
          }
          b.model.add_sos2(std::move(set));
        }
        break;
      }
      case Section::kEnd:
        break;
    }
  }

  if (!saw_objective) throw LpFormatError("lp text has no objective section");
  return std::move(b.model);
}

MilpModel parse_lp_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LpFormatError("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  std::string name = path;
  const std::size_t slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  return parse_lp(ss.str(), name);
}

}  // namespace evsl
