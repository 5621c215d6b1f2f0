#include "mipdqn/lp_format.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mipdqn {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_terms(std::ostream& out,
                 const std::vector<std::pair<int, double>>& terms,
                 const MipModel& model) {
  bool first = true;
  for (const auto& [v, coef] : terms) {
    if (coef == 0.0) continue;
    if (first) {
      out << (coef < 0 ? "- " : "") << num(std::abs(coef)) << " "
          << model.vars[v].name;
      first = false;
    } else {
      out << (coef < 0 ? " - " : " + ") << num(std::abs(coef)) << " "
          << model.vars[v].name;
    }
  }
  if (first) out << "0 " << model.vars[0].name;
}

}  // namespace

void export_lp(const MipModel& model, const std::string& path) {
  if (model.vars.empty()) throw std::invalid_argument("cannot export an empty model");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write LP file: " + path);

  out << "\\ mipdqn model export\n";
  if (model.objective_constant != 0.0)
    out << "\\ objective constant: " << num(model.objective_constant) << "\n";
  out << (model.sense == ObjSense::maximize ? "Maximize\n" : "Minimize\n");
  out << " obj: ";
  write_terms(out, model.objective, model);
  out << "\nSubject To\n";
  for (const auto& row : model.rows) {
    out << " " << row.name << ": ";
    write_terms(out, row.terms, model);
    const char* rel = row.sense == RowSense::le   ? " <= "
                      : row.sense == RowSense::ge ? " >= "
                                                  : " = ";
    out << rel << num(row.rhs) << "\n";
  }
  out << "Bounds\n";
  for (const auto& v : model.vars) {
    if (v.is_binary) continue;  // listed in the Binary section
    const bool lo_inf = std::isinf(v.lb), hi_inf = std::isinf(v.ub);
    if (lo_inf && hi_inf) {
      out << " " << v.name << " free\n";
    } else if (v.lb == v.ub) {
      out << " " << v.name << " = " << num(v.lb) << "\n";
    } else if (lo_inf) {
      out << " -inf <= " << v.name << " <= " << num(v.ub) << "\n";
    } else if (hi_inf) {
      out << " " << v.name << " >= " << num(v.lb) << "\n";
    } else {
      out << " " << num(v.lb) << " <= " << v.name << " <= " << num(v.ub) << "\n";
    }
  }
  bool any_bin = false;
  for (const auto& v : model.vars) any_bin = any_bin || v.is_binary;
  if (any_bin) {
    out << "Binary\n";
    for (const auto& v : model.vars)
      if (v.is_binary) out << " " << v.name << "\n";
  }
  out << "End\n";
  if (!out) throw std::runtime_error("LP write failed: " + path);

  nlohmann::json names = nlohmann::json::array();
  for (std::size_t i = 0; i < model.vars.size(); ++i) {
    const auto& v = model.vars[i];
    names.push_back({{"index", i},
                     {"name", v.name},
                     {"kind", to_string(v.kind)},
                     {"layer", v.layer},
                     {"unit", v.unit}});
  }
  nlohmann::json sidecar;
  sidecar["variables"] = names;
  sidecar["output_var"] = model.output_var;
  std::ofstream nm(path + ".names.json");
  if (!nm) throw std::runtime_error("cannot write name map: " + path + ".names.json");
  nm << sidecar.dump(2) << "\n";
}

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool is_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::string t = s;
  double sign = 1.0;
  if (t[0] == '+' || t[0] == '-') {
    if (t[0] == '-') sign = -1.0;
    t = t.substr(1);
  }
  if (lower(t) == "inf" || lower(t) == "infinity") {
    out = sign * kInfinity;
    return true;
  }
  char* end = nullptr;
  out = sign * std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && !t.empty();
}

// Tokenizes one line; '+'/'-' followed by a number or inf is merged into a
// single signed token, which makes every linear expression an alternating
// [signed coefficient, name] sequence in this dialect.
std::vector<std::string> tokenize_line(const std::string& line) {
  std::vector<std::string> raw;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      raw.push_back(cur);
      cur.clear();
    }
  };
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '\\') break;  // comment
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
      continue;
    }
    if (c == '+' || c == '-' || c == ':') {
      flush();
      raw.push_back(std::string(1, c));
      continue;
    }
    if (c == '<' || c == '>' || c == '=') {
      flush();
      std::string rel(1, c);
      if (i + 1 < line.size() && line[i + 1] == '=') {
        rel += '=';
        ++i;
      }
      raw.push_back(rel);
      continue;
    }
    cur.push_back(c);
  }
  flush();

  std::vector<std::string> toks;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    double v;
    if ((raw[i] == "+" || raw[i] == "-") && i + 1 < raw.size() &&
        is_number(raw[i + 1], v)) {
      toks.push_back(raw[i] + raw[i + 1]);
      ++i;
    } else {
      toks.push_back(raw[i]);
    }
  }
  return toks;
}

}  // namespace

MipModel import_lp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open LP file: " + path);

  double obj_constant = 0.0;
  std::vector<std::vector<std::string>> lines;
  std::string raw;
  const std::string const_tag = "\\ objective constant: ";
  while (std::getline(in, raw)) {
    if (raw.rfind(const_tag, 0) == 0)
      obj_constant = std::strtod(raw.c_str() + const_tag.size(), nullptr);
    auto toks = tokenize_line(raw);
    if (!toks.empty()) lines.push_back(std::move(toks));
  }

  MipModel model;
  std::map<std::string, int> var_of;
  auto var_id = [&](const std::string& name) {
    auto it = var_of.find(name);
    if (it != var_of.end()) return it->second;
    const int id = model.add_var(name, -kInfinity, kInfinity);
    var_of[name] = id;
    return id;
  };

  auto fail = [&](const std::string& why) -> void {
    throw std::runtime_error(path + ": " + why);
  };

  enum class Section { objective, constraints, bounds, binary, done };
  Section section = Section::done;
  bool have_objective = false;
  int auto_row = 0;

  // expr: [signed coef, name]... ; bare names have implicit coefficient 1.
  auto parse_terms = [&](const std::vector<std::string>& toks, std::size_t from,
                         std::size_t to, std::vector<std::pair<int, double>>& out) {
    std::size_t i = from;
    while (i < to) {
      double coef = 1.0;
      double v;
      if (toks[i] == "+") {
        ++i;
        continue;
      }
      if (toks[i] == "-") {
        coef = -1.0;
        ++i;
        if (i >= to) fail("dangling sign in expression");
      }
      if (is_number(toks[i], v)) {
        coef *= v;
        ++i;
        if (i >= to) fail("constant term in expression");
      }
      if (coef != 0.0) out.emplace_back(var_id(toks[i]), coef);
      else var_id(toks[i]);  // declare, keep the ordering stable
      ++i;
    }
  };

  for (const auto& toks : lines) {
    const std::string head = lower(toks[0]);
    if (head == "maximize" || head == "minimize") {
      model.sense = head == "maximize" ? ObjSense::maximize : ObjSense::minimize;
      section = Section::objective;
      continue;
    }
    if (head == "subject" || head == "st") {
      section = Section::constraints;
      continue;
    }
    if (head == "bounds") {
      section = Section::bounds;
      continue;
    }
    if (head == "binary" || head == "binaries") {
      section = Section::binary;
      continue;
    }
    if (head == "end") break;

    switch (section) {
      case Section::objective: {
        std::size_t from = 0;
        if (toks.size() >= 2 && toks[1] == ":") from = 2;
        parse_terms(toks, from, toks.size(), model.objective);
        have_objective = true;
        break;
      }
      case Section::constraints: {
        std::size_t from = 0;
        std::string name;
        if (toks.size() >= 2 && toks[1] == ":") {
          name = toks[0];
          from = 2;
        } else {
          name = "r" + std::to_string(auto_row++);
        }
        // locate the relation token
        std::size_t rel_pos = toks.size();
        for (std::size_t i = from; i < toks.size(); ++i) {
          if (toks[i] == "<=" || toks[i] == ">=" || toks[i] == "=" ||
              toks[i] == "<" || toks[i] == ">") {
            rel_pos = i;
            break;
          }
        }
        if (rel_pos == toks.size()) fail("row without relation: " + name);
        if (rel_pos + 1 >= toks.size()) fail("row without rhs: " + name);
        double rhs;
        if (!is_number(toks[rel_pos + 1], rhs)) fail("bad rhs in row " + name);
        std::vector<std::pair<int, double>> terms;
        parse_terms(toks, from, rel_pos, terms);
        const std::string& rel = toks[rel_pos];
        const RowSense sense = (rel == "<=" || rel == "<")   ? RowSense::le
                               : (rel == ">=" || rel == ">") ? RowSense::ge
                                                             : RowSense::eq;
        model.add_row(name, std::move(terms), sense, rhs);
        break;
      }
      case Section::bounds: {
        double v1, v2;
        if (toks.size() == 2 && lower(toks[1]) == "free") {
          const int v = var_id(toks[0]);
          model.vars[v].lb = -kInfinity;
          model.vars[v].ub = kInfinity;
        } else if (toks.size() == 3 && is_number(toks[2], v1)) {
          const int v = var_id(toks[0]);
          if (toks[1] == "=") {
            model.vars[v].lb = model.vars[v].ub = v1;
          } else if (toks[1] == ">=") {
            model.vars[v].lb = v1;
            model.vars[v].ub = kInfinity;
          } else if (toks[1] == "<=") {
            model.vars[v].lb = 0.0;
            model.vars[v].ub = v1;
          } else {
            fail("unparsed bounds line");
          }
        } else if (toks.size() == 5 && toks[1] == "<=" && toks[3] == "<=" &&
                   is_number(toks[0], v1) && is_number(toks[4], v2)) {
          const int v = var_id(toks[2]);
          model.vars[v].lb = v1;
          model.vars[v].ub = v2;
        } else {
          fail("unparsed bounds line");
        }
        break;
      }
      case Section::binary: {
        for (const auto& t : toks) {
          const int v = var_id(t);
          model.vars[v].is_binary = true;
          model.vars[v].lb = 0.0;
          model.vars[v].ub = 1.0;
          model.vars[v].kind = VarKind::z;
        }
        break;
      }
      case Section::done:
        fail("content before the objective section");
    }
  }
  if (!have_objective) fail("missing objective");
  model.objective_constant = obj_constant;

  // Restore kinds and the original variable order from the sidecar.
  std::ifstream nm(path + ".names.json");
  if (nm) {
    nlohmann::json sidecar;
    try {
      nm >> sidecar;
      for (const auto& entry : sidecar["variables"]) {
        const auto it = var_of.find(entry["name"].get<std::string>());
        if (it == var_of.end()) continue;
        const std::string kind = entry["kind"].get<std::string>();
        MipVar& v = model.vars[it->second];
        if (kind == "input") v.kind = VarKind::input;
        else if (kind == "x") v.kind = VarKind::x;
        else if (kind == "s") v.kind = VarKind::s;
        else if (kind == "z") v.kind = VarKind::z;
        else v.kind = VarKind::aux;
        v.layer = entry["layer"].get<int>();
        v.unit = entry["unit"].get<int>();
      }

      // Permute variables back into export order when the sidecar covers
      // exactly the parsed set.
      const auto& entries = sidecar["variables"];
      if (entries.size() == model.vars.size()) {
        std::vector<int> old_of_new(model.vars.size(), -1);
        bool complete = true;
        for (std::size_t i = 0; i < entries.size() && complete; ++i) {
          const auto it = var_of.find(entries[i]["name"].get<std::string>());
          if (it == var_of.end())
            complete = false;
          else
            old_of_new[i] = it->second;
        }
        if (complete) {
          std::vector<int> new_of_old(model.vars.size());
          std::vector<MipVar> reordered(model.vars.size());
          for (std::size_t i = 0; i < model.vars.size(); ++i) {
            new_of_old[old_of_new[i]] = static_cast<int>(i);
            reordered[i] = model.vars[old_of_new[i]];
          }
          model.vars = std::move(reordered);
          for (auto& row : model.rows)
            for (auto& [v, c] : row.terms) v = new_of_old[v];
          for (auto& [v, c] : model.objective) v = new_of_old[v];
        }
      }
      if (sidecar.contains("output_var")) {
        const int ov = sidecar["output_var"].get<int>();
        if (ov >= 0 && ov < static_cast<int>(sidecar["variables"].size())) {
          model.output_var =
              model.find_var(sidecar["variables"][ov]["name"].get<std::string>());
        }
      }
    } catch (const nlohmann::json::exception&) {
      // Sidecar is advisory; a damaged one only loses kind metadata.
    }
  }
  return model;
}

}  // namespace mipdqn
