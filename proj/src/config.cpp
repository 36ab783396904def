#include "orbitglue/config.hpp"

#include <fstream>
#include <map>
#include <set>

#include "orbitglue/error.hpp"

namespace orbitglue {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  raise(errc::config_invalid, path + ": " + what);
}

const json& need(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) bad(path + "/" + key, "missing");
  return obj.at(key);
}

std::vector<std::vector<int>> parse_matrix(const json& node, const std::string& path) {
  if (!node.is_array() || node.empty()) bad(path, "expected a nonempty array of rows");
  std::vector<std::vector<int>> rows;
  const std::size_t d = node.size();
  for (std::size_t i = 0; i < d; ++i) {
    const json& row = node.at(i);
    const std::string row_path = path + "/" + std::to_string(i);
    if (!row.is_array() || row.size() != d)
      bad(row_path, "expected a row of length " + std::to_string(d));
    std::vector<int> out;
    for (std::size_t j = 0; j < d; ++j) {
      const json& cell = row.at(j);
      if (!cell.is_number_integer() || (cell.get<int>() != 0 && cell.get<int>() != 1))
        bad(row_path + "/" + std::to_string(j), "expected 0 or 1");
      out.push_back(cell.get<int>());
    }
    rows.push_back(std::move(out));
  }
  return rows;
}

std::vector<std::string> parse_labels(const json& system, std::size_t d,
                                      const std::string& path) {
  std::vector<std::string> labels;
  if (system.contains("labels")) {
    const json& node = system.at("labels");
    if (!node.is_array() || node.size() != d)
      bad(path + "/labels", "expected " + std::to_string(d) + " labels");
    for (std::size_t i = 0; i < d; ++i) {
      if (!node.at(i).is_string() || node.at(i).get<std::string>().empty())
        bad(path + "/labels/" + std::to_string(i), "expected a nonempty string");
      labels.push_back(node.at(i).get<std::string>());
    }
  } else {
    for (std::size_t i = 0; i < d; ++i) {
      if (d <= 26)
        labels.push_back(std::string(1, static_cast<char>('a' + i)));
      else
        labels.push_back(std::to_string(i));
    }
  }
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size()) bad(path + "/labels", "labels must be unique");
  return labels;
}

int label_index(const std::vector<std::string>& labels, const std::string& s) {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == s) return static_cast<int>(i);
  return -1;
}

Word word_from_node(const TransitionSystem& sys, const std::vector<std::string>& labels,
                    const json& node, const std::string& path) {
  Word w;
  if (node.is_string()) {
    for (const std::string& l : labels)
      if (l.size() != 1)
        bad(path, "string words need single-character labels; use the array form");
    for (char c : node.get<std::string>()) {
      const int idx = label_index(labels, std::string(1, c));
      if (idx < 0) bad(path, std::string("unknown label '") + c + "'");
      w.push_back(idx);
    }
  } else if (node.is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i) {
      const json& e = node.at(i);
      const std::string epath = path + "/" + std::to_string(i);
      if (e.is_string()) {
        const int idx = label_index(labels, e.get<std::string>());
        if (idx < 0) bad(epath, "unknown label '" + e.get<std::string>() + "'");
        w.push_back(idx);
      } else if (e.is_number_integer()) {
        const int idx = e.get<int>();
        if (idx < 0 || idx >= sys.alphabet_size()) bad(epath, "symbol index out of range");
        w.push_back(idx);
      } else {
        bad(epath, "expected a label or a symbol index");
      }
    }
  } else {
    bad(path, "expected a word (label string or array)");
  }
  if (!sys.word_admissible(w)) bad(path, "word is not admissible");
  return w;
}

LocallyConstantFunction parse_function(const TransitionSystem& sys,
                                       const std::vector<std::string>& labels,
                                       const json& node, const std::string& path) {
  if (!node.is_object()) bad(path, "expected a function block");
  if (node.contains("constant")) {
    if (!node.at("constant").is_number()) bad(path + "/constant", "expected a number");
    return LocallyConstantFunction::constant(sys, node.at("constant").get<double>());
  }
  const json& depth_node = need(node, "depth", path);
  if (!depth_node.is_number_integer() || depth_node.get<int>() < 1)
    bad(path + "/depth", "expected an integer >= 1");
  const int depth = depth_node.get<int>();

  std::map<Word, double> table;
  if (node.contains("values")) {
    const json& values = node.at("values");
    if (!values.is_object()) bad(path + "/values", "expected an object");
    for (const auto& [key, val] : values.items()) {
      const std::string vpath = path + "/values/" + key;
      const Word w = word_from_node(sys, labels, json(key), vpath);
      if (static_cast<int>(w.size()) != depth) bad(vpath, "word length must equal depth");
      if (!val.is_number()) bad(vpath, "expected a number");
      table[w] = val.get<double>();
    }
  } else if (node.contains("entries")) {
    const json& entries = node.at("entries");
    if (!entries.is_array()) bad(path + "/entries", "expected an array");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const std::string epath = path + "/entries/" + std::to_string(i);
      const json& e = entries.at(i);
      if (!e.is_object()) bad(epath, "expected {word, value}");
      const Word w = word_from_node(sys, labels, need(e, "word", epath), epath + "/word");
      if (static_cast<int>(w.size()) != depth) bad(epath + "/word", "word length must equal depth");
      const json& v = need(e, "value", epath);
      if (!v.is_number()) bad(epath + "/value", "expected a number");
      if (table.count(w)) bad(epath + "/word", "duplicate word");
      table[w] = v.get<double>();
    }
  } else {
    bad(path, "expected 'constant', 'values', or 'entries'");
  }
  for (const Word& w : enumerate_admissible_words(sys, depth)) {
    if (!table.count(w)) {
      std::string shown;
      for (int s : w) shown += labels[static_cast<std::size_t>(s)];
      bad(path, "missing value for admissible word '" + shown + "'");
    }
  }
  return LocallyConstantFunction(sys, depth, std::move(table));
}


}  // namespace

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) bad("", "config must be a JSON object");
  for (const auto& [key, val] : doc.items()) {
    (void)val;
    if (key != "system" && key != "roof" && key != "potential" && key != "observable" &&
        key != "basis" && key != "params" && key != "output")
      bad("/" + key, "unknown key");
  }
  const json& system_node = need(doc, "system", "");
  const auto rows = parse_matrix(need(system_node, "matrix", "/system"), "/system/matrix");
  std::vector<std::string> labels = parse_labels(system_node, rows.size(), "/system");

  TransitionSystem system = [&] {
    try {
      return TransitionSystem(rows);
    } catch (const Error& e) {
      raise(e.code(), "/system/matrix: " + std::string(e.what()));
    }
  }();

  json resolved;
  resolved["system"]["matrix"] = rows;
  resolved["system"]["labels"] = labels;

  std::optional<LocallyConstantFunction> roof, potential, observable;
  std::vector<LocallyConstantFunction> basis;
  if (doc.contains("roof")) {
    roof = parse_function(system, labels, doc.at("roof"), "/roof");
    if (!(roof->min_value() > 0.0)) bad("/roof", "roof values must be positive");
    resolved["roof"] = doc.at("roof");
  }
  if (doc.contains("potential")) {
    potential = parse_function(system, labels, doc.at("potential"), "/potential");
    resolved["potential"] = doc.at("potential");
  }
  if (doc.contains("observable")) {
    observable = parse_function(system, labels, doc.at("observable"), "/observable");
    resolved["observable"] = doc.at("observable");
  }
  if (doc.contains("basis")) {
    const json& node = doc.at("basis");
    if (!node.is_array() || node.empty()) bad("/basis", "expected a nonempty array");
    for (std::size_t i = 0; i < node.size(); ++i)
      basis.push_back(
          parse_function(system, labels, node.at(i), "/basis/" + std::to_string(i)));
    resolved["basis"] = node;
  }

  json params = json::object();
  if (doc.contains("params")) {
    if (!doc.at("params").is_object()) bad("/params", "expected an object");
    params = doc.at("params");
  }
  resolved["params"] = params;

  std::string output_dir = "out";
  if (doc.contains("output")) {
    if (!doc.at("output").is_string()) bad("/output", "expected a string");
    output_dir = doc.at("output").get<std::string>();
  }
  resolved["output"] = output_dir;

  return ExperimentConfig{std::move(resolved), std::move(system),    std::move(labels),
                          std::move(roof),     std::move(potential), std::move(observable),
                          std::move(basis),    std::move(params),    std::move(output_dir)};
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(errc::config_invalid, "cannot open config file: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    raise(errc::config_invalid, std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

Word parse_word(const ExperimentConfig& config, const json& node,
                const std::string& path) {
  return word_from_node(config.system, config.labels, node, path);
}

std::uint64_t config_hash(const json& resolved) {
  const std::string dump = resolved.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace orbitglue
