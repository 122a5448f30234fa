#include "dataneeds/logits_csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dataneeds/errors.hpp"

namespace dataneeds::io {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void softmax_inplace(std::vector<double>& row) {
  double mx = row[0];
  for (double v : row) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : row) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : row) v /= sum;
}

}  // namespace

void write_logits_csv(const std::filesystem::path& file,
                      const metrics::PredictionSet& pred) {
  std::ofstream out(file, std::ios::binary);  // binary: no newline translation
  if (!out) throw std::runtime_error("cannot open for writing: " + file.string());
  out << "# kind=probs classes=" << pred.n_classes << "\n";
  for (std::size_t i = 0; i < pred.size(); ++i) {
    out << i << ',' << pred.labels[i];
    for (int k = 0; k < pred.n_classes; ++k)
      out << ',' << format_double(pred.prob(i, k));
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

metrics::PredictionSet read_logits_csv(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot open logits CSV: " + file.string());

  std::string header;
  if (!std::getline(in, header))
    throw ValidationError(file.string() + ": empty file");
  bool is_logits = false;
  int n_classes = 0;
  {
    std::string kind;
    std::istringstream hs(header);
    std::string hash, kind_field, classes_field;
    hs >> hash >> kind_field >> classes_field;
    if (hash != "#" || kind_field.rfind("kind=", 0) != 0 ||
        classes_field.rfind("classes=", 0) != 0)
      throw ValidationError(file.string() +
                            ": malformed header, expected '# kind=<probs|logits> "
                            "classes=<C>', got '" + header + "'");
    kind = kind_field.substr(5);
    if (kind == "logits")
      is_logits = true;
    else if (kind != "probs")
      throw ValidationError(file.string() + ": unknown kind '" + kind + "'");
    try {
      n_classes = std::stoi(classes_field.substr(8));
    } catch (...) {
      throw ValidationError(file.string() + ": bad classes field");
    }
    if (n_classes < 2) throw ValidationError(file.string() + ": classes must be >= 2");
  }

  metrics::PredictionSet ps;
  ps.n_classes = n_classes;
  std::string line;
  std::size_t row = 0;
  std::vector<double> values(n_classes);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    if (!std::getline(ls, field, ','))
      throw ValidationError(file.string() + ": row " + std::to_string(row) +
                            ": missing id");
    if (!std::getline(ls, field, ','))
      throw ValidationError(file.string() + ": row " + std::to_string(row) +
                            ": missing label");
    int label;
    try {
      label = std::stoi(field);
    } catch (...) {
      throw ValidationError(file.string() + ": row " + std::to_string(row) +
                            ": bad label '" + field + "'");
    }
    if (label < 0 || label >= n_classes)
      throw ValidationError(file.string() + ": row " + std::to_string(row) +
                            ": label " + std::to_string(label) + " out of range");
    for (int k = 0; k < n_classes; ++k) {
      if (!std::getline(ls, field, ','))
        throw ValidationError(file.string() + ": row " + std::to_string(row) +
                              ": expected " + std::to_string(n_classes) + " values");
      try {
        values[k] = std::stod(field);
      } catch (...) {
        throw ValidationError(file.string() + ": row " + std::to_string(row) +
                              ": bad value '" + field + "'");
      }
    }
    if (std::getline(ls, field, ','))
      throw ValidationError(file.string() + ": row " + std::to_string(row) +
                            ": too many values");

    if (is_logits) {
      softmax_inplace(values);
    } else {
      double sum = 0.0;
      for (double v : values) {
        if (!(v >= 0.0))
          throw ValidationError(file.string() + ": row " + std::to_string(row) +
                                ": negative probability");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-6)
        throw ValidationError(file.string() + ": row " + std::to_string(row) +
                              ": probabilities sum to " + format_double(sum));
      for (double& v : values) v /= sum;
    }
    ps.labels.push_back(label);
    ps.probs.insert(ps.probs.end(), values.begin(), values.end());
    ++row;
  }
  if (ps.labels.empty())
    throw ValidationError(file.string() + ": no data rows");
  return ps;
}

}  // namespace dataneeds::io
