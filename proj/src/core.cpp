#include "pluc/core.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace pluc {

namespace {

void check_observation(const Observation& o, int d, bool require_unit_outcome, int row) {
  if (o.x.size() != d) {
    throw std::invalid_argument("dataset row " + std::to_string(row) +
                                ": covariate dimension mismatch");
  }
  if (!o.x.allFinite()) {
    throw std::invalid_argument("dataset row " + std::to_string(row) +
                                ": non-finite covariate");
  }
  if (o.a != 0 && o.a != 1) {
    throw std::invalid_argument("dataset row " + std::to_string(row) + ": a must be 0/1");
  }
  if (o.xi != 0 && o.xi != 1) {
    throw std::invalid_argument("dataset row " + std::to_string(row) + ": xi must be 0/1");
  }
  if (!std::isfinite(o.y)) {
    throw std::invalid_argument("dataset row " + std::to_string(row) + ": non-finite y");
  }
  if (require_unit_outcome && (o.y < 0.0 || o.y > 1.0)) {
    throw std::invalid_argument("dataset row " + std::to_string(row) +
                                ": y outside [0,1]; preprocess raw data first");
  }
}

double parse_double(const std::string& tok, int line_no) {
  try {
    size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("csv line " + std::to_string(line_no) +
                                ": cannot parse value '" + tok + "'");
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string tok;
  std::istringstream ss(line);
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

}  // namespace

Dataset make_dataset(std::vector<Observation> obs, bool require_unit_outcome) {
  if (obs.empty()) throw std::invalid_argument("dataset must be nonempty");
  const int d = static_cast<int>(obs.front().x.size());
  if (d < 1) throw std::invalid_argument("dataset needs at least one covariate");
  for (size_t i = 0; i < obs.size(); ++i) {
    check_observation(obs[i], d, require_unit_outcome, static_cast<int>(i));
  }
  Dataset ds;
  ds.obs = std::move(obs);
  ds.d = d;
  return ds;
}

Dataset load_dataset_csv(const std::string& path, bool require_unit_outcome) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);

  std::string line;
  int line_no = 0;
  // header (skipping comment lines)
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (header.size() < 4) {
    throw std::invalid_argument(path + ": header must be x1,...,xd,a,y,xi");
  }
  const int d = static_cast<int>(header.size()) - 3;
  for (int j = 0; j < d; ++j) {
    if (header[j] != "x" + std::to_string(j + 1)) {
      throw std::invalid_argument(path + ": expected column x" + std::to_string(j + 1) +
                                  ", found '" + header[j] + "'");
    }
  }
  if (header[d] != "a" || header[d + 1] != "y" || header[d + 2] != "xi") {
    throw std::invalid_argument(path + ": trailing columns must be a,y,xi");
  }

  std::vector<Observation> obs;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto toks = split_csv_line(line);
    if (static_cast<int>(toks.size()) != d + 3) {
      throw std::invalid_argument("csv line " + std::to_string(line_no) +
                                  ": wrong number of fields");
    }
    Observation o;
    o.x = Vec(d);
    for (int j = 0; j < d; ++j) o.x[j] = parse_double(toks[j], line_no);
    const double a_val = parse_double(toks[d], line_no);
    const double xi_val = parse_double(toks[d + 2], line_no);
    if (a_val != 0.0 && a_val != 1.0) {
      throw std::invalid_argument("csv line " + std::to_string(line_no) + ": a must be 0/1");
    }
    if (xi_val != 0.0 && xi_val != 1.0) {
      throw std::invalid_argument("csv line " + std::to_string(line_no) + ": xi must be 0/1");
    }
    o.a = static_cast<int>(a_val);
    o.y = parse_double(toks[d + 1], line_no);
    o.xi = static_cast<int>(xi_val);
    obs.push_back(std::move(o));
  }
  return make_dataset(std::move(obs), require_unit_outcome);
}

void save_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  out << "# pluc-dataset v1\n";
  for (int j = 0; j < data.d; ++j) out << "x" << (j + 1) << ",";
  out << "a,y,xi\n";
  char buf[64];
  for (const auto& o : data.obs) {
    for (int j = 0; j < data.d; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", o.x[j]);
      out << buf << ",";
    }
    std::snprintf(buf, sizeof(buf), "%.17g", o.y);
    out << o.a << "," << buf << "," << o.xi << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Mat covariate_matrix(const Dataset& data, const std::vector<int>& indices) {
  Mat X(static_cast<int>(indices.size()), data.d);
  for (size_t r = 0; r < indices.size(); ++r) {
    X.row(static_cast<int>(r)) = data.obs[indices[r]].x.transpose();
  }
  return X;
}

FoldSplit split_folds(const Dataset& data, uint64_t seed) {
  const int n = data.n();
  if (n < 3) throw std::invalid_argument("insufficient data for three folds");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, 0xf01d5));
  rng.shuffle(idx);
  FoldSplit fs;
  for (int i = 0; i < n; ++i) {
    switch (i % 3) {
      case 0: fs.n1.push_back(idx[i]); break;
      case 1: fs.n2.push_back(idx[i]); break;
      default: fs.n3.push_back(idx[i]); break;
    }
  }
  std::sort(fs.n1.begin(), fs.n1.end());
  std::sort(fs.n2.begin(), fs.n2.end());
  std::sort(fs.n3.begin(), fs.n3.end());
  return fs;
}

EmpiricalMeasure measure_over(const Dataset& data, std::vector<int> indices) {
  if (indices.empty()) throw std::invalid_argument("empirical measure needs indices");
  for (int i : indices) {
    if (i < 0 || i >= data.n()) throw std::out_of_range("measure index out of range");
  }
  return EmpiricalMeasure{&data, std::move(indices)};
}

EmpiricalMeasure measure_over_all(const Dataset& data) {
  std::vector<int> idx(data.n());
  std::iota(idx.begin(), idx.end(), 0);
  return measure_over(data, std::move(idx));
}

double empirical_mean(const EmpiricalMeasure& m,
                      const std::function<double(const Observation&)>& f) {
  if (m.data == nullptr || m.indices.empty()) {
    throw std::invalid_argument("empirical_mean over empty measure");
  }
  double acc = 0.0;
  for (int i : m.indices) acc += f(m.data->obs[i]);
  return acc / static_cast<double>(m.indices.size());
}

}  // namespace pluc
