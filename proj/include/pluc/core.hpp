#pragma once

#include "pluc/common.hpp"

#include <string>
#include <vector>

namespace pluc {

// One data record O = (x, a, y, xi): covariates, binary treatment, primary
// outcome (higher is better) and adverse-event indicator.
struct Observation {
  Vec x;
  int a = 0;
  double y = 0.0;
  int xi = 0;
};

struct Dataset {
  std::vector<Observation> obs;
  int d = 0;

  int n() const { return static_cast<int>(obs.size()); }
};

// Builds a dataset and checks the structural invariants (finite covariates,
// shared dimension, binary a/xi). When require_unit_outcome is set, y must lie
// in [0,1]; raw realistic samples are created with the check off and must be
// preprocessed before fitting.
Dataset make_dataset(std::vector<Observation> obs, bool require_unit_outcome = true);

// CSV with header x1,...,xd,a,y,xi. Lines starting with '#' are skipped.
Dataset load_dataset_csv(const std::string& path, bool require_unit_outcome = true);
void save_dataset_csv(const Dataset& data, const std::string& path);

// Covariate rows of a subset of observations, one row per index.
Mat covariate_matrix(const Dataset& data, const std::vector<int>& indices);

struct FoldSplit {
  std::vector<int> n1, n2, n3;
};

// Uniformly random three-way partition with sizes differing by at most one.
// Indices are shuffled once and dealt round-robin.
FoldSplit split_folds(const Dataset& data, uint64_t seed);

// Uniform weights over a subset of a dataset's rows.
struct EmpiricalMeasure {
  const Dataset* data = nullptr;
  std::vector<int> indices;

  double weight() const { return 1.0 / static_cast<double>(indices.size()); }
};

EmpiricalMeasure measure_over(const Dataset& data, std::vector<int> indices);
EmpiricalMeasure measure_over_all(const Dataset& data);

double empirical_mean(const EmpiricalMeasure& m,
                      const std::function<double(const Observation&)>& f);

}  // namespace pluc
