// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cswin/init.hpp"

namespace cswin {

/// One line of a verification report.
struct CheckResult {
  std::string name;
  double metric = 0.0;     // worst error, or violation count
  double threshold = 0.0;  // metric must be strictly below (or equal for exact checks)
  bool passed = false;
  std::string detail;
};

inline constexpr double kOpGradTolerance = 1e-5;
inline constexpr double kModelGradTolerance = 1e-4;
inline constexpr double kGradStep = 1e-6;

enum class GradcheckScale { Desk, Small };

struct GradcheckOptions {
  Seed seed{0};
  GradcheckScale scale = GradcheckScale::Desk;
  std::size_t model_samples = 20;
  /// Harness self-test: scales every analytic gradient by (1 + 1e-3) so the
  /// comparison must fail.
  bool corrupt_backward = false;
};

/// Analytic vs central-difference gradients for every differentiable op and
/// for the end-to-end model on sampled parameters.
std::vector<CheckResult> run_gradcheck(const GradcheckOptions& options);

struct OracleCheckOptions {
  std::size_t max_size = 8;  // at most 16
  Seed seed{0};
};

/// Full-attention equivalence at sw = H = W, exhaustive cross-shape locality,
/// stripe round trips and the sequential-vs-parallel distinction.
std::vector<CheckResult> run_oracle_check(const OracleCheckOptions& options);

/// Perturbs every token of a size x size map in turn and counts outputs outside
/// its cross-shaped footprint (row stripe or column stripe) that changed.
CheckResult locality_check(std::size_t size, std::size_t sw, Seed seed);

bool all_passed(const std::vector<CheckResult>& results);
std::string format_results(const std::vector<CheckResult>& results);

}  // namespace cswin
